//! Fusion of comment- and like-attitudes into the overall attitude, cohort
//! tabulation, and the sample filters applied before estimation.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

use crate::attitude::{Overall, Polarity, Sign};
use crate::error::{Error, Result};
use crate::ideology::IdeologyScore;
use crate::ingest::{Gender, Id, UserProfile};

/// Combines the two signals. The comment attitude decides unless it is
/// neutral or absent; opposite nonzero signals are `Undefined`.
pub fn fuse(comment: Option<Sign>, like: Option<Polarity>) -> Result<Overall> {
    match (comment, like) {
        (None, None) => Err(Error::Precondition(
            "cannot fuse a user with neither a comment nor a like attitude".into(),
        )),
        (None, Some(l)) => Ok(l.into()),
        (Some(Sign::Neutral), Some(l)) => Ok(l.into()),
        (Some(c), None) => Ok(c.into()),
        (Some(c), Some(l)) if c == l.sign() => Ok(c.into()),
        (Some(_), Some(_)) => Ok(Overall::Undefined),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttitudeTriple {
    pub comment: Option<Sign>,
    pub like: Option<Polarity>,
    pub overall: Overall,
}

impl AttitudeTriple {
    pub fn new(comment: Option<Sign>, like: Option<Polarity>) -> Result<Self> {
        Ok(AttitudeTriple {
            comment,
            like,
            overall: fuse(comment, like)?,
        })
    }
}

/// Row layout of the cohort table: every reachable (comment, like) pair.
pub const TABLE_ROWS: [(Option<Sign>, Option<Polarity>); 11] = [
    (Some(Sign::Negative), None),
    (Some(Sign::Negative), Some(Polarity::Negative)),
    (Some(Sign::Negative), Some(Polarity::Positive)),
    (Some(Sign::Neutral), None),
    (Some(Sign::Neutral), Some(Polarity::Negative)),
    (Some(Sign::Neutral), Some(Polarity::Positive)),
    (Some(Sign::Positive), None),
    (Some(Sign::Positive), Some(Polarity::Negative)),
    (Some(Sign::Positive), Some(Polarity::Positive)),
    (None, Some(Polarity::Negative)),
    (None, Some(Polarity::Positive)),
];

pub fn row_index(comment: Option<Sign>, like: Option<Polarity>) -> Option<usize> {
    TABLE_ROWS.iter().position(|&r| r == (comment, like))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CohortTable {
    pub counts: [u64; 11],
}

impl CohortTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn sum_where(&self, pred: impl Fn(Option<Sign>, Option<Polarity>) -> bool) -> u64 {
        TABLE_ROWS
            .iter()
            .zip(self.counts)
            .filter(|((c, l), _)| pred(*c, *l))
            .map(|(_, n)| n)
            .sum()
    }

    /// Users with a comment attitude.
    pub fn comment_present(&self) -> u64 {
        self.sum_where(|c, _| c.is_some())
    }

    /// Users with a like attitude.
    pub fn like_present(&self) -> u64 {
        self.sum_where(|_, l| l.is_some())
    }

    pub fn dual_signal(&self) -> u64 {
        self.sum_where(|c, l| c.is_some() && l.is_some())
    }

    pub fn undefined(&self) -> u64 {
        self.sum_where(|c, l| fuse(c, l).ok() == Some(Overall::Undefined))
    }

    pub fn merge(&mut self, other: &CohortTable) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }

    /// CSV in row order with columns
    /// `comment_attitude,like_attitude,overall_attitude,count` and a final
    /// `total` line.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["comment_attitude", "like_attitude", "overall_attitude", "count"])?;
        for ((c, l), n) in TABLE_ROWS.iter().zip(self.counts) {
            let overall = fuse(*c, *l).expect("table rows are fusable");
            wtr.write_record([
                c.map_or("none".to_string(), |s| s.to_string()),
                l.map_or("none".to_string(), |p| p.to_string()),
                overall.to_string(),
                n.to_string(),
            ])?;
        }
        wtr.write_record(["total", "", "", &self.total().to_string()])?;
        wtr.flush()?;
        Ok(())
    }
}

/// Counts triples per table row. Order-independent.
pub fn tabulate<'a, I>(cohort: I) -> CohortTable
where
    I: IntoIterator<Item = &'a AttitudeTriple>,
{
    let mut table = CohortTable::default();
    for t in cohort {
        let idx = row_index(t.comment, t.like)
            .expect("an AttitudeTriple always has at least one signal");
        table.counts[idx] += 1;
    }
    table
}

/// A user of the analysed cohort: demographics plus derived attitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserRecord {
    pub user_id: Id,
    pub age: Option<u32>,
    pub gender: Option<Gender>,
    pub friend_count: u64,
    pub subscriptions: Vec<String>,
    pub attitude: AttitudeTriple,
    pub ideology: Option<IdeologyScore>,
}

impl UserRecord {
    pub fn new(profile: Option<&UserProfile>, user_id: Id, attitude: AttitudeTriple) -> Self {
        match profile {
            Some(p) => UserRecord {
                user_id,
                age: p.age,
                gender: p.gender,
                friend_count: p.friend_count,
                subscriptions: p.subscriptions.clone(),
                attitude,
                ideology: None,
            },
            None => UserRecord {
                user_id,
                age: None,
                gender: None,
                friend_count: 0,
                subscriptions: Vec::new(),
                attitude,
                ideology: None,
            },
        }
    }

    /// Number of distinct subscriptions.
    pub fn subscription_count(&self) -> usize {
        self.subscriptions.iter().collect::<BTreeSet<_>>().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FilterConfig {
    /// Users need strictly more distinct subscriptions than this.
    pub min_subscriptions: usize,
    /// Users with a stated age above this are dropped; missing ages are kept.
    pub max_age: Option<u32>,
    /// Keep only users whose overall attitude is -1 or +1.
    pub require_defined: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_subscriptions: 10,
            max_age: Some(90),
            require_defined: true,
        }
    }
}

pub fn passes_filters(user: &UserRecord, cfg: &FilterConfig) -> bool {
    let overall = user.attitude.overall;
    if overall == Overall::Undefined {
        return false;
    }
    if cfg.require_defined && overall.polarity().is_none() {
        return false;
    }
    if user.subscription_count() <= cfg.min_subscriptions {
        return false;
    }
    match (cfg.max_age, user.age) {
        (Some(max), Some(age)) => age <= max,
        _ => true,
    }
}

/// Retains qualifying users in their original order. Users with an
/// undefined attitude are always removed.
pub fn apply_filters(users: &[UserRecord], cfg: &FilterConfig) -> Vec<UserRecord> {
    users
        .iter()
        .filter(|u| passes_filters(u, cfg))
        .cloned()
        .collect()
}
