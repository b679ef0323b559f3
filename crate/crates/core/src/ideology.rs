//! Ideology scores from followed sources, and the three-group split.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Known political bias of information sources: 1 is oppositional, 0 is
/// loyal to the government.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBiasTable {
    biases: HashMap<String, f64>,
}

impl SourceBiasTable {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut biases = HashMap::new();
        for (id, bias) in entries {
            let id = id.into();
            if !(0.0..=1.0).contains(&bias) {
                return Err(Error::InvalidInput(format!(
                    "bias of source {id:?} is {bias}, outside [0, 1]"
                )));
            }
            biases.insert(id, bias);
        }
        if biases.is_empty() {
            return Err(Error::InvalidInput("source bias table is empty".into()));
        }
        Ok(SourceBiasTable { biases })
    }

    /// Reads a `source_id,bias` CSV with a header row.
    pub fn from_csv<R: Read>(reader: R, origin: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            source_id: String,
            bias: f64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(origin, 1, e))?
            .clone();
        if !headers.iter().any(|h| h == "source_id") || !headers.iter().any(|h| h == "bias") {
            return Err(Error::parse(origin, 1, "header must contain source_id and bias"));
        }
        let mut entries = Vec::new();
        for (i, rec) in rdr.deserialize::<Row>().enumerate() {
            let row = rec.map_err(|e| Error::parse(origin, i + 2, e))?;
            if !(0.0..=1.0).contains(&row.bias) {
                return Err(Error::parse(
                    origin,
                    i + 2,
                    format!("bias {} outside [0, 1]", row.bias),
                ));
            }
            entries.push((row.source_id, row.bias));
        }
        SourceBiasTable::new(entries)
    }

    pub fn get(&self, source: &str) -> Option<f64> {
        self.biases.get(source).copied()
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }

    /// The table with every bias `b` replaced by `1 - b`.
    pub fn mirrored(&self) -> Self {
        SourceBiasTable {
            biases: self.biases.iter().map(|(k, v)| (k.clone(), 1.0 - v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdeologyScore {
    pub x: f64,
    /// Distinct subscribed sources with a known bias.
    pub support: usize,
}

/// Mean bias of the distinct subscribed sources found in the table.
pub fn estimate_x<S: AsRef<str>>(subscriptions: &[S], table: &SourceBiasTable) -> Option<IdeologyScore> {
    estimate_x_with_support(subscriptions, table, 1)
}

/// As [`estimate_x`], but `None` unless at least `min_support` distinct known
/// sources back the estimate.
pub fn estimate_x_with_support<S: AsRef<str>>(
    subscriptions: &[S],
    table: &SourceBiasTable,
    min_support: usize,
) -> Option<IdeologyScore> {
    // Sorted, deduplicated ids make the sum order (and so the bits) canonical.
    let distinct: BTreeSet<&str> = subscriptions.iter().map(AsRef::as_ref).collect();
    let known: Vec<f64> = distinct.into_iter().filter_map(|s| table.get(s)).collect();
    if known.is_empty() || known.len() < min_support {
        return None;
    }
    let x = (known.iter().sum::<f64>() / known.len() as f64).clamp(0.0, 1.0);
    Some(IdeologyScore {
        x,
        support: known.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Conservative,
    Moderate,
    Oppositionist,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Conservative, Group::Moderate, Group::Oppositionist];

    pub fn name(self) -> &'static str {
        match self {
            Group::Conservative => "conservative",
            Group::Moderate => "moderate",
            Group::Oppositionist => "oppositionist",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupCutoffs {
    pub low: f64,
    pub high: f64,
}

impl GroupCutoffs {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && high < 1.0 && low < high) {
            return Err(Error::Config(format!(
                "group cutoffs must satisfy 0 < low < high < 1, got {low} and {high}"
            )));
        }
        Ok(GroupCutoffs { low, high })
    }
}

impl Default for GroupCutoffs {
    fn default() -> Self {
        GroupCutoffs { low: 0.33, high: 0.66 }
    }
}

/// Conservative below `low`, oppositionist above `high`, moderate otherwise
/// (both cutoffs belong to the moderate group).
pub fn classify_group(x: f64, cutoffs: &GroupCutoffs) -> Result<Group> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("ideology score {x} outside [0, 1]")));
    }
    Ok(if x < cutoffs.low {
        Group::Conservative
    } else if x > cutoffs.high {
        Group::Oppositionist
    } else {
        Group::Moderate
    })
}
