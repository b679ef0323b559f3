//! Seeded synthetic cohorts drawn from the model's own generative story.
//!
//! Every generator consumes a single ChaCha20 stream sequentially, so output
//! depends only on the generator parameters (seed included), never on the
//! platform or on how many threads the caller runs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::attitude::{Polarity, Sign};
use crate::error::{Error, Result};
use crate::ingest::{EventKind, Gender, Id, InteractionEvent, UserProfile};
use crate::logit::RegressionRow;
use crate::puretypes::Observation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MixtureKind {
    Atom { at: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub kind: MixtureKind,
}

/// Distribution of the ideology score; all variants live on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum XDistribution {
    Uniform,
    Beta { alpha: f64, beta: f64 },
    Mixture { components: Vec<MixtureComponent> },
}

impl Default for XDistribution {
    /// Peaks at both extremes around a moderate bulk:
    /// `0.1 atom(0) + 0.8 Beta(2, 2) + 0.1 atom(1)`.
    fn default() -> Self {
        XDistribution::Mixture {
            components: vec![
                MixtureComponent { weight: 0.1, kind: MixtureKind::Atom { at: 0.0 } },
                MixtureComponent { weight: 0.8, kind: MixtureKind::Beta { alpha: 2.0, beta: 2.0 } },
                MixtureComponent { weight: 0.1, kind: MixtureKind::Atom { at: 1.0 } },
            ],
        }
    }
}

fn check_beta(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "beta parameters must be positive, got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

impl XDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            XDistribution::Uniform => Ok(()),
            XDistribution::Beta { alpha, beta } => check_beta(*alpha, *beta),
            XDistribution::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidInput("mixture has no components".into()));
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight >= 0.0) {
                        return Err(Error::InvalidInput(format!("negative mixture weight {}", c.weight)));
                    }
                    total += c.weight;
                    match c.kind {
                        MixtureKind::Atom { at } if !(0.0..=1.0).contains(&at) => {
                            return Err(Error::InvalidInput(format!("mixture atom {at} outside [0, 1]")))
                        }
                        MixtureKind::Beta { alpha, beta } => check_beta(alpha, beta)?,
                        _ => {}
                    }
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!("mixture weights sum to {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            XDistribution::Uniform => rng.random::<f64>(),
            XDistribution::Beta { alpha, beta } => sample_beta(*alpha, *beta, rng),
            XDistribution::Mixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = components.last().expect("validated nonempty");
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        chosen = c;
                        break;
                    }
                }
                match chosen.kind {
                    MixtureKind::Atom { at } => at,
                    MixtureKind::Beta { alpha, beta } => sample_beta(alpha, beta, rng),
                    MixtureKind::Uniform => rng.random::<f64>(),
                }
            }
        }
    }
}

fn sample_beta<R: Rng>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    Beta::new(alpha, beta)
        .expect("validated beta parameters")
        .sample(rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n: usize,
    pub p_true: f64,
    pub q_true: f64,
    pub x_distribution: XDistribution,
    pub seed: u64,
}

impl CohortSpec {
    pub fn new(n: usize, p_true: f64, q_true: f64, seed: u64) -> Self {
        CohortSpec {
            n,
            p_true,
            q_true,
            x_distribution: XDistribution::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("cohort size must be at least 1".into()));
        }
        for (name, v) in [("p_true", self.p_true), ("q_true", self.q_true)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} = {v} outside [0, 1]")));
            }
        }
        self.x_distribution.validate()
    }
}

/// Draws `x`, then approval with probability `x p + (1 - x) q`.
pub fn gen_cohort(spec: &CohortSpec) -> Result<Vec<Observation>> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = spec.x_distribution.sample(&mut rng);
        let approve = rng.random::<f64>() < x * spec.p_true + (1.0 - x) * spec.q_true;
        let a = if approve { Polarity::Positive } else { Polarity::Negative };
        out.push(Observation::new(x, a)?);
    }
    Ok(out)
}

/// Sampling ranges for regression covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    /// Ages are integers drawn uniformly from `age_min..=age_max`.
    pub age_min: u32,
    pub age_max: u32,
    pub male_share: f64,
    /// Friend counts are integers drawn uniformly from `0..=friends_max`.
    pub friends_max: u64,
    pub x_distribution: XDistribution,
}

impl Default for CovariateSpec {
    fn default() -> Self {
        CovariateSpec {
            age_min: 18,
            age_max: 75,
            male_share: 0.55,
            friends_max: 300,
            x_distribution: XDistribution::default(),
        }
    }
}

impl CovariateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.age_min == 0 || self.age_min > self.age_max {
            return Err(Error::InvalidInput(format!(
                "age range {}..={} is invalid",
                self.age_min, self.age_max
            )));
        }
        if !(0.0..=1.0).contains(&self.male_share) {
            return Err(Error::InvalidInput(format!("male share {} outside [0, 1]", self.male_share)));
        }
        self.x_distribution.validate()
    }
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Rows whose response is Bernoulli(logistic(linear predictor)) with
/// coefficients ordered (intercept, age, gender, friends, x).
pub fn gen_logit_cohort(
    n: usize,
    coefficients: &[f64; 5],
    covariates: &CovariateSpec,
    seed: u64,
) -> Result<Vec<RegressionRow>> {
    covariates.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let age = rng.random_range(covariates.age_min..=covariates.age_max) as f64;
        let gender = (rng.random::<f64>() < covariates.male_share) as u8;
        let friend_count = rng.random_range(0..=covariates.friends_max);
        let x = covariates.x_distribution.sample(&mut rng);
        let eta = coefficients[0]
            + coefficients[1] * age
            + coefficients[2] * gender as f64
            + coefficients[3] * friend_count as f64
            + coefficients[4] * x;
        let response = (rng.random::<f64>() < logistic(eta)) as u8;
        out.push(RegressionRow {
            response,
            age,
            gender,
            friend_count,
            x,
        });
    }
    Ok(out)
}

/// Parameters of a synthetic interaction log with matching profiles and
/// source-bias table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    /// Users that carry a signed attitude and enough subscriptions.
    pub n_users: usize,
    pub p_true: f64,
    pub q_true: f64,
    /// Latent ideology before quantization.
    pub x_distribution: XDistribution,
    /// Ideology scores are quantized to multiples of `1 / bias_levels`.
    pub bias_levels: u32,
    pub subscriptions_per_user: usize,
    /// Share of signed users expressed through likes rather than comments.
    pub like_share: f64,
    /// Extra users per signed user: neutral commenters.
    pub neutral_share: f64,
    /// Extra users per signed user: contradictory comment/like pairs.
    pub undefined_share: f64,
    /// Extra users per signed user: too few subscriptions.
    pub sparse_share: f64,
    /// Share of users with a stated age, and share of those above 90.
    pub age_share: f64,
    pub anomalous_age_share: f64,
    pub seed: u64,
}

impl WorldSpec {
    pub fn new(n_users: usize, p_true: f64, q_true: f64, seed: u64) -> Self {
        WorldSpec {
            n_users,
            p_true,
            q_true,
            x_distribution: XDistribution::default(),
            bias_levels: 20,
            subscriptions_per_user: 12,
            like_share: 0.3,
            neutral_share: 0.2,
            undefined_share: 0.01,
            sparse_share: 0.1,
            age_share: 0.5,
            anomalous_age_share: 0.03,
            seed,
        }
    }
}

/// A synthetic log together with the ground truth it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub events: Vec<InteractionEvent>,
    pub profiles: Vec<UserProfile>,
    pub biases: Vec<(String, f64)>,
    /// Ground-truth `(x, a)` of every user that should survive the default
    /// filters (without the age cut).
    pub truth: Vec<Observation>,
}

/// Builds an event log where each retained user's ideology is an exact
/// multiple of `1 / bias_levels` and the attitude follows the pure-types
/// model. Distractor users exercise every filter stage.
pub fn gen_world(spec: &WorldSpec) -> Result<World> {
    spec.x_distribution.validate()?;
    if spec.bias_levels == 0 || spec.subscriptions_per_user == 0 {
        return Err(Error::InvalidInput("bias_levels and subscriptions_per_user must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let levels = spec.bias_levels;
    let per_user = spec.subscriptions_per_user;

    // `per_user` sources at every bias level so users can follow only their own level
    let mut biases = Vec::new();
    for k in 0..=levels {
        for s in 0..per_user {
            biases.push((format!("src_{k}_{s}"), k as f64 / levels as f64));
        }
    }

    let ts = "2020-05-01T12:00:00Z".to_string();
    let mut events = Vec::new();
    let mut next_event = 0u64;
    let mut new_id = |prefix: &str| {
        next_event += 1;
        Id::new(format!("{prefix}{next_event}"))
    };

    let post_id = new_id("post");
    events.push(InteractionEvent {
        event_id: post_id.clone(),
        kind: EventKind::Post,
        actor_id: Id::new("page_news"),
        parent_id: None,
        text: Some("Коронавирус: новые меры, карантин продлён".into()),
        label: None,
        timestamp: ts.clone(),
    });
    let off_topic_post = new_id("post");
    events.push(InteractionEvent {
        event_id: off_topic_post.clone(),
        kind: EventKind::Post,
        actor_id: Id::new("page_news"),
        parent_id: None,
        text: Some("Футбольный матч перенесли".into()),
        label: None,
        timestamp: ts.clone(),
    });
    // signed anchor comments that like-only users can like
    let mut anchors = BTreeMap::new();
    for (pol, text) in [(Sign::Positive, "Маски спасают жизни"), (Sign::Negative, "Не буду носить намордник")] {
        let id = new_id("c");
        events.push(InteractionEvent {
            event_id: id.clone(),
            kind: EventKind::Comment,
            actor_id: Id::new(format!("anchor_{}", pol.value())),
            parent_id: Some(post_id.clone()),
            text: Some(text.into()),
            label: Some(pol),
            timestamp: ts.clone(),
        });
        anchors.insert(pol, id);
    }

    let mut profiles = Vec::new();
    let mut truth = Vec::new();
    let mut user_no = 0usize;

    let mut push_profile = |rng: &mut ChaCha20Rng, uid: &Id, level: u32, n_subs: usize| {
        let age = if rng.random::<f64>() < spec.age_share {
            if rng.random::<f64>() < spec.anomalous_age_share {
                Some(rng.random_range(91..=110u32))
            } else {
                Some(rng.random_range(18..=80u32))
            }
        } else {
            None
        };
        let gender = if rng.random::<f64>() < 0.9 {
            Some(if rng.random::<f64>() < 0.55 { Gender::Male } else { Gender::Female })
        } else {
            None
        };
        profiles.push(UserProfile {
            user_id: uid.clone(),
            age,
            gender,
            friend_count: rng.random_range(0..=500u64),
            subscriptions: (0..n_subs).map(|s| format!("src_{level}_{s}")).collect(),
        });
    };

    let comment_text = ["Маски обязательны?", "масочный режим", "Про маски", "намордники"];

    for _ in 0..spec.n_users {
        user_no += 1;
        let uid = Id::new(format!("u{user_no}"));
        let raw_x = spec.x_distribution.sample(&mut rng);
        let level = (raw_x * levels as f64).round() as u32;
        let x = level as f64 / levels as f64;
        let approve = rng.random::<f64>() < x * spec.p_true + (1.0 - x) * spec.q_true;
        let sign = if approve { Sign::Positive } else { Sign::Negative };
        if rng.random::<f64>() < spec.like_share {
            events.push(InteractionEvent {
                event_id: new_id("l"),
                kind: EventKind::Like,
                actor_id: uid.clone(),
                parent_id: Some(anchors[&sign].clone()),
                text: None,
                label: None,
                timestamp: ts.clone(),
            });
        } else {
            let text = comment_text[rng.random_range(0..comment_text.len())];
            events.push(InteractionEvent {
                event_id: new_id("c"),
                kind: EventKind::Comment,
                actor_id: uid.clone(),
                parent_id: Some(post_id.clone()),
                text: Some(text.into()),
                label: Some(sign),
                timestamp: ts.clone(),
            });
        }
        truth.push(Observation::new(x, sign.polarity().expect("signed"))?);
        push_profile(&mut rng, &uid, level, per_user);
    }

    let extra = |share: f64| (share * spec.n_users as f64).round() as usize;
    for kind in 0..4 {
        let count = match kind {
            0 => extra(spec.neutral_share),
            1 => extra(spec.undefined_share),
            2 => extra(spec.sparse_share),
            _ => extra(spec.neutral_share / 2.0),
        };
        for _ in 0..count {
            user_no += 1;
            let uid = Id::new(format!("u{user_no}"));
            let level = rng.random_range(0..=levels);
            let (label, parent, n_subs) = match kind {
                // neutral commenter
                0 => (Sign::Neutral, post_id.clone(), per_user),
                // writes a positive comment but likes a negative one
                1 => (Sign::Positive, post_id.clone(), per_user),
                // signed but follows too few sources
                2 => (Sign::Positive, post_id.clone(), 5.min(per_user)),
                // on-topic words under an off-topic post
                _ => (Sign::Negative, off_topic_post.clone(), per_user),
            };
            events.push(InteractionEvent {
                event_id: new_id("c"),
                kind: EventKind::Comment,
                actor_id: uid.clone(),
                parent_id: Some(parent),
                text: Some("маски".into()),
                label: Some(label),
                timestamp: ts.clone(),
            });
            if kind == 1 {
                events.push(InteractionEvent {
                    event_id: new_id("l"),
                    kind: EventKind::Like,
                    actor_id: uid.clone(),
                    parent_id: Some(anchors[&Sign::Negative].clone()),
                    text: None,
                    label: None,
                    timestamp: ts.clone(),
                });
            }
            push_profile(&mut rng, &uid, level, n_subs);
        }
    }

    Ok(World {
        events,
        profiles,
        biases,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_cohort() {
        let spec = CohortSpec::new(500, 0.95, 0.45, 42);
        let a = gen_cohort(&spec).unwrap();
        let b = gen_cohort(&spec).unwrap();
        let bits = |v: &[Observation]| v.iter().map(|o| (o.x.to_bits(), o.a)).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = gen_cohort(&CohortSpec::new(500, 0.95, 0.45, 43)).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn x_stays_in_unit_interval() {
        for dist in [
            XDistribution::Uniform,
            XDistribution::Beta { alpha: 0.3, beta: 0.3 },
            XDistribution::default(),
        ] {
            let spec = CohortSpec { x_distribution: dist, ..CohortSpec::new(20_000, 0.5, 0.5, 7) };
            assert!(gen_cohort(&spec).unwrap().iter().all(|o| (0.0..=1.0).contains(&o.x)));
        }
    }

    #[test]
    fn default_mixture_has_atoms() {
        let obs = gen_cohort(&CohortSpec::new(100_000, 0.5, 0.5, 1)).unwrap();
        let zeros = obs.iter().filter(|o| o.x == 0.0).count() as f64 / 1e5;
        let ones = obs.iter().filter(|o| o.x == 1.0).count() as f64 / 1e5;
        // binomial sd at n = 1e5, w = 0.1 is about 0.00095
        assert!((zeros - 0.1).abs() < 0.005, "{zeros}");
        assert!((ones - 0.1).abs() < 0.005, "{ones}");
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_cohort(&CohortSpec::new(0, 0.5, 0.5, 1)).is_err());
        assert!(gen_cohort(&CohortSpec::new(5, 1.5, 0.5, 1)).is_err());
        let bad_mix = XDistribution::Mixture {
            components: vec![MixtureComponent { weight: 0.5, kind: MixtureKind::Uniform }],
        };
        assert!(gen_cohort(&CohortSpec { x_distribution: bad_mix, ..CohortSpec::new(5, 0.5, 0.5, 1) }).is_err());
        assert!(gen_cohort(&CohortSpec {
            x_distribution: XDistribution::Beta { alpha: 0.0, beta: 1.0 },
            ..CohortSpec::new(5, 0.5, 0.5, 1)
        })
        .is_err());
        let cov = CovariateSpec { age_min: 50, age_max: 20, ..Default::default() };
        assert!(gen_logit_cohort(10, &[0.0; 5], &cov, 1).is_err());
    }

    #[test]
    fn logit_cohort_is_seeded() {
        let cov = CovariateSpec::default();
        let a = gen_logit_cohort(1000, &[0.3, -0.02, -0.75, 0.01, 3.4], &cov, 9).unwrap();
        let b = gen_logit_cohort(1000, &[0.3, -0.02, -0.75, 0.01, 3.4], &cov, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.validate().is_ok()));
    }

    #[test]
    fn spec_serializes() {
        let spec = CohortSpec::new(582, 0.95, 0.45, 42);
        let json = serde_json::to_string(&spec).unwrap();
        let back: CohortSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
