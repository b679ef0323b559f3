//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls the library's likelihood, gradient or optimizer code.

#![allow(dead_code)]

use maskscope_core::attitude::{Polarity, Sign};
use maskscope_core::ingest::{EventKind, Id, InteractionEvent};

/// `-ln L(p, q)` written out term by term.
pub fn mixture_nll(p: f64, q: f64, xs: &[f64], approve: &[bool]) -> f64 {
    let mut total = 0.0;
    for (&x, &yes) in xs.iter().zip(approve) {
        let prob_yes = x * p + (1.0 - x) * q;
        total -= if yes { prob_yes.ln() } else { (1.0 - prob_yes).ln() };
    }
    total
}

pub fn split_obs(obs: &[maskscope_core::puretypes::Observation]) -> (Vec<f64>, Vec<bool>) {
    (
        obs.iter().map(|o| o.x).collect(),
        obs.iter().map(|o| o.a == Polarity::Positive).collect(),
    )
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Minimizes a function over `[lo, hi]^2` by exhaustive search on an
/// `initial x initial` lattice, then repeatedly re-gridding a window of two
/// cells around the incumbent until the spacing is below `tol`.
pub fn grid_minimize(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, initial: usize, tol: f64) -> (f64, f64, f64) {
    let mut best = (lo, lo, f64::INFINITY);
    for &u in &linspace(lo, hi, initial) {
        for &v in &linspace(lo, hi, initial) {
            let val = f(u, v);
            if val < best.2 {
                best = (u, v, val);
            }
        }
    }
    let mut h = (hi - lo) / (initial - 1) as f64;
    const SUB: usize = 41;
    while h > tol {
        let (u0, v0) = (best.0, best.1);
        let us = linspace((u0 - 2.0 * h).max(lo), (u0 + 2.0 * h).min(hi), SUB);
        let vs = linspace((v0 - 2.0 * h).max(lo), (v0 + 2.0 * h).min(hi), SUB);
        for &u in &us {
            for &v in &vs {
                let val = f(u, v);
                if val < best.2 {
                    best = (u, v, val);
                }
            }
        }
        h = 4.0 * h / (SUB - 1) as f64;
    }
    best
}

/// Grid oracle for the pure-types fit over the delta-box.
pub fn puretypes_oracle(xs: &[f64], approve: &[bool], delta: f64, initial: usize) -> (f64, f64, f64) {
    grid_minimize(|p, q| mixture_nll(p, q, xs, approve), delta, 1.0 - delta, initial, 1e-9)
}

/// Bernoulli log-likelihood with logistic link, intercept plus one covariate.
pub fn logit1_loglik(b0: f64, b1: f64, xs: &[f64], ys: &[u8]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let eta = b0 + b1 * x;
            // ln(1 + e^eta) computed without overflow
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            if y == 1 {
                eta - softplus
            } else {
                -softplus
            }
        })
        .sum()
}

/// Brute-force maximizer over `[-10, 10]^2` with refinement.
pub fn logit1_oracle(xs: &[f64], ys: &[u8]) -> (f64, f64, f64) {
    let (b0, b1, neg) = grid_minimize(|a, b| -logit1_loglik(a, b, xs, ys), -10.0, 10.0, 201, 1e-8);
    (b0, b1, -neg)
}

/// Relative error with a floor of 1 on the scale.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn central_diff(f: impl Fn(f64) -> f64, at: f64, h: f64) -> f64 {
    (f(at + h) - f(at - h)) / (2.0 * h)
}

/// Reference attitude-table row counts in row order.
pub const REFERENCE_COUNTS: [u64; 11] = [106, 10, 7, 1098, 15, 41, 242, 3, 37, 178, 556];

/// Builds an interaction log whose users realize exactly `counts[k]` users in
/// attitude-table row `k`. Row order is comment-attitude (-1, 0, 1, none) by
/// like-attitude (none, -1, 1).
pub fn engineered_log(counts: &[u64; 11]) -> Vec<InteractionEvent> {
    let rows: [(Option<i64>, Option<i64>); 11] = [
        (Some(-1), None),
        (Some(-1), Some(-1)),
        (Some(-1), Some(1)),
        (Some(0), None),
        (Some(0), Some(-1)),
        (Some(0), Some(1)),
        (Some(1), None),
        (Some(1), Some(-1)),
        (Some(1), Some(1)),
        (None, Some(-1)),
        (None, Some(1)),
    ];
    assert!(counts[0] > 0 && counts[6] > 0, "anchor rows must be populated");
    let mut events = vec![
        InteractionEvent {
            event_id: Id::new("post-covid"),
            kind: EventKind::Post,
            actor_id: Id::new("page"),
            parent_id: None,
            text: Some("Коронавирус: новые ограничения".into()),
            label: None,
            timestamp: "2020-05-12T09:00:00Z".into(),
        },
        InteractionEvent {
            event_id: Id::new("post-other"),
            kind: EventKind::Post,
            actor_id: Id::new("page"),
            parent_id: None,
            text: Some("Football results".into()),
            label: None,
            timestamp: "2020-05-12T09:01:00Z".into(),
        },
    ];
    let mut serial = 0u64;
    let mut next = |prefix: &str| {
        serial += 1;
        format!("{prefix}-{serial}")
    };
    let comment = |id: String, actor: &str, label: i64| InteractionEvent {
        event_id: Id::new(id),
        kind: EventKind::Comment,
        actor_id: Id::new(actor),
        parent_id: Some(Id::new("post-covid")),
        text: Some(match label {
            1 => "Носите МАСКИ, это важно".to_string(),
            -1 => "Маски бесполезны".to_string(),
            _ => "Где купить маску?".to_string(),
        }),
        label: Sign::from_value(label),
        timestamp: "2020-05-12T10:00:00Z".into(),
    };
    // First user of row (-1, none) and of row (1, none) author the anchors.
    let neg_anchor = "comment-anchor-neg";
    let pos_anchor = "comment-anchor-pos";
    let mut user = 0u64;
    for (k, (c, l)) in rows.iter().enumerate() {
        for i in 0..counts[k] {
            user += 1;
            let actor = format!("u{user}");
            if let Some(c) = c {
                let id = match (k, i) {
                    (0, 0) => neg_anchor.to_string(),
                    (6, 0) => pos_anchor.to_string(),
                    _ => next("comment"),
                };
                events.push(comment(id, &actor, *c));
                // an off-topic comment that must be ignored
                events.push(InteractionEvent {
                    parent_id: Some(Id::new("post-other")),
                    ..comment(next("comment"), &actor, -*c)
                });
            }
            if let Some(l) = l {
                let target = if *l > 0 { pos_anchor } else { neg_anchor };
                for _ in 0..2 {
                    // repeated likes on the same comment count once
                    events.push(InteractionEvent {
                        event_id: Id::new(next("like")),
                        kind: EventKind::Like,
                        actor_id: Id::new(actor.as_str()),
                        parent_id: Some(Id::new(target)),
                        text: None,
                        label: None,
                        timestamp: "2020-05-12T11:00:00Z".into(),
                    });
                }
            }
        }
    }
    events
}

/// Bernoulli log-likelihood with logistic link for a general design given
/// row by row.
pub fn logit_loglik(beta: &[f64], rows: &[Vec<f64>], ys: &[u8]) -> f64 {
    rows.iter()
        .zip(ys)
        .map(|(r, &y)| {
            let eta: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            if y == 1 {
                eta - softplus
            } else {
                -softplus
            }
        })
        .sum()
}

/// Derivative of `t -> -ln L(t, t)`, summed term by term.
pub fn diagonal_slope(t: f64, xs: &[f64], approve: &[bool]) -> f64 {
    xs.iter()
        .zip(approve)
        .map(|(&x, &yes)| {
            let prob_yes = x * t + (1.0 - x) * t;
            if yes {
                -1.0 / prob_yes
            } else {
                1.0 / (1.0 - prob_yes)
            }
        })
        .sum()
}
