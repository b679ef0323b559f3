//! Attitude analysis for social-network cohorts.
//!
//! The pipeline turns interaction logs into per-user attitudes
//! ([`ingest`], [`fusion`]), projects subscriptions onto an ideology score
//! ([`ideology`]), and fits two models of attitude: a logistic regression on
//! demographics and ideology ([`logit`]) and the pure-types mixture
//! ([`puretypes`]). [`synth`] generates seeded cohorts with known truth, and
//! [`pipeline`] wires everything into reproducible report bundles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attitude;
pub mod error;
pub mod fusion;
pub mod ideology;
pub mod ingest;
pub mod logit;
pub mod numfmt;
pub mod pipeline;
pub mod puretypes;
pub mod synth;

pub use attitude::{Overall, Polarity, Sign};
pub use error::{Error, Result};
