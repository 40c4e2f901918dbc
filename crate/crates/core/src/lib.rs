//! Sensitivity analysis for unmeasured confounding in random-effects
//! meta-analyses of relative risks.
//!
//! The pipeline runs from study-level data ([`ingest`]) through a
//! random-effects fit ([`meta`]) to the sensitivity estimators ([`sens`]),
//! which take a hypothesized distribution of the log bias factor
//! ([`bias`]). [`simulate`] checks the inference by Monte Carlo.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bias;
pub mod distributions;
pub mod error;
pub mod ingest;
pub mod meta;
pub mod report;
pub mod sens;
pub mod simulate;

pub use bias::{BiasFactor, BiasSpec, ConfoundingStrength};
pub use error::{Error, Result};
pub use meta::{FitOptions, MetaFit, StudyRow};
pub use sens::{Direction, SensEstimate, Threshold};
