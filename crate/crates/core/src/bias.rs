//! Bias-factor algebra for a single study.
//!
//! The joint bias factor `B = RR_XU * RR_UY / (RR_XU + RR_UY - 1)` bounds how
//! far unmeasured confounding can move an observed relative risk. When the two
//! confounding associations are taken equal to a common value `g`, the bias
//! factor and `g` are in one-to-one correspondence:
//!
//! ```text
//! B = g^2 / (2g - 1)        g = B + sqrt(B^2 - B)
//! ```
//!
//! For an apparently preventive exposure the exposure-confounder parameter is
//! the maximum of the *inverse* relative risks, so the same `g >= 1` scale is
//! used in both directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values this far below 1 are treated as rounding noise and clamped.
const UNIT_SLACK: f64 = 1e-12;

fn at_least_one(x: f64, what: &str) -> Result<f64> {
    if x >= 1.0 {
        Ok(x)
    } else if x >= 1.0 - UNIT_SLACK {
        Ok(1.0)
    } else {
        Err(Error::domain(format!("{what} must be >= 1, got {x}")))
    }
}

/// Joint bias factor on the relative-risk scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BiasFactor(f64);

impl BiasFactor {
    pub fn new(b: f64) -> Result<Self> {
        at_least_one(b, "bias factor").map(BiasFactor)
    }

    pub fn from_log(log_b: f64) -> Result<Self> {
        Self::new(log_b.exp())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `B*`, the bias factor on the log scale.
    pub fn log(self) -> f64 {
        self.0.ln()
    }
}

/// Common confounding association `g = RR_XU = RR_UY`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ConfoundingStrength(f64);

impl ConfoundingStrength {
    pub fn new(g: f64) -> Result<Self> {
        at_least_one(g, "confounding strength").map(ConfoundingStrength)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Hypothesized normal distribution of the log bias factor across studies.
/// A zero variance is the homogeneous-bias case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSpec {
    pub mu_log_bias: f64,
    pub var_log_bias: f64,
}

impl BiasSpec {
    pub fn new(mu_log_bias: f64, var_log_bias: f64) -> Result<Self> {
        if !(mu_log_bias >= 0.0) || !mu_log_bias.is_finite() {
            return Err(Error::domain(format!(
                "mean log bias factor must be finite and >= 0, got {mu_log_bias}"
            )));
        }
        if !(var_log_bias >= 0.0) || !var_log_bias.is_finite() {
            return Err(Error::domain(format!(
                "variance of the log bias factor must be finite and >= 0, got {var_log_bias}"
            )));
        }
        Ok(BiasSpec {
            mu_log_bias,
            var_log_bias,
        })
    }

    /// No confounding bias at all.
    pub fn none() -> Self {
        BiasSpec {
            mu_log_bias: 0.0,
            var_log_bias: 0.0,
        }
    }

    /// Common bias factor `B` in every study.
    pub fn homogeneous(b: BiasFactor) -> Self {
        BiasSpec {
            mu_log_bias: b.log(),
            var_log_bias: 0.0,
        }
    }

    /// Mean bias expressed on the relative-risk scale, `exp(mu_B*)`.
    pub fn mean_bias_factor(&self) -> f64 {
        self.mu_log_bias.exp()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.var_log_bias == 0.0
    }
}

/// Bound on confounding bias from the two sensitivity parameters.
pub fn joint_bias_factor(rr_xu: f64, rr_uy: f64) -> Result<BiasFactor> {
    let rr_xu = at_least_one(rr_xu, "RR_XU")?;
    let rr_uy = at_least_one(rr_uy, "RR_UY")?;
    if !rr_xu.is_finite() || !rr_uy.is_finite() {
        return Err(Error::domain("sensitivity parameters must be finite"));
    }
    if rr_xu == 1.0 || rr_uy == 1.0 {
        return Ok(BiasFactor(1.0));
    }
    BiasFactor::new(rr_xu * rr_uy / (rr_xu + rr_uy - 1.0))
}

pub fn bias_to_strength(b: BiasFactor) -> ConfoundingStrength {
    let b = b.0;
    ConfoundingStrength(b + (b * b - b).max(0.0).sqrt())
}

pub fn strength_to_bias(g: ConfoundingStrength) -> BiasFactor {
    let g = g.0;
    BiasFactor((g * g / (2.0 * g - 1.0)).max(1.0))
}
