//! One-shot sensitivity report shared by the CLI and the HTTP service.

use serde::{Deserialize, Serialize};

use crate::bias::BiasSpec;
use crate::error::Result;
use crate::meta::{MetaFit, Tau2Method};
use crate::sens::{
    confounded_proportion, homogeneous_bound_direction, min_bias_factor, prop_above,
    prop_opposite_tail, strength_from_bias_estimate, BoundDirection, Direction, SensEstimate,
    Threshold,
};

/// Sensitivity parameters for a single report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisInputs {
    pub bias: BiasSpec,
    pub q: Threshold,
    /// Threshold for the tail on the far side of the null. Defaults to
    /// [`opposite_threshold`].
    pub q_opposite: Option<Threshold>,
    pub r: f64,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub pooled: f64,
    pub pooled_rr: f64,
    pub se_pooled: f64,
    pub tau2: f64,
    pub se_tau2: f64,
    pub k: Option<usize>,
    pub tau2_method: Tau2Method,
    pub var_tau2_method: String,
}

impl From<&MetaFit> for FitSummary {
    fn from(f: &MetaFit) -> Self {
        FitSummary {
            pooled: f.pooled,
            pooled_rr: f.pooled.exp(),
            se_pooled: f.se_pooled(),
            tau2: f.tau2,
            se_tau2: f.se_tau2(),
            k: f.k,
            tau2_method: f.tau2_method,
            var_tau2_method: f.var_tau2_method.label().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub fit: FitSummary,
    pub direction: Direction,
    pub q: f64,
    pub q_rr: f64,
    pub q_opposite: f64,
    pub q_opposite_rr: f64,
    pub r: f64,
    pub bias: BiasSpec,
    /// `p(q)` with no bias correction.
    pub confounded: SensEstimate,
    /// `p(q)` under the hypothesized bias.
    pub p_hat: SensEstimate,
    /// Proportion in the opposite tail under the same bias.
    pub p_hat_opposite: SensEstimate,
    pub t: SensEstimate,
    pub g: SensEstimate,
    /// What the `sigma^2_B* = 0` result says when the bias is heterogeneous.
    pub homogeneous_bound: BoundDirection,
    /// Largest admissible `sigma^2_B*` (exclusive) given the fitted `tau^2`.
    pub max_var_log_bias: f64,
    pub warnings: Vec<String>,
}

/// Mirror of `q` about the null on the RR scale (1.20 pairs with 0.80).
/// Thresholds at or beyond RR 2 have no such mirror and use `1/q` instead.
pub fn opposite_threshold(q: Threshold) -> Threshold {
    let mirrored = 2.0 - q.rr();
    if mirrored > 0.0 {
        Threshold::from_rr(mirrored)
    } else {
        Threshold(-q.log())
    }
}

pub fn analyze(fit: &MetaFit, inputs: &AnalysisInputs) -> Result<AnalysisReport> {
    let direction = Direction::resolve(fit.pooled, inputs.direction)?;
    let dir = Some(direction);
    let q = inputs.q;
    let q_opp = inputs.q_opposite.unwrap_or_else(|| opposite_threshold(q));

    let p_hat = prop_above(fit, &inputs.bias, q, dir)?;
    let p_hat_opposite = prop_opposite_tail(fit, &inputs.bias, q_opp, dir)?;
    let confounded = confounded_proportion(fit, q, dir)?;
    let t = min_bias_factor(fit, inputs.r, q, dir)?;
    let g = strength_from_bias_estimate(&t);
    let homogeneous_bound = homogeneous_bound_direction(fit, &inputs.bias, q, dir)?;

    let mut warnings: Vec<String> = Vec::new();
    for w in fit
        .warnings
        .iter()
        .chain(&p_hat.warnings)
        .chain(&p_hat_opposite.warnings)
        .chain(&confounded.warnings)
        .chain(&t.warnings)
    {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }

    Ok(AnalysisReport {
        fit: FitSummary::from(fit),
        direction,
        q: q.log(),
        q_rr: q.rr(),
        q_opposite: q_opp.log(),
        q_opposite_rr: q_opp.rr(),
        r: inputs.r,
        bias: inputs.bias,
        confounded,
        p_hat,
        p_hat_opposite,
        t,
        g,
        homogeneous_bound,
        max_var_log_bias: fit.tau2,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::BiasFactor;

    #[test]
    fn soy_report() {
        let fit = MetaFit::from_summary(0.82f64.ln(), 0.088, 0.10, 0.050, Some(20)).unwrap();
        let inputs = AnalysisInputs {
            bias: BiasSpec::none(),
            q: Threshold::from_rr(0.90),
            q_opposite: None,
            r: 0.1,
            direction: None,
        };
        let rep = analyze(&fit, &inputs).unwrap();
        assert_eq!(rep.direction, Direction::Preventive);
        assert!((rep.t.estimate - 1.63).abs() < 0.05);
        assert!((rep.g.estimate - 2.64).abs() < 0.07);
        assert_eq!(rep.p_hat, rep.confounded);
        assert!((rep.q_opposite_rr - 1.1).abs() < 1e-12);
    }

    #[test]
    fn opposite_thresholds() {
        let rr = |x: f64| opposite_threshold(Threshold::from_rr(x)).rr();
        assert!((rr(1.2) - 0.8).abs() < 1e-12);
        assert!((rr(0.9) - 1.1).abs() < 1e-12);
        assert!((rr(2.5) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn heterogeneity_error_names_values() {
        let fit = MetaFit::from_summary(0.2, 0.1, 0.05, 0.02, None).unwrap();
        let inputs = AnalysisInputs {
            bias: BiasSpec::new(BiasFactor::new(1.5).unwrap().log(), 0.06).unwrap(),
            q: Threshold::from_rr(1.1),
            q_opposite: None,
            r: 0.2,
            direction: None,
        };
        let msg = analyze(&fit, &inputs).unwrap_err().to_string();
        assert!(msg.contains("0.05") && msg.contains("0.06"), "{msg}");
    }
}
