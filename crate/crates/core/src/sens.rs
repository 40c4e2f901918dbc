//! Sensitivity estimators for a confounded random-effects meta-analysis.
//!
//! With `B*`, the log bias factor, distributed `N(mu_B*, sigma^2_B*)`
//! independently of the true effects, the true effects are normal with mean
//! `yhat - mu_B*` (apparently causative) or `yhat + mu_B*` (apparently
//! preventive) and variance `tau^2 - sigma^2_B*`. Three quantities follow:
//!
//! * `p(q)`, the proportion of true effects more extreme than `q`;
//! * `T(r, q)`, the common bias factor that brings that proportion down to `r`;
//! * `G(r, q)`, the same requirement on the confounding-strength scale.
//!
//! Standard errors come from the delta method, treating the pooled estimate
//! and `tau^2` as independent.

use serde::{Deserialize, Serialize};

use crate::bias::{bias_to_strength, strength_to_bias, BiasFactor, BiasSpec, ConfoundingStrength};
use crate::distributions::{phi_cdf, phi_pdf, phi_quantile};
use crate::error::{Error, Result};
use crate::meta::MetaFit;

/// Normal multiplier for the reported 95% Wald intervals.
pub const WALD_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Causative,
    Preventive,
}

impl Direction {
    /// Direction implied by the sign of the pooled estimate, unless overridden.
    pub fn resolve(pooled: f64, explicit: Option<Direction>) -> Result<Direction> {
        match explicit {
            Some(d) => Ok(d),
            None if pooled > 0.0 => Ok(Direction::Causative),
            None if pooled < 0.0 => Ok(Direction::Preventive),
            None => Err(Error::AmbiguousDirection),
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::Causative => 1.0,
            Direction::Preventive => -1.0,
        }
    }

    /// Conventional threshold: RR 1.10 above the null, 0.90 below it.
    pub fn default_threshold(self) -> Threshold {
        match self {
            Direction::Causative => Threshold::from_rr(1.10),
            Direction::Preventive => Threshold::from_rr(0.90),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Causative => "causative",
            Direction::Preventive => "preventive",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "causative" => Ok(Direction::Causative),
            "preventive" => Ok(Direction::Preventive),
            other => Err(Error::domain(format!(
                "direction must be 'causative' or 'preventive', got '{other}'"
            ))),
        }
    }
}

/// Conventional minimum proportion: 10% with at least 10 studies, else 20%.
pub fn default_r(k: Option<usize>) -> f64 {
    match k {
        Some(k) if k < 10 => 0.20,
        _ => 0.10,
    }
}

/// Effect-size threshold on the log relative-risk scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Threshold(pub f64);

impl Threshold {
    pub fn from_rr(rr: f64) -> Self {
        Threshold(rr.ln())
    }

    pub fn log(self) -> f64 {
        self.0
    }

    pub fn rr(self) -> f64 {
        self.0.exp()
    }

    fn check(self) -> Result<f64> {
        if self.0.is_finite() {
            Ok(self.0)
        } else {
            Err(Error::domain(format!(
                "threshold q must be finite, got {}",
                self.0
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Proportion,
    BiasFactorT,
    StrengthG,
}

/// A point estimate with delta-method inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensEstimate {
    pub kind: EstimateKind,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub direction: Direction,
    /// Threshold `q` on the log scale.
    pub q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasSpec>,
    pub no_bias_required: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn threshold_warning(direction: Direction, q: f64) -> Option<String> {
    match direction {
        Direction::Causative if q < 0.0 => Some(format!(
            "threshold RR {:.4} lies below the null for an apparently causative effect",
            q.exp()
        )),
        Direction::Preventive if q > 0.0 => Some(format!(
            "threshold RR {:.4} lies above the null for an apparently preventive effect",
            q.exp()
        )),
        _ => None,
    }
}

fn check_fit(fit: &MetaFit) -> Result<()> {
    if !fit.pooled.is_finite()
        || !(fit.tau2 >= 0.0)
        || !(fit.var_pooled >= 0.0)
        || !(fit.var_tau2 >= 0.0)
    {
        return Err(Error::domain(
            "fit summary statistics must be finite with nonnegative variances",
        ));
    }
    Ok(())
}

fn check_bias(bias: &BiasSpec) -> Result<()> {
    if !bias.mu_log_bias.is_finite()
        || !(bias.var_log_bias >= 0.0)
        || !bias.var_log_bias.is_finite()
    {
        return Err(Error::domain(format!(
            "bias distribution needs a finite mean and finite variance >= 0, got ({}, {})",
            bias.mu_log_bias, bias.var_log_bias
        )));
    }
    Ok(())
}

/// Estimated mean of the true effects, `yhat -/+ mu_B*`.
pub fn true_effect_mean(fit: &MetaFit, bias: &BiasSpec, direction: Direction) -> f64 {
    fit.pooled - direction.sign() * bias.mu_log_bias
}

/// Which tail of the true-effect distribution is being measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tail {
    Upper,
    Lower,
}

fn tail_proportion(
    fit: &MetaFit,
    bias: &BiasSpec,
    q: Threshold,
    direction: Direction,
    tail: Tail,
) -> Result<SensEstimate> {
    check_fit(fit)?;
    check_bias(bias)?;
    let q = q.check()?;
    let resid_var = fit.tau2 - bias.var_log_bias;
    if !(resid_var > 0.0) {
        return Err(Error::InsufficientHeterogeneity {
            tau2: fit.tau2,
            var_log_bias: bias.var_log_bias,
        });
    }
    let sd = resid_var.sqrt();
    let gap = q - true_effect_mean(fit, bias, direction);
    let z = gap / sd;
    let estimate = match tail {
        Tail::Upper => phi_cdf(-z),
        Tail::Lower => phi_cdf(z),
    };
    let se = phi_pdf(z)
        * (fit.var_pooled / resid_var + fit.var_tau2 * gap * gap / (4.0 * resid_var.powi(3)))
            .sqrt();

    Ok(SensEstimate {
        kind: EstimateKind::Proportion,
        estimate,
        se: Some(se),
        ci_lo: Some((estimate - WALD_Z * se).max(0.0)),
        ci_hi: Some((estimate + WALD_Z * se).min(1.0)),
        direction,
        q,
        r: None,
        bias: Some(*bias),
        no_bias_required: false,
        warnings: threshold_warning(direction, q).into_iter().collect(),
    })
}

/// Proportion of true effects beyond `q` in the direction of the pooled
/// effect: above `q` when causative, below `q` when preventive.
pub fn prop_above(
    fit: &MetaFit,
    bias: &BiasSpec,
    q: Threshold,
    direction: Option<Direction>,
) -> Result<SensEstimate> {
    let direction = Direction::resolve(fit.pooled, direction)?;
    let tail = match direction {
        Direction::Causative => Tail::Upper,
        Direction::Preventive => Tail::Lower,
    };
    tail_proportion(fit, bias, q, direction, tail)
}

/// Proportion of true effects beyond `q_opposite` on the far side of the
/// null: below it when causative, above it when preventive.
pub fn prop_opposite_tail(
    fit: &MetaFit,
    bias: &BiasSpec,
    q_opposite: Threshold,
    direction: Option<Direction>,
) -> Result<SensEstimate> {
    let direction = Direction::resolve(fit.pooled, direction)?;
    let tail = match direction {
        Direction::Causative => Tail::Lower,
        Direction::Preventive => Tail::Upper,
    };
    let mut est = tail_proportion(fit, bias, q_opposite, direction, tail)?;
    // The opposite threshold sits on the other side of the null by construction.
    est.warnings.clear();
    Ok(est)
}

/// Unadjusted proportion, `p(q)` with no bias.
pub fn confounded_proportion(
    fit: &MetaFit,
    q: Threshold,
    direction: Option<Direction>,
) -> Result<SensEstimate> {
    prop_above(fit, &BiasSpec::none(), q, direction)
}

fn check_r(r: f64) -> Result<f64> {
    if r > 0.0 && r < 1.0 {
        Ok(r)
    } else {
        Err(Error::domain(format!(
            "proportion r must lie strictly in (0, 1), got {r}"
        )))
    }
}

/// Minimum common bias factor `T(r, q)` that reduces to `r` the proportion of
/// true effects beyond `q`.
pub fn min_bias_factor(
    fit: &MetaFit,
    r: f64,
    q: Threshold,
    direction: Option<Direction>,
) -> Result<SensEstimate> {
    check_fit(fit)?;
    let r = check_r(r)?;
    let q = q.check()?;
    let direction = Direction::resolve(fit.pooled, direction)?;

    // Causative: exp{z_(1-r) tau - q + yhat}; preventive: exp{q - yhat - z_r tau}.
    // Since z_r = -z_(1-r) both share one form.
    let z = phi_quantile(1.0 - r);
    let tau = fit.tau2.sqrt();
    let t_hat = (direction.sign() * (fit.pooled - q) + z * tau).exp();

    let mut warnings: Vec<String> = threshold_warning(direction, q).into_iter().collect();
    let no_bias_required = t_hat <= 1.0;
    let se = if fit.tau2 > 0.0 {
        Some(t_hat * (fit.var_pooled + fit.var_tau2 * z * z / (4.0 * fit.tau2)).sqrt())
    } else {
        warnings.push(
            "tau^2 = 0: the effects are estimated as homogeneous and the standard error of T is undefined"
                .to_string(),
        );
        None
    };
    let (se, ci_lo, ci_hi) = match se {
        Some(se) if !no_bias_required => (
            Some(se),
            Some((t_hat - WALD_Z * se).max(1.0)),
            Some((t_hat + WALD_Z * se).max(1.0)),
        ),
        _ => (None, None, None),
    };

    Ok(SensEstimate {
        kind: EstimateKind::BiasFactorT,
        estimate: t_hat,
        se,
        ci_lo,
        ci_hi,
        direction,
        q,
        r: Some(r),
        bias: None,
        no_bias_required,
        warnings,
    })
}

/// Minimum common confounding strength `G(r, q)`.
pub fn min_confounding_strength(
    fit: &MetaFit,
    r: f64,
    q: Threshold,
    direction: Option<Direction>,
) -> Result<SensEstimate> {
    let t = min_bias_factor(fit, r, q, direction)?;
    Ok(strength_from_bias_estimate(&t))
}

/// Maps a `T(r, q)` estimate to the confounding-strength scale.
pub fn strength_from_bias_estimate(t: &SensEstimate) -> SensEstimate {
    let mut out = t.clone();
    out.kind = EstimateKind::StrengthG;
    let t_hat = t.estimate;
    if t.no_bias_required || t_hat <= 1.0 {
        out.estimate = 1.0;
        out.se = None;
        out.ci_lo = None;
        out.ci_hi = None;
        out.no_bias_required = true;
        return out;
    }
    let root = (t_hat * t_hat - t_hat).sqrt();
    out.estimate = bias_to_strength(BiasFactor::new(t_hat).expect("T > 1")).value();
    out.se =
        t.se.map(|se| se * (1.0 + (2.0 * t_hat - 1.0) / (2.0 * root)));
    out.ci_lo = out.se.map(|se| (out.estimate - WALD_Z * se).max(1.0));
    out.ci_hi = out.se.map(|se| (out.estimate + WALD_Z * se).max(1.0));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    UpperBound,
    LowerBound,
}

/// What the homogeneous-bias case (`sigma^2_B* = 0`) says about `p(q)`
/// under heterogeneous bias with the same mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundDirection {
    pub bound: Bound,
    /// `q` coincides with the estimated true-effect mean.
    pub tie: bool,
}

pub fn homogeneous_bound_direction(
    fit: &MetaFit,
    bias: &BiasSpec,
    q: Threshold,
    direction: Option<Direction>,
) -> Result<BoundDirection> {
    check_fit(fit)?;
    check_bias(bias)?;
    let q = q.check()?;
    let direction = Direction::resolve(fit.pooled, direction)?;
    let center = true_effect_mean(fit, bias, direction);
    if q == center {
        return Ok(BoundDirection {
            bound: Bound::UpperBound,
            tie: true,
        });
    }
    let above = q > center;
    let bound = match (direction, above) {
        (Direction::Causative, true) | (Direction::Preventive, false) => Bound::UpperBound,
        _ => Bound::LowerBound,
    };
    Ok(BoundDirection { bound, tie: false })
}

/// One `(r, q)` cell of a sensitivity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub r: f64,
    pub q: f64,
    pub t: Option<SensEstimate>,
    pub g: Option<SensEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TableCell {
    pub fn no_bias_required(&self) -> bool {
        self.t.as_ref().is_some_and(|t| t.no_bias_required)
    }
}

/// `T` and `G` over the grid `r_values x q_values`, row-major in `r`.
/// Failures are recorded per cell.
pub fn sens_table(
    fit: &MetaFit,
    r_values: &[f64],
    q_values: &[Threshold],
    direction: Option<Direction>,
) -> Vec<TableCell> {
    let mut cells = Vec::with_capacity(r_values.len() * q_values.len());
    for &r in r_values {
        for &q in q_values {
            let cell = match min_bias_factor(fit, r, q, direction) {
                Ok(t) => {
                    let g = strength_from_bias_estimate(&t);
                    TableCell {
                        r,
                        q: q.log(),
                        t: Some(t),
                        g: Some(g),
                        error: None,
                    }
                }
                Err(e) => TableCell {
                    r,
                    q: q.log(),
                    t: None,
                    g: None,
                    error: Some(e.to_string()),
                },
            };
            cells.push(cell);
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAxis {
    BiasFactor,
    Strength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    /// Mean log bias factor this grid point maps to.
    pub mu_log_bias: f64,
    pub p_hat: Option<f64>,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub valid: bool,
}

/// `p(q)` along a grid of mean bias, on either the bias-factor or the
/// confounding-strength scale, at fixed `sigma^2_B*`. Points that cannot be
/// evaluated are marked invalid and the curve continues.
pub fn sens_curve(
    fit: &MetaFit,
    q: Threshold,
    var_log_bias: f64,
    axis: CurveAxis,
    grid: &[f64],
    direction: Option<Direction>,
) -> Result<Vec<CurvePoint>> {
    let direction = Some(Direction::resolve(fit.pooled, direction)?);
    Ok(grid
        .iter()
        .map(|&x| {
            let mu = match axis {
                CurveAxis::BiasFactor => BiasFactor::new(x).map(|b| b.log()),
                CurveAxis::Strength => {
                    ConfoundingStrength::new(x).map(|g| strength_to_bias(g).log())
                }
            };
            let est = mu
                .and_then(|mu| BiasSpec::new(mu, var_log_bias))
                .and_then(|b| prop_above(fit, &b, q, direction));
            match est {
                Ok(e) => CurvePoint {
                    x,
                    mu_log_bias: e.bias.map(|b| b.mu_log_bias).unwrap_or(f64::NAN),
                    p_hat: Some(e.estimate),
                    se: e.se,
                    ci_lo: e.ci_lo,
                    ci_hi: e.ci_hi,
                    valid: true,
                },
                Err(_) => CurvePoint {
                    x,
                    mu_log_bias: if x > 0.0 { x.ln() } else { f64::NAN },
                    p_hat: None,
                    se: None,
                    ci_lo: None,
                    ci_hi: None,
                    valid: false,
                },
            }
        })
        .collect())
}

/// Evenly spaced grid over `[lo, hi]` with `n >= 2` points.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(pooled: f64, tau2: f64) -> MetaFit {
        MetaFit::from_summary(pooled, 0.088, tau2, 0.05, Some(20)).unwrap()
    }

    fn soy() -> MetaFit {
        fit(0.82f64.ln(), 0.10)
    }

    #[test]
    fn discussion_example() {
        let f = fit(1.15f64.ln(), 0.10);
        let none = BiasSpec::none();
        let above = prop_above(&f, &none, Threshold::from_rr(1.20), None).unwrap();
        assert!((above.estimate - 0.45).abs() < 0.01);
        assert_eq!(above.direction, Direction::Causative);
        let below = prop_opposite_tail(&f, &none, Threshold::from_rr(0.80), None).unwrap();
        assert!((below.estimate - 0.13).abs() < 0.01);

        let b = BiasSpec::new(1.10f64.ln(), 0.0).unwrap();
        let above = prop_above(&f, &b, Threshold::from_rr(1.20), None).unwrap();
        assert!((above.estimate - 0.33).abs() < 0.01);
        let below = prop_opposite_tail(&f, &b, Threshold::from_rr(0.80), None).unwrap();
        assert!((below.estimate - 0.20).abs() < 0.01);
    }

    #[test]
    fn median_threshold_gives_half() {
        let f = fit(0.3, 0.2);
        let p = prop_above(&f, &BiasSpec::none(), Threshold(0.3), None).unwrap();
        assert_eq!(p.estimate, 0.5);
    }

    #[test]
    fn opposite_tail_limit() {
        let f = fit(1.15f64.ln(), 0.10);
        let p = prop_opposite_tail(&f, &BiasSpec::none(), Threshold(-60.0), None).unwrap();
        assert!(p.estimate < 1e-300);
    }

    #[test]
    fn insufficient_heterogeneity() {
        let f = fit(0.2, 0.05);
        let b = BiasSpec::new(0.1, 0.05).unwrap();
        let err = prop_above(&f, &b, Threshold(0.1), None).unwrap_err();
        assert_eq!(
            err,
            Error::InsufficientHeterogeneity {
                tau2: 0.05,
                var_log_bias: 0.05
            }
        );
        let msg = err.to_string();
        assert!(msg.contains("0.05"));
    }

    #[test]
    fn zero_pooled_needs_direction() {
        let f = fit(0.0, 0.1);
        assert_eq!(
            prop_above(&f, &BiasSpec::none(), Threshold(0.1), None).unwrap_err(),
            Error::AmbiguousDirection
        );
        assert!(prop_above(
            &f,
            &BiasSpec::none(),
            Threshold(0.1),
            Some(Direction::Causative)
        )
        .is_ok());
    }

    #[test]
    fn table2_cells() {
        let f = soy();
        let t = min_bias_factor(&f, 0.1, Threshold::from_rr(0.90), None).unwrap();
        assert_eq!(t.direction, Direction::Preventive);
        assert!((t.estimate - 1.63).abs() < 0.05);
        let t = min_bias_factor(&f, 0.2, Threshold::from_rr(0.70), None).unwrap();
        assert!((t.estimate - 1.10).abs() < 0.05);

        let g = min_confounding_strength(&f, 0.1, Threshold::from_rr(0.90), None).unwrap();
        assert!((g.estimate - 2.64).abs() < 0.07);
        let g = min_confounding_strength(&f, 0.3, Threshold::from_rr(0.90), None).unwrap();
        assert!((g.estimate - 1.89).abs() < 0.07);
    }

    #[test]
    fn no_bias_required_at_median() {
        let f = fit(0.4, 0.3);
        let t = min_bias_factor(&f, 0.5, Threshold(0.4), None).unwrap();
        assert!((t.estimate - 1.0).abs() < 1e-15);
        assert!(t.no_bias_required);
        assert!(t.se.is_none() && t.ci_lo.is_none());
        let g = strength_from_bias_estimate(&t);
        assert_eq!(g.estimate, 1.0);
        assert!(g.no_bias_required && g.se.is_none());
    }

    #[test]
    fn r_domain() {
        let f = soy();
        for r in [0.0, 1.0, -0.2, 1.5] {
            assert!(min_bias_factor(&f, r, Threshold(-0.1), None).is_err());
        }
    }

    #[test]
    fn zero_tau2_is_degenerate_step() {
        let f = fit(0.5, 0.0);
        let t = min_bias_factor(&f, 0.1, Threshold(0.1), None).unwrap();
        assert!((t.estimate - (0.4f64).exp()).abs() < 1e-14);
        assert!(t.se.is_none());
        assert!(!t.warnings.is_empty());
    }

    #[test]
    fn table_consistency_and_blanks() {
        let f = soy();
        assert!(sens_table(&f, &[], &[Threshold(-0.1)], None).is_empty());
        let one = sens_table(&f, &[0.2], &[Threshold::from_rr(0.8)], None);
        let scalar = min_bias_factor(&f, 0.2, Threshold::from_rr(0.8), None).unwrap();
        assert_eq!(one[0].t.as_ref().unwrap(), &scalar);

        let qs: Vec<Threshold> = [0.70, 0.80, 0.90]
            .iter()
            .map(|&x| Threshold::from_rr(x))
            .collect();
        let table = sens_table(&f, &[0.1, 0.2, 0.3, 0.4, 0.5], &qs, None);
        assert_eq!(table.len(), 15);
        // r = 0.4, 0.5 at q = 0.70 and r = 0.5 at q = 0.80 need no bias.
        assert!(table[9].no_bias_required());
        assert!(table[12].no_bias_required());
        assert!(table[13].no_bias_required());
        assert!(!table[14].no_bias_required());
    }

    #[test]
    fn table1_quadrants() {
        let b = BiasSpec::new(0.1, 0.0).unwrap();
        let causative = fit(0.3, 0.1);
        let preventive = fit(-0.3, 0.1);
        let dir =
            |f: &MetaFit, q: f64| homogeneous_bound_direction(f, &b, Threshold(q), None).unwrap();
        assert_eq!(dir(&causative, 0.5).bound, Bound::UpperBound);
        assert_eq!(dir(&causative, 0.0).bound, Bound::LowerBound);
        assert_eq!(dir(&preventive, 0.0).bound, Bound::LowerBound);
        assert_eq!(dir(&preventive, -0.5).bound, Bound::UpperBound);
        let tie = dir(&fit(0.5, 0.1), 0.5 - 0.1);
        assert!(tie.tie && tie.bound == Bound::UpperBound);
    }

    #[test]
    fn homogeneous_case_bounds_heterogeneous() {
        let f = fit(0.3, 0.1);
        let q = Threshold(0.4);
        let hom = prop_above(&f, &BiasSpec::new(0.05, 0.0).unwrap(), q, None).unwrap();
        let het = prop_above(&f, &BiasSpec::new(0.05, 0.05).unwrap(), q, None).unwrap();
        assert!(hom.estimate >= het.estimate);
    }

    #[test]
    fn curve_axes_agree() {
        let f = soy();
        let q = Threshold::from_rr(0.90);
        let grid = linear_grid(1.0, 3.0, 41);
        let by_bias = sens_curve(&f, q, 0.01, CurveAxis::BiasFactor, &grid, None).unwrap();
        for w in by_bias.windows(2) {
            assert!(w[1].p_hat.unwrap() <= w[0].p_hat.unwrap());
        }
        let strengths: Vec<f64> = grid
            .iter()
            .map(|&b| bias_to_strength(BiasFactor::new(b).unwrap()).value())
            .collect();
        let by_strength = sens_curve(&f, q, 0.01, CurveAxis::Strength, &strengths, None).unwrap();
        for (a, b) in by_bias.iter().zip(&by_strength) {
            assert!((a.p_hat.unwrap() - b.p_hat.unwrap()).abs() < 1e-12);
        }

        let base = sens_curve(&f, q, 0.0, CurveAxis::BiasFactor, &[1.0], None).unwrap();
        let unadj = confounded_proportion(&f, q, None).unwrap();
        assert_eq!(base[0].p_hat.unwrap(), unadj.estimate);
    }

    #[test]
    fn curve_marks_invalid_points() {
        let f = soy();
        let pts = sens_curve(
            &f,
            Threshold::from_rr(0.9),
            0.2,
            CurveAxis::BiasFactor,
            &[1.0, 2.0],
            None,
        )
        .unwrap();
        assert!(pts.iter().all(|p| !p.valid));
        let pts = sens_curve(
            &f,
            Threshold::from_rr(0.9),
            0.0,
            CurveAxis::BiasFactor,
            &[0.5, 1.5],
            None,
        )
        .unwrap();
        assert!(!pts[0].valid && pts[1].valid);
    }

    #[test]
    fn defaults() {
        assert_eq!(default_r(Some(20)), 0.10);
        assert_eq!(default_r(Some(9)), 0.20);
        assert!((Direction::Causative.default_threshold().rr() - 1.10).abs() < 1e-15);
        assert!((Direction::Preventive.default_threshold().rr() - 0.90).abs() < 1e-15);
    }
}
