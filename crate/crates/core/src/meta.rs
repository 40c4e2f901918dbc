//! Random-effects meta-analysis.
//!
//! Produces the four summary statistics consumed by the sensitivity
//! estimators: the pooled log relative risk, its variance, the between-study
//! variance `tau^2`, and the variance of `tau^2`. Within-study variances are
//! treated as fixed and known.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{RngSeed, SampleStream};
use crate::error::{Error, Result};

/// One study's log effect size and within-study variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub log_rr: f64,
    pub var_within: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl StudyRow {
    pub fn new(log_rr: f64, var_within: f64) -> Result<Self> {
        if !log_rr.is_finite() {
            return Err(Error::domain(format!(
                "log effect size must be finite, got {log_rr}"
            )));
        }
        if !(var_within > 0.0) || !var_within.is_finite() {
            return Err(Error::domain(format!(
                "within-study variance must be positive and finite, got {var_within}"
            )));
        }
        Ok(StudyRow {
            log_rr,
            var_within,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tau2Method {
    PauleMandel,
    DersimonianLaird,
    /// Taken as given from published summaries.
    Supplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarPooledMethod {
    HartungKnapp,
    Classic,
    Supplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarTau2Method {
    Analytic,
    Bootstrap { reps: usize, seed: u64 },
    UserSupplied(f64),
}

impl VarTau2Method {
    pub fn label(&self) -> &'static str {
        match self {
            VarTau2Method::Analytic => "analytic",
            VarTau2Method::Bootstrap { .. } => "bootstrap",
            VarTau2Method::UserSupplied(_) => "user_supplied",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub tau2_method: Tau2Method,
    pub var_pooled_method: VarPooledMethod,
    pub var_tau2_method: VarTau2Method,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tau2_method: Tau2Method::PauleMandel,
            var_pooled_method: VarPooledMethod::HartungKnapp,
            var_tau2_method: VarTau2Method::Analytic,
        }
    }
}

/// Fitted random-effects summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFit {
    pub pooled: f64,
    pub var_pooled: f64,
    pub tau2: f64,
    pub var_tau2: f64,
    pub k: Option<usize>,
    pub tau2_method: Tau2Method,
    pub var_pooled_method: VarPooledMethod,
    pub var_tau2_method: VarTau2Method,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl MetaFit {
    /// Builds a fit from published summary statistics (pooled log RR, its SE,
    /// `tau^2` and its SE).
    pub fn from_summary(
        pooled: f64,
        se_pooled: f64,
        tau2: f64,
        se_tau2: f64,
        k: Option<usize>,
    ) -> Result<Self> {
        if !pooled.is_finite() {
            return Err(Error::domain(format!(
                "pooled estimate must be finite, got {pooled}"
            )));
        }
        if !(se_pooled > 0.0) || !se_pooled.is_finite() {
            return Err(Error::domain(format!(
                "SE of the pooled estimate must be positive, got {se_pooled}"
            )));
        }
        if !(tau2 >= 0.0) || !tau2.is_finite() {
            return Err(Error::domain(format!(
                "tau^2 must be finite and >= 0, got {tau2}"
            )));
        }
        if !(se_tau2 >= 0.0) || !se_tau2.is_finite() {
            return Err(Error::domain(format!(
                "SE of tau^2 must be finite and >= 0, got {se_tau2}"
            )));
        }
        if let Some(k) = k {
            if k < 2 {
                return Err(Error::InsufficientData { needed: 2, got: k });
            }
        }
        Ok(MetaFit {
            pooled,
            var_pooled: se_pooled * se_pooled,
            tau2,
            var_tau2: se_tau2 * se_tau2,
            k,
            tau2_method: Tau2Method::Supplied,
            var_pooled_method: VarPooledMethod::Supplied,
            var_tau2_method: VarTau2Method::UserSupplied(se_tau2 * se_tau2),
            warnings: Vec::new(),
        })
    }

    pub fn se_pooled(&self) -> f64 {
        self.var_pooled.sqrt()
    }

    pub fn se_tau2(&self) -> f64 {
        self.var_tau2.sqrt()
    }
}

fn require_k(studies: &[StudyRow]) -> Result<usize> {
    if studies.len() < 2 {
        Err(Error::InsufficientData {
            needed: 2,
            got: studies.len(),
        })
    } else {
        Ok(studies.len())
    }
}

fn weights(studies: &[StudyRow], tau2: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    studies
        .iter()
        .map(move |s| (1.0 / (tau2 + s.var_within), s.log_rr))
}

fn weighted_mean(studies: &[StudyRow], tau2: f64) -> f64 {
    let (num, den) = weights(studies, tau2).fold((0.0, 0.0), |(n, d), (w, y)| (n + w * y, d + w));
    num / den
}

/// Generalized Q statistic `sum w_i (y_i - yhat)^2` at the given `tau^2`.
fn q_generalized(studies: &[StudyRow], tau2: f64) -> f64 {
    let mu = weighted_mean(studies, tau2);
    weights(studies, tau2)
        .map(|(w, y)| w * (y - mu).powi(2))
        .sum()
}

/// Inverse-variance weighted random-effects mean.
pub fn pooled_estimate(studies: &[StudyRow], tau2: f64) -> Result<f64> {
    require_k(studies)?;
    if !(tau2 >= 0.0) {
        return Err(Error::domain(format!("tau^2 must be >= 0, got {tau2}")));
    }
    Ok(weighted_mean(studies, tau2))
}

const PM_TOL: f64 = 1e-10;
const PM_MAX_ITER: usize = 200;

/// Paule-Mandel estimate of `tau^2`: the root of `Q_gen(tau^2) = k - 1`,
/// or 0 when `Q_gen(0) <= k - 1`.
pub fn tau2_paule_mandel(studies: &[StudyRow]) -> Result<f64> {
    let k = require_k(studies)?;
    let target = (k - 1) as f64;
    let f = |t: f64| q_generalized(studies, t) - target;

    if f(0.0) <= 0.0 {
        return Ok(0.0);
    }

    // Q_gen is decreasing in tau^2; grow the bracket until the sign flips.
    let mean = studies.iter().map(|s| s.log_rr).sum::<f64>() / k as f64;
    let spread = studies
        .iter()
        .map(|s| (s.log_rr - mean).powi(2))
        .sum::<f64>()
        / k as f64;
    let mut lo = 0.0;
    let mut hi = spread.max(1e-8);
    let mut grow = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > PM_MAX_ITER || !hi.is_finite() {
            return Err(Error::Convergence {
                iterations: grow,
                lo,
                hi,
            });
        }
    }

    for _ in 0..PM_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= PM_TOL || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        iterations: PM_MAX_ITER,
        lo,
        hi,
    })
}

/// DerSimonian-Laird moment estimate of `tau^2`, truncated at zero.
pub fn tau2_dersimonian_laird(studies: &[StudyRow]) -> Result<f64> {
    let k = require_k(studies)?;
    let q = q_generalized(studies, 0.0);
    let (s1, s2) = studies.iter().fold((0.0, 0.0), |(a, b), s| {
        let w = 1.0 / s.var_within;
        (a + w, b + w * w)
    });
    Ok(((q - (k - 1) as f64) / (s1 - s2 / s1)).max(0.0))
}

/// Hartung-Knapp variance of the pooled estimate.
pub fn var_pooled_hartung_knapp(studies: &[StudyRow], tau2: f64) -> Result<f64> {
    let k = require_k(studies)?;
    let sum_w: f64 = weights(studies, tau2).map(|(w, _)| w).sum();
    Ok(q_generalized(studies, tau2) / ((k - 1) as f64 * sum_w))
}

/// Classic inverse-variance variance of the pooled estimate, `1 / sum w_i`.
pub fn var_pooled_classic(studies: &[StudyRow], tau2: f64) -> Result<f64> {
    require_k(studies)?;
    Ok(1.0 / weights(studies, tau2).map(|(w, _)| w).sum::<f64>())
}

fn tau2_by(method: Tau2Method, studies: &[StudyRow]) -> Result<f64> {
    match method {
        Tau2Method::PauleMandel | Tau2Method::Supplied => tau2_paule_mandel(studies),
        Tau2Method::DersimonianLaird => tau2_dersimonian_laird(studies),
    }
}

/// Large-sample variance of a Q-type `tau^2` estimator.
///
/// For DerSimonian-Laird this is `Var(Q) / (S1 - S2/S1)^2` with the
/// random-effects variance of Q built from fixed-effect weight power sums
/// `S_r`. For Paule-Mandel the generalized Q is chi-square with `k - 1`
/// degrees of freedom at the true `tau^2`; linearizing the estimating
/// equation gives `2(k - 1) / (sum w - sum w^2 / sum w)^2` with
/// random-effects weights.
pub fn var_tau2_analytic(studies: &[StudyRow], tau2: f64, tau2_method: Tau2Method) -> Result<f64> {
    let k = require_k(studies)?;
    let df = (k - 1) as f64;
    match tau2_method {
        Tau2Method::DersimonianLaird => {
            let (s1, s2, s3) = studies.iter().fold((0.0, 0.0, 0.0), |(a, b, c), s| {
                let w = 1.0 / s.var_within;
                (a + w, b + w * w, c + w * w * w)
            });
            let c = s1 - s2 / s1;
            let var_q = 2.0 * df
                + 4.0 * c * tau2
                + 2.0 * (s2 - 2.0 * s3 / s1 + s2 * s2 / (s1 * s1)) * tau2 * tau2;
            Ok(var_q / (c * c))
        }
        Tau2Method::PauleMandel | Tau2Method::Supplied => {
            let (s1, s2) =
                weights(studies, tau2).fold((0.0, 0.0), |(a, b), (w, _)| (a + w, b + w * w));
            let slope = s1 - s2 / s1;
            Ok(2.0 * df / (slope * slope))
        }
    }
}

/// Bootstrap variance of `tau^2` over nonparametric resamples of studies.
pub fn var_tau2_bootstrap(
    studies: &[StudyRow],
    tau2_method: Tau2Method,
    reps: usize,
    seed: RngSeed,
) -> Result<f64> {
    let k = require_k(studies)?;
    if reps < 2 {
        return Err(Error::domain(format!(
            "bootstrap needs at least 2 resamples, got {reps}"
        )));
    }
    let draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|b| {
            let mut stream = SampleStream::substream(seed, u32::MAX, b as u32);
            let resample: Vec<StudyRow> = (0..k)
                .map(|_| studies[stream.sample_index(k)].clone())
                .collect();
            tau2_by(tau2_method, &resample)
        })
        .collect::<Result<_>>()?;
    let mean = draws.iter().sum::<f64>() / reps as f64;
    Ok(draws.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64)
}

/// Variance of `tau^2` by the requested method. Returns the variance and any
/// warning the method attaches.
pub fn var_tau2(
    studies: &[StudyRow],
    tau2: f64,
    tau2_method: Tau2Method,
    method: VarTau2Method,
) -> Result<(f64, Option<String>)> {
    let k = require_k(studies)?;
    match method {
        VarTau2Method::Analytic => Ok((var_tau2_analytic(studies, tau2, tau2_method)?, None)),
        VarTau2Method::Bootstrap { reps, seed } => {
            let v = var_tau2_bootstrap(studies, tau2_method, reps, RngSeed(seed))?;
            let warn = (k < 5)
                .then(|| format!("bootstrap variance of tau^2 with only {k} studies is unstable"));
            Ok((v, warn))
        }
        VarTau2Method::UserSupplied(v) => {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "supplied Var(tau^2) must be >= 0, got {v}"
                )));
            }
            Ok((v, None))
        }
    }
}

/// Full random-effects fit.
pub fn fit(studies: &[StudyRow], options: &FitOptions) -> Result<MetaFit> {
    let k = require_k(studies)?;
    for (i, s) in studies.iter().enumerate() {
        if !(s.var_within > 0.0) || !s.var_within.is_finite() || !s.log_rr.is_finite() {
            return Err(Error::domain(format!(
                "study {} has an invalid effect or variance",
                i + 1
            )));
        }
    }
    let tau2_method = match options.tau2_method {
        Tau2Method::Supplied => Tau2Method::PauleMandel,
        m => m,
    };
    let tau2 = tau2_by(tau2_method, studies)?;
    let pooled = weighted_mean(studies, tau2);
    let first = studies[0].log_rr;
    let degenerate = studies.iter().all(|s| s.log_rr == first);
    let (var_pooled, var_pooled_method) = match options.var_pooled_method {
        VarPooledMethod::Classic => (var_pooled_classic(studies, tau2)?, VarPooledMethod::Classic),
        _ => (
            var_pooled_hartung_knapp(studies, tau2)?,
            VarPooledMethod::HartungKnapp,
        ),
    };
    let (var_tau2, warn) = var_tau2(studies, tau2, tau2_method, options.var_tau2_method)?;

    let var_pooled = if degenerate { 0.0 } else { var_pooled };

    let mut warnings = Vec::new();
    if degenerate {
        warnings.push(
            "degenerate fit: all study estimates are identical, so tau^2 = 0 and the Hartung-Knapp variance is 0"
                .to_string(),
        );
    }
    warnings.extend(warn);

    Ok(MetaFit {
        pooled,
        var_pooled,
        tau2,
        var_tau2,
        k: Some(k),
        tau2_method,
        var_pooled_method,
        var_tau2_method: options.var_tau2_method,
        warnings,
    })
}
