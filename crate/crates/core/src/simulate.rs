//! Monte Carlo check of inference on `p(q)` under a fully known truth.
//!
//! Each simulated study draws a true log RR `M^t ~ N(mu_t, V_t)` and a log
//! bias factor `B* ~ N(mu_B*, sigma^2_B*)`, then generates individual subjects
//! with a binary exposure `X ~ Bern(0.5)`, a binary unmeasured confounder `U`
//! and a binary outcome
//!
//! ```text
//! P(Y = 1 | X, U) = exp{baseline + log(g) U + M^t X}
//! ```
//!
//! where `g` is the confounding strength matching `B*`. With
//! `P(U = 1 | X = 1) = 1`, `P(U = 1 | X = 0)` is chosen so the crude log RR
//! equals `M^c = M^t + B*`. The confounded studies are meta-analyzed and the
//! resulting interval for `p(q)` is scored against the analytic truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::{bias_to_strength, BiasFactor, BiasSpec};
use crate::distributions::{phi_cdf, Probability, RngSeed, SampleStream};
use crate::error::{Error, Result};
use crate::meta::{fit, FitOptions, StudyRow};
use crate::sens::{prop_above, Direction, Threshold};

/// Redraws allowed for one study before the scenario is declared infeasible.
const MAX_REDRAWS_PER_STUDY: usize = 1000;

/// Smallest per-study sample size.
pub const MIN_STUDY_N: u32 = 150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub k: usize,
    pub mean_n: u32,
    pub mu_t: f64,
    pub v_t: f64,
    pub mu_log_bias: f64,
    pub var_log_bias: f64,
    /// Threshold on the log scale.
    pub q: f64,
    pub baseline_log_risk: f64,
    pub n_reps: usize,
    pub seed: u64,
    /// Position in the scenario grid; selects the random sub-streams.
    pub cell: u32,
}

impl SimScenario {
    /// Fixed parameters of the reference study: `mu_t = log 1.4`,
    /// `V_t = 0.15`, `mu_B* = log 1.6`, `sigma^2_B* = 0.01`, baseline risk 0.05.
    pub fn reference(k: usize, mean_n: u32) -> Self {
        SimScenario {
            k,
            mean_n,
            mu_t: 1.4f64.ln(),
            v_t: 0.15,
            mu_log_bias: 1.6f64.ln(),
            var_log_bias: 0.01,
            q: REFERENCE_Q_RR.ln(),
            baseline_log_risk: 0.05f64.ln(),
            n_reps: 500,
            seed: 2018,
            cell: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.k,
            });
        }
        if self.mean_n < MIN_STUDY_N {
            return Err(Error::domain(format!(
                "mean sample size must be at least {MIN_STUDY_N}, got {}",
                self.mean_n
            )));
        }
        if !(self.v_t > self.var_log_bias) || !(self.var_log_bias >= 0.0) {
            return Err(Error::domain(format!(
                "true-effect variance {} must exceed the bias variance {} (which must be >= 0)",
                self.v_t, self.var_log_bias
            )));
        }
        if self.n_reps == 0 {
            return Err(Error::domain("n_reps must be positive"));
        }
        for (name, v) in [
            ("mu_t", self.mu_t),
            ("mu_log_bias", self.mu_log_bias),
            ("q", self.q),
            ("baseline_log_risk", self.baseline_log_risk),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    fn direction(&self) -> Direction {
        if self.mu_t + self.mu_log_bias >= 0.0 {
            Direction::Causative
        } else {
            Direction::Preventive
        }
    }

    /// `p(q)` implied by the generating model.
    pub fn true_proportion(&self) -> f64 {
        let z = (self.q - self.mu_t) / self.v_t.sqrt();
        match self.direction() {
            Direction::Causative => phi_cdf(-z),
            Direction::Preventive => phi_cdf(z),
        }
    }
}

/// Threshold (RR scale) used by the reference scenarios.
pub const REFERENCE_Q_RR: f64 = 1.4;

/// Paper-style grid: `k` in {15, 25, 50, 200} within `E[N]` in {300, 500, 1000}.
pub fn reference_grid(n_reps: usize, seed: u64) -> Vec<SimScenario> {
    let mut out = Vec::new();
    for mean_n in [300, 500, 1000] {
        for k in [15, 25, 50, 200] {
            let cell = out.len() as u32;
            out.push(SimScenario {
                n_reps,
                seed,
                cell,
                ..SimScenario::reference(k, mean_n)
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub k: usize,
    pub mean_n: u32,
    pub true_p: f64,
    pub p_hat_bias: f64,
    /// Coverage of the analytic population proportion.
    pub ci_coverage: f64,
    /// Coverage of the proportion of each replicate's own `k` true effects
    /// beyond `q`. Reported alongside, not used as the target.
    pub ci_coverage_in_sample: f64,
    pub mean_ci_width: f64,
    pub n_valid_reps: usize,
    /// Replicates dropped because `tau^2 <= sigma^2_B*`.
    pub n_discarded: usize,
    /// Study draws rejected for infeasible outcome probabilities.
    pub n_redraws: usize,
}

impl SimResult {
    /// Binomial Monte Carlo standard error of the coverage estimate.
    pub fn coverage_mc_se(&self) -> f64 {
        let c = self.ci_coverage;
        (c * (1.0 - c) / self.n_valid_reps as f64).sqrt()
    }
}

/// `P(U = 1 | X = 0)` that makes the crude log RR equal `m_c`, given
/// `P(U = 1 | X = 1) = 1` and confounding strength `g`.
pub fn prob_u_given_unexposed(m_t: f64, m_c: f64, g: f64) -> Result<Probability> {
    if !(g > 1.0) || !g.is_finite() {
        return Err(Error::domain(format!(
            "confounding strength must exceed 1, got {g}"
        )));
    }
    let p = (m_t.exp() * (1.0 + (g - 1.0)) - m_c.exp()) / ((g - 1.0) * m_c.exp());
    if (-1e-12..=1.0 + 1e-12).contains(&p) {
        Ok(Probability::saturating(p))
    } else {
        Err(Error::Infeasible(format!(
            "P(U=1|X=0) = {p} for m_t = {m_t}, m_c = {m_c}, g = {g}"
        )))
    }
}

/// 2x2 exposure-by-outcome counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoByTwo {
    pub exposed_events: u32,
    pub exposed: u32,
    pub unexposed_events: u32,
    pub unexposed: u32,
}

impl TwoByTwo {
    /// Crude log RR and its variance, with 0.5 added to every cell when any
    /// cell is empty.
    pub fn log_rr(&self) -> Result<StudyRow> {
        if self.exposed == 0 || self.unexposed == 0 {
            return Err(Error::Infeasible("an exposure group is empty".into()));
        }
        let mut a = self.exposed_events as f64;
        let mut b = (self.exposed - self.exposed_events) as f64;
        let mut c = self.unexposed_events as f64;
        let mut d = (self.unexposed - self.unexposed_events) as f64;
        if a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0 {
            a += 0.5;
            b += 0.5;
            c += 0.5;
            d += 0.5;
        }
        let n1 = a + b;
        let n0 = c + d;
        let y = (a / n1).ln() - (c / n0).ln();
        let var = 1.0 / a - 1.0 / n1 + 1.0 / c - 1.0 / n0;
        StudyRow::new(y, var).map_err(|e| Error::Infeasible(e.to_string()))
    }
}

/// Generative probabilities for one study.
#[derive(Debug, Clone, Copy)]
struct StudyModel {
    p_u: [f64; 2],
    p_y: [[f64; 2]; 2],
}

fn study_model(m_t: f64, log_bias_star: f64, baseline_log_risk: f64) -> Result<StudyModel> {
    let b = BiasFactor::from_log(log_bias_star)
        .map_err(|_| Error::Infeasible(format!("log bias factor {log_bias_star} is negative")))?;
    let g = bias_to_strength(b).value();
    let p_u0 = if g > 1.0 {
        prob_u_given_unexposed(m_t, m_t + log_bias_star, g)?.value()
    } else {
        // No confounding: U does not affect Y, so its distribution is moot.
        1.0
    };
    let log_g = g.ln();
    let mut p_y = [[0.0; 2]; 2];
    for (x, row) in p_y.iter_mut().enumerate() {
        for (u, p) in row.iter_mut().enumerate() {
            *p = (baseline_log_risk + log_g * u as f64 + m_t * x as f64).exp();
            if !(*p < 1.0) {
                return Err(Error::Infeasible(format!(
                    "outcome probability {p} >= 1 at X = {x}, U = {u}"
                )));
            }
        }
    }
    Ok(StudyModel {
        p_u: [p_u0, 1.0],
        p_y,
    })
}

/// Simulates one study of `n` subjects and returns its crude log RR.
pub fn simulate_study(
    m_t: f64,
    log_bias_star: f64,
    n: u32,
    baseline_log_risk: f64,
    rng: &mut SampleStream,
) -> Result<StudyRow> {
    let model = study_model(m_t, log_bias_star, baseline_log_risk)?;
    let mut t = TwoByTwo {
        exposed_events: 0,
        exposed: 0,
        unexposed_events: 0,
        unexposed: 0,
    };
    for _ in 0..n {
        let x = rng.bernoulli_unchecked(0.5) as usize;
        let u = rng.bernoulli_unchecked(model.p_u[x]) as usize;
        let y = rng.bernoulli_unchecked(model.p_y[x][u]) as u32;
        if x == 1 {
            t.exposed += 1;
            t.exposed_events += y;
        } else {
            t.unexposed += 1;
            t.unexposed_events += y;
        }
    }
    t.log_rr()
}

struct Replicate {
    studies: Vec<StudyRow>,
    /// Fraction of the drawn true effects beyond `q`.
    in_sample_p: f64,
    redraws: usize,
}

fn draw_replicate(s: &SimScenario, rng: &mut SampleStream) -> Result<Replicate> {
    let sd_t = s.v_t.sqrt();
    let sd_b = s.var_log_bias.sqrt();
    let n_hi = 2.0 * s.mean_n as f64 - MIN_STUDY_N as f64;
    let mut studies = Vec::with_capacity(s.k);
    let mut beyond = 0usize;
    let mut redraws = 0;
    for _ in 0..s.k {
        let mut attempts = 0;
        loop {
            let n = rng.sample_uniform(MIN_STUDY_N as f64, n_hi)?.round() as u32;
            let m_t = rng.sample_normal(s.mu_t, sd_t)?;
            let b_star = rng.sample_normal(s.mu_log_bias, sd_b)?;
            match simulate_study(m_t, b_star, n, s.baseline_log_risk, rng) {
                Ok(row) => {
                    studies.push(row);
                    beyond += match s.direction() {
                        Direction::Causative => m_t > s.q,
                        Direction::Preventive => m_t < s.q,
                    } as usize;
                    break;
                }
                Err(Error::Infeasible(msg)) => {
                    attempts += 1;
                    redraws += 1;
                    if attempts >= MAX_REDRAWS_PER_STUDY {
                        return Err(Error::Infeasible(format!(
                            "{MAX_REDRAWS_PER_STUDY} consecutive infeasible study draws; last: {msg}"
                        )));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Replicate {
        studies,
        in_sample_p: beyond as f64 / s.k as f64,
        redraws,
    })
}

/// Outcome of one replicate, if it was kept.
#[derive(Debug, Clone, Copy)]
struct Scored {
    p_hat: f64,
    covered: bool,
    covered_in_sample: bool,
    width: f64,
}

fn run_replicate(s: &SimScenario, rep: u32, truth: f64) -> Result<(Option<Scored>, usize)> {
    let mut rng = SampleStream::substream(RngSeed(s.seed), s.cell, rep);
    let Replicate {
        studies,
        in_sample_p,
        redraws,
    } = draw_replicate(s, &mut rng)?;
    let fitted = fit(&studies, &FitOptions::default())?;
    if fitted.tau2 <= s.var_log_bias {
        return Ok((None, redraws));
    }
    let bias = BiasSpec {
        mu_log_bias: s.mu_log_bias,
        var_log_bias: s.var_log_bias,
    };
    let est = prop_above(&fitted, &bias, Threshold(s.q), Some(s.direction()))?;
    let (lo, hi) = (est.ci_lo.unwrap_or(0.0), est.ci_hi.unwrap_or(1.0));
    Ok((
        Some(Scored {
            p_hat: est.estimate,
            covered: lo <= truth && truth <= hi,
            covered_in_sample: lo <= in_sample_p && in_sample_p <= hi,
            width: hi - lo,
        }),
        redraws,
    ))
}

/// Runs every replicate of one scenario cell.
pub fn run_cell(s: &SimScenario) -> Result<SimResult> {
    s.validate()?;
    let truth = s.true_proportion();
    let outcomes: Vec<(Option<Scored>, usize)> = (0..s.n_reps as u32)
        .into_par_iter()
        .map(|rep| run_replicate(s, rep, truth))
        .collect::<Result<_>>()?;

    let kept: Vec<Scored> = outcomes.iter().filter_map(|(o, _)| *o).collect();
    let n_redraws = outcomes.iter().map(|(_, r)| r).sum();
    if kept.is_empty() {
        return Err(Error::Infeasible(format!(
            "all {} replicates had tau^2 <= sigma^2_B* = {}",
            s.n_reps, s.var_log_bias
        )));
    }
    let n = kept.len() as f64;
    Ok(SimResult {
        k: s.k,
        mean_n: s.mean_n,
        true_p: truth,
        p_hat_bias: kept.iter().map(|o| o.p_hat).sum::<f64>() / n - truth,
        ci_coverage: kept.iter().filter(|o| o.covered).count() as f64 / n,
        ci_coverage_in_sample: kept.iter().filter(|o| o.covered_in_sample).count() as f64 / n,
        mean_ci_width: kept.iter().map(|o| o.width).sum::<f64>() / n,
        n_valid_reps: kept.len(),
        n_discarded: s.n_reps - kept.len(),
        n_redraws,
    })
}

/// Runs a grid of cells in order.
pub fn run_grid(scenarios: &[SimScenario]) -> Result<Vec<SimResult>> {
    scenarios.iter().map(run_cell).collect()
}
