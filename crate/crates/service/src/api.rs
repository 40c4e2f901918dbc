//! Request and response bodies, and the pure functions behind each endpoint.
//!
//! Inputs arrive on the relative-risk scale and are converted to logs here,
//! so that the UI never does the conversion itself.

use serde::{Deserialize, Serialize};

use metasens_core::analysis::{analyze, AnalysisInputs, AnalysisReport};
use metasens_core::sens::{
    default_r, linear_grid, sens_curve, sens_table, CurveAxis, CurvePoint, TableCell,
};
use metasens_core::{BiasFactor, BiasSpec, Direction, Error, MetaFit, Threshold};

/// Published summary of a random-effects meta-analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryInput {
    /// Pooled relative risk.
    pub pooled_rr: f64,
    /// Standard error of the pooled log RR.
    pub se_log_rr: f64,
    pub tau2: f64,
    pub se_tau2: f64,
    #[serde(default)]
    pub k: Option<usize>,
}

impl SummaryInput {
    pub fn to_fit(&self) -> Result<MetaFit, Error> {
        if !(self.pooled_rr > 0.0) || !self.pooled_rr.is_finite() {
            return Err(Error::Domain(format!(
                "pooled relative risk must be positive and finite, got {}",
                self.pooled_rr
            )));
        }
        MetaFit::from_summary(
            self.pooled_rr.ln(),
            self.se_log_rr,
            self.tau2,
            self.se_tau2,
            self.k,
        )
    }
}

fn default_bias_factor() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasInput {
    /// Mean bias factor, `exp(mu_B*)`.
    #[serde(default = "default_bias_factor")]
    pub mean_bias_factor: f64,
    /// Variance of the log bias factor, `sigma^2_B*`.
    #[serde(default)]
    pub var_log_bias: f64,
}

impl Default for BiasInput {
    fn default() -> Self {
        BiasInput {
            mean_bias_factor: 1.0,
            var_log_bias: 0.0,
        }
    }
}

impl BiasInput {
    pub fn to_spec(&self) -> Result<BiasSpec, Error> {
        BiasSpec::new(
            BiasFactor::new(self.mean_bias_factor)?.log(),
            self.var_log_bias,
        )
    }
}

/// Admissible parameter ranges implied by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    /// `sigma^2_B*` must stay strictly below this value.
    pub max_var_log_bias: f64,
    pub min_mean_bias_factor: f64,
}

impl Validity {
    fn of(fit: &MetaFit) -> Self {
        Validity {
            max_var_log_bias: fit.tau2,
            min_mean_bias_factor: 1.0,
        }
    }
}

fn resolve_q(q_rr: Option<f64>, direction: Direction) -> Result<Threshold, Error> {
    match q_rr {
        None => Ok(direction.default_threshold()),
        Some(q) if q > 0.0 && q.is_finite() => Ok(Threshold::from_rr(q)),
        Some(q) => Err(Error::Domain(format!(
            "threshold q must be a positive relative risk, got {q}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeRequest {
    pub summary: SummaryInput,
    #[serde(default)]
    pub bias: BiasInput,
    #[serde(default)]
    pub q_rr: Option<f64>,
    #[serde(default)]
    pub q_opposite_rr: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub input: AnalyzeRequest,
    pub result: AnalysisReport,
    pub validity: Validity,
    pub warnings: Vec<String>,
}

pub fn analyze_request(req: AnalyzeRequest) -> Result<AnalyzeResponse, Error> {
    let fit = req.summary.to_fit()?;
    let direction = Direction::resolve(fit.pooled, req.direction)?;
    let q = resolve_q(req.q_rr, direction)?;
    let q_opposite = req
        .q_opposite_rr
        .map(|q| resolve_q(Some(q), direction))
        .transpose()?;
    let inputs = AnalysisInputs {
        bias: req.bias.to_spec()?,
        q,
        q_opposite,
        r: req.r.unwrap_or_else(|| default_r(fit.k)),
        direction: Some(direction),
    };
    let result = analyze(&fit, &inputs)?;
    Ok(AnalyzeResponse {
        warnings: result.warnings.clone(),
        validity: Validity::of(&fit),
        input: req,
        result,
    })
}

fn default_from() -> f64 {
    1.0
}

fn default_to() -> f64 {
    3.0
}

fn default_points() -> usize {
    101
}

pub const MAX_CURVE_POINTS: usize = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRequest {
    pub summary: SummaryInput,
    #[serde(default)]
    pub var_log_bias: f64,
    #[serde(default)]
    pub q_rr: Option<f64>,
    #[serde(default)]
    pub direction: Option<Direction>,
    /// Scale of the grid: bias factor or confounding strength.
    #[serde(default = "default_axis")]
    pub axis: CurveAxis,
    #[serde(default = "default_from")]
    pub from: f64,
    #[serde(default = "default_to")]
    pub to: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_axis() -> CurveAxis {
    CurveAxis::BiasFactor
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResponse {
    pub input: CurveRequest,
    pub direction: Direction,
    pub q: f64,
    pub points: Vec<CurvePoint>,
    pub validity: Validity,
    pub warnings: Vec<String>,
}

pub fn curve_request(req: CurveRequest) -> Result<CurveResponse, Error> {
    let fit = req.summary.to_fit()?;
    let direction = Direction::resolve(fit.pooled, req.direction)?;
    let q = resolve_q(req.q_rr, direction)?;
    if !(req.from >= 1.0) || !(req.to > req.from) || !req.to.is_finite() {
        return Err(Error::Domain(format!(
            "curve range must satisfy 1 <= from < to, got from = {}, to = {}",
            req.from, req.to
        )));
    }
    if !(2..=MAX_CURVE_POINTS).contains(&req.points) {
        return Err(Error::Domain(format!(
            "points must lie in [2, {MAX_CURVE_POINTS}], got {}",
            req.points
        )));
    }
    // Checked up front so that an inadmissible variance is an error rather
    // than a curve of invalid points.
    BiasSpec::new(0.0, req.var_log_bias)?;
    if !(fit.tau2 > req.var_log_bias) {
        return Err(Error::InsufficientHeterogeneity {
            tau2: fit.tau2,
            var_log_bias: req.var_log_bias,
        });
    }
    let grid = linear_grid(req.from, req.to, req.points);
    let points = sens_curve(&fit, q, req.var_log_bias, req.axis, &grid, Some(direction))?;
    Ok(CurveResponse {
        direction,
        q: q.log(),
        points,
        validity: Validity::of(&fit),
        warnings: fit.warnings.clone(),
        input: req,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRequest {
    pub summary: SummaryInput,
    #[serde(default)]
    pub r_values: Option<Vec<f64>>,
    #[serde(default)]
    pub q_rr_values: Option<Vec<f64>>,
    #[serde(default)]
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResponse {
    pub input: TableRequest,
    pub direction: Direction,
    pub cells: Vec<TableCell>,
    pub warnings: Vec<String>,
}

pub const DEFAULT_R_VALUES: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Default `q` grid on the RR scale for each direction.
pub fn default_q_rr_values(direction: Direction) -> Vec<f64> {
    match direction {
        Direction::Preventive => vec![0.70, 0.80, 0.90],
        Direction::Causative => vec![1.10, 1.20, 1.30],
    }
}

pub fn table_request(req: TableRequest) -> Result<TableResponse, Error> {
    let fit = req.summary.to_fit()?;
    let direction = Direction::resolve(fit.pooled, req.direction)?;
    let r_values = req
        .r_values
        .clone()
        .unwrap_or_else(|| DEFAULT_R_VALUES.to_vec());
    let q_rr = req
        .q_rr_values
        .clone()
        .unwrap_or_else(|| default_q_rr_values(direction));
    let qs = q_rr
        .iter()
        .map(|&q| resolve_q(Some(q), direction))
        .collect::<Result<Vec<_>, _>>()?;
    let cells = sens_table(&fit, &r_values, &qs, Some(direction));
    let mut warnings = fit.warnings.clone();
    for w in cells
        .iter()
        .filter_map(|c| c.t.as_ref())
        .flat_map(|t| &t.warnings)
    {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }
    Ok(TableResponse {
        direction,
        cells,
        warnings,
        input: req,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soy() -> SummaryInput {
        SummaryInput {
            pooled_rr: 0.82,
            se_log_rr: 0.088,
            tau2: 0.10,
            se_tau2: 0.050,
            k: Some(20),
        }
    }

    #[test]
    fn bias_defaults_to_none() {
        assert_eq!(BiasInput::default().to_spec().unwrap(), BiasSpec::none());
        assert!(BiasInput {
            mean_bias_factor: 0.8,
            var_log_bias: 0.0
        }
        .to_spec()
        .is_err());
    }

    #[test]
    fn table_defaults_follow_direction() {
        let resp = table_request(TableRequest {
            summary: soy(),
            r_values: None,
            q_rr_values: None,
            direction: None,
        })
        .unwrap();
        assert_eq!(resp.direction, Direction::Preventive);
        assert_eq!(resp.cells.len(), 15);
    }

    #[test]
    fn curve_rejects_bad_ranges() {
        let mut req = CurveRequest {
            summary: soy(),
            var_log_bias: 0.01,
            q_rr: Some(0.9),
            direction: None,
            axis: CurveAxis::BiasFactor,
            from: 1.0,
            to: 3.0,
            points: 1,
        };
        assert!(curve_request(req.clone()).is_err());
        req.points = 5;
        req.from = 0.5;
        assert!(curve_request(req.clone()).is_err());
        req.from = 1.0;
        req.var_log_bias = 0.2;
        assert!(matches!(
            curve_request(req).unwrap_err(),
            Error::InsufficientHeterogeneity { .. }
        ));
    }
}
