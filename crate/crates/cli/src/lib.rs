//! Command-line front end: argument definitions and one function per
//! subcommand. Each `cmd_*` returns its output as a string (or writes files)
//! so that it can be driven from tests as well as from `main`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod svg;

use std::fmt::Write as _;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use metasens_core::analysis::{analyze, AnalysisInputs, AnalysisReport};
use metasens_core::ingest::{
    load_csv, load_studies, validate, write_studies_csv, ValidationReport,
};
use metasens_core::meta::{fit, FitOptions, Tau2Method, VarTau2Method};
use metasens_core::report::{write_curve_csv, write_sim_csv, write_table_csv};
use metasens_core::sens::{
    default_r, linear_grid, sens_curve, sens_table, Bound, CurveAxis, SensEstimate,
};
use metasens_core::simulate::{reference_grid, run_grid, SimScenario};
use metasens_core::{BiasFactor, BiasSpec, Direction, Error, MetaFit, Threshold};
use metasens_service::api::{default_q_rr_values, DEFAULT_R_VALUES};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "metasens",
    version,
    about = "Sensitivity analysis for unmeasured confounding in meta-analyses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Proportions of meaningful effects, T and G for one set of parameters.
    Analyze(AnalyzeArgs),
    /// T and G over a grid of r and q.
    Table(TableArgs),
    /// Proportion of meaningful effects against mean bias, as SVG and CSV.
    Plot(PlotArgs),
    /// Monte Carlo check of coverage, bias and CI width.
    Simulate(SimulateArgs),
    /// Convert published point estimates and CIs to log RRs and variances.
    Ingest(IngestArgs),
    /// Serve the JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tau2Arg {
    Pm,
    Dl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarTau2Arg {
    Analytic,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Causative,
    Preventive,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Causative => Direction::Causative,
            DirectionArg::Preventive => Direction::Preventive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Bias,
    Strength,
}

/// Meta-analysis input: published summary statistics or a study file.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Pooled log relative risk.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["rr", "studies"], requires_all = ["se_yhat", "tau2", "se_tau2"])]
    pub yhat: Option<f64>,
    /// Pooled relative risk (alternative to --yhat).
    #[arg(long, conflicts_with = "studies", requires_all = ["se_yhat", "tau2", "se_tau2"])]
    pub rr: Option<f64>,
    /// Standard error of the pooled log RR.
    #[arg(long)]
    pub se_yhat: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long)]
    pub se_tau2: Option<f64>,
    /// Number of studies (sets the default r).
    #[arg(long)]
    pub k: Option<usize>,
    /// CSV of studies: either `label,log_rr,var_within` or published
    /// `label,measure,point,ci_lower,ci_upper[,ci_level]` rows.
    #[arg(long, conflicts_with_all = ["se_yhat", "tau2", "se_tau2", "k"])]
    pub studies: Option<PathBuf>,
    /// Heterogeneity estimator for --studies.
    #[arg(long, value_enum, default_value_t = Tau2Arg::Pm)]
    pub tau2_method: Tau2Arg,
    /// Variance of tau^2 for --studies.
    #[arg(long, value_enum, default_value_t = VarTau2Arg::Analytic)]
    pub var_tau2: VarTau2Arg,
    /// Bootstrap replicates when --var-tau2 bootstrap.
    #[arg(long, default_value_t = 1000)]
    pub boot_reps: usize,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl InputArgs {
    pub fn summary(yhat: f64, se_yhat: f64, tau2: f64, se_tau2: f64, k: Option<usize>) -> Self {
        InputArgs {
            yhat: Some(yhat),
            rr: None,
            se_yhat: Some(se_yhat),
            tau2: Some(tau2),
            se_tau2: Some(se_tau2),
            k,
            studies: None,
            tau2_method: Tau2Arg::Pm,
            var_tau2: VarTau2Arg::Analytic,
            boot_reps: 1000,
            seed: 1,
        }
    }

    pub fn studies(path: impl Into<PathBuf>) -> Self {
        InputArgs {
            yhat: None,
            se_yhat: None,
            tau2: None,
            se_tau2: None,
            studies: Some(path.into()),
            ..Self::summary(0.0, 0.0, 0.0, 0.0, None)
        }
    }

    /// Resolves to a fit plus any notes from reading the study file.
    pub fn load(&self) -> Result<(MetaFit, Vec<String>), Error> {
        if let Some(path) = &self.studies {
            let report = load_studies(path)?;
            let mut notes: Vec<String> = report.warnings.iter().map(issue_line).collect();
            notes.extend(
                report
                    .errors
                    .iter()
                    .map(|i| format!("skipped {}", issue_line(i))),
            );
            let options = FitOptions {
                tau2_method: match self.tau2_method {
                    Tau2Arg::Pm => Tau2Method::PauleMandel,
                    Tau2Arg::Dl => Tau2Method::DersimonianLaird,
                },
                var_tau2_method: match self.var_tau2 {
                    VarTau2Arg::Analytic => VarTau2Method::Analytic,
                    VarTau2Arg::Bootstrap => VarTau2Method::Bootstrap {
                        reps: self.boot_reps,
                        seed: self.seed,
                    },
                },
                ..FitOptions::default()
            };
            return Ok((fit(&report.studies, &options)?, notes));
        }
        let yhat = match (self.yhat, self.rr) {
            (Some(y), None) => y,
            (None, Some(rr)) if rr > 0.0 => rr.ln(),
            (None, Some(rr)) => {
                return Err(Error::Domain(format!(
                    "pooled relative risk must be positive, got {rr}"
                )))
            }
            _ => return Err(Error::Domain(
                "give either --yhat/--rr with --se-yhat, --tau2 and --se-tau2, or --studies FILE"
                    .into(),
            )),
        };
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Domain(format!("--{name} is required")))
        };
        let f = MetaFit::from_summary(
            yhat,
            need(self.se_yhat, "se-yhat")?,
            need(self.tau2, "tau2")?,
            need(self.se_tau2, "se-tau2")?,
            self.k,
        )?;
        Ok((f, Vec::new()))
    }
}

fn issue_line(i: &metasens_core::ingest::RowIssue) -> String {
    match &i.label {
        Some(l) => format!("line {} ({l}): {}", i.line, i.message),
        None => format!("line {}: {}", i.line, i.message),
    }
}

fn parse_threshold(q_rr: f64) -> Result<Threshold, Error> {
    if q_rr > 0.0 && q_rr.is_finite() {
        Ok(Threshold::from_rr(q_rr))
    } else {
        Err(Error::Domain(format!(
            "threshold must be a positive relative risk, got {q_rr}"
        )))
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Mean bias factor exp(mu_B*) on the RR scale (>= 1).
    #[arg(long, default_value_t = 1.0)]
    pub mu_bias: f64,
    /// Variance of the log bias factor, sigma^2_B*.
    #[arg(long, default_value_t = 0.0)]
    pub var_bias: f64,
    /// Threshold q on the RR scale [default: 1.10 causative, 0.90 preventive].
    #[arg(long)]
    pub q: Option<f64>,
    /// Threshold for the opposite tail on the RR scale [default: 2 - q, or 1/q when q >= 2].
    #[arg(long)]
    pub q_opposite: Option<f64>,
    /// Target proportion r for T and G [default: 0.2 if k < 10, else 0.1].
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_analysis(args: &AnalyzeArgs) -> Result<AnalysisReport, Error> {
    let (f, notes) = args.input.load()?;
    let direction = Direction::resolve(f.pooled, args.direction.map(Into::into))?;
    let inputs = AnalysisInputs {
        bias: BiasSpec::new(BiasFactor::new(args.mu_bias)?.log(), args.var_bias)?,
        q: match args.q {
            Some(q) => parse_threshold(q)?,
            None => direction.default_threshold(),
        },
        q_opposite: args.q_opposite.map(parse_threshold).transpose()?,
        r: args.r.unwrap_or_else(|| default_r(f.k)),
        direction: Some(direction),
    };
    let mut report = analyze(&f, &inputs)?;
    report.warnings.extend(notes);
    Ok(report)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, Error> {
    let report = run_analysis(args)?;
    match args.format {
        Format::Text => Ok(render_text(&report)),
        Format::Json => Ok(to_json(&report)),
        Format::Csv => analysis_csv(&report),
        Format::Svg => Err(Error::Domain(
            "analyze supports text, csv and json output".into(),
        )),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

fn analysis_csv(rep: &AnalysisReport) -> Result<String, Error> {
    let mut s = String::from("quantity,estimate,se,ci_lo,ci_hi,no_bias_required\n");
    let num = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
    for (name, e, is_proportion) in [
        ("p_hat", &rep.p_hat, true),
        ("p_hat_opposite", &rep.p_hat_opposite, true),
        ("p_confounded", &rep.confounded, true),
        ("T", &rep.t, false),
        ("G", &rep.g, false),
    ] {
        // T and G are left blank when no bias is required, as in the table.
        let est = (is_proportion || !e.no_bias_required).then_some(e.estimate);
        let _ = writeln!(
            s,
            "{name},{},{},{},{},{}",
            num(est),
            num(e.se),
            num(e.ci_lo),
            num(e.ci_hi),
            e.no_bias_required
        );
    }
    Ok(s)
}

fn fmt_ci(e: &SensEstimate) -> String {
    match (e.se, e.ci_lo, e.ci_hi) {
        (Some(se), Some(lo), Some(hi)) => {
            format!("{:.3} (SE {se:.3}; 95% CI {lo:.3}, {hi:.3})", e.estimate)
        }
        _ => format!("{:.3}", e.estimate),
    }
}

pub fn render_text(rep: &AnalysisReport) -> String {
    let mut s = String::new();
    let f = &rep.fit;
    let k = f.k.map(|k| format!(", k = {k}")).unwrap_or_default();
    let _ = writeln!(
        s,
        "Pooled RR {:.3} (log {:.4}, SE {:.4}); tau^2 = {:.4} (SE {:.4}){k}",
        f.pooled_rr, f.pooled, f.se_pooled, f.tau2, f.se_tau2
    );
    let _ = writeln!(s, "Direction: apparently {}", rep.direction.as_str());
    let _ = writeln!(
        s,
        "Bias: mean bias factor {:.3} (mu_B* = {:.4}), sigma^2_B* = {:.4} (must be < {:.4})",
        rep.bias.mu_log_bias.exp(),
        rep.bias.mu_log_bias,
        rep.bias.var_log_bias,
        rep.max_var_log_bias
    );
    let (side, opp) = match rep.direction {
        Direction::Causative => ("above", "below"),
        Direction::Preventive => ("below", "above"),
    };
    s.push('\n');
    let _ = writeln!(
        s,
        "Proportion of true RRs {side} {:.3}: {}",
        rep.q_rr,
        fmt_ci(&rep.p_hat)
    );
    let _ = writeln!(
        s,
        "Proportion of true RRs {opp} {:.3}: {}",
        rep.q_opposite_rr,
        fmt_ci(&rep.p_hat_opposite)
    );
    let _ = writeln!(
        s,
        "Without bias correction ({side} {:.3}): {}",
        rep.q_rr,
        fmt_ci(&rep.confounded)
    );
    let bound = match (rep.homogeneous_bound.bound, rep.homogeneous_bound.tie) {
        (_, true) => "q equals the bias-corrected mean; the estimate bounds any heterogeneous-bias result from above",
        (Bound::UpperBound, false) => "with heterogeneous bias of the same mean this is an upper bound",
        (Bound::LowerBound, false) => "with heterogeneous bias of the same mean this is a lower bound",
    };
    if rep.bias.var_log_bias == 0.0 {
        let _ = writeln!(s, "  Bias is homogeneous: {bound}.");
    }
    s.push('\n');
    if rep.t.no_bias_required {
        let _ = writeln!(
            s,
            "T(r = {}, q = {:.3}): no bias required; the proportion is already at most r",
            rep.r, rep.q_rr
        );
    } else {
        let _ = writeln!(
            s,
            "T(r = {}, q = {:.3}) = {}",
            rep.r,
            rep.q_rr,
            fmt_ci(&rep.t)
        );
        let _ = writeln!(
            s,
            "G(r = {}, q = {:.3}) = {}",
            rep.r,
            rep.q_rr,
            fmt_ci(&rep.g)
        );
    }
    if !rep.warnings.is_empty() {
        s.push('\n');
        for w in &rep.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    s
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated r values.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Comma-separated thresholds on the RR scale.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_table(args: &TableArgs) -> Result<String, Error> {
    let (f, _) = args.input.load()?;
    let direction = Direction::resolve(f.pooled, args.direction.map(Into::into))?;
    let r = if args.r.is_empty() {
        DEFAULT_R_VALUES.to_vec()
    } else {
        args.r.clone()
    };
    let q_rr = if args.q.is_empty() {
        default_q_rr_values(direction)
    } else {
        args.q.clone()
    };
    let qs = q_rr
        .iter()
        .map(|&q| parse_threshold(q))
        .collect::<Result<Vec<_>, _>>()?;
    let cells = sens_table(&f, &r, &qs, Some(direction));
    match args.format {
        Format::Csv | Format::Text => {
            let mut buf = Vec::new();
            write_table_csv(&cells, &mut buf)?;
            Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
        }
        Format::Json => Ok(to_json(&cells)),
        Format::Svg => Err(Error::Domain("table supports csv and json output".into())),
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.0)]
    pub var_bias: f64,
    /// Threshold q on the RR scale.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Grid scale.
    #[arg(long, value_enum, default_value_t = AxisArg::Bias)]
    pub axis: AxisArg,
    #[arg(long, default_value_t = 1.0)]
    pub from: f64,
    #[arg(long, default_value_t = 3.0)]
    pub to: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// svg writes the plot and, with --out, a CSV of the curve next to it.
    #[arg(long, value_enum, default_value_t = Format::Svg)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Curve data as (SVG, CSV).
pub fn cmd_plot(args: &PlotArgs) -> Result<(String, String), Error> {
    let (f, _) = args.input.load()?;
    let direction = Direction::resolve(f.pooled, args.direction.map(Into::into))?;
    let q = match args.q {
        Some(q) => parse_threshold(q)?,
        None => direction.default_threshold(),
    };
    if !(args.from >= 1.0 && args.to > args.from && args.points >= 2) {
        return Err(Error::Domain(format!(
            "need 1 <= --from < --to and --points >= 2, got {}, {}, {}",
            args.from, args.to, args.points
        )));
    }
    BiasSpec::new(0.0, args.var_bias)?;
    if !(f.tau2 > args.var_bias) {
        return Err(Error::InsufficientHeterogeneity {
            tau2: f.tau2,
            var_log_bias: args.var_bias,
        });
    }
    let axis = match args.axis {
        AxisArg::Bias => CurveAxis::BiasFactor,
        AxisArg::Strength => CurveAxis::Strength,
    };
    let grid = linear_grid(args.from, args.to, args.points);
    let points = sens_curve(&f, q, args.var_bias, axis, &grid, Some(direction))?;
    let side = match direction {
        Direction::Causative => ">",
        Direction::Preventive => "<",
    };
    let labels = svg::PlotLabels {
        title: format!("sigma^2_B* = {}", args.var_bias),
        y_label: format!("Estimated proportion with true RR {side} {:.2}", q.rr()),
    };
    let svg = svg::render(&points, axis, &labels);
    let mut buf = Vec::new();
    write_curve_csv(&points, &mut buf)?;
    Ok((svg, String::from_utf8(buf).expect("csv output is UTF-8")))
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Replicates per cell.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 2018)]
    pub seed: u64,
    /// Cells as k:mean_n pairs, e.g. 15:300,25:500. Defaults to the full
    /// 12-cell grid.
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<String>,
    /// Full grid at 1000 replicates per cell.
    #[arg(long, conflicts_with_all = ["reps", "cells"])]
    pub full: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Scenarios selected by `args`. Cell indices follow the reference grid so
/// that a cell's results do not depend on which other cells are run.
pub fn simulation_scenarios(args: &SimulateArgs) -> Result<Vec<SimScenario>, Error> {
    let reps = if args.full { 1000 } else { args.reps };
    let grid = reference_grid(reps, args.seed);
    if args.cells.is_empty() {
        return Ok(grid);
    }
    let mut extra = 0;
    args.cells
        .iter()
        .map(|spec| {
            let parsed = spec.split_once(':').and_then(|(k, n)| {
                Some((
                    k.trim().parse::<usize>().ok()?,
                    n.trim().parse::<u32>().ok()?,
                ))
            });
            let (k, n) = parsed
                .ok_or_else(|| Error::Parse(format!("cell must be k:mean_n, got {spec:?}")))?;
            if let Some(s) = grid.iter().find(|s| s.k == k && s.mean_n == n) {
                return Ok(s.clone());
            }
            // Cells off the reference grid are numbered after it, in order.
            let s = SimScenario {
                n_reps: reps,
                seed: args.seed,
                cell: (grid.len() + extra) as u32,
                ..SimScenario::reference(k, n)
            };
            extra += 1;
            s.validate()?;
            Ok(s)
        })
        .collect()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, Error> {
    let results = run_grid(&simulation_scenarios(args)?)?;
    let mut buf = Vec::new();
    write_sim_csv(&results, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// CSV with columns label,measure,point,ci_lower,ci_upper[,ci_level].
    pub file: PathBuf,
    /// Where to write the converted label,log_rr,var_within rows.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the validation report on standard error.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// Converted study CSV and the validation report.
pub fn cmd_ingest(args: &IngestArgs) -> Result<(String, ValidationReport), Error> {
    let report = validate(&load_csv(&args.file)?);
    let mut buf = Vec::new();
    write_studies_csv(&report.studies, &mut buf)?;
    Ok((String::from_utf8(buf).expect("csv output is UTF-8"), report))
}

pub fn render_validation(report: &ValidationReport) -> String {
    let mut s = format!(
        "{} studies converted, {} rows rejected, {} warnings\n",
        report.studies.len(),
        report.errors.len(),
        report.warnings.len()
    );
    for e in &report.errors {
        let _ = writeln!(s, "error: {}", issue_line(e));
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {}", issue_line(w));
    }
    s
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory of static files (the built UI) served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), Error> {
    let rt = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{}", args.addr);
    rt.block_on(metasens_service::serve(args.addr, args.static_dir.clone()))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a).and_then(|s| emit(a.out.as_deref(), &s)),
        Command::Table(a) => cmd_table(a).and_then(|s| emit(a.out.as_deref(), &s)),
        Command::Plot(a) => cmd_plot(a).and_then(|(svg, csv)| match (a.format, &a.out) {
            (Format::Csv, out) => emit(out.as_deref(), &csv),
            (Format::Svg, Some(out)) => {
                emit(Some(out), &svg)?;
                emit(Some(&out.with_extension("csv")), &csv)
            }
            (Format::Svg, None) => emit(None, &svg),
            _ => Err(Error::Domain("plot supports svg and csv output".into())),
        }),
        Command::Simulate(a) => cmd_simulate(a).and_then(|s| emit(a.out.as_deref(), &s)),
        Command::Ingest(a) => cmd_ingest(a).and_then(|(csv, report)| {
            emit(a.out.as_deref(), &csv)?;
            match a.format {
                Format::Json => eprint!("{}", to_json(&report)),
                _ => eprint!("{}", render_validation(&report)),
            }
            if report.is_clean() {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "{} rows could not be converted",
                    report.errors.len()
                )))
            }
        }),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
