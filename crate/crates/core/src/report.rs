//! Machine-readable CSV output. Numbers are written with Rust's shortest
//! round-trip formatting so nothing is lost; missing values are empty fields.

use std::io::Write;

use crate::error::Result;
use crate::sens::{CurvePoint, TableCell};
use crate::simulate::SimResult;

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Columns: `r,q_rr_scale,T_hat,T_se,G_hat,G_se,no_bias_required`.
/// Cells needing no bias leave the estimates blank.
pub fn write_table_csv<W: Write>(cells: &[TableCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "r",
        "q_rr_scale",
        "T_hat",
        "T_se",
        "G_hat",
        "G_se",
        "no_bias_required",
    ])?;
    for c in cells {
        let blank = c.no_bias_required() || c.t.is_none();
        let (t_hat, t_se, g_hat, g_se) = if blank {
            Default::default()
        } else {
            let t = c.t.as_ref().expect("checked");
            let g = c.g.as_ref().expect("present with t");
            (num(t.estimate), opt(t.se), num(g.estimate), opt(g.se))
        };
        w.write_record([
            num(c.r),
            num(c.q.exp()),
            t_hat,
            t_se,
            g_hat,
            g_se,
            c.no_bias_required().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `x,p_hat,se,ci_lo,ci_hi,valid`.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "p_hat", "se", "ci_lo", "ci_hi", "valid"])?;
    for p in points {
        w.write_record([
            num(p.x),
            opt(p.p_hat),
            opt(p.se),
            opt(p.ci_lo),
            opt(p.ci_hi),
            p.valid.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: `k,mean_n,p_bias,coverage,width,n_discarded`.
pub fn write_sim_csv<W: Write>(results: &[SimResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "mean_n", "p_bias", "coverage", "width", "n_discarded"])?;
    for r in results {
        w.write_record([
            r.k.to_string(),
            r.mean_n.to_string(),
            num(r.p_hat_bias),
            num(r.ci_coverage),
            num(r.mean_ci_width),
            r.n_discarded.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
