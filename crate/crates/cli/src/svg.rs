//! Self-contained SVG rendering of a sensitivity curve.
//!
//! The bottom axis carries the grid variable and the top axis the same
//! positions on the other scale (bias factor vs. confounding strength).

use std::fmt::Write;

use metasens_core::bias::{bias_to_strength, strength_to_bias};
use metasens_core::sens::{CurveAxis, CurvePoint};
use metasens_core::{BiasFactor, ConfoundingStrength};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 70.0;
const BOTTOM: f64 = 70.0;

pub struct PlotLabels {
    pub title: String,
    pub y_label: String,
}

fn other_scale(axis: CurveAxis, x: f64) -> Option<f64> {
    match axis {
        CurveAxis::BiasFactor => BiasFactor::new(x).ok().map(|b| bias_to_strength(b).value()),
        CurveAxis::Strength => ConfoundingStrength::new(x)
            .ok()
            .map(|g| strength_to_bias(g).value()),
    }
}

fn inverse_other_scale(axis: CurveAxis, v: f64) -> Option<f64> {
    match axis {
        CurveAxis::BiasFactor => ConfoundingStrength::new(v)
            .ok()
            .map(|g| strength_to_bias(g).value()),
        CurveAxis::Strength => BiasFactor::new(v).ok().map(|b| bias_to_strength(b).value()),
    }
}

fn axis_names(axis: CurveAxis) -> (&'static str, &'static str) {
    match axis {
        CurveAxis::BiasFactor => ("Bias factor (RR scale)", "Confounding strength g"),
        CurveAxis::Strength => ("Confounding strength g", "Bias factor (RR scale)"),
    }
}

/// Roughly `target` round tick values covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Renders `points` as an SVG document.
pub fn render(points: &[CurvePoint], axis: CurveAxis, labels: &PlotLabels) -> String {
    let (x_lo, x_hi) = match (points.first(), points.last()) {
        (Some(a), Some(b)) if b.x > a.x => (a.x, b.x),
        (Some(a), _) => (a.x, a.x + 1.0),
        _ => (1.0, 2.0),
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * ph;
    let (bottom_name, top_name) = axis_names(axis);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        fmt(WIDTH / 2.0),
        escape(&labels.title)
    );

    // Confidence band and curve, one piece per run of valid points.
    for run in points.split(|p| !p.valid) {
        let band: Vec<&CurvePoint> = run
            .iter()
            .filter(|p| p.ci_lo.is_some() && p.ci_hi.is_some())
            .collect();
        if band.len() >= 2 {
            let mut d = String::new();
            for p in &band {
                let _ = write!(
                    d,
                    "{},{} ",
                    fmt(sx(p.x)),
                    fmt(sy(p.ci_hi.unwrap_or_default()))
                );
            }
            for p in band.iter().rev() {
                let _ = write!(
                    d,
                    "{},{} ",
                    fmt(sx(p.x)),
                    fmt(sy(p.ci_lo.unwrap_or_default()))
                );
            }
            let _ = writeln!(
                s,
                r##"<polygon class="ci-band" points="{}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##,
                d.trim_end()
            );
        }
        let line: Vec<String> = run
            .iter()
            .filter_map(|p| p.p_hat.map(|y| format!("{},{}", fmt(sx(p.x)), fmt(sy(y)))))
            .collect();
        if line.len() >= 2 {
            let _ = writeln!(
                s,
                r##"<polyline class="estimate" points="{}" fill="none" stroke="#08519c" stroke-width="2"/>"##,
                line.join(" ")
            );
        }
    }

    // Frame.
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt(LEFT),
        fmt(TOP),
        fmt(pw),
        fmt(ph)
    );

    // Bottom axis.
    for t in nice_ticks(x_lo, x_hi, 8) {
        let x = fmt(sx(t));
        let y0 = TOP + ph;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
            fmt(y0),
            fmt(y0 + 5.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            fmt(y0 + 18.0),
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        fmt(LEFT + pw / 2.0),
        fmt(HEIGHT - 25.0),
        bottom_name
    );

    // Top axis: the other scale at the positions it maps to.
    if let (Some(o_lo), Some(o_hi)) = (other_scale(axis, x_lo), other_scale(axis, x_hi)) {
        for t in nice_ticks(o_lo, o_hi, 6) {
            let Some(pos) = inverse_other_scale(axis, t) else {
                continue;
            };
            if pos < x_lo || pos > x_hi {
                continue;
            }
            let x = fmt(sx(pos));
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
                fmt(TOP),
                fmt(TOP - 5.0)
            );
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
                fmt(TOP - 9.0),
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt(LEFT + pw / 2.0),
            fmt(TOP - 28.0),
            top_name
        );
    }

    // Left axis.
    for t in nice_ticks(0.0, 1.0, 5) {
        let y = fmt(sy(t));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#,
            fmt(LEFT - 5.0),
            fmt(LEFT)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            fmt(LEFT - 8.0),
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(20,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        fmt(TOP + ph / 2.0),
        escape(&labels.y_label)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.0, 1.0, 5);
        assert_eq!(t.len(), 6);
        assert_eq!(t[5], 1.0);
        let t = nice_ticks(1.0, 3.0, 8);
        assert_eq!(t.first(), Some(&1.0));
        assert_eq!(t.last(), Some(&3.0));
    }

    #[test]
    fn labels_are_trimmed() {
        assert_eq!(tick_label(1.5), "1.5");
        assert_eq!(tick_label(2.0), "2");
        assert_eq!(tick_label(0.25), "0.25");
    }
}
