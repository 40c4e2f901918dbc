//! Study-level data from published tables and forest plots.
//!
//! Input CSV schema: `label,measure,point,ci_lower,ci_upper[,ci_level]` with
//! `measure` one of `rr`, `or_rare`, `or_common`. Ratios are on their natural
//! scale; `ci_lower` and `ci_level` may be left empty (level defaults to 0.95).

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::phi_quantile;
use crate::error::{Error, Result};
use crate::meta::StudyRow;

/// Half-widths from the two CI bounds may differ by at most this fraction.
pub const MAX_CI_ASYMMETRY: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Relative risk.
    Rr,
    /// Odds ratio for a rare outcome, used directly as a relative risk.
    OrRare,
    /// Odds ratio for a common outcome, converted by its square root.
    OrCommon,
}

impl Measure {
    fn to_log_rr(self, ratio: f64) -> f64 {
        match self {
            Measure::Rr | Measure::OrRare => ratio.ln(),
            Measure::OrCommon => 0.5 * ratio.ln(),
        }
    }

    pub fn approximation_note(self) -> Option<&'static str> {
        match self {
            Measure::Rr => None,
            Measure::OrRare => Some("odds ratio taken as a relative risk (rare outcome)"),
            Measure::OrCommon => {
                Some("relative risk approximated by the square root of the odds ratio")
            }
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rr" => Ok(Measure::Rr),
            "or_rare" => Ok(Measure::OrRare),
            "or_common" => Ok(Measure::OrCommon),
            other => Err(Error::Parse(format!(
                "unknown measure '{other}' (expected rr, or_rare or or_common)"
            ))),
        }
    }
}

/// One study as reported: a ratio estimate with its confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStudyRecord {
    pub label: String,
    pub measure: Measure,
    pub point: f64,
    pub ci_lower: Option<f64>,
    pub ci_upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_level: Option<f64>,
}

impl RawStudyRecord {
    pub fn rr(label: impl Into<String>, point: f64, ci_lower: Option<f64>, ci_upper: f64) -> Self {
        RawStudyRecord {
            label: label.into(),
            measure: Measure::Rr,
            point,
            ci_lower,
            ci_upper,
            ci_level: None,
        }
    }
}

/// Converts a reported ratio and CI into a log-RR study row.
pub fn convert_record(rec: &RawStudyRecord) -> Result<StudyRow> {
    let label = &rec.label;
    if !(rec.point > 0.0) || !rec.point.is_finite() {
        return Err(Error::domain(format!(
            "{label}: point estimate must be positive, got {}",
            rec.point
        )));
    }
    if !(rec.ci_upper > 0.0) || !rec.ci_upper.is_finite() {
        return Err(Error::domain(format!(
            "{label}: upper CI bound must be positive, got {}",
            rec.ci_upper
        )));
    }
    if rec.ci_upper <= rec.point {
        return Err(Error::domain(format!(
            "{label}: upper CI bound {} must exceed the point estimate {}",
            rec.ci_upper, rec.point
        )));
    }
    let level = rec.ci_level.unwrap_or(0.95);
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!(
            "{label}: CI level must lie in (0, 1), got {level}"
        )));
    }
    let z = phi_quantile(1.0 - (1.0 - level) / 2.0);

    let y = rec.measure.to_log_rr(rec.point);
    let upper_half = rec.measure.to_log_rr(rec.ci_upper) - y;
    let half = match rec.ci_lower {
        None => upper_half,
        Some(lo) => {
            if !(lo > 0.0) || !lo.is_finite() {
                return Err(Error::domain(format!(
                    "{label}: lower CI bound must be positive, got {lo}"
                )));
            }
            if lo >= rec.point {
                return Err(Error::domain(format!(
                    "{label}: lower CI bound {lo} must be below the point estimate {}",
                    rec.point
                )));
            }
            let lower_half = y - rec.measure.to_log_rr(lo);
            let asym = (upper_half - lower_half).abs() / upper_half.max(lower_half);
            if asym > MAX_CI_ASYMMETRY {
                return Err(Error::domain(format!(
                    "{label}: CI is asymmetric on the log scale (half-widths {lower_half:.4} and {upper_half:.4}); check the transcription"
                )));
            }
            0.5 * (upper_half + lower_half)
        }
    };
    let var = (half / z).powi(2);
    Ok(StudyRow::new(y, var)?.with_label(label.clone()))
}

/// A problem with one input row. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowIssue {
    pub line: usize,
    pub label: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LoadedCsv {
    pub records: Vec<(usize, RawStudyRecord)>,
    pub issues: Vec<RowIssue>,
}

#[derive(Debug, Deserialize)]
struct CsvRecord {
    label: String,
    measure: String,
    point: String,
    #[serde(default)]
    ci_lower: String,
    ci_upper: String,
    #[serde(default)]
    ci_level: String,
}

fn parse_num(field: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    let t = field.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    t.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("{name} '{t}' is not a number"))
}

fn parse_record(raw: CsvRecord) -> std::result::Result<RawStudyRecord, String> {
    let measure = raw.measure.parse::<Measure>().map_err(|e| e.to_string())?;
    let point = parse_num(&raw.point, "point")?.ok_or("point is missing")?;
    let ci_upper = parse_num(&raw.ci_upper, "ci_upper")?.ok_or("ci_upper is missing")?;
    Ok(RawStudyRecord {
        label: raw.label.trim().to_string(),
        measure,
        point,
        ci_lower: parse_num(&raw.ci_lower, "ci_lower")?,
        ci_upper,
        ci_level: parse_num(&raw.ci_level, "ci_level")?,
    })
}

/// Parses raw study records. Unparseable rows become issues; a file with no
/// data rows is an error.
pub fn parse_csv<R: Read>(reader: R) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    for required in ["label", "measure", "point", "ci_upper"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Parse(format!(
                "missing required column '{required}'"
            )));
        }
    }
    let mut out = LoadedCsv::default();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        rows += 1;
        let parsed = rec
            .map_err(|e| e.to_string())
            .and_then(|r| {
                r.deserialize::<CsvRecord>(Some(&headers))
                    .map_err(|e| e.to_string())
            })
            .and_then(|r| {
                let label = r.label.clone();
                parse_record(r).map_err(|m| format!("{label}: {m}"))
            });
        match parsed {
            Ok(r) => out.records.push((line, r)),
            Err(message) => out.issues.push(RowIssue {
                line,
                label: None,
                message,
            }),
        }
    }
    if rows == 0 {
        return Err(Error::Parse("input contains no data rows".into()));
    }
    Ok(out)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadedCsv> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(file)
}

/// Outcome of validating and converting a set of records.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub studies: Vec<StudyRow>,
    /// Rows excluded from `studies`.
    pub errors: Vec<RowIssue>,
    /// Non-fatal notes: duplicate labels and effect-measure approximations.
    pub warnings: Vec<RowIssue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate(loaded: &LoadedCsv) -> ValidationReport {
    let mut report = ValidationReport {
        errors: loaded.issues.clone(),
        ..Default::default()
    };
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (line, rec) in &loaded.records {
        if let Some(first) = seen.insert(rec.label.as_str(), *line) {
            report.warnings.push(RowIssue {
                line: *line,
                label: Some(rec.label.clone()),
                message: format!("duplicate label (first seen on line {first})"),
            });
        }
        match convert_record(rec) {
            Ok(row) => {
                if let Some(note) = rec.measure.approximation_note() {
                    report.warnings.push(RowIssue {
                        line: *line,
                        label: Some(rec.label.clone()),
                        message: note.to_string(),
                    });
                }
                report.studies.push(row);
            }
            Err(e) => report.errors.push(RowIssue {
                line: *line,
                label: Some(rec.label.clone()),
                message: e.to_string(),
            }),
        }
    }
    report.errors.sort_by_key(|i| i.line);
    report
}

/// Writes study rows as `label,log_rr,var_within` at full precision.
pub fn write_studies_csv<W: std::io::Write>(studies: &[StudyRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "log_rr", "var_within"])?;
    for s in studies {
        w.write_record([
            s.label.clone().unwrap_or_default(),
            format!("{:?}", s.log_rr),
            format!("{:?}", s.var_within),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads study rows written by [`write_studies_csv`].
pub fn read_studies_csv<R: Read>(reader: R) -> Result<Vec<StudyRow>> {
    #[derive(Deserialize)]
    struct Row {
        #[serde(default)]
        label: String,
        log_rr: f64,
        var_within: f64,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))?;
        let s = StudyRow::new(row.log_rr, row.var_within)?;
        out.push(if row.label.is_empty() {
            s
        } else {
            s.with_label(row.label)
        });
    }
    if out.is_empty() {
        return Err(Error::Parse("input contains no data rows".into()));
    }
    Ok(out)
}

/// Loads studies from either schema, chosen by the header line.
pub fn load_studies(path: impl AsRef<Path>) -> Result<ValidationReport> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let header = text.lines().next().unwrap_or_default();
    if header.split(',').any(|h| h.trim() == "log_rr") {
        Ok(ValidationReport {
            studies: read_studies_csv(text.as_bytes())?,
            ..Default::default()
        })
    } else {
        Ok(validate(&parse_csv(text.as_bytes())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Z975: f64 = 1.959_963_984_540_054;

    #[test]
    fn rr_conversion() {
        let row = convert_record(&RawStudyRecord::rr("a", 2.0, None, 4.0)).unwrap();
        assert!((row.log_rr - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((row.var_within - 0.1251).abs() < 1e-4);
        assert!((row.var_within - (2f64.ln() / Z975).powi(2)).abs() < 1e-14);

        let row = convert_record(&RawStudyRecord::rr("b", 1.0, None, Z975.exp())).unwrap();
        assert_eq!(row.log_rr, 0.0);
        assert!((row.var_within - 1.0).abs() < 1e-12);
    }

    #[test]
    fn common_odds_ratio_uses_square_root() {
        let rec = RawStudyRecord {
            measure: Measure::OrCommon,
            ..RawStudyRecord::rr("c", 4.0, None, 9.0)
        };
        let row = convert_record(&rec).unwrap();
        assert!((row.log_rr - 2f64.ln()).abs() < 1e-15);
        let want = ((3f64.ln() - 2f64.ln()) / Z975).powi(2);
        assert!((row.var_within - want).abs() < 1e-15);
    }

    #[test]
    fn rare_odds_ratio_is_unchanged() {
        let rec = RawStudyRecord {
            measure: Measure::OrRare,
            ..RawStudyRecord::rr("d", 0.8, Some(0.5), 1.28)
        };
        let row = convert_record(&rec).unwrap();
        assert!((row.log_rr - 0.8f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bad_records() {
        assert!(convert_record(&RawStudyRecord::rr("x", 0.0, None, 1.0)).is_err());
        assert!(convert_record(&RawStudyRecord::rr("x", 2.0, None, 1.5)).is_err());
        assert!(convert_record(&RawStudyRecord::rr("x", 2.0, None, 2.0)).is_err());
        assert!(convert_record(&RawStudyRecord::rr("x", 2.0, Some(2.5), 3.0)).is_err());
        // log half-widths 0.1 and 0.5
        let lo = (2f64.ln() - 0.1).exp();
        let hi = (2f64.ln() + 0.5).exp();
        let err = convert_record(&RawStudyRecord::rr("x", 2.0, Some(lo), hi)).unwrap_err();
        assert!(err.to_string().contains("asymmetric"));
    }

    #[test]
    fn other_ci_levels() {
        let z90 = phi_quantile(0.95);
        let rec = RawStudyRecord {
            ci_level: Some(0.90),
            ..RawStudyRecord::rr("e", 1.0, None, z90.exp())
        };
        assert!((convert_record(&rec).unwrap().var_within - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_validation_report() {
        let text = "label,measure,point,ci_lower,ci_upper\r\n\
                    A,rr,0.8,0.6,1.0667\r\n\
                    B,or_rare,1.2,,1.8\r\n\
                    C,rr,1.5,,1.2\r\n\
                    A,rr,0.9,0.7,1.157\r\n\
                    D,hr,1.1,,1.3\r\n\
                    E,rr,abc,,1.3\r\n";
        let loaded = parse_csv(text.as_bytes()).unwrap();
        assert_eq!(loaded.records.len(), 4);
        assert_eq!(loaded.issues.len(), 2);
        let report = validate(&loaded);
        assert_eq!(report.studies.len(), 3);
        assert_eq!(report.errors.len(), 3);
        assert_eq!(report.errors[0].line, 4);
        assert!(report
            .warnings
            .iter()
            .any(|w| w.message.contains("duplicate")));
        assert!(report
            .warnings
            .iter()
            .any(|w| w.message.contains("rare outcome")));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(parse_csv("label,measure,point,ci_lower,ci_upper\n".as_bytes()).is_err());
        assert!(parse_csv("".as_bytes()).is_err());
        assert!(parse_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn study_csv_round_trip() {
        let rows = vec![
            StudyRow::new(-0.2, 0.05).unwrap().with_label("s1"),
            StudyRow::new(0.1 + 1e-17, 0.3).unwrap().with_label("s2"),
        ];
        let mut buf = Vec::new();
        write_studies_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_studies_csv(buf.as_slice()).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn exponentiated_row_round_trips(y in -3.0f64..3.0, v in 1e-4f64..2.0, symmetric in any::<bool>()) {
            let half = Z975 * v.sqrt();
            let rec = RawStudyRecord::rr("p", y.exp(), symmetric.then(|| (y - half).exp()), (y + half).exp());
            let row = convert_record(&rec).unwrap();
            prop_assert!((row.log_rr - y).abs() <= 1e-10);
            prop_assert!((row.var_within - v).abs() <= 1e-10 * v.max(1.0));
        }
    }
}
