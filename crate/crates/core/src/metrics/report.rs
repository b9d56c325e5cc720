//! Corpus-level aggregation and Table-style reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::scores::ScoreRow;
use crate::error::{Error, Result};

/// One point of a retention curve: the filtered run's share of the
/// baseline token length and of the baseline EM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionPoint {
    pub length_fraction: f64,
    pub em_retention: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n: usize,
    pub em_pct: f64,
    pub f1_pct: f64,
    pub mean_token_len: f64,
    /// `em_pct / mean_token_len`, a ratio of means.
    pub ept_ratio: f64,
    /// Mean of the per-row EPT values.
    pub ept_mean: f64,
    pub ira_pct: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retention: Vec<RetentionPoint>,
}

/// Corpus-level EPT: EM percentage over mean context length.
pub fn ept_ratio(em_pct: f64, mean_token_len: f64) -> Result<f64> {
    if mean_token_len.is_nan() || mean_token_len <= 0.0 {
        return Err(Error::arg("mean token length must be positive"));
    }
    Ok(em_pct / mean_token_len)
}

/// Averages score rows. Rows are summed in id order so the result does not
/// depend on the order they were produced in.
pub fn aggregate(rows: &[ScoreRow]) -> Result<AggregateReport> {
    if rows.is_empty() {
        return Err(Error::arg("cannot aggregate zero score rows"));
    }
    let mut ordered: Vec<&ScoreRow> = rows.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));

    let (mut em, mut f1, mut len, mut ept, mut ira) = (0u64, 0.0f64, 0u64, 0.0f64, 0u64);
    for r in ordered {
        em += u64::from(r.em);
        f1 += r.f1;
        len += r.token_len as u64;
        ept += r.ept;
        ira += u64::from(r.ira);
    }
    let n = rows.len() as f64;
    let em_pct = em as f64 / n * 100.0;
    let mean_token_len = len as f64 / n;
    Ok(AggregateReport {
        n: rows.len(),
        em_pct,
        f1_pct: f1 / n * 100.0,
        mean_token_len,
        ept_ratio: ept_ratio(em_pct, mean_token_len)?,
        ept_mean: ept / n,
        ira_pct: ira as f64 / n * 100.0,
        retention: Vec::new(),
    })
}

/// How much of the baseline EM survives at the filtered token budget.
pub fn retention(baseline: &AggregateReport, filtered: &AggregateReport) -> Result<RetentionPoint> {
    if baseline.mean_token_len.is_nan()
        || baseline.mean_token_len <= 0.0
        || baseline.em_pct.is_nan()
        || baseline.em_pct <= 0.0
    {
        return Err(Error::arg(
            "baseline needs positive EM and token length for retention",
        ));
    }
    Ok(RetentionPoint {
        length_fraction: filtered.mean_token_len / baseline.mean_token_len,
        em_retention: filtered.em_pct / baseline.em_pct,
    })
}

/// Aggregates `rows` and records their retention against `baseline`.
pub fn aggregate_against(rows: &[ScoreRow], baseline: &AggregateReport) -> Result<AggregateReport> {
    let mut report = aggregate(rows)?;
    let point = retention(baseline, &report)?;
    report.retention.push(point);
    Ok(report)
}

pub const REPORT_COLUMNS: [&str; 6] = ["Model", "EM", "F1", "Tok Len", "EPT", "IRA"];

/// Named aggregate rows rendered as a Model/EM/F1/Tok Len/EPT/IRA table.
#[derive(Debug, Clone, Default)]
pub struct ReportTable {
    pub rows: Vec<(String, AggregateReport)>,
}

impl ReportTable {
    pub fn push(&mut self, model: impl Into<String>, report: AggregateReport) {
        self.rows.push((model.into(), report));
    }

    fn cells(report: &AggregateReport) -> [String; 5] {
        [
            format!("{:.2}", report.em_pct),
            format!("{:.2}", report.f1_pct),
            format!("{:.2}", report.mean_token_len),
            format!("{:.2}", report.ept_ratio),
            format!("{:.2}", report.ira_pct),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = REPORT_COLUMNS.join(",");
        out.push('\n');
        for (model, report) in &self.rows {
            let model = if model.contains([',', '"', '\n']) {
                format!("\"{}\"", model.replace('"', "\"\""))
            } else {
                model.clone()
            };
            let _ = writeln!(out, "{},{}", model, Self::cells(report).join(","));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("| {} |\n", REPORT_COLUMNS.join(" | "));
        out.push_str("|---|---:|---:|---:|---:|---:|\n");
        for (model, report) in &self.rows {
            let _ = writeln!(out, "| {} | {} |", model, Self::cells(report).join(" | "));
        }
        out.push_str("\nEPT = EM / Tok Len (ratio of means).\n");
        for (model, report) in &self.rows {
            let _ = write!(
                out,
                "\n- {}: n = {}, mean per-row EPT (EM as 0/1) = {:.6}",
                model, report.n, report.ept_mean
            );
            for p in &report.retention {
                let _ = write!(
                    out,
                    "; retention: {:.1}% of tokens keeps {:.1}% of EM",
                    p.length_fraction * 100.0,
                    p.em_retention * 100.0
                );
            }
        }
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, em: u8, f1: f64, len: usize, ira: u8) -> ScoreRow {
        ScoreRow {
            id: id.into(),
            em,
            f1,
            token_len: len,
            ept: f64::from(em) / len as f64,
            ira,
        }
    }

    #[test]
    fn all_correct_rows() {
        let rows: Vec<_> = (0..4).map(|i| row(&i.to_string(), 1, 1.0, 10, 1)).collect();
        let r = aggregate(&rows).unwrap();
        assert_eq!(r.em_pct, 100.0);
        assert_eq!(r.ept_ratio, 10.0);
        assert_eq!(r.ept_mean, 0.1);
        assert_eq!(r.ira_pct, 100.0);
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn order_independent() {
        let rows = vec![
            row("b", 1, 0.3, 7, 0),
            row("a", 0, 0.1, 3, 1),
            row("c", 1, 0.7, 11, 1),
        ];
        let mut rev = rows.clone();
        rev.reverse();
        assert_eq!(aggregate(&rows).unwrap(), aggregate(&rev).unwrap());
    }

    #[test]
    fn retention_against_baseline() {
        let base = vec![row("a", 1, 1.0, 100, 1), row("b", 1, 1.0, 100, 1)];
        let filt = vec![row("a", 1, 1.0, 20, 1), row("b", 0, 0.0, 20, 0)];
        let b = aggregate(&base).unwrap();
        let f = aggregate_against(&filt, &b).unwrap();
        assert_eq!(
            f.retention,
            vec![RetentionPoint {
                length_fraction: 0.2,
                em_retention: 0.5
            }]
        );
    }

    #[test]
    fn table_layout() {
        let mut t = ReportTable::default();
        t.push("Origin", aggregate(&[row("a", 1, 1.0, 4, 1)]).unwrap());
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "Model,EM,F1,Tok Len,EPT,IRA\nOrigin,100.00,100.00,4.00,25.00,100.00\n"
        );
        assert!(t
            .to_markdown()
            .starts_with("| Model | EM | F1 | Tok Len | EPT | IRA |\n"));
    }
}
