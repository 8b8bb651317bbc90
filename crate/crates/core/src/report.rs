//! Report emission: full JSON, flat CSV, and a markdown table with one row
//! per method and one column per dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{LdaPoint, ResultRow, ResultTable, RowOutcome};

/// Marker for a method that cannot run on a dataset.
pub const INFEASIBLE_MARK: &str = "−";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// One CSV line per result row. Infeasible rows leave the metric columns
/// empty and carry the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatRow {
    pub method: String,
    pub dataset: String,
    pub combination: String,
    pub status: String,
    pub mean_accuracy: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub mean_macro_f: Option<f64>,
    pub n_folds: usize,
    /// Semicolon-separated fold accuracies in fold order.
    pub fold_accuracies: String,
    pub overlap_pairs: Option<u64>,
    pub same_trial_pairs: Option<u64>,
    pub same_subject_pairs: Option<u64>,
    pub plan_fingerprint: String,
    pub config_hash: String,
    pub wall_ms: f64,
    pub reason: String,
}

impl FlatRow {
    pub fn from_row(r: &ResultRow) -> Self {
        let (status, summary, reason) = match &r.outcome {
            RowOutcome::Completed { summary } => ("completed", Some(summary), String::new()),
            RowOutcome::Infeasible { reason } => ("infeasible", None, reason.clone()),
        };
        let totals = r.leakage.as_ref().map(|l| l.totals);
        Self {
            method: r.method.to_string(),
            dataset: r.dataset.clone(),
            combination: r.combination.to_string(),
            status: status.into(),
            mean_accuracy: summary.map(|s| s.mean_accuracy),
            ci_low: summary.map(|s| s.ci_low),
            ci_high: summary.map(|s| s.ci_high),
            mean_macro_f: summary.map(|s| s.mean_macro_f),
            n_folds: summary.map_or(0, |s| s.folds.len()),
            fold_accuracies: summary
                .map(|s| s.folds.iter().map(|f| f.accuracy.to_string()).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
            overlap_pairs: totals.map(|t| t.overlap_pairs),
            same_trial_pairs: totals.map(|t| t.same_trial_pairs),
            same_subject_pairs: totals.map(|t| t.same_subject_pairs),
            plan_fingerprint: r.plan_fingerprint.clone(),
            config_hash: r.config_hash.clone(),
            wall_ms: r.wall_ms,
            reason,
        }
    }
}

const FLAT_HEADER: [&str; 17] = [
    "method",
    "dataset",
    "combination",
    "status",
    "mean_accuracy",
    "ci_low",
    "ci_high",
    "mean_macro_f",
    "n_folds",
    "fold_accuracies",
    "overlap_pairs",
    "same_trial_pairs",
    "same_subject_pairs",
    "plan_fingerprint",
    "config_hash",
    "wall_ms",
    "reason",
];

pub fn flat_rows(table: &ResultTable) -> Vec<FlatRow> {
    table.rows.iter().map(FlatRow::from_row).collect()
}

fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_flat_csv(doc: &str) -> Result<Vec<FlatRow>> {
    let mut r = csv::Reader::from_reader(doc.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<Vec<FlatRow>, _>>()?)
}

pub fn emit_report(table: &ResultTable, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(table)?),
        ReportFormat::Csv => to_csv(&FLAT_HEADER, &flat_rows(table)),
        ReportFormat::Markdown => Ok(markdown(table)),
    }
}

fn cell(r: &ResultRow) -> String {
    match r.summary() {
        Some(s) => format!("{:.2} ± {:.2}", 100.0 * s.mean_accuracy, 100.0 * (s.ci_high - s.mean_accuracy)),
        None => INFEASIBLE_MARK.to_string(),
    }
}

/// Mean accuracy and 95% interval half-width in percent; one table per
/// combination, methods as rows, datasets as columns, plus the mean over
/// feasible datasets.
fn markdown(table: &ResultTable) -> String {
    let datasets: BTreeSet<&str> = table.rows.iter().map(|r| r.dataset.as_str()).collect();
    let mut by_comb: BTreeMap<_, Vec<&ResultRow>> = BTreeMap::new();
    for r in &table.rows {
        by_comb.entry(r.combination).or_default().push(r);
    }
    let mut out = String::new();
    let header = |out: &mut String| {
        out.push_str("| Method |");
        for d in &datasets {
            let _ = write!(out, " {d} |");
        }
        out.push_str(" Mean |\n|---|");
        for _ in &datasets {
            out.push_str("---|");
        }
        out.push_str("---|\n");
    };
    if by_comb.is_empty() {
        header(&mut out);
        return out;
    }
    for (comb, rows) in by_comb {
        let _ = writeln!(out, "### {comb}\n");
        header(&mut out);
        let mut methods: Vec<_> = rows.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        for m in methods {
            let _ = write!(out, "| {m} |");
            let mut accs = Vec::new();
            for d in &datasets {
                match rows.iter().find(|r| r.method == m && r.dataset == *d) {
                    Some(r) => {
                        if let Some(s) = r.summary() {
                            accs.push(s.mean_accuracy);
                        }
                        let _ = write!(out, " {} |", cell(r));
                    }
                    None => out.push_str("  |"),
                }
            }
            if accs.is_empty() {
                let _ = writeln!(out, " {INFEASIBLE_MARK} |");
            } else {
                let _ = writeln!(out, " {:.2} |", 100.0 * accs.iter().sum::<f64>() / accs.len() as f64);
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldPoint {
    pub method: String,
    pub dataset: String,
    pub combination: String,
    pub repetition: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub macro_f: f64,
}

/// Per-fold accuracy series, one line per fold.
pub fn fold_series_csv(table: &ResultTable) -> Result<String> {
    let points: Vec<FoldPoint> = table
        .rows
        .iter()
        .filter_map(|r| r.summary().map(|s| (r, s)))
        .flat_map(|(r, s)| {
            s.folds.iter().map(move |f| FoldPoint {
                method: r.method.to_string(),
                dataset: r.dataset.clone(),
                combination: r.combination.to_string(),
                repetition: f.repetition,
                fold: f.fold_id,
                accuracy: f.accuracy,
                macro_f: f.macro_f,
            })
        })
        .collect();
    to_csv(&["method", "dataset", "combination", "repetition", "fold", "accuracy", "macro_f"], &points)
}

pub fn lda_points_csv(points: &[LdaPoint]) -> Result<String> {
    to_csv(&["window", "split", "label", "c1", "c2"], points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{FoldResult, ResultSummary};
    use crate::experiment::Method;
    use crate::splitplan::Combination;

    fn row(method: Method, dataset: &str, acc: Option<f64>) -> ResultRow {
        let outcome = match acc {
            Some(a) => {
                let folds = (0..3)
                    .map(|i| FoldResult {
                        fold_id: i,
                        repetition: 0,
                        accuracy: a + 0.01 * i as f64 + 1e-17,
                        macro_f: a,
                        confusion: vec![],
                    })
                    .collect();
                RowOutcome::Completed {
                    summary: ResultSummary::from_folds(method.as_str(), dataset, "SNCV", folds).unwrap(),
                }
            }
            None => RowOutcome::Infeasible {
                reason: "too few channels".into(),
            },
        };
        ResultRow {
            method,
            dataset: dataset.into(),
            combination: Combination::Sncv,
            outcome,
            leakage: None,
            plan_fingerprint: "ab".into(),
            config_hash: "cd".into(),
            wall_ms: 1.5,
        }
    }

    fn table() -> ResultTable {
        ResultTable {
            rows: vec![
                row(Method::Kwapisz, "d1", Some(0.8123456789)),
                row(Method::Kwapisz, "d2", Some(0.7)),
                row(Method::Ha2015, "d1", None),
                row(Method::Ha2015, "d2", Some(1.0 / 3.0)),
            ],
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::default();
        assert_eq!(emit_report(&t, ReportFormat::Csv).unwrap().lines().count(), 1);
        assert_eq!(emit_report(&t, ReportFormat::Markdown).unwrap().lines().count(), 2);
        let json: ResultTable = serde_json::from_str(&emit_report(&t, ReportFormat::Json).unwrap()).unwrap();
        assert!(json.rows.is_empty());
    }

    #[test]
    fn json_and_csv_agree_exactly() {
        let t = table();
        let from_json: ResultTable = serde_json::from_str(&emit_report(&t, ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(from_json, t);
        let from_csv = read_flat_csv(&emit_report(&t, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(from_csv, flat_rows(&from_json));
    }

    #[test]
    fn markdown_layout() {
        let md = emit_report(&table(), ReportFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "### SNCV");
        assert_eq!(lines[2], "| Method | d1 | d2 | Mean |");
        assert!(lines[4].starts_with("| kwapisz | 82.23 ± "));
        assert!(lines[5].starts_with("| ha2015 | − | 34.33 ± "));
        assert!(lines[5].ends_with("| 34.33 |"));
    }

    #[test]
    fn unknown_format() {
        assert!(matches!("xml".parse::<ReportFormat>(), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn fold_series() {
        let csv = fold_series_csv(&table()).unwrap();
        assert_eq!(csv.lines().count(), 1 + 9);
    }
}
