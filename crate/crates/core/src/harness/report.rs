use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentSpec, RowOutcome, Study};
use super::stats::summarize;
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "label,mean_error,std_dev,epochs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub mean_error: f64,
    pub std_dev: f64,
    pub per_epoch_losses: Vec<f64>,
}

impl ResultRow {
    pub fn new(label: String, per_epoch_losses: Vec<f64>) -> Result<Self> {
        let s = summarize(&per_epoch_losses)?;
        Ok(Self { label, mean_error: s.mean, std_dev: s.std_dev, per_epoch_losses })
    }

    pub fn final_loss(&self) -> f64 {
        *self.per_epoch_losses.last().expect("rows always hold at least one loss")
    }
}

/// Published value for a row, printed in the report footer for comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub label: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub study: Study,
    /// Epochs behind each row.
    pub epochs: u64,
    pub total_epochs: Option<u64>,
    pub rows: Vec<ResultRow>,
    pub failures: Vec<(String, String)>,
    pub references: Vec<ReferenceValues>,
}

impl Report {
    pub fn from_outcomes(study: Study, epochs: u64, outcomes: Vec<RowOutcome>) -> Self {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(r) => rows.push(r),
                Err(f) => failures.push(f),
            }
        }
        rows.sort_by(|a, b| a.label.cmp(&b.label));
        failures.sort();
        Self { study, epochs, total_epochs: None, rows, failures, references: study.reference_values() }
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn row(&self, label: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{REPORT_HEADER}").unwrap();
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.label, r.mean_error, r.std_dev, r.per_epoch_losses.len()).unwrap();
        }
        for r in &self.rows {
            write!(out, "#losses,{}", r.label).unwrap();
            for v in &r.per_epoch_losses {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        for (label, msg) in &self.failures {
            writeln!(out, "#error,{label},{}", msg.replace(['\n', ','], " ")).unwrap();
        }
        for p in &self.references {
            writeln!(out, "#reference,{},{}", p.label, p.values.join(",")).unwrap();
        }
        out
    }

    /// Parses the rows and loss lines back; footer lines are ignored.
    pub fn parse_rows(text: &str) -> Result<Vec<ResultRow>> {
        let bad = |line: usize, message: &str| Error::MalformedLine { line, message: message.into() };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == REPORT_HEADER => {}
            _ => return Err(bad(1, "missing report header")),
        }
        let mut rows: Vec<ResultRow> = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields[0] == "#losses" {
                let label = fields.get(1).ok_or_else(|| bad(n, "loss row without a label"))?;
                let losses = fields[2..]
                    .iter()
                    .map(|v| v.parse::<f64>().map_err(|_| bad(n, "loss is not a number")))
                    .collect::<Result<Vec<_>>>()?;
                let row = rows
                    .iter_mut()
                    .find(|r| r.label == *label)
                    .ok_or_else(|| bad(n, "loss row for an unknown label"))?;
                row.per_epoch_losses = losses;
            } else if fields[0].starts_with('#') {
                continue;
            } else {
                if fields.len() != 4 {
                    return Err(bad(n, "expected 4 fields"));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "field is not a number"));
                rows.push(ResultRow {
                    label: fields[0].to_string(),
                    mean_error: num(fields[1])?,
                    std_dev: num(fields[2])?,
                    per_epoch_losses: Vec::new(),
                });
            }
        }
        Ok(rows)
    }
}

/// Sidecar path for a report: `x.csv` becomes `x.spec.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("spec.json")
}

/// Writes the CSV and its JSON sidecar holding `spec`.
pub fn write_report(report: &Report, spec: &ExperimentSpec, csv_path: &Path) -> Result<PathBuf> {
    let mut json = serde_json::to_string_pretty(spec)?;
    json.push('\n');
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(csv_path, report.to_csv()).map_err(|e| Error::io(csv_path, e))?;
    let sidecar = sidecar_path(csv_path);
    fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}
