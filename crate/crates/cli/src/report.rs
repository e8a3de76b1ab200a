//! Benchmark report and its CSV/JSON serializations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSummary {
    pub engine: String,
    /// Signed sensitivity of largest magnitude.
    pub linf_sensitivity: f64,
    /// Zero-based parameter attaining it.
    pub argmax_index: usize,
    pub time_median_s: f64,
    pub time_mean_s: f64,
    pub linear_solves: usize,
    pub factorizations: usize,
    pub krylov_iterations: Option<usize>,
}

/// Relative error of `engine`'s L∞ sensitivity against `reference`'s, in
/// percent. `None` when the reference is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseError {
    pub engine: String,
    pub reference: String,
    pub rel_err_pct: Option<f64>,
}

/// Median time of `engine` over the median time of the proposed method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRatio {
    pub engine: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: RunConfig,
    pub dofs: usize,
    pub q: usize,
    pub characteristic: String,
    /// One-based MAC reference mode, when taken from the baseline.
    pub reference_mode: Option<usize>,
    pub mse_element: Option<usize>,
    pub eigenvalue: f64,
    pub eigen_time_s: f64,
    pub engines: Vec<EngineSummary>,
    pub pairwise_errors: Vec<PairwiseError>,
    pub ratios_vs_pm: Vec<EfficiencyRatio>,
}

impl BenchReport {
    pub fn engine(&self, name: &str) -> Option<&EngineSummary> {
        self.engines.iter().find(|e| e.engine == name)
    }

    pub fn relative_error(&self, engine: &str, reference: &str) -> Option<f64> {
        self.pairwise_errors
            .iter()
            .find(|p| p.engine == engine && p.reference == reference)
            .and_then(|p| p.rel_err_pct)
    }

    pub fn ratio_vs_pm(&self, engine: &str) -> Option<f64> {
        self.ratios_vs_pm
            .iter()
            .find(|r| r.engine == engine)
            .map(|r| r.ratio)
    }

    /// Every pairwise error exists and is finite.
    pub fn errors_finite(&self) -> bool {
        self.pairwise_errors
            .iter()
            .all(|p| p.rel_err_pct.is_some_and(f64::is_finite))
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.engines
            .iter()
            .map(|e| CsvRow {
                engine: e.engine.clone(),
                dofs: self.dofs,
                q: self.q,
                linf_sensitivity: e.linf_sensitivity,
                argmax_index: e.argmax_index,
                time_median_s: e.time_median_s,
                rel_err_vs_ne_pct: if e.engine == "fn" {
                    None
                } else {
                    self.relative_error(&e.engine, "fn")
                },
                ratio_vs_pm: self.ratio_vs_pm(&e.engine),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub engine: String,
    pub dofs: usize,
    pub q: usize,
    pub linf_sensitivity: f64,
    pub argmax_index: usize,
    pub time_median_s: f64,
    pub rel_err_vs_ne_pct: Option<f64>,
    pub ratio_vs_pm: Option<f64>,
}

pub fn write_csv<W: Write>(reports: &[BenchReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for report in reports {
        for row in report.csv_rows() {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one report as an object, several as an array.
pub fn write_json<W: Write>(reports: &[BenchReport], out: W) -> Result<()> {
    match reports {
        [single] => serde_json::to_writer_pretty(out, single)?,
        many => serde_json::to_writer_pretty(out, many)?,
    }
    Ok(())
}

pub fn emit(reports: &[BenchReport], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(reports, &mut out)?,
        OutputFormat::Json => write_json(reports, &mut out)?,
    }
    out.flush()
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_json(path: &Path) -> Result<Vec<BenchReport>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Fixed-width console table.
pub fn render_table(report: &BenchReport) -> String {
    let mut s = format!(
        "{} DOFs, {} parameters, {} of mode {} (lambda = {:.6e})\n",
        report.dofs, report.q, report.characteristic, report.config.mode, report.eigenvalue
    );
    s += &format!(
        "{:<6} {:>16} {:>8} {:>12} {:>12} {:>8} {:>14} {:>10}\n",
        "engine", "linf", "argmax", "median s", "mean s", "solves", "err vs fn %", "vs pm"
    );
    for row in report.csv_rows() {
        let e = report.engine(&row.engine).expect("row from report");
        s += &format!(
            "{:<6} {:>16.8e} {:>8} {:>12.6} {:>12.6} {:>8} {:>14} {:>10}\n",
            row.engine,
            row.linf_sensitivity,
            row.argmax_index,
            row.time_median_s,
            e.time_mean_s,
            e.linear_solves,
            row.rel_err_vs_ne_pct
                .map_or("-".into(), |v| format!("{v:.3e}")),
            row.ratio_vs_pm.map_or("-".into(), |v| format!("{v:.3}")),
        );
    }
    s
}
