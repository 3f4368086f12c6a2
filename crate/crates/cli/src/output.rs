//! CSV and JSON writers for reports.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use irdf_core::{CmiReport, SolverReport};

#[derive(Serialize)]
struct ReportRow {
    s: f64,
    rate_nats: f64,
    distortion: f64,
    iterations: usize,
    converged: bool,
    residual: f64,
}

impl From<&SolverReport> for ReportRow {
    fn from(r: &SolverReport) -> Self {
        ReportRow {
            s: r.s,
            rate_nats: r.rate,
            distortion: r.distortion,
            iterations: r.iterations,
            converged: r.converged,
            residual: r.final_residual,
        }
    }
}

/// Side-by-side fixed-point vs oracle comparison at one `s`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ComparisonRow {
    pub s: f64,
    pub j_fixed_point: f64,
    pub j_oracle: f64,
    pub delta_j: f64,
    pub rate_fixed_point: f64,
    pub rate_oracle: f64,
    pub distortion_fixed_point: f64,
    pub distortion_oracle: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// Header `s,rate_nats,distortion,iterations,converged,residual`.
pub fn write_reports(dir: &Path, reports: &[SolverReport]) -> Result<()> {
    write_csv(
        &dir.join("reports.csv"),
        reports.iter().map(ReportRow::from),
    )?;
    write_json(&dir.join("reports.json"), reports)
}

/// Header `k,ell,cmi_nats,threshold,holds`.
pub fn write_cmi(path: &Path, rows: &[CmiReport]) -> Result<()> {
    if rows.is_empty() {
        // csv writes no header without a record
        fs::write(path, "k,ell,cmi_nats,threshold,holds\n")?;
        return Ok(());
    }
    write_csv(path, rows)
}

pub fn write_comparison(dir: &Path, rows: &[ComparisonRow]) -> Result<()> {
    write_csv(&dir.join("oracle_compare.csv"), rows)?;
    write_json(&dir.join("oracle_compare.json"), rows)
}
