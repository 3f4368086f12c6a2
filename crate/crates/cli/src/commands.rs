use std::fs;

use anyhow::{Context, Result};
use serde::Serialize;

use irdf_core::structure::window_reports;
use irdf_core::{
    oracle_descent, smallest_window, solve_fixed_point, sweep, CmiReport, FixedPoint, OutputLaw,
    SweepOptions,
};

use crate::config::Run;
use crate::output::{write_cmi, write_comparison, write_json, write_reports, ComparisonRow};

/// Oracle and fixed-point Lagrangians must agree to this.
pub const ORACLE_AGREEMENT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Failed,
}

fn prepare(run: &Run) -> Result<()> {
    fs::create_dir_all(&run.out_dir)
        .with_context(|| format!("cannot create output directory {}", run.out_dir.display()))
}

fn all_converged(points: &[FixedPoint]) -> Outcome {
    if points.iter().all(|p| p.report.converged) {
        Outcome::Ok
    } else {
        Outcome::Failed
    }
}

/// Independent cold-start solve at every `s`.
fn solve_each(run: &Run) -> Result<Vec<FixedPoint>> {
    let mut grid = run.s_grid.clone();
    grid.sort_by(f64::total_cmp);
    let uniform = OutputLaw::uniform(run.spec.y_size(), run.model.horizon())?;
    grid.iter()
        .map(|&s| {
            solve_fixed_point(&run.model, &run.spec, s, &uniform, &run.solver)
                .with_context(|| format!("solve failed at s = {s}"))
        })
        .collect()
}

pub fn solve(run: &Run) -> Result<Outcome> {
    prepare(run)?;
    let points = solve_each(run)?;
    let reports: Vec<_> = points.iter().map(|p| p.report.clone()).collect();
    write_reports(&run.out_dir, &reports)?;
    Ok(all_converged(&points))
}

pub fn sweep_cmd(run: &Run, warm_start: bool) -> Result<Outcome> {
    prepare(run)?;
    let opts = SweepOptions {
        solver: run.solver,
        warm_start,
    };
    let points = sweep(&run.model, &run.spec, &run.s_grid, &opts)?;
    let reports: Vec<_> = points.iter().map(|p| p.report.clone()).collect();
    write_reports(&run.out_dir, &reports)?;
    Ok(all_converged(&points))
}

#[derive(Serialize)]
struct StructureSummary {
    s: f64,
    kappa: usize,
    converged: bool,
    /// Smallest window per interior step `k = κ..n-1`.
    windows: Vec<(usize, usize)>,
    matches_kappa: bool,
}

pub fn verify_structure(run: &Run) -> Result<Outcome> {
    prepare(run)?;
    let points = solve_each(run)?;
    let reports: Vec<_> = points.iter().map(|p| p.report.clone()).collect();
    write_reports(&run.out_dir, &reports)?;

    let kappa = run.model.kappa();
    let n = run.model.horizon();
    let mut summaries = Vec::with_capacity(points.len());
    for (i, point) in points.iter().enumerate() {
        let mut rows: Vec<CmiReport> = Vec::new();
        let mut windows = Vec::new();
        for k in kappa..n {
            let all = window_reports(&point.joint, k, run.threshold)?;
            rows.extend(
                all.into_iter()
                    .filter(|r| run.forced_window.is_none_or(|w| r.ell == w)),
            );
            windows.push((k, smallest_window(&point.joint, k, run.threshold)?));
        }
        write_cmi(&run.out_dir.join(format!("structure_s{i}.csv")), &rows)?;
        let matches_kappa = windows.iter().all(|&(_, w)| w == kappa);
        log::info!(
            "s = {}: smallest windows {:?} (kappa = {kappa})",
            point.report.s,
            windows
        );
        summaries.push(StructureSummary {
            s: point.report.s,
            kappa,
            converged: point.report.converged,
            windows,
            matches_kappa,
        });
    }
    write_json(&run.out_dir.join("structure.json"), &summaries)?;
    let ok = summaries.iter().all(|s| s.matches_kappa && s.converged);
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}

pub fn oracle_compare(run: &Run) -> Result<Outcome> {
    // cap errors surface before any solving or file creation
    irdf_core::oracle::OracleProblem::new(&run.model, &run.spec, 0.0)?;
    prepare(run)?;
    let points = solve_each(run)?;
    let mut rows = Vec::with_capacity(points.len());
    for point in &points {
        let s = point.report.s;
        let (oracle, _) = oracle_descent(&run.model, &run.spec, s, &run.oracle)
            .with_context(|| format!("oracle failed at s = {s}"))?;
        let (jf, jo) = (point.report.objective(), oracle.objective());
        rows.push(ComparisonRow {
            s,
            j_fixed_point: jf,
            j_oracle: jo,
            delta_j: jf - jo,
            rate_fixed_point: point.report.rate,
            rate_oracle: oracle.rate,
            distortion_fixed_point: point.report.distortion,
            distortion_oracle: oracle.distortion,
        });
    }
    write_comparison(&run.out_dir, &rows)?;
    let ok = rows.iter().all(|r| r.delta_j.abs() < ORACLE_AGREEMENT);
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}
