//! Outer fixed-point iteration over the output law, rate and distortion
//! evaluation, and sweeps over the multiplier `s`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::{expected_distortion, DistortionSpec};
use crate::error::{IrdfError, Result};
use crate::joint::JointRealization;
use crate::logspace::{decode, log_sum_exp};
use crate::recursion::{kernels_for, CausalKernelSet, OutputLaw};
use crate::source::SourceModel;

/// Allowed per-iteration increase of the Lagrangian before it counts as a descent violation.
pub const DESCENT_SLACK: f64 = 1e-8;

/// Outcome of one solve at a fixed `s`. Rates are in nats per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub s: f64,
    #[serde(rename = "rate_nats")]
    pub rate: f64,
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(rename = "residual")]
    pub final_residual: f64,
    pub zero_support_events: usize,
}

impl SolverReport {
    /// Lagrangian `rate + s · distortion`.
    pub fn objective(&self) -> f64 {
        self.rate + self.s * self.distortion
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the total-variation change of the output law drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 2000,
        }
    }
}

/// Everything produced by [`solve_fixed_point`].
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub report: SolverReport,
    /// Kernels from the last backward/forward pass.
    pub kernels: CausalKernelSet,
    /// Output marginal induced by `kernels`.
    pub output_law: OutputLaw,
    pub joint: JointRealization,
    /// Lagrangian after each iteration.
    pub objective_trace: Vec<f64>,
    /// Iterations at which the Lagrangian rose by more than [`DESCENT_SLACK`].
    pub descent_violations: Vec<usize>,
}

/// Chains the source law with the kernels:
/// `p(x_1^n, y_1^n) = p(x_1^n) Π_k f(y_k | x_{k-κ+1}^k, y_1^{k-1})`.
pub fn induced_joint(model: &SourceModel, kernels: &CausalKernelSet) -> Result<JointRealization> {
    let n = model.horizon();
    let xs = model.x_alphabet().size();
    let ys = kernels.y_size();
    if kernels.x_size() != xs || kernels.horizon() != n || kernels.kappa() != model.kappa() {
        return Err(IrdfError::ShapeMismatch(
            "kernel set does not match the source model".into(),
        ));
    }
    let cells = JointRealization::cells_for(xs, ys, n)?;
    let x_cells = cells / ys.pow(n as u32);
    let xseqs: Vec<Vec<usize>> = (0..x_cells).map(|i| decode(i, xs, n)).collect();

    let mut cur: Vec<f64> = xseqs
        .iter()
        .map(|x| model.sequence_probability(x).ln())
        .collect();
    for k in 1..=n {
        let prev = ys.pow(k as u32 - 1);
        let table = kernels.step(k);
        let mut next = vec![f64::NEG_INFINITY; x_cells * prev * ys];
        for (xi, x) in xseqs.iter().enumerate() {
            let slice = table.window_slice(model.window_index(x, k));
            let src = &cur[xi * prev..(xi + 1) * prev];
            let dst = &mut next[xi * prev * ys..(xi + 1) * prev * ys];
            for (yp, &base) in src.iter().enumerate() {
                if base == f64::NEG_INFINITY {
                    continue;
                }
                for y in 0..ys {
                    dst[yp * ys + y] = base + slice[yp * ys + y];
                }
            }
        }
        cur = next;
    }
    JointRealization::from_log(xs, ys, n, cur)
}

/// Output marginal `q(y_1^n) = Σ_x p(x_1^n, y_1^n)`, renormalized.
pub fn update_output_law(joint: &JointRealization) -> Result<OutputLaw> {
    let yc = joint.y_cells();
    let lp = joint.log_probs();
    let mut log_q: Vec<f64> = (0..yc)
        .map(|y| log_sum_exp((0..joint.x_cells()).map(|x| lp[x * yc + y])))
        .collect();
    crate::logspace::log_normalize(&mut log_q);
    OutputLaw::from_log(joint.y_size(), joint.horizon(), log_q)
}

/// `I(X_1^n; Y_1^n) / n` in nats, clamped at zero.
pub fn rate_of(joint: &JointRealization) -> f64 {
    let yc = joint.y_cells();
    let lp = joint.log_probs();
    let log_px: Vec<f64> = lp
        .chunks(yc)
        .map(|r| log_sum_exp(r.iter().copied()))
        .collect();
    let log_qy: Vec<f64> = (0..yc)
        .map(|y| log_sum_exp((0..joint.x_cells()).map(|x| lp[x * yc + y])))
        .collect();
    let mut info = 0.0;
    for (x, row) in lp.chunks(yc).enumerate() {
        for (y, &l) in row.iter().enumerate() {
            if l == f64::NEG_INFINITY {
                continue;
            }
            info += l.exp() * (l - log_px[x] - log_qy[y]);
        }
    }
    info.max(0.0) / joint.horizon() as f64
}

fn check_solve_inputs(
    model: &SourceModel,
    spec: &DistortionSpec,
    s: f64,
    init_q: &OutputLaw,
    opts: &SolverOptions,
) -> Result<()> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(IrdfError::invalid("tol", "must be positive"));
    }
    if opts.max_iter == 0 {
        return Err(IrdfError::invalid("max_iter", "must be at least 1"));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(IrdfError::invalid(
            "s",
            format!("{s} must be finite and nonnegative"),
        ));
    }
    if init_q.horizon() != model.horizon() || init_q.y_size() != spec.y_size() {
        return Err(IrdfError::invalid(
            "init_q",
            "shape does not match the source horizon and distortion columns",
        ));
    }
    Ok(())
}

/// Alternates backward/forward passes with output-law updates until the
/// total-variation change of `q` drops below `opts.tol`.
pub fn solve_fixed_point(
    model: &SourceModel,
    spec: &DistortionSpec,
    s: f64,
    init_q: &OutputLaw,
    opts: &SolverOptions,
) -> Result<FixedPoint> {
    check_solve_inputs(model, spec, s, init_q, opts)?;
    let mut q = init_q.clone();
    let mut trace = Vec::new();
    let mut violations = Vec::new();
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut last = None;

    for iter in 1..=opts.max_iter {
        let kernels = kernels_for(&q.floored(), s, model, spec)?;
        let joint = induced_joint(model, &kernels)?;
        let q_next = update_output_law(&joint)?;
        residual = q_next.total_variation(&q);

        let objective = rate_of(&joint) + s * expected_distortion(&joint, spec)?;
        if let Some(&prev) = trace.last() {
            if objective > prev + DESCENT_SLACK {
                log::warn!(
                    "Lagrangian rose from {prev} to {objective} at iteration {iter} (s = {s})"
                );
                violations.push(iter);
            }
        }
        trace.push(objective);
        q = q_next;
        last = Some((kernels, joint));
        if residual < opts.tol {
            converged = true;
            break;
        }
    }

    let (kernels, joint) = last.expect("max_iter >= 1");
    let report = SolverReport {
        s,
        rate: rate_of(&joint),
        distortion: expected_distortion(&joint, spec)?,
        iterations: trace.len(),
        converged,
        final_residual: residual,
        zero_support_events: kernels.zero_support_rows(),
    };
    if !converged {
        log::info!(
            "s = {s}: not converged after {} iterations (TV change {residual:e})",
            report.iterations
        );
    }
    Ok(FixedPoint {
        report,
        kernels,
        output_law: q,
        joint,
        objective_trace: trace,
        descent_violations: violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    /// Start each point from the previous point's output law. When off,
    /// points start from the uniform law and run in parallel.
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solver: SolverOptions::default(),
            warm_start: true,
        }
    }
}

/// Solves at every `s` in the grid, in ascending order of `s`.
///
/// With warm starting, the first point starts from the uniform output law and
/// each later point from the output law of its predecessor.
pub fn sweep(
    model: &SourceModel,
    spec: &DistortionSpec,
    s_grid: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<FixedPoint>> {
    if s_grid.is_empty() {
        return Err(IrdfError::invalid("s_grid", "must not be empty"));
    }
    if let Some(bad) = s_grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(IrdfError::invalid(
            "s_grid",
            format!("{bad} is not a finite nonnegative value"),
        ));
    }
    let mut grid = s_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let uniform = OutputLaw::uniform(spec.y_size(), model.horizon())?;
    let at = |s: f64, e: IrdfError| IrdfError::AtPoint {
        s,
        source: Box::new(e),
    };

    if opts.warm_start {
        let mut out: Vec<FixedPoint> = Vec::with_capacity(grid.len());
        for &s in &grid {
            let init = out.last().map_or(&uniform, |fp| &fp.output_law);
            let fp = solve_fixed_point(model, spec, s, init, &opts.solver).map_err(|e| at(s, e))?;
            out.push(fp);
        }
        Ok(out)
    } else {
        grid.par_iter()
            .map(|&s| {
                solve_fixed_point(model, spec, s, &uniform, &opts.solver).map_err(|e| at(s, e))
            })
            .collect()
    }
}
