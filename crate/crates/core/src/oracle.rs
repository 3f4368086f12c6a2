//! Brute-force reference solvers for tiny instances.
//!
//! [`oracle_descent`] minimizes `J = I(X;Y)/n + s E[Σρ]/n` over full-history
//! causal kernels `f(y_k | x_1^k, y_1^{k-1})`, each row parametrized by a
//! softmax over free logits. It shares no code with the recursion or the
//! solver apart from the source pmf. [`exhaustive_grid`] scans window
//! kernels on a grid for binary outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::budget::pow_cells;
use crate::distortion::DistortionSpec;
use crate::error::{IrdfError, Result};
use crate::joint::JointRealization;
use crate::logspace::xlogx;
use crate::solver::SolverReport;
use crate::source::SourceModel;

/// Largest `|X|^n |Y|^n` the oracle accepts.
pub const MAX_ORACLE_CELLS: u128 = 4096;
/// Largest number of softmax logits, `Σ_k |X|^k |Y|^k`.
pub const MAX_ORACLE_PARAMS: u128 = 4096;
/// Largest number of free kernel parameters for the grid scan.
pub const MAX_GRID_PARAMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub restarts: usize,
    pub max_steps: usize,
    /// Initial step of the backtracking line search.
    pub step_size: f64,
    /// Restart `r` is seeded with `seed + r`.
    pub seed: u64,
    /// Stop a run once the gradient's max-norm falls below this.
    pub grad_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            restarts: 8,
            max_steps: 4000,
            step_size: 1.0,
            seed: 0x1f2e_3d4c,
            grad_tol: 1e-9,
        }
    }
}

/// Softmax logits for full-history kernels; step `k` has `|X|^k |Y|^k`
/// entries indexed by `x_1^k * |Y|^k + y_1^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalParametrization {
    pub logits: Vec<Vec<f64>>,
}

impl CausalParametrization {
    pub fn flatten(&self) -> Vec<f64> {
        self.logits.concat()
    }
}

fn softmax_rows(logits: &[f64], width: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(width) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = e.iter().sum();
        out.extend(e.into_iter().map(|v| v / z));
    }
    out
}

/// The minimization problem at one `s`, with the source law materialized.
#[derive(Debug, Clone)]
pub struct OracleProblem {
    xs: usize,
    ys: usize,
    n: usize,
    s: f64,
    px: Vec<f64>,
    /// `Σ_i ρ(x_i, y_i)` per cell.
    total_rho: Vec<f64>,
    step_sizes: Vec<usize>,
}

/// Per-sample rate, distortion and Lagrangian of a joint pmf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub rate: f64,
    pub distortion: f64,
    pub objective: f64,
}

impl OracleProblem {
    pub fn new(model: &SourceModel, spec: &DistortionSpec, s: f64) -> Result<Self> {
        let xs = model.x_alphabet().size();
        let ys = spec.y_size();
        let n = model.horizon();
        if spec.x_size() != xs {
            return Err(IrdfError::ShapeMismatch(
                "distortion rows do not match the source alphabet".into(),
            ));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(IrdfError::invalid(
                "s",
                format!("{s} must be finite and nonnegative"),
            ));
        }
        let cells = pow_cells(xs, n).saturating_mul(pow_cells(ys, n));
        if cells > MAX_ORACLE_CELLS {
            return Err(IrdfError::OracleCap {
                cap: "|X|^n * |Y|^n",
                value: cells,
                limit: MAX_ORACLE_CELLS,
            });
        }
        let params: u128 = (1..=n)
            .map(|k| pow_cells(xs, k).saturating_mul(pow_cells(ys, k)))
            .fold(0u128, |a, b| a.saturating_add(b));
        if params > MAX_ORACLE_PARAMS {
            return Err(IrdfError::OracleCap {
                cap: "softmax parameter count",
                value: params,
                limit: MAX_ORACLE_PARAMS,
            });
        }
        let px = model.joint_source_pmf()?;
        let yc = ys.pow(n as u32);
        let mut total_rho = vec![0.0; px.len() * yc];
        for (cell, slot) in total_rho.iter_mut().enumerate() {
            let (mut xi, mut yi) = (cell / yc, cell % yc);
            for _ in 0..n {
                *slot += spec.rho(xi % xs, yi % ys);
                xi /= xs;
                yi /= ys;
            }
        }
        Ok(OracleProblem {
            xs,
            ys,
            n,
            s,
            px,
            total_rho,
            step_sizes: (1..=n)
                .map(|k| xs.pow(k as u32) * ys.pow(k as u32))
                .collect(),
        })
    }

    pub fn param_len(&self) -> usize {
        self.step_sizes.iter().sum()
    }

    fn split<'a>(&self, theta: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.n);
        let mut rest = theta;
        for &len in &self.step_sizes {
            let (head, tail) = rest.split_at(len);
            out.push(head);
            rest = tail;
        }
        out
    }

    /// Step-`k` (0-based) kernel entry used by cell `(x, y)`.
    #[inline]
    fn entry(&self, k: usize, x: usize, y: usize) -> usize {
        let xk = x / self.xs.pow((self.n - k - 1) as u32);
        let yk = y / self.ys.pow((self.n - k - 1) as u32);
        xk * self.ys.pow(k as u32 + 1) + yk
    }

    /// Kernel probabilities per step, same layout as the logits.
    pub fn kernels(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        self.split(theta)
            .into_iter()
            .map(|l| softmax_rows(l, self.ys))
            .collect()
    }

    /// Joint pmf `P(x, y) = p(x) Π_k f_k(y_k | x_1^k, y_1^{k-1})`.
    pub fn joint(&self, theta: &[f64]) -> Vec<f64> {
        let kernels = self.kernels(theta);
        let yc = self.ys.pow(self.n as u32);
        let mut p = vec![0.0; self.px.len() * yc];
        for (x, &px) in self.px.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for y in 0..yc {
                let mut v = px;
                for (k, kern) in kernels.iter().enumerate() {
                    v *= kern[self.entry(k, x, y)];
                }
                p[x * yc + y] = v;
            }
        }
        p
    }

    /// Rate, distortion and `J` of a joint over this problem's cells.
    pub fn evaluate(&self, joint: &[f64]) -> Evaluation {
        let yc = self.ys.pow(self.n as u32);
        let mut q = vec![0.0; yc];
        for row in joint.chunks(yc) {
            for (acc, v) in q.iter_mut().zip(row) {
                *acc += v;
            }
        }
        // I = -H(Y) + Σ P ln P - Σ P ln p(x)
        let mut info: f64 = -q.iter().map(|&v| xlogx(v)).sum::<f64>();
        let mut dist = 0.0;
        for (cell, &p) in joint.iter().enumerate() {
            if p > 0.0 {
                info += p * (p.ln() - self.px[cell / yc].ln());
                dist += p * self.total_rho[cell];
            }
        }
        let n = self.n as f64;
        let rate = info.max(0.0) / n;
        let distortion = dist / n;
        Evaluation {
            rate,
            distortion,
            objective: info / n + self.s * distortion,
        }
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        self.evaluate(&self.joint(theta)).objective
    }

    /// `J` and its gradient with respect to the logits.
    pub fn gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let kernels = self.kernels(theta);
        let joint = self.joint(theta);
        let eval = self.evaluate(&joint);
        let yc = self.ys.pow(self.n as u32);
        let n = self.n as f64;
        let mut q = vec![0.0; yc];
        for row in joint.chunks(yc) {
            for (acc, v) in q.iter_mut().zip(row) {
                *acc += v;
            }
        }
        // dJ/dP(x,y) = (ln P - ln p(x) - ln q(y) + s Σρ) / n
        // dP/dθ_k[r,a] = P (1{y_k = a} - f_k(a | r)) on cells through row r
        let mut grads: Vec<Vec<f64>> = self.step_sizes.iter().map(|&l| vec![0.0; l]).collect();
        let mut row_mass: Vec<Vec<f64>> = self
            .step_sizes
            .iter()
            .map(|&l| vec![0.0; l / self.ys])
            .collect();
        for (cell, &p) in joint.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let (x, y) = (cell / yc, cell % yc);
            let g = (p.ln() - self.px[x].ln() - q[y].ln() + self.s * self.total_rho[cell]) / n;
            let w = p * g;
            for k in 0..self.n {
                let e = self.entry(k, x, y);
                grads[k][e] += w;
                row_mass[k][e / self.ys] += w;
            }
        }
        for k in 0..self.n {
            for (e, gv) in grads[k].iter_mut().enumerate() {
                *gv -= kernels[k][e] * row_mass[k][e / self.ys];
            }
        }
        (eval.objective, grads.concat())
    }
}

/// Central finite-difference gradient of `f` at `point`.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], h: f64) -> Vec<f64> {
    let mut probe = point.to_vec();
    (0..point.len())
        .map(|i| {
            probe[i] = point[i] + h;
            let up = f(&probe);
            probe[i] = point[i] - h;
            let down = f(&probe);
            probe[i] = point[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Max-norm relative error `‖a - b‖∞ / max(‖a‖∞, ‖b‖∞)`; absolute when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Worst relative error between analytic and central-difference gradients at
/// `points` logit vectors drawn uniformly from `[-2, 2]`.
pub fn gradient_check(problem: &OracleProblem, points: usize, h: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let theta: Vec<f64> = (0..problem.param_len())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let (_, analytic) = problem.gradient(&theta);
        let numeric = finite_difference_gradient(|t| problem.objective(t), &theta, h);
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

struct Run {
    theta: Vec<f64>,
    objective: f64,
    steps: usize,
    grad_norm: f64,
}

fn descend(problem: &OracleProblem, mut theta: Vec<f64>, opts: &OracleOptions) -> Result<Run> {
    let (mut value, mut grad) = problem.gradient(&theta);
    let mut eta = opts.step_size;
    let mut steps = 0;
    let norm = |g: &[f64]| g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    while steps < opts.max_steps && norm(&grad) >= opts.grad_tol {
        if !value.is_finite() {
            return Err(IrdfError::NonFinite {
                value,
                params: theta,
            });
        }
        let sq: f64 = grad.iter().map(|g| g * g).sum();
        let mut accepted = false;
        while eta > 1e-14 {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - eta * g).collect();
            let (tv, tg) = problem.gradient(&trial);
            if tv.is_finite() && tv <= value - 1e-4 * eta * sq {
                theta = trial;
                value = tv;
                grad = tg;
                eta *= 2.0;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        steps += 1;
        if !accepted {
            break;
        }
    }
    if !value.is_finite() {
        return Err(IrdfError::NonFinite {
            value,
            params: theta,
        });
    }
    Ok(Run {
        grad_norm: norm(&grad),
        theta,
        objective: value,
        steps,
    })
}

/// Gradient descent over full-history causal kernels from `opts.restarts`
/// seeded random starts; returns the best run.
pub fn oracle_descent(
    model: &SourceModel,
    spec: &DistortionSpec,
    s: f64,
    opts: &OracleOptions,
) -> Result<(SolverReport, JointRealization)> {
    if opts.restarts == 0 {
        return Err(IrdfError::invalid("restarts", "must be at least 1"));
    }
    if opts.step_size.is_nan() || opts.step_size <= 0.0 {
        return Err(IrdfError::invalid("step_size", "must be positive"));
    }
    let problem = OracleProblem::new(model, spec, s)?;
    let runs: Vec<Run> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            let theta = (0..problem.param_len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            descend(&problem, theta, opts)
        })
        .collect::<Result<_>>()?;
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.objective < a.objective { b } else { a })
        .expect("restarts >= 1");
    let probs = problem.joint(&best.theta);
    let eval = problem.evaluate(&probs);
    let report = SolverReport {
        s,
        rate: eval.rate,
        distortion: eval.distortion,
        iterations: best.steps,
        converged: best.grad_norm < opts.grad_tol,
        final_residual: best.grad_norm,
        zero_support_events: 0,
    };
    let joint = JointRealization::from_probs(problem.xs, problem.ys, problem.n, &probs)?;
    Ok((report, joint))
}

/// Scans binary-output window kernels `f(y_k = 0 | x_{k-κ+1}^k, y_1^{k-1})` on a
/// uniform grid of `grid_resolution` points in `[0, 1]` per parameter.
pub fn exhaustive_grid(
    model: &SourceModel,
    spec: &DistortionSpec,
    s: f64,
    grid_resolution: usize,
) -> Result<SolverReport> {
    if spec.y_size() != 2 {
        return Err(IrdfError::invalid(
            "distortion",
            "grid scan needs a binary output alphabet",
        ));
    }
    if grid_resolution < 11 {
        return Err(IrdfError::invalid("grid_resolution", "must be at least 11"));
    }
    let problem = OracleProblem::new(model, spec, s)?;
    let (xs, ys, n) = (problem.xs, problem.ys, problem.n);
    // parameter offset of each step: one parameter per (window, y_1^{k-1})
    let mut offsets = Vec::with_capacity(n);
    let mut count = 0usize;
    for k in 1..=n {
        offsets.push(count);
        count += model.window_count(k) * ys.pow(k as u32 - 1);
    }
    if count > MAX_GRID_PARAMS {
        return Err(IrdfError::OracleCap {
            cap: "grid parameter count",
            value: count as u128,
            limit: MAX_GRID_PARAMS as u128,
        });
    }
    let yc = ys.pow(n as u32);
    // per cell: (parameter, takes t or 1 - t) for every step
    let factors: Vec<Vec<(usize, bool)>> = (0..problem.px.len() * yc)
        .map(|cell| {
            let x = crate::logspace::decode(cell / yc, xs, n);
            let y = crate::logspace::decode(cell % yc, ys, n);
            (1..=n)
                .map(|k| {
                    let hist = crate::logspace::encode(&y[..k - 1], ys);
                    let param =
                        offsets[k - 1] + model.window_index(&x, k) * ys.pow(k as u32 - 1) + hist;
                    (param, y[k - 1] == 0)
                })
                .collect()
        })
        .collect();

    let values: Vec<f64> = (0..grid_resolution)
        .map(|i| i as f64 / (grid_resolution - 1) as f64)
        .collect();
    let mut digits = vec![0usize; count];
    let mut joint = vec![0.0; factors.len()];
    let mut best: Option<Evaluation> = None;
    loop {
        for (cell, fs) in factors.iter().enumerate() {
            let mut v = problem.px[cell / yc];
            for &(param, zero) in fs {
                let t = values[digits[param]];
                v *= if zero { t } else { 1.0 - t };
            }
            joint[cell] = v;
        }
        let eval = problem.evaluate(&joint);
        if best.is_none_or(|b| eval.objective < b.objective) {
            best = Some(eval);
        }
        // odometer increment
        let mut i = 0;
        while i < count {
            digits[i] += 1;
            if digits[i] < grid_resolution {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == count {
            break;
        }
    }
    let best = best.expect("grid is nonempty");
    Ok(SolverReport {
        s,
        rate: best.rate,
        distortion: best.distortion,
        iterations: grid_resolution.pow(count as u32),
        converged: true,
        final_residual: 0.0,
        zero_support_events: 0,
    })
}
