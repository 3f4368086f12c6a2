//! Backward recursion for the tilting potentials and forward construction of
//! the causal kernels, for a fixed output law and multiplier `s`.
//!
//! Every table lives in log domain. A step-`k` table is indexed by
//! `window * |Y|^k + y_prefix`, where `window` encodes `x_{k-w+1}^k` with
//! `w = min(k, κ)` and `y_prefix` encodes `y_1^k`. The potential at `k = n`
//! carries no x-window (`w = 0`).

use crate::budget::{ensure_cells, pow_cells};
use crate::distortion::DistortionSpec;
use crate::error::{IrdfError, Result};
use crate::logspace::{log_normalize, log_sum_exp, LOG_FLOOR};
use crate::source::{Alphabet, SourceModel};

const NORM_TOL: f64 = 1e-10;

/// Law of `Y_1^n`, stored as log-probabilities indexed leftmost-slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputLaw {
    y_alphabet: Alphabet,
    horizon: usize,
    log_q: Vec<f64>,
}

impl OutputLaw {
    pub fn uniform(y_size: usize, horizon: usize) -> Result<Self> {
        let cells = Self::cells(y_size, horizon)?;
        let v = -(cells as f64).ln();
        Self::from_log(y_size, horizon, vec![v; cells])
    }

    fn cells(y_size: usize, horizon: usize) -> Result<usize> {
        if horizon == 0 {
            return Err(IrdfError::invalid("horizon", "must be at least 1"));
        }
        ensure_cells(
            || format!("output law over |Y|^n = {y_size}^{horizon}"),
            pow_cells(y_size, horizon),
        )
    }

    /// Wraps log-probabilities; they must exp-sum to one within 1e-10.
    pub fn from_log(y_size: usize, horizon: usize, log_q: Vec<f64>) -> Result<Self> {
        let y_alphabet = Alphabet::new(y_size)?;
        let cells = Self::cells(y_size, horizon)?;
        if log_q.len() != cells {
            return Err(IrdfError::ShapeMismatch(format!(
                "output law has {} cells, expected {cells}",
                log_q.len()
            )));
        }
        if log_q.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(IrdfError::invalid("output law", "contains NaN or +inf"));
        }
        let total = log_sum_exp(log_q.iter().copied()).exp();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(IrdfError::invalid(
                "output law",
                format!("sums to {total}, expected 1"),
            ));
        }
        Ok(OutputLaw {
            y_alphabet,
            horizon,
            log_q,
        })
    }

    pub fn from_probs(y_size: usize, horizon: usize, probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| *p < 0.0) {
            return Err(IrdfError::invalid("output law", "negative probability"));
        }
        Self::from_log(y_size, horizon, probs.iter().map(|p| p.ln()).collect())
    }

    #[inline]
    pub fn y_size(&self) -> usize {
        self.y_alphabet.size()
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_q
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_q.iter().map(|v| v.exp()).collect()
    }

    /// Copy with log-probabilities below [`LOG_FLOOR`] raised to it.
    pub fn floored(&self) -> OutputLaw {
        OutputLaw {
            log_q: self.log_q.iter().map(|v| v.max(LOG_FLOOR)).collect(),
            ..self.clone()
        }
    }

    /// `ln q(y_1^k)` for every prefix of length `k`.
    pub fn prefix_log_marginal(&self, k: usize) -> Vec<f64> {
        let stride = self.y_size().pow((self.horizon - k) as u32);
        self.log_q
            .chunks(stride)
            .map(|c| log_sum_exp(c.iter().copied()))
            .collect()
    }

    /// Total-variation distance `½ Σ |q - q'|`.
    pub fn total_variation(&self, other: &OutputLaw) -> f64 {
        0.5 * self
            .log_q
            .iter()
            .zip(&other.log_q)
            .map(|(a, b)| (a.exp() - b.exp()).abs())
            .sum::<f64>()
    }
}

/// A log-domain table for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTable {
    window_len: usize,
    windows: usize,
    y_prefixes: usize,
    values: Vec<f64>,
}

impl StepTable {
    fn new(window_len: usize, windows: usize, y_prefixes: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), windows * y_prefixes);
        StepTable {
            window_len,
            windows,
            y_prefixes,
            values,
        }
    }

    /// Length of the x-window indexing this table.
    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn y_prefixes(&self) -> usize {
        self.y_prefixes
    }

    #[inline]
    pub fn get(&self, window: usize, y_prefix: usize) -> f64 {
        self.values[window * self.y_prefixes + y_prefix]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All entries for one window, indexed by `y_1^k`.
    pub fn window_slice(&self, window: usize) -> &[f64] {
        &self.values[window * self.y_prefixes..(window + 1) * self.y_prefixes]
    }
}

/// Log-potentials `ln F̆_k`, `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSet {
    s: f64,
    x_size: usize,
    y_size: usize,
    kappa: usize,
    tables: Vec<StepTable>,
}

impl PotentialSet {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn horizon(&self) -> usize {
        self.tables.len()
    }

    /// Table of `ln F̆_k` for 1-based `k`.
    pub fn step(&self, k: usize) -> &StepTable {
        &self.tables[k - 1]
    }
}

/// Causal kernels `f(y_k | x_{k-κ+1}^k, y_1^{k-1})` in log domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalKernelSet {
    s: f64,
    x_size: usize,
    y_size: usize,
    kappa: usize,
    tables: Vec<StepTable>,
    zero_support_rows: usize,
}

impl CausalKernelSet {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn horizon(&self) -> usize {
        self.tables.len()
    }

    /// Rows whose normalizer vanished and were replaced by uniform rows.
    pub fn zero_support_rows(&self) -> usize {
        self.zero_support_rows
    }

    /// Log-kernel table of step `k` (1-based); entries indexed by `window * |Y|^k + y_1^k`.
    pub fn step(&self, k: usize) -> &StepTable {
        &self.tables[k - 1]
    }

    /// `ln f(y_k | window, y_1^{k-1})`; `y_prefix` encodes `y_1^k`.
    #[inline]
    pub fn log_prob(&self, k: usize, window: usize, y_prefix: usize) -> f64 {
        self.tables[k - 1].get(window, y_prefix)
    }

    /// Probability row `f(· | window, y_1^{k-1})`; `y_history` encodes `y_1^{k-1}`.
    pub fn row(&self, k: usize, window: usize, y_history: usize) -> Vec<f64> {
        let start = y_history * self.y_size;
        (start..start + self.y_size)
            .map(|y| self.log_prob(k, window, y).exp())
            .collect()
    }

    /// Builds a kernel set from explicit log tables (one per step), normalizing each row.
    pub fn from_log_tables(
        s: f64,
        model: &SourceModel,
        y_size: usize,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = model.horizon();
        if tables.len() != n {
            return Err(IrdfError::ShapeMismatch(format!(
                "{} kernel steps for horizon {n}",
                tables.len()
            )));
        }
        let mut zero_support_rows = 0;
        let mut out = Vec::with_capacity(n);
        for (i, mut values) in tables.into_iter().enumerate() {
            let k = i + 1;
            let windows = model.window_count(k);
            let prefixes = y_size.pow(k as u32);
            if values.len() != windows * prefixes {
                return Err(IrdfError::ShapeMismatch(format!(
                    "kernel step {k} has {} entries, expected {}",
                    values.len(),
                    windows * prefixes
                )));
            }
            for row in values.chunks_mut(y_size) {
                if !log_normalize(row).is_finite() {
                    row.fill(-(y_size as f64).ln());
                    zero_support_rows += 1;
                }
            }
            out.push(StepTable::new(
                model.window_len(k),
                windows,
                prefixes,
                values,
            ));
        }
        Ok(CausalKernelSet {
            s,
            x_size: model.x_alphabet().size(),
            y_size,
            kappa: model.kappa(),
            tables: out,
            zero_support_rows,
        })
    }
}

fn check_inputs(q: &OutputLaw, s: f64, model: &SourceModel, spec: &DistortionSpec) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(IrdfError::invalid(
            "s",
            format!("{s} must be finite and nonnegative"),
        ));
    }
    if spec.x_size() != model.x_alphabet().size() {
        return Err(IrdfError::ShapeMismatch(format!(
            "distortion has {} rows, source alphabet has {} symbols",
            spec.x_size(),
            model.x_alphabet().size()
        )));
    }
    if spec.y_size() != q.y_size() {
        return Err(IrdfError::ShapeMismatch(format!(
            "distortion has {} columns, output alphabet has {} symbols",
            spec.y_size(),
            q.y_size()
        )));
    }
    if q.horizon() != model.horizon() {
        return Err(IrdfError::ShapeMismatch(format!(
            "output law horizon {} differs from source horizon {}",
            q.horizon(),
            model.horizon()
        )));
    }
    Ok(())
}

/// Backward recursion for `ln F̆_k`, starting from `F̆_n = q`.
///
/// For `k < n`,
/// `ln F̆_k(w_k, y_1^k) = Σ_{x'} f(x' | w_k) ln Σ_{y'} exp(-s ρ(x', y')) F̆_{k+1}(w_{k+1}, y_1^k y')`
/// where `w_{k+1}` is `w_k` shifted by `x'`. Terms with `f(x' | w_k) = 0` are skipped.
pub fn backward_pass(
    q: &OutputLaw,
    s: f64,
    model: &SourceModel,
    spec: &DistortionSpec,
) -> Result<PotentialSet> {
    check_inputs(q, s, model, spec)?;
    if q.log_probs().iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(IrdfError::invalid("output law", "has empty support"));
    }
    let n = model.horizon();
    let xs = model.x_alphabet().size();
    let ys = q.y_size();
    let largest = pow_cells(xs, model.kappa().min(n)).saturating_mul(pow_cells(ys, n));
    ensure_cells(
        || format!("potential tables over X-window x {ys}^{n}"),
        largest,
    )?;

    // tilt[x][y] = -s ρ(x, y); 0 when s = 0 so that ρ never multiplies s = 0 into NaN
    let tilt: Vec<Vec<f64>> = (0..xs)
        .map(|x| {
            (0..ys)
                .map(|y| if s == 0.0 { 0.0 } else { -s * spec.rho(x, y) })
                .collect()
        })
        .collect();

    let mut tables = vec![StepTable::new(
        0,
        1,
        q.log_probs().len(),
        q.log_probs().to_vec(),
    )];
    for k in (1..n).rev() {
        let next = tables.last().expect("nonempty");
        let prefixes = ys.pow(k as u32);
        let cond = model.next_symbol_conditional(k)?;
        let windows = model.window_count(k);

        // ln K_{k+1} keyed by the next window (or by x_{k+1} alone when k + 1 = n)
        let keys = if k + 1 == n {
            xs
        } else {
            model.window_count(k + 1)
        };
        let mut log_k = vec![0.0; keys * prefixes];
        for key in 0..keys {
            let x_next = key % xs;
            let slice = next.window_slice(if k + 1 == n { 0 } else { key });
            for yp in 0..prefixes {
                let block = &slice[yp * ys..(yp + 1) * ys];
                log_k[key * prefixes + yp] =
                    log_sum_exp(block.iter().zip(&tilt[x_next]).map(|(f, t)| f + t));
            }
        }

        // centred on the first supported term: when every ln K agrees the
        // average reproduces it exactly instead of up to rounding
        let mut values = vec![0.0; windows * prefixes];
        for (w, row) in cond.iter().enumerate() {
            let out = &mut values[w * prefixes..(w + 1) * prefixes];
            let key_of = |x_next| {
                if k + 1 == n {
                    x_next
                } else {
                    model.shift_window(w, k, x_next)
                }
            };
            let Some(first) = row.iter().position(|&c| c > 0.0) else {
                continue;
            };
            let base = &log_k[key_of(first) * prefixes..(key_of(first) + 1) * prefixes];
            for (x_next, &c) in row.iter().enumerate().skip(first + 1) {
                if c == 0.0 {
                    continue;
                }
                let lk = &log_k[key_of(x_next) * prefixes..(key_of(x_next) + 1) * prefixes];
                for ((acc, &v), &b) in out.iter_mut().zip(lk).zip(base) {
                    if v == f64::NEG_INFINITY {
                        *acc = f64::NEG_INFINITY;
                    } else if v != b && b != f64::NEG_INFINITY {
                        *acc += c * (v - b);
                    }
                }
            }
            for (acc, &b) in out.iter_mut().zip(base) {
                *acc += b;
            }
        }
        tables.push(StepTable::new(
            model.window_len(k),
            windows,
            prefixes,
            values,
        ));
    }
    tables.reverse();
    Ok(PotentialSet {
        s,
        x_size: xs,
        y_size: ys,
        kappa: model.kappa(),
        tables,
    })
}

/// Kernels `f(y_k | w_k, y_1^{k-1}) ∝ exp(-s ρ(x_k, y_k)) F̆_k(w_k, y_1^k)`, using the
/// potentials' own `s`. Rows with no support become uniform and are counted.
pub fn forward_kernels(pot: &PotentialSet, spec: &DistortionSpec) -> Result<CausalKernelSet> {
    if spec.x_size() != pot.x_size || spec.y_size() != pot.y_size {
        return Err(IrdfError::ShapeMismatch(
            "distortion table does not match potential alphabets".into(),
        ));
    }
    let n = pot.horizon();
    let (xs, ys, s) = (pot.x_size, pot.y_size, pot.s);
    let uniform = -(ys as f64).ln();
    let mut zero_support_rows = 0;
    let mut tables = Vec::with_capacity(n);
    for k in 1..=n {
        let wlen = k.min(pot.kappa);
        let windows = xs.pow(wlen as u32);
        let prefixes = ys.pow(k as u32);
        let potential = pot.step(k);
        let mut values = vec![0.0; windows * prefixes];
        for w in 0..windows {
            let x_k = w % xs;
            let pw = if potential.window_len() == 0 { 0 } else { w };
            let slice = potential.window_slice(pw);
            let out = &mut values[w * prefixes..(w + 1) * prefixes];
            for (yh, row) in out.chunks_mut(ys).enumerate() {
                for (y, v) in row.iter_mut().enumerate() {
                    let t = if s == 0.0 { 0.0 } else { -s * spec.rho(x_k, y) };
                    *v = t + slice[yh * ys + y];
                }
                if !log_normalize(row).is_finite() {
                    row.fill(uniform);
                    zero_support_rows += 1;
                }
            }
        }
        tables.push(StepTable::new(wlen, windows, prefixes, values));
    }
    if zero_support_rows > 0 {
        log::debug!("{zero_support_rows} kernel rows had zero support at s = {s}");
    }
    Ok(CausalKernelSet {
        s,
        x_size: xs,
        y_size: ys,
        kappa: pot.kappa,
        tables,
        zero_support_rows,
    })
}

/// Backward then forward pass in one call.
pub fn kernels_for(
    q: &OutputLaw,
    s: f64,
    model: &SourceModel,
    spec: &DistortionSpec,
) -> Result<CausalKernelSet> {
    forward_kernels(&backward_pass(q, s, model, spec)?, spec)
}

/// Largest absolute difference between `kernels` and the kernels recomputed from `q` at `s`.
pub fn stationarity_residual(
    kernels: &CausalKernelSet,
    q: &OutputLaw,
    s: f64,
    model: &SourceModel,
    spec: &DistortionSpec,
) -> Result<f64> {
    let fresh = kernels_for(q, s, model, spec)?;
    if fresh.horizon() != kernels.horizon()
        || fresh.x_size != kernels.x_size
        || fresh.y_size != kernels.y_size
        || fresh.kappa != kernels.kappa
    {
        return Err(IrdfError::ShapeMismatch(
            "kernel set does not match the model".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in fresh.tables.iter().zip(&kernels.tables) {
        for (u, v) in a.values().iter().zip(b.values()) {
            worst = worst.max((u.exp() - v.exp()).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsm(n: usize) -> SourceModel {
        SourceModel::binary_symmetric_markov(0.2, n).unwrap()
    }

    #[test]
    fn horizon_one_potential_is_q() {
        let m = SourceModel::iid(vec![0.3, 0.7], 1).unwrap();
        let q = OutputLaw::from_probs(2, 1, &[0.4, 0.6]).unwrap();
        let pot = backward_pass(&q, 1.3, &m, &DistortionSpec::hamming(2).unwrap()).unwrap();
        assert_eq!(pot.horizon(), 1);
        assert_eq!(pot.step(1).values(), q.log_probs());
        assert_eq!(pot.step(1).window_len(), 0);
    }

    #[test]
    fn zero_s_potentials_are_prefix_marginals() {
        let m = bsm(4);
        let probs: Vec<f64> = (1..=16).map(|i| i as f64 / 136.0).collect();
        let q = OutputLaw::from_probs(2, 4, &probs).unwrap();
        let pot = backward_pass(&q, 0.0, &m, &DistortionSpec::hamming(2).unwrap()).unwrap();
        for k in 1..=4 {
            let marg = q.prefix_log_marginal(k);
            let table = pot.step(k);
            for w in 0..table.windows() {
                for (a, b) in table.window_slice(w).iter().zip(&marg) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn one_step_hand_value() {
        // n = 2, κ = 1, uniform q, Hamming, s = 1
        let m = SourceModel::new(
            2,
            1,
            2,
            vec![0.5, 0.5],
            vec![vec![0.7, 0.3], vec![0.4, 0.6]],
        )
        .unwrap();
        let q = OutputLaw::uniform(2, 2).unwrap();
        let pot = backward_pass(&q, 1.0, &m, &DistortionSpec::hamming(2).unwrap()).unwrap();
        // inner sum is the same for both x_2: 0.25 (1 + e^{-1})
        let inner = (0.25 * (1.0 + (-1.0f64).exp())).ln();
        let expected = 0.7 * inner + 0.3 * inner;
        for y1 in 0..2 {
            assert!((pot.step(1).get(0, y1) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn one_shot_tilt_at_ln3() {
        let m = SourceModel::iid(vec![0.5, 0.5], 1).unwrap();
        let q = OutputLaw::uniform(2, 1).unwrap();
        let spec = DistortionSpec::hamming(2).unwrap();
        let k = kernels_for(&q, 3f64.ln(), &m, &spec).unwrap();
        for x in 0..2 {
            let row = k.row(1, x, 0);
            assert!((row[x] - 0.75).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_s_kernel_ignores_x() {
        let m = bsm(3);
        let probs: Vec<f64> = (1..=8).map(|i| i as f64 / 36.0).collect();
        let q = OutputLaw::from_probs(2, 3, &probs).unwrap();
        let k = kernels_for(&q, 0.0, &m, &DistortionSpec::hamming(2).unwrap()).unwrap();
        for step in 1..=3 {
            let marg = q.prefix_log_marginal(step);
            let hist = q.prefix_log_marginal(step - 1);
            for w in 0..2 {
                for (yp, lf) in k.step(step).window_slice(w).iter().enumerate() {
                    let want = marg[yp] - hist[yp / 2];
                    assert!((lf - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_support_rows_become_uniform() {
        let m = SourceModel::iid(vec![0.5, 0.5], 2).unwrap();
        // y_1 = 1 never happens
        let q = OutputLaw::from_probs(2, 2, &[0.5, 0.5, 0.0, 0.0]).unwrap();
        let k = kernels_for(&q, 1.0, &m, &DistortionSpec::hamming(2).unwrap()).unwrap();
        assert_eq!(k.zero_support_rows(), 2);
        assert_eq!(k.row(2, 0, 1), vec![0.5, 0.5]);
    }

    #[test]
    fn empty_support_is_rejected() {
        let m = SourceModel::iid(vec![0.5, 0.5], 1).unwrap();
        let q = OutputLaw {
            y_alphabet: Alphabet::new(2).unwrap(),
            horizon: 1,
            log_q: vec![f64::NEG_INFINITY; 2],
        };
        assert!(backward_pass(&q, 1.0, &m, &DistortionSpec::hamming(2).unwrap()).is_err());
    }

    #[test]
    fn residual_detects_perturbation_and_wrong_s() {
        let m = SourceModel::iid(vec![0.5, 0.5], 1).unwrap();
        let spec = DistortionSpec::hamming(2).unwrap();
        let q = OutputLaw::uniform(2, 1).unwrap();
        let s = 3f64.ln();
        let k = kernels_for(&q, s, &m, &spec).unwrap();
        assert!(stationarity_residual(&k, &q, s, &m, &spec).unwrap() < 1e-9);

        let mut tables: Vec<Vec<f64>> = (1..=1).map(|t| k.step(t).values().to_vec()).collect();
        // shift 1e-3 of mass within the first row
        tables[0][0] = (tables[0][0].exp() + 1e-3).ln();
        tables[0][1] = (tables[0][1].exp() - 1e-3).ln();
        let perturbed = CausalKernelSet::from_log_tables(s, &m, 2, tables).unwrap();
        assert!(stationarity_residual(&perturbed, &q, s, &m, &spec).unwrap() >= 5e-4);

        let k0 = kernels_for(&q, 0.0, &m, &spec).unwrap();
        assert!(stationarity_residual(&k0, &q, 1.0, &m, &spec).unwrap() > 0.01);
    }

    #[test]
    fn tilt_is_monotone_in_s() {
        let spec = DistortionSpec::hamming(3).unwrap();
        let m3 = SourceModel::iid(vec![1.0 / 3.0; 3], 1).unwrap();
        let q = OutputLaw::uniform(3, 1).unwrap();
        let mut last = 0.0;
        for i in 0..50 {
            let s = 0.2 * i as f64;
            let row = kernels_for(&q, s, &m3, &spec).unwrap().row(1, 1, 0);
            assert!(row[1] > last);
            last = row[1];
        }
    }

    #[test]
    fn mismatched_shapes_error() {
        let m = SourceModel::iid(vec![0.5, 0.5], 2).unwrap();
        let q = OutputLaw::uniform(2, 3).unwrap();
        assert!(matches!(
            backward_pass(&q, 1.0, &m, &DistortionSpec::hamming(2).unwrap()),
            Err(IrdfError::ShapeMismatch(_))
        ));
        let q = OutputLaw::uniform(2, 2).unwrap();
        assert!(backward_pass(&q, -1.0, &m, &DistortionSpec::hamming(2).unwrap()).is_err());
    }
}
