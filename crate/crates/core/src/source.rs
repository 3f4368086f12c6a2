//! Finite-alphabet κ-th order Markov sources.
//!
//! Sequences are indexed in mixed radix with the leftmost (earliest) symbol
//! varying slowest. A model holds the law of the first κ symbols and one
//! time-homogeneous transition table `f(x_{k+1} | x_{k-κ+1}^k)` whose rows
//! are indexed by the encoded κ-block.

use serde::{Deserialize, Serialize};

use crate::budget::{ensure_cells, pow_cells};
use crate::error::{IrdfError, Result};
use crate::logspace::{decode, encode};

const SUM_TOL: f64 = 1e-12;

/// Number of symbols; symbols are `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(IrdfError::invalid("alphabet", "size must be at least 1"));
        }
        Ok(Alphabet(size))
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = IrdfError;
    fn try_from(size: usize) -> Result<Self> {
        Alphabet::new(size)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.0
    }
}

/// On-disk form of a [`SourceModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModelDoc {
    pub x_alphabet: usize,
    pub kappa: usize,
    pub horizon: usize,
    pub initial_law: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

/// A validated κ-th order Markov source over a horizon of `n` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SourceModelDoc", into = "SourceModelDoc")]
pub struct SourceModel {
    x_alphabet: Alphabet,
    kappa: usize,
    horizon: usize,
    initial_law: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

fn check_pmf(field: &str, row: &[f64]) -> Result<()> {
    if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(IrdfError::invalid(
            field,
            format!("entry {bad} is negative or not finite"),
        ));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(IrdfError::invalid(
            field,
            format!("sums to {total}, expected 1"),
        ));
    }
    Ok(())
}

impl SourceModel {
    pub fn new(
        x_alphabet: usize,
        kappa: usize,
        horizon: usize,
        initial_law: Vec<f64>,
        transition: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let x_alphabet = Alphabet::new(x_alphabet)
            .map_err(|_| IrdfError::invalid("x_alphabet", "must be at least 1"))?;
        if kappa == 0 {
            return Err(IrdfError::invalid("kappa", "must be at least 1"));
        }
        if horizon < kappa {
            return Err(IrdfError::invalid(
                "horizon",
                format!("horizon {horizon} is shorter than kappa {kappa}"),
            ));
        }
        let blocks = pow_cells(x_alphabet.size(), kappa);
        let blocks = ensure_cells(|| format!("initial law over X^{kappa}"), blocks)?;
        if initial_law.len() != blocks {
            return Err(IrdfError::invalid(
                "initial_law",
                format!(
                    "has {} entries, expected |X|^kappa = {blocks}",
                    initial_law.len()
                ),
            ));
        }
        check_pmf("initial_law", &initial_law)?;
        if transition.len() != blocks {
            return Err(IrdfError::invalid(
                "transition",
                format!(
                    "has {} rows, expected |X|^kappa = {blocks}",
                    transition.len()
                ),
            ));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != x_alphabet.size() {
                return Err(IrdfError::invalid(
                    "transition",
                    format!(
                        "row {i} has {} entries, expected {}",
                        row.len(),
                        x_alphabet.size()
                    ),
                ));
            }
            check_pmf(&format!("transition row {i}"), row)?;
        }
        Ok(SourceModel {
            x_alphabet,
            kappa,
            horizon,
            initial_law,
            transition,
        })
    }

    /// Memoryless source with per-symbol law `marginal`.
    pub fn iid(marginal: Vec<f64>, horizon: usize) -> Result<Self> {
        let size = marginal.len();
        SourceModel::new(size, 1, horizon, marginal.clone(), vec![marginal; size])
    }

    /// Binary first-order chain started uniformly that flips with probability `flip`.
    pub fn binary_symmetric_markov(flip: f64, horizon: usize) -> Result<Self> {
        SourceModel::new(
            2,
            1,
            horizon,
            vec![0.5, 0.5],
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
        )
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: SourceModelDoc =
            serde_json::from_str(text).map_err(|e| IrdfError::invalid("source", e.to_string()))?;
        SourceModel::try_from(doc)
    }

    #[inline]
    pub fn x_alphabet(&self) -> Alphabet {
        self.x_alphabet
    }

    #[inline]
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_law(&self) -> &[f64] {
        &self.initial_law
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// Same source law over a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        SourceModel::new(
            self.x_alphabet.size(),
            self.kappa,
            horizon,
            self.initial_law.clone(),
            self.transition.clone(),
        )
    }

    /// The same law declared as a source of order κ+1.
    pub fn lift_order(&self) -> Result<Self> {
        let size = self.x_alphabet.size();
        let kappa = self.kappa;
        if self.horizon < kappa + 1 {
            return Err(IrdfError::invalid(
                "horizon",
                "lifting the order needs horizon >= kappa + 1",
            ));
        }
        let blocks = size * self.initial_law.len();
        let mut initial = Vec::with_capacity(blocks);
        let mut transition = Vec::with_capacity(blocks);
        for block in 0..blocks {
            let head = block / size;
            let last = block % size;
            initial.push(self.initial_law[head] * self.transition[head][last]);
            // drop the oldest symbol of the (κ+1)-block
            transition.push(self.transition[block % self.initial_law.len()].clone());
        }
        SourceModel::new(size, kappa + 1, self.horizon, initial, transition)
    }

    /// Length of the x-window `x_{k-κ+1}^k` at 1-based step `k` (truncated at the start).
    #[inline]
    pub fn window_len(&self, k: usize) -> usize {
        k.min(self.kappa)
    }

    /// Number of distinct x-windows at step `k`.
    #[inline]
    pub fn window_count(&self, k: usize) -> usize {
        self.x_alphabet.size().pow(self.window_len(k) as u32)
    }

    /// Index of the window ending at step `k` inside the full sequence `x`.
    #[inline]
    pub fn window_index(&self, x: &[usize], k: usize) -> usize {
        encode(&x[k - self.window_len(k)..k], self.x_alphabet.size())
    }

    /// Index of the window at step `k + 1` obtained by appending `next` to window `window` at step `k`.
    #[inline]
    pub fn shift_window(&self, window: usize, k: usize, next: usize) -> usize {
        let size = self.x_alphabet.size();
        if self.window_len(k) < self.kappa {
            window * size + next
        } else {
            (window % size.pow(self.kappa as u32 - 1)) * size + next
        }
    }

    /// Law of `x_1^len` for `len <= κ`, marginalized from the initial block law.
    fn initial_prefix_law(&self, len: usize) -> Vec<f64> {
        let size = self.x_alphabet.size();
        let stride = size.pow((self.kappa - len) as u32);
        self.initial_law
            .chunks(stride)
            .map(|c| c.iter().sum())
            .collect()
    }

    /// Rows `f(x_{k+1} | window at k)` for `1 <= k < n`, one per window index.
    ///
    /// For `k < κ` the rows come from the initial block law; afterwards they are
    /// the transition table. Rows conditioned on zero-probability windows are uniform.
    pub fn next_symbol_conditional(&self, k: usize) -> Result<Vec<Vec<f64>>> {
        if k == 0 || k >= self.horizon {
            return Err(IrdfError::IndexOutOfRange {
                what: "step",
                index: k,
                lo: 1,
                hi: self.horizon.saturating_sub(1),
            });
        }
        if k >= self.kappa {
            return Ok(self.transition.clone());
        }
        let size = self.x_alphabet.size();
        let head = self.initial_prefix_law(k);
        let next = self.initial_prefix_law(k + 1);
        Ok(head
            .iter()
            .enumerate()
            .map(|(w, &mass)| {
                if mass > 0.0 {
                    (0..size).map(|x| next[w * size + x] / mass).collect()
                } else {
                    vec![1.0 / size as f64; size]
                }
            })
            .collect())
    }

    /// One-step conditional `f(x_{k+1} | x_{k-κ+1}^k)` for `κ <= k < n`.
    pub fn future_given_past(&self, k: usize) -> Result<&[Vec<f64>]> {
        if k < self.kappa || k >= self.horizon {
            return Err(IrdfError::IndexOutOfRange {
                what: "step",
                index: k,
                lo: self.kappa,
                hi: self.horizon.saturating_sub(1),
            });
        }
        Ok(&self.transition)
    }

    /// Probability of one full sequence `x_1^n`.
    pub fn sequence_probability(&self, x: &[usize]) -> f64 {
        let size = self.x_alphabet.size();
        let mut p = self.initial_law[encode(&x[..self.kappa], size)];
        for k in self.kappa..self.horizon {
            if p == 0.0 {
                break;
            }
            p *= self.transition[self.window_index(x, k)][x[k]];
        }
        p
    }

    /// Dense pmf over `X^n`, leftmost symbol slowest.
    pub fn joint_source_pmf(&self) -> Result<Vec<f64>> {
        let size = self.x_alphabet.size();
        let n = self.horizon;
        let cells = ensure_cells(
            || format!("source pmf over |X|^n = {size}^{n}"),
            pow_cells(size, n),
        )?;
        Ok((0..cells)
            .map(|i| self.sequence_probability(&decode(i, size, n)))
            .collect())
    }
}

impl TryFrom<SourceModelDoc> for SourceModel {
    type Error = IrdfError;
    fn try_from(doc: SourceModelDoc) -> Result<Self> {
        SourceModel::new(
            doc.x_alphabet,
            doc.kappa,
            doc.horizon,
            doc.initial_law,
            doc.transition,
        )
    }
}

impl From<SourceModel> for SourceModelDoc {
    fn from(m: SourceModel) -> Self {
        SourceModelDoc {
            x_alphabet: m.x_alphabet.size(),
            kappa: m.kappa,
            horizon: m.horizon,
            initial_law: m.initial_law,
            transition: m.transition,
        }
    }
}
