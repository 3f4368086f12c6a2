//! Joint laws over `(X_1^n, Y_1^n)`.

use crate::budget::{ensure_cells, pow_cells};
use crate::error::{IrdfError, Result};
use crate::logspace::log_sum_exp;

const NORM_TOL: f64 = 1e-9;

/// Joint pmf over `X^n × Y^n`, stored as log-probabilities.
///
/// Cell `x * |Y|^n + y` holds `ln p(x_1^n, y_1^n)` with both sequences
/// encoded leftmost-slowest. Seen as a tensor, the axes are
/// `X_1, …, X_n, Y_1, …, Y_n` in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRealization {
    x_size: usize,
    y_size: usize,
    horizon: usize,
    log_p: Vec<f64>,
}

impl JointRealization {
    pub(crate) fn cells_for(x_size: usize, y_size: usize, horizon: usize) -> Result<usize> {
        let cells = pow_cells(x_size, horizon).saturating_mul(pow_cells(y_size, horizon));
        ensure_cells(
            || format!("joint over |X|^n |Y|^n = {x_size}^{horizon} * {y_size}^{horizon}"),
            cells,
        )
    }

    /// Wraps log-probabilities, checking shape and normalization.
    pub fn from_log(x_size: usize, y_size: usize, horizon: usize, log_p: Vec<f64>) -> Result<Self> {
        if x_size == 0 || y_size == 0 || horizon == 0 {
            return Err(IrdfError::invalid(
                "joint",
                "alphabets and horizon must be positive",
            ));
        }
        let cells = Self::cells_for(x_size, y_size, horizon)?;
        if log_p.len() != cells {
            return Err(IrdfError::ShapeMismatch(format!(
                "joint has {} cells, expected {cells}",
                log_p.len()
            )));
        }
        if log_p.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(IrdfError::invalid("joint", "contains NaN or +inf"));
        }
        let total = log_sum_exp(log_p.iter().copied()).exp();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(IrdfError::invalid(
                "joint",
                format!("sums to {total}, expected 1"),
            ));
        }
        Ok(JointRealization {
            x_size,
            y_size,
            horizon,
            log_p,
        })
    }

    pub fn from_probs(x_size: usize, y_size: usize, horizon: usize, probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| *p < 0.0) {
            return Err(IrdfError::invalid("joint", "negative probability"));
        }
        Self::from_log(
            x_size,
            y_size,
            horizon,
            probs.iter().map(|p| p.ln()).collect(),
        )
    }

    #[inline]
    pub fn x_size(&self) -> usize {
        self.x_size
    }

    #[inline]
    pub fn y_size(&self) -> usize {
        self.y_size
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `|Y|^n`.
    #[inline]
    pub fn y_cells(&self) -> usize {
        self.y_size.pow(self.horizon as u32)
    }

    /// `|X|^n`.
    #[inline]
    pub fn x_cells(&self) -> usize {
        self.x_size.pow(self.horizon as u32)
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_p
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_p.iter().map(|v| v.exp())
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.log_p
            .chunks(self.y_cells())
            .map(|row| row.iter().map(|v| v.exp()).sum())
            .collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.y_cells()];
        for row in self.log_p.chunks(self.y_cells()) {
            for (acc, v) in q.iter_mut().zip(row) {
                *acc += v.exp();
            }
        }
        q
    }

    /// Number of tensor axes, `2n`.
    #[inline]
    pub fn axes(&self) -> usize {
        2 * self.horizon
    }

    /// Radix of tensor axis `axis` (`X_1..X_n` first, then `Y_1..Y_n`).
    #[inline]
    pub fn axis_size(&self, axis: usize) -> usize {
        if axis < self.horizon {
            self.x_size
        } else {
            self.y_size
        }
    }

    /// Axis of `X_k` for 1-based `k`.
    #[inline]
    pub fn x_axis(&self, k: usize) -> usize {
        k - 1
    }

    /// Axis of `Y_k` for 1-based `k`.
    #[inline]
    pub fn y_axis(&self, k: usize) -> usize {
        self.horizon + k - 1
    }

    /// Convex combination `(1 - w) self + w other`.
    pub fn mix(&self, other: &JointRealization, w: f64) -> Result<JointRealization> {
        if self.x_size != other.x_size
            || self.y_size != other.y_size
            || self.horizon != other.horizon
        {
            return Err(IrdfError::ShapeMismatch(
                "mixing joints of different shapes".into(),
            ));
        }
        let probs: Vec<f64> = self
            .probs()
            .zip(other.probs())
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect();
        JointRealization::from_probs(self.x_size, self.y_size, self.horizon, &probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized() {
        assert!(JointRealization::from_probs(2, 2, 1, &[0.3; 4]).is_err());
        assert!(JointRealization::from_probs(2, 2, 1, &[0.25; 3]).is_err());
    }

    #[test]
    fn marginals() {
        let j = JointRealization::from_probs(2, 2, 1, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let px = j.x_marginal();
        let qy = j.y_marginal();
        assert!((px[0] - 0.3).abs() < 1e-15 && (px[1] - 0.7).abs() < 1e-15);
        assert!((qy[0] - 0.4).abs() < 1e-15 && (qy[1] - 0.6).abs() < 1e-15);
    }
}
