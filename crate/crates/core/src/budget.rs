//! Cell budget for dense tensors over sequence spaces.

use crate::error::{IrdfError, Result};

/// Default number of `f64` cells any single tensor may hold (2^24).
pub const DEFAULT_MAX_CELLS: u64 = 1 << 24;

/// Environment variable overriding [`DEFAULT_MAX_CELLS`].
pub const MAX_CELLS_ENV: &str = "IRDF_MAX_CELLS";

/// Current cell budget, read from `IRDF_MAX_CELLS` when set to a positive integer.
pub fn max_cells() -> u64 {
    match std::env::var(MAX_CELLS_ENV) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(n) if n > 0 => n,
            _ => DEFAULT_MAX_CELLS,
        },
        Err(_) => DEFAULT_MAX_CELLS,
    }
}

/// `base^exp` without overflow, saturating at `u128::MAX`.
pub fn pow_cells(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Fails with a capacity error when `cells` exceeds the budget.
pub fn ensure_cells(what: impl FnOnce() -> String, cells: u128) -> Result<usize> {
    let limit = max_cells();
    if cells > limit as u128 {
        return Err(IrdfError::Capacity {
            what: what(),
            cells,
            limit,
        });
    }
    Ok(cells as usize)
}
