//! Log-domain arithmetic and mixed-radix sequence indexing.

/// Floor applied to log-probabilities while iterating (about ln 1e-300).
pub const LOG_FLOOR: f64 = -690.0;

/// `ln Σ exp(v)` over the iterator, stable for large magnitudes.
/// Returns `-inf` for an empty iterator or when every term is `-inf`.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64> + Clone,
{
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `x ln x` with the `0 ln 0 = 0` convention.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Normalizes log-weights in place so that they exp-sum to one.
/// Returns the log-normalizer; leaves the slice untouched when it is `-inf`.
pub fn log_normalize(values: &mut [f64]) -> f64 {
    let z = log_sum_exp(values.iter().copied());
    if z.is_finite() {
        for v in values.iter_mut() {
            *v -= z;
        }
    }
    z
}

/// Encodes `digits` (leftmost varies slowest) in base `radix`.
#[inline]
pub fn encode(digits: &[usize], radix: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * radix + d)
}

/// Decodes `index` into `len` base-`radix` digits, leftmost slowest.
pub fn decode(mut index: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for slot in digits.iter_mut().rev() {
        *slot = index % radix;
        index /= radix;
    }
    digits
}
