//! Exact conditional mutual information on joint tensors, used to test the
//! Markov-chain structure of realizations.

use serde::{Deserialize, Serialize};

use crate::error::{IrdfError, Result};
use crate::joint::JointRealization;
use crate::logspace::xlogx;
use crate::source::SourceModel;

/// Default threshold below which a chain is taken to hold.
pub const DEFAULT_THRESHOLD: f64 = 1e-7;

/// One evaluation of `I(Y_k; X_1^{k-ℓ} | Y_1^{k-1}, X_{k-ℓ+1}^k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmiReport {
    pub k: usize,
    pub ell: usize,
    pub cmi_nats: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// Marginal pmf of `joint` on `axes`, encoded in the order given (first axis slowest).
pub fn marginal(joint: &JointRealization, axes: &[usize]) -> Vec<f64> {
    let radices: Vec<usize> = axes.iter().map(|&a| joint.axis_size(a)).collect();
    let size: usize = radices.iter().product();
    let mut out = vec![0.0; size];
    let total_axes = joint.axes();
    let sizes: Vec<usize> = (0..total_axes).map(|a| joint.axis_size(a)).collect();
    let mut digits = vec![0usize; total_axes];
    for (cell, lp) in joint.log_probs().iter().enumerate() {
        if *lp == f64::NEG_INFINITY {
            continue;
        }
        let mut rem = cell;
        for a in (0..total_axes).rev() {
            digits[a] = rem % sizes[a];
            rem /= sizes[a];
        }
        let idx = axes
            .iter()
            .zip(&radices)
            .fold(0, |acc, (&a, &r)| acc * r + digits[a]);
        out[idx] += lp.exp();
    }
    out
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlogx(v)).sum::<f64>()
}

fn check_axes(joint: &JointRealization, groups: [&[usize]; 3]) -> Result<()> {
    let mut seen = vec![false; joint.axes()];
    for &a in groups.iter().flat_map(|g| g.iter()) {
        if a >= joint.axes() || seen[a] {
            return Err(IrdfError::invalid(
                "axes",
                format!("axis {a} is out of range or repeated"),
            ));
        }
        seen[a] = true;
    }
    Ok(())
}

/// `I(A; B | C)` as `H(A,C) + H(B,C) - H(A,B,C) - H(C)`.
pub fn cmi_entropy_form(
    joint: &JointRealization,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    check_axes(joint, [a, b, c])?;
    let ac: Vec<usize> = a.iter().chain(c).copied().collect();
    let bc: Vec<usize> = b.iter().chain(c).copied().collect();
    let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    Ok(
        entropy(&marginal(joint, &ac)) + entropy(&marginal(joint, &bc))
            - entropy(&marginal(joint, &abc))
            - entropy(&marginal(joint, c)),
    )
}

/// `I(A; B | C)` as `Σ p(a,b,c) ln [p(a,b,c) p(c) / (p(a,c) p(b,c))]`.
pub fn cmi_kl_form(joint: &JointRealization, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    check_axes(joint, [a, b, c])?;
    let size = |axes: &[usize]| axes.iter().map(|&x| joint.axis_size(x)).product::<usize>();
    let (na, nb, nc) = (size(a), size(b), size(c));
    let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    let ac: Vec<usize> = a.iter().chain(c).copied().collect();
    let bc: Vec<usize> = b.iter().chain(c).copied().collect();
    let p_abc = marginal(joint, &abc);
    let p_ac = marginal(joint, &ac);
    let p_bc = marginal(joint, &bc);
    let p_c = marginal(joint, c);
    let mut total = 0.0;
    for ia in 0..na {
        for ib in 0..nb {
            for ic in 0..nc {
                let p = p_abc[(ia * nb + ib) * nc + ic];
                if p <= 0.0 {
                    continue;
                }
                total += p * (p * p_c[ic] / (p_ac[ia * nc + ic] * p_bc[ib * nc + ic])).ln();
            }
        }
    }
    Ok(total)
}

/// `I(Y_k; X_1^{k-ℓ} | Y_1^{k-1}, X_{k-ℓ+1}^k)` in nats, clamped at zero.
pub fn conditional_mutual_information(
    joint: &JointRealization,
    k: usize,
    ell: usize,
) -> Result<f64> {
    let n = joint.horizon();
    if k == 0 || k > n {
        return Err(IrdfError::IndexOutOfRange {
            what: "step",
            index: k,
            lo: 1,
            hi: n,
        });
    }
    if ell == 0 || ell > k {
        return Err(IrdfError::IndexOutOfRange {
            what: "window",
            index: ell,
            lo: 1,
            hi: k,
        });
    }
    let target = [joint.y_axis(k)];
    let past: Vec<usize> = (1..=k - ell).map(|i| joint.x_axis(i)).collect();
    let given: Vec<usize> = (1..k)
        .map(|i| joint.y_axis(i))
        .chain((k - ell + 1..=k).map(|i| joint.x_axis(i)))
        .collect();
    Ok(cmi_kl_form(joint, &target, &past, &given)?.max(0.0))
}

/// CMI rows for every window `ℓ = 1..=k` at step `k`.
pub fn window_reports(
    joint: &JointRealization,
    k: usize,
    threshold: f64,
) -> Result<Vec<CmiReport>> {
    (1..=k.max(1))
        .map(|ell| {
            let cmi = conditional_mutual_information(joint, k, ell)?;
            Ok(CmiReport {
                k,
                ell,
                cmi_nats: cmi,
                threshold,
                holds: cmi < threshold,
            })
        })
        .collect()
}

/// Smallest `ℓ >= 1` whose chain holds at step `k`; `k` when none shorter does.
pub fn smallest_window(joint: &JointRealization, k: usize, threshold: f64) -> Result<usize> {
    for ell in 1..k {
        if conditional_mutual_information(joint, k, ell)? < threshold {
            return Ok(ell);
        }
    }
    // ℓ = k conditions on the whole past; validates k
    conditional_mutual_information(joint, k, k.max(1))?;
    Ok(k)
}

/// `max_k I(Y_1^k; X_{k+1}^n | X_1^k)`; zero for causal joints.
pub fn check_causality(joint: &JointRealization, model: &SourceModel) -> Result<f64> {
    let n = joint.horizon();
    if n != model.horizon() || joint.x_size() != model.x_alphabet().size() {
        return Err(IrdfError::ShapeMismatch(
            "joint does not match the source model".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for k in 1..n {
        let ys: Vec<usize> = (1..=k).map(|i| joint.y_axis(i)).collect();
        let future: Vec<usize> = (k + 1..=n).map(|i| joint.x_axis(i)).collect();
        let past: Vec<usize> = (1..=k).map(|i| joint.x_axis(i)).collect();
        worst = worst.max(cmi_kl_form(joint, &ys, &future, &past)?);
    }
    Ok(worst.max(0.0))
}
