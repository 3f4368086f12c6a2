#![allow(dead_code)]

use irdf_core::{DistortionSpec, JointRealization, OutputLaw, SourceModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Random full-support κ-th order source.
pub fn random_model(seed: u64, size: usize, kappa: usize, horizon: usize) -> SourceModel {
    let mut r = rng(seed);
    let blocks = size.pow(kappa as u32);
    let init = random_pmf(&mut r, blocks);
    let rows = (0..blocks).map(|_| random_pmf(&mut r, size)).collect();
    SourceModel::new(size, kappa, horizon, init, rows).unwrap()
}

pub fn random_output_law(seed: u64, size: usize, horizon: usize) -> OutputLaw {
    let mut r = rng(seed);
    OutputLaw::from_probs(size, horizon, &random_pmf(&mut r, size.pow(horizon as u32))).unwrap()
}

pub fn random_joint(seed: u64, xs: usize, ys: usize, horizon: usize) -> JointRealization {
    let mut r = rng(seed);
    let cells = (xs * ys).pow(horizon as u32);
    JointRealization::from_probs(xs, ys, horizon, &random_pmf(&mut r, cells)).unwrap()
}

pub fn hamming(size: usize) -> DistortionSpec {
    DistortionSpec::hamming(size).unwrap()
}

/// Binary second-order source: x_{k+1} = x_{k-1} xor x_k with probability `p`.
pub fn xor_source(p: f64, horizon: usize) -> SourceModel {
    let rows = (0..4)
        .map(|w: usize| {
            let parity = (w / 2) ^ (w % 2);
            if parity == 0 {
                vec![p, 1.0 - p]
            } else {
                vec![1.0 - p, p]
            }
        })
        .collect();
    SourceModel::new(2, 2, horizon, vec![0.25; 4], rows).unwrap()
}

/// Binary entropy in nats.
pub fn h2(p: f64) -> f64 {
    let f = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
    f(p) + f(1.0 - p)
}

/// One-shot Blahut–Arimoto for a single-letter source at slope `s`; returns (rate, distortion) in nats.
pub fn blahut_arimoto(px: &[f64], rho: &[Vec<f64>], s: f64) -> (f64, f64) {
    let ny = rho[0].len();
    let mut q = vec![1.0 / ny as f64; ny];
    let mut cond = vec![vec![0.0; ny]; px.len()];
    for _ in 0..20_000 {
        for (x, row) in cond.iter_mut().enumerate() {
            let mut z = 0.0;
            for y in 0..ny {
                row[y] = q[y] * (-s * rho[x][y]).exp();
                z += row[y];
            }
            row.iter_mut().for_each(|v| *v /= z);
        }
        let next: Vec<f64> = (0..ny)
            .map(|y| px.iter().zip(&cond).map(|(p, r)| p * r[y]).sum())
            .collect();
        let delta: f64 = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        q = next;
        if delta < 1e-15 {
            break;
        }
    }
    let mut rate = 0.0;
    let mut dist = 0.0;
    for (x, row) in cond.iter().enumerate() {
        for y in 0..ny {
            let j = px[x] * row[y];
            if j > 0.0 {
                rate += j * (row[y] / q[y]).ln();
                dist += j * rho[x][y];
            }
        }
    }
    (rate, dist)
}
