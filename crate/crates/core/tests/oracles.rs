//! Library results checked against independent computations written here.

mod common;

use std::collections::HashMap;

use common::*;
use irdf_core::logspace::{decode, encode};
use irdf_core::oracle::{oracle_descent, OracleOptions};
use irdf_core::*;

#[test]
fn induced_joint_matches_chain_rule() {
    let model = SourceModel::binary_symmetric_markov(0.2, 2).unwrap();
    let q = random_output_law(21, 2, 2);
    let kernels = kernels_for(&q, 1.3, &model, &hamming(2)).unwrap();
    let joint = induced_joint(&model, &kernels).unwrap();
    let probs: Vec<f64> = joint.probs().collect();
    let trans = [[0.8, 0.2], [0.2, 0.8]];
    for x1 in 0..2 {
        for x2 in 0..2 {
            for y1 in 0..2 {
                for y2 in 0..2 {
                    let k1 = kernels.row(1, x1, 0)[y1];
                    let k2 = kernels.row(2, x2, y1)[y2];
                    let want = 0.5 * trans[x1][x2] * k1 * k2;
                    let got = probs[(x1 * 2 + x2) * 4 + y1 * 2 + y2];
                    assert!((got - want).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn potentials_match_direct_sums() {
    let s = 0.9;
    let model = random_model(2, 2, 1, 3);
    let rho = [[0.0, 1.0], [1.0, 0.0]];
    let q = random_output_law(8, 2, 3);
    let qp = q.probs();
    let pot = backward_pass(&q, s, &model, &hamming(2)).unwrap();
    let trans = model.transition();
    // F_2(x_2, y1 y2) = Σ_{x3} f(x3|x2) ln Σ_{y3} e^{-sρ} q(y1 y2 y3)
    let f2 = |x2: usize, y1: usize, y2: usize| -> f64 {
        (0..2)
            .map(|x3| {
                let inner: f64 = (0..2)
                    .map(|y3| (-s * rho[x3][y3]).exp() * qp[y1 * 4 + y2 * 2 + y3])
                    .sum();
                trans[x2][x3] * inner.ln()
            })
            .sum()
    };
    for x2 in 0..2 {
        for y in 0..4 {
            assert!((pot.step(2).get(x2, y) - f2(x2, y / 2, y % 2)).abs() < 1e-12);
        }
    }
    for (x1, row) in trans.iter().enumerate() {
        for y1 in 0..2 {
            let want: f64 = (0..2)
                .map(|x2| {
                    let inner: f64 = (0..2)
                        .map(|y2| (-s * rho[x2][y2]).exp() * f2(x2, y1, y2).exp())
                        .sum();
                    row[x2] * inner.ln()
                })
                .sum();
            assert!((pot.step(1).get(x1, y1) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn output_law_update_matches_brute_force() {
    let joint = random_joint(4, 2, 3, 2);
    let q = update_output_law(&joint).unwrap().probs();
    let probs: Vec<f64> = joint.probs().collect();
    for (y, qy) in q.iter().enumerate() {
        let want: f64 = (0..4).map(|x| probs[x * 9 + y]).sum();
        assert!((qy - want).abs() < 1e-14);
    }
}

#[test]
fn rate_matches_probability_domain_sum() {
    let joint = random_joint(17, 2, 2, 2);
    let probs: Vec<f64> = joint.probs().collect();
    let mut px = [0.0; 4];
    let mut qy = [0.0; 4];
    for x in 0..4 {
        for y in 0..4 {
            px[x] += probs[x * 4 + y];
            qy[y] += probs[x * 4 + y];
        }
    }
    let mut info = 0.0;
    for x in 0..4 {
        for y in 0..4 {
            let p = probs[x * 4 + y];
            info += p * (p / (px[x] * qy[y])).ln();
        }
    }
    assert!((rate_of(&joint) - info / 2.0).abs() < 1e-12);
}

/// CMI by grouping cells into hash maps keyed on the conditioning tuples.
fn grouped_cmi(joint: &JointRealization, k: usize, ell: usize) -> f64 {
    let n = joint.horizon();
    let (xs, ys) = (joint.x_size(), joint.y_size());
    let mut abc: HashMap<(usize, Vec<usize>, Vec<usize>), f64> = HashMap::new();
    let mut ac: HashMap<(usize, Vec<usize>), f64> = HashMap::new();
    let mut bc: HashMap<(Vec<usize>, Vec<usize>), f64> = HashMap::new();
    let mut c: HashMap<Vec<usize>, f64> = HashMap::new();
    for (cell, p) in joint.probs().enumerate() {
        let x = decode(cell / joint.y_cells(), xs, n);
        let y = decode(cell % joint.y_cells(), ys, n);
        let a = y[k - 1];
        let b = x[..k - ell].to_vec();
        let mut cond = y[..k - 1].to_vec();
        cond.extend_from_slice(&x[k - ell..k]);
        *abc.entry((a, b.clone(), cond.clone())).or_default() += p;
        *ac.entry((a, cond.clone())).or_default() += p;
        *bc.entry((b, cond.clone())).or_default() += p;
        *c.entry(cond).or_default() += p;
    }
    abc.iter()
        .filter(|(_, p)| **p > 0.0)
        .map(|((a, b, cond), p)| {
            p * (p * c[cond] / (ac[&(*a, cond.clone())] * bc[&(b.clone(), cond.clone())])).ln()
        })
        .sum()
}

#[test]
fn cmi_matches_grouped_sums() {
    for seed in 0..6 {
        let joint = random_joint(seed, 2, 2, 3);
        for k in 1..=3 {
            for ell in 1..=k {
                let got = conditional_mutual_information(&joint, k, ell).unwrap();
                let want = grouped_cmi(&joint, k, ell).max(0.0);
                assert!(
                    (got - want).abs() < 1e-12,
                    "k={k} ell={ell}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn anticipatory_copy_has_ln2_causality_violation() {
    // n = 2, uniform i.i.d. X, Y_1 = X_2 and Y_2 = X_2
    let mut probs = vec![0.0; 16];
    for x in 0..4 {
        let x2 = x % 2;
        probs[x * 4 + encode(&[x2, x2], 2)] = 0.25;
    }
    let joint = JointRealization::from_probs(2, 2, 2, &probs).unwrap();
    let model = SourceModel::iid(vec![0.5, 0.5], 2).unwrap();
    assert!((check_causality(&joint, &model).unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn memoryless_source_matches_single_letter_ba() {
    let model = SourceModel::iid(vec![0.5, 0.5], 4).unwrap();
    let rho = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    for s in [0.2, 0.7, 1.5, 3.0] {
        let fp = solve_fixed_point(
            &model,
            &hamming(2),
            s,
            &OutputLaw::uniform(2, 4).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        let (r, d) = blahut_arimoto(&[0.5, 0.5], &rho, s);
        assert!((fp.report.rate - r).abs() < 1e-6, "s={s}");
        assert!((fp.report.distortion - d).abs() < 1e-6);
        assert!((fp.report.rate - (2f64.ln() - h2(d))).abs() < 1e-6);
    }
}

#[test]
fn single_step_tilt_at_ln3() {
    // J(t) = ln2 - h(t) + s(1 - t) for the symmetric kernel P(y = x) = t
    let s = 3f64.ln();
    let best = (0..=100_000)
        .map(|i| i as f64 / 100_000.0)
        .min_by(|a, b| {
            let j = |t: f64| 2f64.ln() - h2(t) + s * (1.0 - t);
            j(*a).total_cmp(&j(*b))
        })
        .unwrap();
    assert!((best - 0.75).abs() < 1e-4);

    let model = SourceModel::iid(vec![0.5, 0.5], 1).unwrap();
    let (report, joint) =
        oracle_descent(&model, &hamming(2), s, &OracleOptions::default()).unwrap();
    let p: Vec<f64> = joint.probs().collect();
    assert!((p[0] / 0.5 - best).abs() < 1e-3);
    assert!((p[3] / 0.5 - best).abs() < 1e-3);
    assert!((report.distortion - 0.25).abs() < 1e-3);

    let fp = solve_fixed_point(
        &model,
        &hamming(2),
        s,
        &OutputLaw::uniform(2, 1).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    assert!((fp.kernels.row(1, 0, 0)[0] - 0.75).abs() < 1e-12);
}

#[test]
fn grid_scan_agrees_with_descent_on_one_step() {
    let model = SourceModel::iid(vec![0.5, 0.5], 1).unwrap();
    for s in [0.5, 1.0, 2.0] {
        let grid = exhaustive_grid(&model, &hamming(2), s, 1001).unwrap();
        let (desc, _) = oracle_descent(&model, &hamming(2), s, &OracleOptions::default()).unwrap();
        assert!((grid.objective() - desc.objective()).abs() < 1e-3, "s={s}");
        assert!(desc.objective() <= grid.objective() + 1e-9);
    }
    let sharp = exhaustive_grid(&model, &hamming(2), 50.0, 101).unwrap();
    assert!(sharp.distortion < 1e-3);
}

#[test]
fn grid_scan_on_two_steps_bounds_fixed_point() {
    // n = 2, κ = 1, binary: 2 + 4 = 6 window parameters
    let model = SourceModel::binary_symmetric_markov(0.2, 2).unwrap();
    let grid = exhaustive_grid(&model, &hamming(2), 1.0, 11).unwrap();
    let fp = solve_fixed_point(
        &model,
        &hamming(2),
        1.0,
        &OutputLaw::uniform(2, 2).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    assert!(fp.report.objective() <= grid.objective() + 1e-9);
    assert!(grid.objective() - fp.report.objective() < 0.05);
}

#[test]
fn markov_fixed_point_matches_descent_at_four_steps() {
    let model = SourceModel::binary_symmetric_markov(0.2, 4).unwrap();
    let fp = solve_fixed_point(
        &model,
        &hamming(2),
        1.0,
        &OutputLaw::uniform(2, 4).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    let (desc, _) = oracle_descent(&model, &hamming(2), 1.0, &OracleOptions::default()).unwrap();
    assert!(
        (fp.report.rate - desc.rate).abs() < 1e-3,
        "{:?} {:?}",
        fp.report,
        desc
    );
    assert!((fp.report.distortion - desc.distortion).abs() < 1e-3);
}
