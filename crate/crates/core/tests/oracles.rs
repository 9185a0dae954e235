//! Library results checked against independent brute-force or reference
//! implementations.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncv::estimate::{block_counts, estimate_b_sbm, estimate_dcbm, Fit};
use ncv::graph::{hamming_up_to_permutation, AdjacencyMatrix, Membership, NodeSet};
use ncv::spectral::{top_k_right_singular, top_k_right_singular_with, SvdMethod};

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn brute_force_hamming(a: &[usize], b: &[usize], k: usize) -> usize {
    permutations(k)
        .iter()
        .map(|perm| a.iter().zip(b).filter(|(x, y)| perm[**x] != **y).count())
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hamming_matches_permutation_search(
        ka in 1usize..=5,
        kb in 1usize..=5,
        raw in proptest::collection::vec((0usize..5, 0usize..5), 1..40),
    ) {
        let la: Vec<usize> = raw.iter().map(|(x, _)| x % ka).collect();
        let lb: Vec<usize> = raw.iter().map(|(_, y)| y % kb).collect();
        let a = Membership::new(la.clone(), ka).unwrap();
        let b = Membership::new(lb.clone(), kb).unwrap();
        let expected = brute_force_hamming(&la, &lb, ka.max(kb));
        prop_assert_eq!(hamming_up_to_permutation(&a, &b).unwrap(), expected);
    }
}

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> AdjacencyMatrix {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, edges).unwrap()
}

struct Instance {
    a: AdjacencyMatrix,
    g: Membership,
    fitting: NodeSet,
    held: NodeSet,
    psi: Vec<f64>,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(4..=30);
    let k = rng.random_range(1..=4.min(n));
    let a = random_graph(n, rng.random_range(0.1..0.9), rng);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let g = Membership::new(labels, k).unwrap();
    let held_ids: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.35).collect();
    let held = NodeSet::new(held_ids, n).unwrap();
    let fitting = held.complement(n);
    // dyadic weights keep every floating sum exact
    let psi: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(1u8..=8)) / 8.0).collect();
    Instance { a, g, fitting, held, psi }
}

/// Numerator and denominator for the ordered block pair (ka, kb), counted by
/// a double loop over all node pairs.
fn brute_counts(inst: &Instance, ka: usize, kb: usize, weighted: bool) -> (f64, f64) {
    let n = inst.a.n();
    let in1 = |i: usize| inst.fitting.contains(i);
    let w = |i: usize| if weighted { inst.psi[i] } else { 1.0 };
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j || inst.g.label(i) != ka || inst.g.label(j) != kb {
                continue;
            }
            let counted = if ka != kb {
                in1(i)
            } else {
                (in1(i) && in1(j) && i < j) || (in1(i) && !in1(j))
            };
            if counted {
                num += f64::from(inst.a.get(i, j));
                den += w(i) * w(j);
            }
        }
    }
    (num, den)
}

#[test]
fn block_counts_match_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let inst = random_instance(&mut rng);
        let k = inst.g.k();
        let plain = block_counts(&inst.a, &inst.fitting, &inst.held, &inst.g, None).unwrap();
        let weighted = block_counts(&inst.a, &inst.fitting, &inst.held, &inst.g, Some(&inst.psi)).unwrap();
        for ka in 0..k {
            for kb in 0..k {
                let (num, den) = brute_counts(&inst, ka, kb, false);
                assert_eq!(plain.edges(ka, kb), num);
                assert_eq!(plain.pairs(ka, kb), den);
                let (wnum, wden) = brute_counts(&inst, ka, kb, true);
                assert_eq!(weighted.edges(ka, kb), wnum);
                assert_eq!(weighted.pairs(ka, kb), wden);
            }
        }
    }
}

#[test]
fn estimates_match_double_loop_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let inst = random_instance(&mut rng);
        let k = inst.g.k();
        let sbm = estimate_b_sbm(&inst.a, &inst.fitting, &inst.held, &inst.g, k).unwrap();
        let dcbm = estimate_dcbm(&inst.a, &inst.fitting, &inst.held, &inst.g, &inst.psi, k).unwrap();
        for ka in 0..k {
            for kb in 0..k {
                let pooled = |weighted: bool| {
                    let (n1, d1) = brute_counts(&inst, ka, kb, weighted);
                    if ka == kb {
                        (n1, d1)
                    } else {
                        let (n2, d2) = brute_counts(&inst, kb, ka, weighted);
                        (n1 + n2, d1 + d2)
                    }
                };
                let (num, den) = pooled(false);
                if den > 0.0 {
                    assert_eq!(sbm.b_hat.get(ka, kb), num / den);
                }
                let (wnum, wden) = pooled(true);
                if wden > 0.0 {
                    assert_eq!(dcbm.b_prime_hat[ka][kb], wnum / wden);
                }
            }
        }
    }
}

#[test]
fn dcbm_with_community_constant_psi_reduces_to_sbm() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let k = inst.g.k();
        let per_block: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let psi: Vec<f64> = (0..inst.a.n()).map(|i| per_block[inst.g.label(i)]).collect();
        let sbm = Fit::from(estimate_b_sbm(&inst.a, &inst.fitting, &inst.held, &inst.g, k).unwrap());
        let dcbm = Fit::from(estimate_dcbm(&inst.a, &inst.fitting, &inst.held, &inst.g, &psi, k).unwrap());
        let sizes = inst.g.sizes();
        for i in 0..inst.a.n() {
            for j in 0..inst.a.n() {
                // blocks without fitting pairs use different fallbacks
                let (a, b) = (inst.g.label(i), inst.g.label(j));
                let has_pairs = brute_counts(&inst, a, b, false).1 + brute_counts(&inst, b, a, false).1 > 0.0;
                if i == j || !has_pairs || sizes[a] == 0 {
                    continue;
                }
                let (p, q) = (sbm.predict_p(i, j).unwrap(), dcbm.predict_p(i, j).unwrap());
                assert!((p - q).abs() <= 1e-10, "({i}, {j}): {p} vs {q}");
            }
        }
    }
}

#[test]
fn predictions_are_symmetric_and_clamped() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let k = inst.g.k();
        let psi: Vec<f64> = inst.psi.iter().map(|p| p * 3.0).collect();
        let fit = Fit::from(estimate_dcbm(&inst.a, &inst.fitting, &inst.held, &inst.g, &psi, k).unwrap());
        for i in 0..inst.a.n() {
            for j in 0..i {
                let p = fit.predict_p(i, j).unwrap();
                assert_eq!(p, fit.predict_p(j, i).unwrap());
                assert!((1e-6..=1.0 - 1e-6).contains(&p));
            }
        }
    }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn singular_values_match_reference_svd() {
    for (seed, (r, c)) in [(50, 80), (80, 50), (50, 50)].into_iter().enumerate() {
        let m = random_matrix(r, c, seed as u64);
        let k = 10;
        let ours = top_k_right_singular(&m, k).unwrap();
        let mut reference: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for i in 0..k {
            assert!((ours.sigma[i] - reference[i]).abs() <= 1e-6, "{r}x{c} sigma_{i}");
        }
        let gram = ours.vectors.transpose() * &ours.vectors;
        assert!((gram - DMatrix::<f64>::identity(k, k)).amax() <= 1e-8);
        // each vector satisfies M^T M v = sigma^2 v
        let mtm = m.transpose() * &m;
        for i in 0..k {
            let v = ours.vectors.column(i);
            let residual = (&mtm * v - v * ours.sigma[i].powi(2)).norm();
            assert!(residual <= 1e-6 * ours.sigma[0].powi(2), "residual {residual}");
        }
    }
}

#[test]
fn iterative_solver_agrees_with_reference() {
    // low rank plus small noise gives a clear spectral gap
    let u = random_matrix(300, 3, 11);
    let v = random_matrix(3, 200, 12);
    let m = &u * &v * 5.0 + random_matrix(300, 200, 13) * 0.01;
    let it = top_k_right_singular_with(&m, 3, SvdMethod::Iterative).unwrap();
    let reference = m.clone().svd(false, true);
    let mut sv: Vec<(f64, usize)> = reference.singular_values.iter().copied().zip(0..).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let vt = reference.v_t.unwrap();
    for (c, &(s, row)) in sv.iter().take(3).enumerate() {
        assert!((it.sigma[c] - s).abs() <= 1e-6 * s);
        let dot: f64 = it.vectors.column(c).dot(&vt.row(row).transpose());
        assert!((dot.abs() - 1.0).abs() <= 1e-6);
    }
}
