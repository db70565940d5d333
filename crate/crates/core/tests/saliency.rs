mod support;

use nalgebra::DMatrix;
use proptest::prelude::*;
use salient_quant::io::{CalibrationBatch, WeightMatrix};
use salient_quant::saliency::{
    compute_hessian, damped_inverse_diag, score_awq, score_random, score_spqr, score_svd,
    score_svd_with, top_k_select, truncated_svd, HessianInfo, Method, ScoreMatrix, SvdOptions,
    SvdStrategy,
};
use support::{
    brute_top_k, flat, gauss_jordan_inverse, gaussian, gaussian_batch, hessian_by_outer_products,
    jacobi_svd, Dense,
};

#[test]
fn random_selection_is_uniform_over_seeds() {
    let w = WeightMatrix::new("w", 4, 4, vec![1.0; 16]).unwrap();
    let mut hits = [0usize; 16];
    for seed in 0..1000 {
        for &(r, c) in top_k_select(&score_random(&w, seed), 4).indices() {
            hits[r * 4 + c] += 1;
        }
    }
    for (i, &h) in hits.iter().enumerate() {
        let f = h as f64 / 1000.0;
        assert!((f - 0.25).abs() <= 0.05, "index {i}: frequency {f}");
    }
}

#[test]
fn random_scores_depend_on_seed_only() {
    let a = gaussian("a", 5, 7, 1);
    let b = gaussian("a", 5, 7, 2);
    assert_eq!(score_random(&a, 9).scores(), score_random(&b, 9).scores());
    assert_ne!(score_random(&a, 9).scores(), score_random(&a, 10).scores());
    let one = WeightMatrix::new("x", 1, 1, vec![0.0]).unwrap();
    assert_eq!(top_k_select(&score_random(&one, 3), 1).indices(), &[(0, 0)]);
}

#[test]
fn awq_matches_independent_column_norms() {
    let w = gaussian("w", 8, 8, 21);
    let x = gaussian_batch("w", 16, 8, 22);
    let s = score_awq(&w, &x).unwrap();
    for j in 0..8 {
        let norm = (0..16).map(|n| (x.get(n, j) as f64).powi(2)).sum::<f64>().sqrt();
        for i in 0..8 {
            let want = (w.get(i, j) as f64).abs() * norm;
            assert!((s.get(i, j) as f64 - want).abs() <= 1e-6 * want.max(1.0), "({i},{j})");
        }
    }
}

#[test]
fn awq_worked_example() {
    let w = WeightMatrix::new("w", 2, 2, vec![2.0, -1.0, 0.5, 4.0]).unwrap();
    // column norms 1 and 10
    let x = CalibrationBatch::new("w", 2, 2, vec![1.0, 6.0, 0.0, 8.0]).unwrap();
    assert_eq!(score_awq(&w, &x).unwrap().scores(), &[2.0, 10.0, 0.5, 40.0]);
    let zero = CalibrationBatch::new("w", 3, 2, vec![0.0; 6]).unwrap();
    assert!(score_awq(&w, &zero).unwrap().scores().iter().all(|&s| s == 0.0));
}

#[test]
fn hessian_matches_outer_product_accumulation() {
    let x = gaussian_batch("h", 64, 16, 31);
    let h = compute_hessian(&x);
    let oracle = hessian_by_outer_products(&x);
    for i in 0..16 {
        for j in 0..16 {
            assert!((h[(i, j)] - oracle.at(i, j)).abs() <= 1e-5, "({i},{j})");
        }
    }
}

#[test]
fn hessian_small_cases() {
    let eye = CalibrationBatch::new("h", 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(compute_hessian(&eye), DMatrix::identity(2, 2));
    let row = CalibrationBatch::new("h", 1, 2, vec![3.0, -2.0]).unwrap();
    assert_eq!(compute_hessian(&row), DMatrix::from_row_slice(2, 2, &[18.0, -12.0, -12.0, 8.0]));
}

#[test]
fn damped_inverse_closed_forms() {
    let d = damped_inverse_diag(&DMatrix::identity(3, 3), 0.01).unwrap();
    assert!(d.iter().all(|&v| (v - 1.0 / 1.01).abs() < 1e-15));
    let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
    let d = damped_inverse_diag(&h, 0.01).unwrap();
    assert!((d[0] - 1.0 / 4.025).abs() < 1e-15);
    assert!((d[1] - 1.0 / 1.025).abs() < 1e-15);
}

#[test]
fn indefinite_hessian_is_numerical_error() {
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -5.0]);
    assert!(matches!(damped_inverse_diag(&h, 0.01), Err(salient_quant::Error::Numerical(_))));
}

#[test]
fn spqr_ordering_matches_dense_inverse_formula() {
    let w = gaussian("w", 8, 8, 41);
    let x = gaussian_batch("w", 32, 8, 42);
    let info = HessianInfo::from_calibration(&x, 0.01).unwrap();
    let s = score_spqr(&w, &info).unwrap();

    let mut h = hessian_by_outer_products(&x);
    let mean = (0..8).map(|i| h.at(i, i)).sum::<f64>() / 8.0;
    for i in 0..8 {
        h.a[i * 8 + i] += 0.01 * mean;
    }
    let inv = gauss_jordan_inverse(&h);
    let formula: Vec<f64> = (0..64)
        .map(|i| (w.get(i / 8, i % 8) as f64).powi(2) / inv.at(i % 8, i % 8))
        .collect();

    for a in 0..64 {
        assert!((s.scores()[a] as f64 - formula[a]).abs() <= 1e-5 * formula[a].max(1.0));
        for b in 0..64 {
            if formula[a] > formula[b] * (1.0 + 1e-5) {
                assert!(s.scores()[a] >= s.scores()[b], "{a} vs {b}");
            }
            if a % 8 == b % 8 && w.get(a / 8, a % 8).abs() > w.get(b / 8, b % 8).abs() {
                assert!(s.scores()[a] >= s.scores()[b], "same column {a} vs {b}");
            }
        }
    }
    for k in [1, 8, 32] {
        assert_eq!(flat(top_k_select(&s, k).indices(), 8), brute_top_k(&formula, k));
    }
}

#[test]
fn spqr_zero_weight_scores_zero() {
    let mut data = gaussian("w", 4, 4, 1).data().to_vec();
    data[5] = 0.0;
    let w = WeightMatrix::new("w", 4, 4, data).unwrap();
    let info = HessianInfo::from_calibration(&gaussian_batch("w", 8, 4, 2), 0.01).unwrap();
    assert_eq!(score_spqr(&w, &info).unwrap().scores()[5], 0.0);
}

#[test]
fn spqr_shape_mismatch_is_shape_error() {
    let w = gaussian("w", 4, 5, 1);
    let info = HessianInfo::from_calibration(&gaussian_batch("w", 8, 4, 2), 0.01).unwrap();
    assert!(matches!(score_spqr(&w, &info), Err(salient_quant::Error::Shape { .. })));
}

#[test]
fn singular_values_match_jacobi_oracle() {
    let w = gaussian("g", 300, 200, 51);
    let ps = truncated_svd(&w, 8);
    let (sing, _) = jacobi_svd(&Dense::from_weights(&w), 8);
    for i in 0..8 {
        let rel = (ps.singular()[i] - sing[i]).abs() / sing[i];
        assert!(rel <= 1e-4, "σ{i}: {} vs {}", ps.singular()[i], sing[i]);
    }
}

#[test]
fn svd_scores_match_jacobi_reconstruction() {
    let w = gaussian("g", 64, 64, 52);
    let s = score_svd(&w, 8);
    let (_, recon) = jacobi_svd(&Dense::from_weights(&w), 8);
    for (a, b) in s.scores().iter().zip(&recon.a) {
        assert!((*a as f64 - b.abs()).abs() <= 1e-5);
    }
}

#[test]
fn rank_one_reconstruction_is_exact_for_any_rank() {
    let u = [1.5f32, -2.0, 0.25];
    let v = [4.0f32, 0.5, -1.0, 3.0];
    let w = WeightMatrix::from_fn("r", 3, 4, |i, j| u[i] * v[j]).unwrap();
    for r in [1, 2, 3, 8] {
        let recon = truncated_svd(&w, r).reconstruction().clone();
        for i in 0..3 {
            for j in 0..4 {
                assert!((recon[(i, j)] - w.get(i, j) as f64).abs() < 1e-6);
            }
        }
    }
}

/// Rank-8 signal plus small noise, large enough to take the randomized path.
fn decaying(rows: usize, cols: usize, seed: u64) -> WeightMatrix {
    let u = gaussian("u", rows, 8, seed);
    let v = gaussian("v", 8, cols, seed + 1);
    let noise = gaussian("n", rows, cols, seed + 2);
    WeightMatrix::from_fn("big", rows, cols, |i, j| {
        let mut s = 0.0;
        for k in 0..8 {
            s += u.get(i, k) * v.get(k, j) * (8 - k) as f32;
        }
        s + 1e-3 * noise.get(i, j)
    })
    .unwrap()
}

#[test]
fn randomized_svd_agrees_with_exact_path() {
    let w = decaying(520, 600, 61);
    let auto = SvdOptions::default();
    assert!(auto.is_randomized(&w));
    let rand = score_svd_with(&w, 8, auto);
    let exact = score_svd_with(&w, 8, SvdOptions { strategy: SvdStrategy::Exact, ..auto });
    assert_eq!(rand.seed(), Some(0));
    assert_eq!(exact.seed(), None);
    let top = exact.scores().iter().fold(0.0f32, |m, &v| m.max(v));
    for (a, b) in rand.scores().iter().zip(exact.scores()) {
        assert!((a - b).abs() <= 1e-4 * top, "{a} vs {b}");
    }
    let ka = top_k_select(&rand, 256);
    let kb = top_k_select(&exact, 256);
    let inter = ka.indices().iter().filter(|&&(r, c)| kb.contains(r, c)).count();
    assert!(inter >= 250, "only {inter} of 256 shared");

    // the sketch is seeded, so repeated runs agree bit for bit
    assert_eq!(score_svd_with(&w, 8, auto).scores(), rand.scores());
}

#[test]
fn top_k_tie_break_and_edges() {
    let s = ScoreMatrix::new("s", 2, 2, vec![3.0, 1.0, 2.0, 2.0], Method::None);
    assert_eq!(top_k_select(&s, 2).indices(), &[(0, 0), (1, 0)]);
    assert!(top_k_select(&s, 0).is_empty());
    assert_eq!(top_k_select(&s, 99).len(), 4);
}

#[test]
fn mask_round_trips_through_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let m = top_k_select(&score_random(&gaussian("m", 6, 6, 0), 4), 5);
    m.save(tmp.path()).unwrap();
    let raw = salient_quant::io::npy::read_file(&tmp.path().join("mask.npy")).unwrap();
    assert_eq!(raw.shape, vec![5, 2]);
    assert_eq!(raw.dtype, salient_quant::io::npy::Dtype::I64);
    assert_eq!(salient_quant::saliency::SelectionMask::load(tmp.path()).unwrap(), m);
}

/// Nonzero dyadic values: exact in f32, so magnitudes survive any
/// full-rank round trip through an SVD.
fn dyadic_matrix() -> impl Strategy<Value = WeightMatrix> {
    (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
        proptest::collection::vec((1i32..=256, any::<bool>()), r * c).prop_map(move |v| {
            let data = v.iter().map(|&(m, neg)| if neg { -m } else { m } as f32 / 16.0).collect();
            WeightMatrix::new("d", r, c, data).unwrap()
        })
    })
}

fn gaussian_case() -> impl Strategy<Value = (WeightMatrix, CalibrationBatch)> {
    (2usize..10, 2usize..10, 2usize..12, any::<u64>()).prop_map(|(r, c, n, seed)| {
        (gaussian("g", r, c, seed), gaussian_batch("g", n, c, seed ^ 1))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn full_rank_svd_reproduces_magnitudes(w in dyadic_matrix()) {
        let s = score_svd(&w, w.rows().min(w.cols()));
        let mag: Vec<f32> = w.data().iter().map(|v| v.abs()).collect();
        prop_assert_eq!(s.scores(), &mag[..]);
        let m = ScoreMatrix::new("d", w.rows(), w.cols(), mag, Method::None);
        for k in [1, w.len() / 2, w.len()] {
            prop_assert_eq!(top_k_select(&s, k).indices().to_vec(), top_k_select(&m, k).indices().to_vec());
        }
    }

    #[test]
    fn svd_scores_follow_row_and_column_permutations(
        (w, _) in gaussian_case(),
        shift_r in 0usize..10,
        shift_c in 0usize..10,
    ) {
        let (rows, cols) = (w.rows(), w.cols());
        let pr = |i: usize| (i + shift_r) % rows;
        let pc = |j: usize| (j * 7 + shift_c) % cols;
        // j -> 7j + s is a permutation only when gcd(7, cols) = 1
        prop_assume!(cols % 7 != 0);
        let p = WeightMatrix::from_fn("g", rows, cols, |i, j| w.get(pr(i), pc(j))).unwrap();
        let a = score_svd(&w, 3);
        let b = score_svd(&p, 3);
        let top = a.scores().iter().fold(0.0f32, |m, &v| m.max(v)).max(1.0);
        for i in 0..rows {
            for j in 0..cols {
                prop_assert!((b.get(i, j) - a.get(pr(i), pc(j))).abs() <= 1e-5 * top);
            }
        }
    }

    #[test]
    fn selections_are_scale_invariant(
        (w, x) in gaussian_case(),
        exp in -4i32..=4,
        k in 0usize..40,
    ) {
        let c = 2f32.powi(exp);
        let cw = w.scaled(c).unwrap();
        let h = HessianInfo::from_calibration(&x, 0.01).unwrap();
        let pairs = [
            (score_awq(&w, &x).unwrap(), score_awq(&cw, &x).unwrap()),
            (score_spqr(&w, &h).unwrap(), score_spqr(&cw, &h).unwrap()),
            (score_svd(&w, 8), score_svd(&cw, 8)),
        ];
        for (a, b) in pairs {
            prop_assert_eq!(top_k_select(&a, k).indices().to_vec(), top_k_select(&b, k).indices().to_vec(), "{}", a.method());
        }
    }

    #[test]
    fn scaling_activations_leaves_spqr_selection_alone(
        (w, x) in gaussian_case(),
        k in 0usize..40,
    ) {
        // relative damping makes the score scale with c² across the board
        let cx = CalibrationBatch::new("g", x.samples(), x.features(), x.data().iter().map(|v| v * 4.0).collect()).unwrap();
        let a = score_spqr(&w, &HessianInfo::from_calibration(&x, 0.01).unwrap()).unwrap();
        let b = score_spqr(&w, &HessianInfo::from_calibration(&cx, 0.01).unwrap()).unwrap();
        prop_assert_eq!(top_k_select(&a, k).indices().to_vec(), top_k_select(&b, k).indices().to_vec());
    }

    #[test]
    fn budgets_are_nested(
        (w, x) in gaussian_case(),
        seed in any::<u64>(),
        k1 in 0usize..50,
        dk in 0usize..50,
    ) {
        let h = HessianInfo::from_calibration(&x, 0.01).unwrap();
        let all = [
            score_random(&w, seed),
            score_awq(&w, &x).unwrap(),
            score_spqr(&w, &h).unwrap(),
            score_svd(&w, 8),
        ];
        for s in &all {
            let small = top_k_select(s, k1);
            let big = top_k_select(s, k1 + dk);
            prop_assert!(small.is_subset_of(&big), "{}", s.method());
        }
    }

    #[test]
    fn scoring_is_deterministic((w, x) in gaussian_case(), seed in any::<u64>()) {
        let h = HessianInfo::from_calibration(&x, 0.01).unwrap();
        prop_assert_eq!(score_random(&w, seed), score_random(&w, seed));
        prop_assert_eq!(score_awq(&w, &x).unwrap(), score_awq(&w, &x).unwrap());
        prop_assert_eq!(score_spqr(&w, &h).unwrap(), score_spqr(&w, &h).unwrap());
        prop_assert_eq!(score_svd(&w, 8), score_svd(&w, 8));
    }
}
