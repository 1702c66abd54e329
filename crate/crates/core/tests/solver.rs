mod common;

use std::sync::Arc;

use common::*;
use faer::Mat;
use proptest::prelude::*;
use spatial_mlp::covariance::{gram_matrix, taper_matrix};
use spatial_mlp::lowrank::*;
use spatial_mlp::sparse::{minimum_degree, CholeskyFactor, Pattern, SymSparse};
use spatial_mlp::{Error, FactorError, KernelSpec, StructuredCov, TaperSpec};

fn sigma(n: usize, seed: u64, lambda: f64) -> (spatial_mlp::Locations, Mat<f64>) {
    let locs = uniform_locations(n, 100.0, seed);
    let g = gram_matrix(&locs, &KernelSpec::exponential(1.3, lambda)).unwrap();
    (locs, g)
}

/// All four forms on one instance.
fn forms(n: usize, seed: u64, tau2: f64) -> Vec<(&'static str, StructuredCov)> {
    let (locs, g) = sigma(n, seed, 30.0);
    let p = adaptive_range_finder(g.as_ref(), 2.0, 3, seed).unwrap();
    let t = taper_matrix(&locs, &TaperSpec::wendland2(12.0).unwrap()).unwrap();
    vec![
        ("exact", build_exact(g.as_ref(), tau2).unwrap()),
        ("lp", build_lp(g.as_ref(), &p, tau2).unwrap()),
        ("ct", build_ct(g.as_ref(), &t, tau2).unwrap()),
        ("mlp", build_mlp(g.as_ref(), &p, &t, tau2).unwrap()),
    ]
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| rand::Rng::random_range(&mut r, -2.0..2.0)).collect()
}

#[test]
fn pure_nugget_solve_logdet_quad() {
    let cov = StructuredCov::nugget_only(3, 2.0);
    let x = cov.solve_vec(&[2.0, -4.0, 1.0]).unwrap();
    for (a, b) in x.iter().zip([1.0, -2.0, 0.5]) {
        assert!((a - b).abs() <= 1e-15 * b.abs());
    }
    assert!((cov.log_det().unwrap() - 3.0 * 2f64.ln()).abs() < 1e-15);
    assert_eq!(cov.quad_form(&[0.0; 3]).unwrap(), 0.0);
    assert!((cov.quad_form(&[1.0, 2.0, 2.0]).unwrap() - 9.0 / 2.0).abs() < 1e-15);
}

#[test]
fn mlp_matches_dense_oracle_at_n50() {
    let (locs, g) = sigma(50, 3, 25.0);
    let p = adaptive_range_finder(g.as_ref(), 1.0, 3, 9).unwrap();
    let t = taper_matrix(&locs, &TaperSpec::wendland2(20.0).unwrap()).unwrap();
    let cov = build_mlp(g.as_ref(), &p, &t, 0.3).unwrap();
    assert!(cov.rank() > 0);
    let d = to_na(&cov.densify_with_nugget().unwrap());
    let b = random_vec(50, 1);
    let want = solve(&d, &nalgebra::DMatrix::from_column_slice(50, 1, &b));
    let got = cov.solve_vec(&b).unwrap();
    let diff: f64 = got.iter().zip(want.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(diff <= 1e-8 * want.norm());
    assert!((cov.log_det().unwrap() - log_det(&d)).abs() < 1e-8);
    let q = quad(&d, &b);
    assert!((cov.quad_form(&b).unwrap() - q).abs() <= 1e-8 * q);
}

#[test]
fn exact_form_matches_dense_cholesky() {
    let (_, g) = sigma(60, 4, 20.0);
    let cov = build_exact(g.as_ref(), 0.2).unwrap();
    let d = add_diag(&to_na(&g), 0.2);
    let b = nalgebra::DMatrix::from_fn(60, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    let got = to_na(&cov.solve(from_na(&b).as_ref()).unwrap());
    let want = chol(&d).solve(&b);
    assert!(rel_mat(&got, &want) < 1e-10);
    assert!((cov.log_det().unwrap() - log_det(&d)).abs() < 1e-10 * log_det(&d).abs().max(1.0));
}

#[test]
fn lp_and_identity_taper_mlp_share_log_det() {
    let (locs, g) = sigma(70, 5, 25.0);
    let p = adaptive_range_finder(g.as_ref(), 2.0, 3, 2).unwrap();
    let point = taper_matrix(&locs, &TaperSpec::wendland2(1e-9).unwrap()).unwrap();
    let a = build_lp(g.as_ref(), &p, 0.5).unwrap().log_det().unwrap();
    let b = build_mlp(g.as_ref(), &p, &point, 0.5).unwrap().log_det().unwrap();
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn rhs_dimension_mismatch_is_usage_error() {
    let cov = StructuredCov::nugget_only(4, 1.0);
    assert!(matches!(cov.solve_vec(&[1.0; 3]), Err(Error::Usage(_))));
}

#[test]
fn cached_factors_give_identical_results() {
    let cov = forms(80, 6, 0.4).pop().unwrap().1;
    let b = random_vec(80, 2);
    let f1 = cov.factors().unwrap();
    let x1 = cov.solve_vec(&b).unwrap();
    let x2 = cov.solve_vec(&b).unwrap();
    let f2 = cov.factors().unwrap();
    assert!(Arc::ptr_eq(&f1, &f2));
    assert!(x1.iter().zip(&x2).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(cov.log_det().unwrap().to_bits(), cov.log_det().unwrap().to_bits());
}

#[test]
fn concurrent_first_use_factors_once() {
    let cov = Arc::new(forms(120, 7, 0.4).pop().unwrap().1);
    let b = random_vec(120, 3);
    let handles: Vec<_> = (0..6)
        .map(|_| {
            let cov = Arc::clone(&cov);
            let b = b.clone();
            std::thread::spawn(move || (cov.factors().unwrap(), cov.solve_vec(&b).unwrap()))
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    for (f, x) in &results[1..] {
        assert!(Arc::ptr_eq(f, &results[0].0));
        assert!(x.iter().zip(&results[0].1).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

/// 2-D grid Laplacian-like pattern, shifted to be diagonally dominant.
fn grid_matrix(side: usize, shift: f64) -> SymSparse {
    let n = side * side;
    let cols: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            let mut rows = Vec::new();
            if (j + 1) % side != 0 {
                rows.push(j + 1);
            }
            if j + side < n {
                rows.push(j + side);
            }
            rows
        })
        .collect();
    let pattern = Arc::new(Pattern::from_lower_columns(n, cols));
    let values = pattern
        .entries()
        .map(|(i, j, _)| if i == j { 4.0 + shift } else { -1.0 })
        .collect();
    SymSparse::new(pattern, values)
}

#[test]
fn minimum_degree_is_a_deterministic_permutation() {
    let a = grid_matrix(15, 0.1);
    let p1 = minimum_degree(a.pattern());
    let p2 = minimum_degree(&Pattern::from_lower_columns(
        225,
        (0..225)
            .map(|j| a.pattern().col_range(j).skip(1).map(|q| a.pattern().row_idx()[q]).collect())
            .collect(),
    ));
    assert_eq!(p1, p2);
    let mut sorted = p1.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..225).collect::<Vec<_>>());
    // A fill-reducing order on a grid beats the natural band order.
    let sym = a.pattern().symbolic();
    assert!(!sym.uses_dense());
    assert!(sym.nnz_l() < 225 * 16, "nnz(L) = {}", sym.nnz_l());
}

#[test]
fn sparse_cholesky_matches_dense_oracle() {
    let a = grid_matrix(20, 0.05);
    assert!(!a.pattern().symbolic().uses_dense());
    let f = CholeskyFactor::new(a.pattern(), a.values()).unwrap();
    let d = to_na(&a.to_dense());
    assert!((f.log_det() - log_det(&d)).abs() < 1e-10 * log_det(&d).abs());
    let b = nalgebra::DMatrix::from_fn(400, 2, |i, j| (i as f64 * 0.37 + j as f64).sin());
    let mut x = from_na(&b);
    f.solve_mat_in_place(x.as_mut());
    assert!(rel_mat(&to_na(&x), &chol(&d).solve(&b)) < 1e-12);
}

#[test]
fn sparse_cholesky_reports_failing_pivot() {
    let mut a = grid_matrix(20, 0.0);
    assert!(!a.pattern().symbolic().uses_dense());
    let pos = a.pattern().find(10, 10).unwrap();
    a.values_mut()[pos] = -1.0;
    match CholeskyFactor::new(a.pattern(), a.values()) {
        Err(FactorError::Sparse { index, pivot }) => {
            assert!(index < 400);
            assert!(!(pivot > 0.0));
        }
        other => panic!("expected sparse factor error, got {other:?}"),
    }
}

#[test]
fn non_pd_core_is_a_solver_error() {
    // Diagonal core -2 with nugget 1: A = -I.
    let (_, g) = sigma(10, 1, 10.0);
    let neg = Mat::from_fn(10, 10, |i, j| if i == j { -2.0 - g[(i, i)] } else { 0.0 });
    let cov = build_exact(neg.as_ref(), 1.0).unwrap();
    assert!(matches!(cov.log_det(), Err(Error::Solver(_))));
}

#[test]
fn dense_pattern_uses_dense_kernel_with_same_answer() {
    let (_, g) = sigma(40, 8, 20.0);
    let pattern = Arc::new(Pattern::dense(40));
    assert!(pattern.symbolic().uses_dense());
    let values: Vec<f64> = pattern
        .entries()
        .map(|(i, j, _)| g[(i, j)] + if i == j { 0.5 } else { 0.0 })
        .collect();
    let f = CholeskyFactor::new(&pattern, &values).unwrap();
    let d = add_diag(&to_na(&g), 0.5);
    assert!((f.log_det() - log_det(&d)).abs() < 1e-10 * log_det(&d).abs().max(1.0));
    let b = random_vec(40, 4);
    let mut x = b.clone();
    f.solve_in_place(&mut x);
    let want = solve(&d, &nalgebra::DMatrix::from_column_slice(40, 1, &b));
    assert!((nalgebra::DVector::from_vec(x) - want.column(0)).norm() < 1e-10 * want.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn all_forms_match_dense_oracle(seed in 0u64..10_000, n in 5usize..120, tau2 in 0.05f64..2.0) {
        let b = random_vec(n, seed);
        for (name, cov) in forms(n, seed, tau2) {
            let d = to_na(&cov.densify_with_nugget().unwrap());
            let want = solve(&d, &nalgebra::DMatrix::from_column_slice(n, 1, &b));
            let got = nalgebra::DVector::from_vec(cov.solve_vec(&b).unwrap());
            prop_assert!((&got - want.column(0)).norm() <= 1e-8 * want.norm(), "{name} solve");
            let ld = log_det(&d);
            prop_assert!((cov.log_det().unwrap() - ld).abs() <= 1e-8 * ld.abs().max(1.0), "{name} log_det");
            let q = quad(&d, &b);
            let qf = cov.quad_form(&b).unwrap();
            prop_assert!(qf >= 0.0);
            prop_assert!((qf - q).abs() <= 1e-8 * q, "{name} quad_form");
            let direct: f64 = b.iter().zip(got.iter()).map(|(a, b)| a * b).sum();
            prop_assert_eq!(qf.to_bits(), direct.to_bits());
        }
    }

    #[test]
    fn solve_inverts_multiplication(seed in 0u64..10_000, n in 5usize..150, tau2 in 0.05f64..2.0) {
        let x = random_vec(n, seed.wrapping_add(1));
        for (name, cov) in forms(n, seed, tau2) {
            let d = to_na(&cov.densify_with_nugget().unwrap());
            let b = &d * nalgebra::DVector::from_column_slice(&x);
            let back = cov.solve_vec(b.as_slice()).unwrap();
            let err: f64 = back.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-7 * norm, "{name}: {err}");
            prop_assert!(cov.log_det().unwrap().is_finite());
        }
    }
}
