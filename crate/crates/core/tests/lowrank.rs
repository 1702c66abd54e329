mod common;

use common::*;
use faer::Mat;
use proptest::prelude::*;
use spatial_mlp::covariance::{gram_matrix, taper_matrix};
use spatial_mlp::lowrank::*;
use spatial_mlp::{Error, KernelSpec, Locations, Projector, TaperKind, TaperSpec};

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn projector_from(phi: Mat<f64>) -> Projector {
    let m = phi.nrows();
    Projector {
        phi,
        target_eps: 1.0,
        prob_param: 1,
        seed: 0,
        achieved_rank: m,
        degenerate: false,
        reached_full_rank: false,
    }
}

fn residual_frobenius(sigma: &Mat<f64>, p: &Projector) -> f64 {
    let s = to_na(sigma);
    let phi = to_na(&p.phi);
    (&s - phi.transpose() * (&phi * &s)).norm()
}

fn instance(n: usize, seed: u64, lambda: f64) -> (Locations, Mat<f64>) {
    let locs = uniform_locations(n, 100.0, seed);
    let g = gram_matrix(&locs, &KernelSpec::exponential(1.0, lambda)).unwrap();
    (locs, g)
}

#[test]
fn zero_operator_gives_canonical_row() {
    let z = Mat::<f64>::zeros(7, 7);
    let p = adaptive_range_finder(z.as_ref(), 0.5, 3, 1).unwrap();
    assert_eq!(p.rank(), 1);
    assert!(p.degenerate);
    assert_eq!(p.phi[(0, 0)], 1.0);
    assert!((1..7).all(|j| p.phi[(0, j)] == 0.0));
}

#[test]
fn rank_at_eps_200_on_500_points() {
    let (_, g) = instance(500, 26, SQRT2 / 0.06);
    let p = adaptive_range_finder(g.as_ref(), 200.0, 4, 7).unwrap();
    assert!((15..=45).contains(&p.rank()), "m = {}", p.rank());
    assert!(residual_frobenius(&g, &p) < 200.0);
}

#[test]
fn dominant_direction_captured_with_rank_one() {
    let mut d = Mat::<f64>::zeros(20, 20);
    d[(0, 0)] = 10.0;
    for i in 1..20 {
        d[(i, i)] = 1e-6;
    }
    let p = adaptive_range_finder(d.as_ref(), 0.01, 4, 3).unwrap();
    assert_eq!(p.rank(), 1);
    assert!(p.phi[(0, 0)].abs() > 1.0 - 1e-12);
    // Best rank-one error is 1e-6·√19; the sampled direction adds a
    // perturbation of the same order.
    let best = 1e-6 * 19f64.sqrt();
    let err = residual_frobenius(&d, &p);
    assert!(err >= best * (1.0 - 1e-9) && err < 100.0 * best, "err {err}");
    assert!(err < 0.01);
}

#[test]
fn range_finder_rejects_bad_parameters() {
    let g = Mat::<f64>::identity(4, 4);
    assert!(matches!(adaptive_range_finder(g.as_ref(), 0.0, 2, 1), Err(Error::Config(_))));
    assert!(matches!(adaptive_range_finder(g.as_ref(), -1.0, 2, 1), Err(Error::Config(_))));
    assert!(matches!(adaptive_range_finder(g.as_ref(), 1.0, 0, 1), Err(Error::Config(_))));
}

#[test]
fn full_rank_is_flagged() {
    let g = Mat::<f64>::identity(6, 6);
    let p = adaptive_range_finder(g.as_ref(), 1e-9, 2, 1).unwrap();
    assert_eq!(p.rank(), 6);
    assert!(p.reached_full_rank);
    assert!(p.orthonormality_error() <= 1e-10);
    let big = Mat::<f64>::from_fn(6, 6, |i, j| if i == j { 1e6 } else { 0.0 });
    let q = adaptive_range_finder(big.as_ref(), 1e-12, 2, 1).unwrap();
    assert_eq!(q.rank(), 6);
    assert!(q.reached_full_rank);
    let coarse = adaptive_range_finder(g.as_ref(), 10.0, 2, 1).unwrap();
    assert!(!coarse.reached_full_rank);
}

#[test]
fn range_finder_is_seed_deterministic() {
    let (_, g) = instance(80, 4, 20.0);
    let a = adaptive_range_finder(g.as_ref(), 1.0, 3, 11).unwrap();
    let b = adaptive_range_finder(g.as_ref(), 1.0, 3, 11).unwrap();
    assert!(a.phi == b.phi);
}

fn orthogonal(n: usize, seed: u64) -> Mat<f64> {
    let mut r = rng(seed);
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
    from_na(&a.qr().q())
}

#[test]
fn lp_at_full_rank_reproduces_sigma() {
    let (_, g) = instance(30, 8, 15.0);
    let p = projector_from(orthogonal(30, 2));
    let lp = build_lp(g.as_ref(), &p, 0.5).unwrap();
    let diag = lp.sparse_part().unwrap().diagonal();
    assert!(diag.iter().all(|d| d.abs() < 1e-10));
    assert!(rel_mat(&to_na(&lp.densify().unwrap()), &to_na(&g)) < 1e-10);
}

#[test]
fn lp_hand_example_with_first_basis_vector() {
    let s = Mat::from_fn(3, 3, |i, j| [[4.0, 2.0, 1.0], [2.0, 3.0, 0.5], [1.0, 0.5, 2.0]][i][j]);
    let p = projector_from(Mat::from_fn(1, 3, |_, j| if j == 0 { 1.0 } else { 0.0 }));
    let lp = build_lp(s.as_ref(), &p, 1.0).unwrap();
    let d = lp.densify().unwrap();
    // Σ e₁ (e₁'Σe₁)⁻¹ e₁'Σ = c c' / 4 with c = (4, 2, 1); diagonal restored.
    let c = [4.0, 2.0, 1.0];
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { s[(i, i)] } else { c[i] * c[j] / 4.0 };
            assert!((d[(i, j)] - want).abs() < 1e-14, "({i},{j}) {} vs {want}", d[(i, j)]);
        }
    }
    assert!(lp.sparse_part().unwrap().pattern().is_diagonal());
}

#[test]
fn lp_preserves_variances() {
    let (_, g) = instance(120, 5, 20.0);
    let p = adaptive_range_finder(g.as_ref(), 5.0, 3, 5).unwrap();
    let d = build_lp(g.as_ref(), &p, 1.0).unwrap().densify().unwrap();
    for i in 0..120 {
        assert!((d[(i, i)] - g[(i, i)]).abs() < 1e-10);
    }
}

#[test]
fn ct_wide_taper_is_sigma_and_point_taper_is_diagonal() {
    let (locs, g) = instance(40, 6, 25.0);
    let wide = taper_matrix(&locs, &TaperSpec::wendland2(1e9).unwrap()).unwrap();
    let ct = build_ct(g.as_ref(), &wide, 1.0).unwrap();
    assert!(rel_mat(&to_na(&ct.densify().unwrap()), &to_na(&g)) < 1e-10);
    let point = taper_matrix(&locs, &TaperSpec::wendland2(1e-9).unwrap()).unwrap();
    let ct0 = build_ct(g.as_ref(), &point, 1.0).unwrap();
    let d = ct0.densify().unwrap();
    for i in 0..40 {
        for j in 0..40 {
            let want = if i == j { g[(i, i)] } else { 0.0 };
            assert_eq!(d[(i, j)], want);
        }
    }
}

#[test]
fn ct_line_with_spherical_taper() {
    let locs = Locations::new(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]]).unwrap();
    // exp(−h): the exponential kernel with λ = √2.
    let g = gram_matrix(&locs, &KernelSpec::exponential(1.0, SQRT2)).unwrap();
    let t = taper_matrix(&locs, &TaperSpec::new(TaperKind::Spherical, 2.0).unwrap()).unwrap();
    let sp = build_ct(g.as_ref(), &t, 0.1).unwrap().sparse_part().unwrap();
    for i in 0..4usize {
        for j in 0..4 {
            let d = (i as usize).abs_diff(j);
            assert_eq!(sp.pattern().find(i.max(j), i.min(j)).is_some(), d < 2);
        }
    }
    let want = (-1.0f64).exp() * 0.25 * 1.25;
    assert!((sp.get(1, 0) - want).abs() < 1e-15);
    assert!((sp.get(0, 0) - 1.0).abs() < 1e-15);
}

#[test]
fn mlp_identity_taper_equals_lp() {
    let (locs, g) = instance(60, 10, 20.0);
    let p = adaptive_range_finder(g.as_ref(), 3.0, 3, 1).unwrap();
    let point = taper_matrix(&locs, &TaperSpec::wendland2(1e-9).unwrap()).unwrap();
    let mlp = build_mlp(g.as_ref(), &p, &point, 1.0).unwrap().densify().unwrap();
    let lp = build_lp(g.as_ref(), &p, 1.0).unwrap().densify().unwrap();
    assert!(rel_mat(&to_na(&mlp), &to_na(&lp)) < 1e-14);
}

#[test]
fn mlp_full_rank_and_full_taper_reproduce_sigma() {
    let (locs, g) = instance(30, 12, 20.0);
    let t = taper_matrix(&locs, &TaperSpec::wendland2(10.0).unwrap()).unwrap();
    let full = projector_from(orthogonal(30, 5));
    let a = build_mlp(g.as_ref(), &full, &t, 1.0).unwrap();
    assert!(a.sparse_part().unwrap().frobenius_norm() < 1e-9);
    assert!(rel_mat(&to_na(&a.densify().unwrap()), &to_na(&g)) < 1e-10);

    let low = adaptive_range_finder(g.as_ref(), 5.0, 2, 2).unwrap();
    assert!(low.rank() < 30);
    let ones = taper_matrix(&locs, &TaperSpec::wendland2(1e9).unwrap()).unwrap();
    let b = build_mlp(g.as_ref(), &low, &ones, 1.0).unwrap();
    assert!(rel_mat(&to_na(&b.densify().unwrap()), &to_na(&g)) < 1e-10);
}

#[test]
fn frobenius_error_of_exact_copy_is_zero() {
    let (_, g) = instance(50, 1, 20.0);
    let e = build_exact(g.as_ref(), 1.0).unwrap();
    assert_eq!(frobenius_error(g.as_ref(), &e).unwrap(), 0.0);
}

#[test]
fn frobenius_error_round_trip() {
    let (locs, g) = instance(80, 2, 20.0);
    let p = adaptive_range_finder(g.as_ref(), 2.0, 3, 2).unwrap();
    let t = taper_matrix(&locs, &TaperSpec::wendland2(8.0).unwrap()).unwrap();
    let mlp = build_mlp(g.as_ref(), &p, &t, 1.0).unwrap();
    let d = mlp.densify().unwrap();
    let rebuilt = build_exact(d.as_ref(), 1.0).unwrap();
    assert!(frobenius_error(d.as_ref(), &rebuilt).unwrap() < 1e-10);
    assert!(frobenius_error(d.as_ref(), &mlp).unwrap() < 1e-10);
}

#[test]
fn frobenius_error_respects_densify_cap() {
    let (_, g) = instance(20, 3, 10.0);
    let e = build_exact(g.as_ref(), 1.0).unwrap();
    assert!(matches!(frobenius_error_capped(g.as_ref(), &e, 10), Err(Error::Usage(_))));
    assert_eq!(DENSIFY_CAP, 5000);
}

#[test]
fn frobenius_strictly_decreases_lp_to_mlp_on_strong_design() {
    // 500 points of the strong-correlation simulation design, σ² = 0.5.
    let locs = uniform_locations(500, 100.0, 77);
    let g = gram_matrix(&locs, &KernelSpec::exponential(0.5, SQRT2 / 0.06)).unwrap();
    let p = adaptive_range_finder(g.as_ref(), 200.0, 4, 1).unwrap();
    let t1 = taper_matrix(&locs, &TaperSpec::wendland2(2.8).unwrap()).unwrap();
    let t2 = taper_matrix(&locs, &TaperSpec::wendland2(10.0).unwrap()).unwrap();
    let lp = frobenius_error(g.as_ref(), &build_lp(g.as_ref(), &p, 1.0).unwrap()).unwrap();
    let m1 = frobenius_error(g.as_ref(), &build_mlp(g.as_ref(), &p, &t1, 1.0).unwrap()).unwrap();
    let m2 = frobenius_error(g.as_ref(), &build_mlp(g.as_ref(), &p, &t2, 1.0).unwrap()).unwrap();
    assert!(lp > m1 && m1 > m2, "{lp} {m1} {m2}");
}

#[test]
fn kl_of_identical_gaussians_is_zero() {
    let (_, g) = instance(25, 4, 20.0);
    let c = to_na(&g) + nalgebra::DMatrix::identity(25, 25);
    let c = from_na(&c);
    let mu = vec![0.3; 25];
    assert!(kl_gaussian(&mu, c.as_ref(), &mu, c.as_ref()).unwrap().abs() < 1e-10);
}

#[test]
fn kl_bound_scalar_value() {
    let b = kl_bound(1, 0.1, 1.0).unwrap();
    let want = 0.5 * (0.1 - 0.9f64.ln());
    assert!((b - want).abs() < 1e-15);
    assert!((b - 0.1026803).abs() < 1e-7);
}

#[test]
fn kl_bound_out_of_regime() {
    assert!(matches!(kl_bound(10, 1.0, 1.0), Err(Error::Numerical(_))));
    assert!(matches!(kl_bound(10, 2.0, 1.0), Err(Error::Numerical(_))));
}

#[test]
fn kl_matches_dense_formula() {
    let (locs, g) = instance(40, 9, 20.0);
    let p = adaptive_range_finder(g.as_ref(), 3.0, 2, 4).unwrap();
    let t = taper_matrix(&locs, &TaperSpec::wendland2(15.0).unwrap()).unwrap();
    let mlp = build_mlp(g.as_ref(), &p, &t, 0.5).unwrap();
    let f = add_diag(&to_na(&g), 0.5);
    let fs = to_na(&mlp.densify_with_nugget().unwrap());
    let zero = vec![0.0; 40];
    let kl = kl_gaussian(&zero, from_na(&f).as_ref(), &zero, from_na(&fs).as_ref()).unwrap();
    let fs_inv = fs.clone().try_inverse().unwrap();
    let want = 0.5 * ((&fs_inv * &f).trace() - 40.0 + log_det(&fs) - log_det(&f));
    assert!((kl - want).abs() < 1e-9 * want.abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projector_rows_orthonormal(seed in 0u64..10_000, n in 10usize..150, lambda in 2.0f64..60.0,
                                  eps in 0.05f64..20.0, r in 1usize..6) {
        let (_, g) = instance(n, seed, lambda);
        let p = adaptive_range_finder(g.as_ref(), eps, r, seed ^ 0xabc).unwrap();
        prop_assert!(p.orthonormality_error() <= 1e-10);
        prop_assert!(p.rank() <= n);
        for i in 0..p.rank() {
            let norm: f64 = (0..n).map(|j| p.phi[(i, j)] * p.phi[(i, j)]).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn positivity_of_projected_sparse_and_inner_matrices(seed in 0u64..10_000, n in 10usize..120,
                                                         lambda in 5.0f64..60.0, gamma in 1.0f64..30.0,
                                                         tau2 in 0.01f64..2.0) {
        let (locs, g) = instance(n, seed, lambda);
        let p = adaptive_range_finder(g.as_ref(), 1.0, 3, seed).unwrap();
        let t = taper_matrix(&locs, &TaperSpec::wendland2(gamma).unwrap()).unwrap();
        let mlp = build_mlp(g.as_ref(), &p, &t, tau2).unwrap();
        let scale = to_na(&g).norm() / n as f64;
        let m = to_na(&mlp.projected_m().unwrap());
        prop_assert!(min_eig(&m) > -1e-8 * scale);
        let a = add_diag(&to_na(&mlp.sparse_part().unwrap().to_dense()), tau2);
        prop_assert!(min_eig(&a) > -1e-8 * scale);
        prop_assert!(min_eig(&to_na(&mlp.densify_with_nugget().unwrap())) > -1e-8 * scale);
        let u = to_na(&mlp.u_factor().unwrap());
        let inner = &m + u.transpose() * solve(&a, &u);
        prop_assert!(min_eig(&inner) > -1e-8 * scale);
    }

    #[test]
    fn frobenius_chain_for_ordered_tapers(seed in 0u64..10_000, g1 in 1.0f64..15.0, dg in 0.1f64..20.0,
                                          spherical in proptest::bool::ANY) {
        let (locs, g) = instance(120, seed, 30.0);
        let p = adaptive_range_finder(g.as_ref(), 2.0, 3, seed).unwrap();
        let kind = if spherical { TaperKind::Spherical } else { TaperKind::Wendland2 };
        let t1 = taper_matrix(&locs, &TaperSpec::new(kind, g1).unwrap()).unwrap();
        let t2 = taper_matrix(&locs, &TaperSpec::new(kind, g1 + dg).unwrap()).unwrap();
        let lp = build_lp(g.as_ref(), &p, 1.0).unwrap();
        let approx = frobenius_error(g.as_ref(), &lp.low_rank_only().unwrap()).unwrap();
        let e_lp = frobenius_error(g.as_ref(), &lp).unwrap();
        let e1 = frobenius_error(g.as_ref(), &build_mlp(g.as_ref(), &p, &t1, 1.0).unwrap()).unwrap();
        let e2 = frobenius_error(g.as_ref(), &build_mlp(g.as_ref(), &p, &t2, 1.0).unwrap()).unwrap();
        prop_assert!(approx >= e_lp && e_lp >= e1 && e1 >= e2, "{approx} {e_lp} {e1} {e2}");
    }

    #[test]
    fn densified_forms_match_definitions(seed in 0u64..10_000, n in 10usize..100, gamma in 1.0f64..40.0) {
        let (locs, g) = instance(n, seed, 25.0);
        let p = adaptive_range_finder(g.as_ref(), 1.5, 3, seed).unwrap();
        let t = taper_matrix(&locs, &TaperSpec::wendland2(gamma).unwrap()).unwrap();
        let s = to_na(&g);
        let approx = projection_approx(&s, &to_na(&p.phi));
        let resid = &s - &approx;
        let lp_def = &approx + nalgebra::DMatrix::from_diagonal(&resid.diagonal());
        let mlp_def = &approx + resid.component_mul(&wendland_dense(&locs, gamma));
        let lp = to_na(&build_lp(g.as_ref(), &p, 1.0).unwrap().densify().unwrap());
        let mlp = to_na(&build_mlp(g.as_ref(), &p, &t, 1.0).unwrap().densify().unwrap());
        prop_assert!((&lp - &lp_def).norm() <= 1e-9 * lp_def.norm());
        prop_assert!((&mlp - &mlp_def).norm() <= 1e-9 * mlp_def.norm());
    }

    #[test]
    fn lp_core_is_nonnegative_diagonal(seed in 0u64..10_000, n in 5usize..100) {
        let (_, g) = instance(n, seed, 40.0);
        let p = adaptive_range_finder(g.as_ref(), 0.5, 2, seed).unwrap();
        let lp = build_lp(g.as_ref(), &p, 1.0).unwrap();
        let sp = lp.sparse_part().unwrap();
        prop_assert!(sp.pattern().is_diagonal());
        prop_assert!(sp.diagonal().iter().all(|&d| d >= 0.0));
    }
}
