use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spherecode::codes::{generate, max_float_dot, random_code, SphericalCode};
use spherecode::error::Error;
use spherecode::exactmath::rat;
use spherecode::lpbound::catalog_certificate;
use spherecode::perturb::{
    align_codes, angle, code_closeness, four_point_closed_form, four_point_det, four_point_det_exact, perturb_code,
    stability_sweep, Strategy,
};
use spherecode::specstab::{
    aligned_sqrt_pair, almost_perp, column_deviations, delta_zero, max_norm_diff, near_orthonormal_basis, remark_k,
    sym_eig,
};
use spherecode::Rational;

fn gram(c: &SphericalCode) -> DMatrix<f64> {
    DMatrix::from_row_slice(c.len(), c.len(), &c.gram_f64())
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Moves every point of `c` by `eta` along a random tangent direction.
fn nudge(c: &SphericalCode, eta: f64, seed: u64) -> SphericalCode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = c.dim();
    let mut pts = c.points().to_vec();
    for row in pts.chunks_exact_mut(d) {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let t: f64 = g.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
        row.iter_mut().zip(&g).for_each(|(x, gi)| *x += eta * (gi - t * *x));
    }
    SphericalCode::from_unnormalized(d, pts, "nudged").unwrap()
}

#[test]
fn e8_sqrt_pair_inside_the_admissible_radius() {
    let c = generate("e8_roots").unwrap();
    let b = gram(&c);
    let d0 = delta_zero(240, 30.0);
    assert!((d0 - 30.0 / (28.0 * 240f64.powi(5))).abs() < 1e-25);
    let a = gram(&nudge(&c, 1e-14, 11));
    let out = aligned_sqrt_pair(&a, &b).unwrap();
    assert!(out.delta < d0 && out.delta > 0.0);
    assert_eq!(out.rank, 8);
    assert!(out.bound_satisfied);
    assert!(out.p_minus_q <= out.k * out.delta);
    let tol = 1e-9 * 240.0 * 30.0;
    assert!(out.residual_a <= tol && out.residual_b <= tol);
    assert!((out.k - remark_k(&b).unwrap()).abs() <= 1e-6 * out.k);
}

#[test]
fn e8_sqrt_pair_refuses_large_perturbations() {
    let c = generate("e8_roots").unwrap();
    let p = perturb_code(&c, 1e-8, Strategy::TangentNoise, 4).unwrap();
    let err = aligned_sqrt_pair(&gram(&p), &gram(&c)).unwrap_err();
    assert!(matches!(err, Error::OutsideRegime(ref msg) if msg.contains("1/(2N)")), "{err}");
}

/// PSD `B = X X^T` with a chosen spectrum pattern, and a rank-preserving `A`
/// from a small change of `X`.
fn random_pair(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = rng.gen_range(2..=12);
    let r = rng.gen_range(1..=n);
    let q = gaussian_matrix(rng, n, n).qr().q();
    // Up to three distinct eigenvalues, so eigenspaces of dimension > 1 occur.
    let levels: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..5.0)).collect();
    let lam: Vec<f64> = (0..r).map(|_| levels[rng.gen_range(0..levels.len())]).collect();
    let x = q.columns(0, r) * DMatrix::from_diagonal(&DVector::from_iterator(r, lam.iter().map(|v| v.sqrt())));
    let b = &x * x.transpose();
    let spec = sym_eig(&b, 1e-9).unwrap();
    let gap = spherecode::specstab::delta_gap(&spec).unwrap();
    let target = delta_zero(n, gap) * rng.gen_range(0.01..0.9);
    let e = gaussian_matrix(rng, n, r);
    let trial = &x + &e * 1e-3;
    let dev = max_norm_diff(&(&trial * trial.transpose()), &b);
    let xa = &x + e * (1e-3 * target / dev);
    let a = &xa * xa.transpose();
    (a, b)
}

#[test]
fn sqrt_pair_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..200 {
        let (a, b) = random_pair(&mut rng);
        let n = b.nrows() as f64;
        let out = aligned_sqrt_pair(&a, &b).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let scale = 1e-9 * n * a.norm().max(b.norm()).max(1.0);
        assert!(out.residual_a <= scale && out.residual_b <= scale, "case {case}");
        for m in [&out.p, &out.q] {
            assert!(sym_eig(m, 1e-9).unwrap().values[0] >= -1e-10, "case {case}");
        }
        assert!(out.p_minus_q <= out.k * out.delta, "case {case}");
        assert!(out.bound_satisfied);
    }
}

fn near_frame(rng: &mut ChaCha8Rng, d: usize, eps: f64) -> DMatrix<f64> {
    // Shrinks a random perturbation of the identity until all
    // pairwise inner products are within eps.
    let g = gaussian_matrix(rng, d, d);
    let mut t = eps;
    loop {
        let mut u = DMatrix::identity(d, d) + &g * t;
        for mut col in u.column_iter_mut() {
            let n = col.norm();
            col /= n;
        }
        let gu = u.transpose() * &u;
        let worst = (0..d).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| gu[(i, j)].abs()).fold(0.0, f64::max);
        if worst <= eps {
            return u;
        }
        t /= 1.5;
    }
}

#[test]
fn near_orthonormal_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let d = 8;
        let u = near_frame(&mut rng, d, 0.05);
        let w = near_orthonormal_basis(&u, 0.05).unwrap();
        assert!(column_deviations(&u, &w).iter().all(|&x| x <= 0.8));
    }
    for _ in 0..500 {
        let d = rng.gen_range(2..=16);
        let eps = rng.gen_range(0.0..1.0 / (2.0 * d as f64));
        let u = near_frame(&mut rng, d, eps);
        let w = near_orthonormal_basis(&u, eps).unwrap();
        assert!(max_norm_diff(&(w.transpose() * &w), &DMatrix::identity(d, d)) <= 1e-12);
        assert!(column_deviations(&u, &w).iter().all(|&x| x <= 2.0 * d as f64 * eps));
    }
}

fn unit(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v / n
}

#[test]
fn almost_perp_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut checked = 0;
    while checked < 500 {
        let d = rng.gen_range(2..=10);
        let x = unit(DVector::from_fn(d, |_, _| rng.sample(StandardNormal)));
        // Columns nearly orthogonal to x; some instances nearly dependent.
        let squeeze = if rng.gen_bool(0.3) { 10f64.powf(-rng.gen_range(1.0..5.0)) } else { 1.0 };
        let seed_col = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let mut z = DMatrix::zeros(d, d - 1);
        for k in 0..d - 1 {
            let g = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
            let g = &seed_col + (g - &seed_col) * squeeze;
            let tilt = rng.gen_range(-0.05..0.05);
            let perp = unit(&g - &x * x.dot(&g));
            z.set_column(k, &unit(perp + &x * tilt));
        }
        let delta = (0..d - 1).map(|k| z.column(k).dot(&x).abs()).fold(0.0, f64::max);
        match almost_perp(x.as_slice(), &z, delta) {
            Ok(r) => {
                assert!(r.actual_angle <= r.bound * (1.0 + 1e-9) + 1e-15, "{} > {}", r.actual_angle, r.bound);
                checked += 1;
            }
            Err(Error::RankMismatch(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn chord_arc_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let d = rng.gen_range(2..=24);
        let p = unit(DVector::from_fn(d, |_, _| rng.sample(StandardNormal)));
        let q = unit(DVector::from_fn(d, |_, _| rng.sample(StandardNormal)));
        assert!(angle(p.as_slice(), q.as_slice()) <= std::f64::consts::FRAC_PI_2 * (&p - &q).norm() + 1e-15);
    }
}

#[test]
fn perturbed_codes_respect_the_cap() {
    for (name, s) in [("e8_roots", 0.5), ("cross_polytope(4)", 0.0), ("icosahedron", 1.0 / 5f64.sqrt())] {
        let c = generate(name).unwrap();
        for strategy in [Strategy::TangentNoise, Strategy::PairStretch] {
            for (k, eps) in [1e-6, 1e-4, 1e-2].into_iter().enumerate() {
                let p = perturb_code(&c, eps, strategy, k as u64).unwrap();
                assert!(max_float_dot(&p) <= s + eps + 1e-12, "{name} {strategy} {eps}");
                for i in 0..p.len() {
                    let n: f64 = p.point(i).iter().map(|x| x * x).sum();
                    assert!((n - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn closeness_of_random_codes_and_swap_symmetry() {
    let a = random_code(5, 10, 1).unwrap();
    let b = random_code(5, 10, 2).unwrap();
    let ab = code_closeness(&a, &b).unwrap();
    assert!(ab.gram_max_dev.is_finite() && ab.gram_max_dev > 0.0);
    let c = generate("e8_roots").unwrap();
    let p = perturb_code(&c, 1e-4, Strategy::TangentNoise, 2).unwrap();
    let cp = code_closeness(&c, &p).unwrap();
    let pc = code_closeness(&p, &c).unwrap();
    let mut inverse = vec![0; cp.matching.len()];
    for (i, &j) in cp.matching.iter().enumerate() {
        inverse[j] = i;
    }
    assert_eq!(pc.matching, inverse);
    assert!((cp.gram_max_dev - pc.gram_max_dev).abs() < 1e-15);
    assert!(cp.gram_max_dev <= 3e25 * 1e-4);
}

#[test]
fn rotated_copy_aligns_exactly() {
    let c = generate("cell600").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let r0 = gaussian_matrix(&mut rng, 4, 4).qr().q();
    let mut pts = Vec::new();
    for i in 0..c.len() {
        let x = DVector::from_column_slice(c.point(i));
        pts.extend((&r0 * x).iter());
    }
    let rotated = SphericalCode::from_points(4, pts, "rotated").unwrap();
    let al = align_codes(&c, &rotated, &(0..c.len()).collect::<Vec<_>>()).unwrap();
    assert!(al.max_spherical_distance < 1e-7);
    assert!(max_norm_diff(&al.rotation, &r0) < 1e-12);
}

#[test]
fn four_point_determinant_oracle() {
    // Cofactor expansion of the same 4x4 matrix.
    fn cofactor(m: &[[f64; 4]; 4]) -> f64 {
        fn det3(m: [[f64; 3]; 3]) -> f64 {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        (0..4)
            .map(|c| {
                let mut minor = [[0.0; 3]; 3];
                for r in 1..4 {
                    let mut k = 0;
                    for cc in (0..4).filter(|&cc| cc != c) {
                        minor[r - 1][k] = m[r][cc];
                        k += 1;
                    }
                }
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][c] * det3(minor)
            })
            .sum()
    }
    let d = [0.01; 4];
    let h = 0.51;
    let m = [[1.0, 0.0, h, h], [0.0, 1.0, h, h], [h, h, 1.0, 0.0], [h, h, 0.0, 1.0]];
    assert!((four_point_det(0.0, 0.0, d) - cofactor(&m)).abs() <= 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let zero: [Rational; 4] = std::array::from_fn(|_| rat(0, 1));
    for _ in 0..1000 {
        let a = rat(rng.gen_range(-1000..=1000), rng.gen_range(1..=1000));
        let b = rat(rng.gen_range(-1000..=1000), rng.gen_range(1..=1000));
        assert_eq!(four_point_det_exact(&a, &b, &zero), four_point_closed_form(&a, &b));
    }
}

#[test]
fn four_point_minors_are_nonnegative() {
    for name in ["e8_roots", "cross_polytope(5)", "icosahedron", "cell600", "kissing(6)"] {
        let c = generate(name).unwrap();
        let n = c.len();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for _ in 0..2000 {
            let mut idx: Vec<usize> = (0..4).map(|_| rng.gen_range(0..n)).collect();
            idx.sort();
            idx.dedup();
            let g = DMatrix::from_fn(idx.len(), idx.len(), |r, s| c.float_dot(idx[r], idx[s]));
            assert!(spherecode::specstab::det_f64(&g) >= -1e-12, "{name} {idx:?}");
        }
    }
}

#[test]
fn sweeps() {
    let c = generate("cross_polytope(4)").unwrap();
    let cert = catalog_certificate("cross_polytope(4)").unwrap();
    let grid = [1e-6, 1e-5, 1e-4, 1e-3];
    let rep = stability_sweep(&c, &cert, &grid, 20, 42, Strategy::TangentNoise).unwrap();
    assert!(rep.trials.iter().all(|t| t.strong_bound_ok && t.weak_bound_ok));
    assert!(rep.medians_monotone());
    let again = stability_sweep(&c, &cert, &grid, 20, 42, Strategy::TangentNoise).unwrap();
    assert_eq!(rep.to_csv(), again.to_csv());

    let e8 = generate("e8_roots").unwrap();
    let zero = stability_sweep(&e8, &catalog_certificate("e8").unwrap(), &[0.0], 1, 5, Strategy::TangentNoise).unwrap();
    assert_eq!(zero.trials[0].gram_max_dev, 0.0);
    assert!(zero.fitted_exponent.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closeness_to_self_is_zero(d in 2usize..=6, n in 2usize..=20, seed in any::<u64>()) {
        let c = random_code(d, n, seed).unwrap();
        prop_assert_eq!(code_closeness(&c, &c).unwrap().gram_max_dev, 0.0);
    }
}
