use proptest::prelude::*;
use spherecode::codes::{census, exact_distribution, generate, max_offdiag, random_code, Scalar};
use spherecode::exactmath::{gegenbauer_eval_f64, rat};
use spherecode::specstab::sym_eig;
use spherecode::Rational;

use nalgebra::DMatrix;

const EXACT: &[(&str, (i64, i64))] = &[
    ("simplex(4)", (-1, 4)),
    ("simplex(3,3)", (-1, 2)),
    ("cross_polytope(2)", (0, 1)),
    ("cross_polytope(7)", (0, 1)),
    ("ngon(3)", (-1, 2)),
    ("ngon(4)", (0, 1)),
    ("ngon(6)", (1, 2)),
    ("e8_roots", (1, 2)),
    ("kissing(7)", (1, 3)),
    ("kissing(6)", (1, 4)),
    ("kissing(5)", (1, 5)),
];

fn unit_rows(name: &str) {
    let c = generate(name).unwrap();
    for i in 0..c.len() {
        let n: f64 = c.point(i).iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12, "{name} row {i}");
    }
}

#[test]
fn exact_catalog_codes_hit_their_threshold_with_complete_census() {
    for &(name, (p, q)) in EXACT {
        unit_rows(name);
        let c = generate(name).unwrap();
        assert_eq!(max_offdiag(&c).unwrap(), Scalar::Exact(rat(p, q)), "{name}");
        let refs: Vec<Rational> = exact_distribution(&c).unwrap().values().into_iter().map(|v| v.0).collect();
        let cen = census(&c, &refs, 0.0).unwrap();
        assert!(cen.is_complete(), "{name}");
        let n = c.len() as u64;
        assert_eq!(cen.counts.iter().sum::<u64>() + n, n * n, "{name}");
    }
}

#[test]
fn float_catalog_codes_have_complete_census() {
    let approx = |x: f64| rat((x * 1e9).round() as i64, 1_000_000_000);
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let cases: Vec<(&str, Vec<f64>)> = vec![
        ("icosahedron", vec![-1.0, -1.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()]),
        ("cell600", vec![-1.0, -phi / 2.0, -0.5, -1.0 / (2.0 * phi), 0.0, 1.0 / (2.0 * phi), 0.5, phi / 2.0]),
        ("ngon(5)", vec![(4.0 * std::f64::consts::PI / 5.0).cos(), (2.0 * std::f64::consts::PI / 5.0).cos()]),
    ];
    for (name, vals) in cases {
        unit_rows(name);
        let c = generate(name).unwrap();
        let refs: Vec<Rational> = vals.into_iter().map(approx).collect();
        let cen = census(&c, &refs, 1e-6).unwrap();
        assert!(cen.is_complete(), "{name}");
        assert!(cen.counts.iter().all(|&k| k > 0), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Gegenbauer images of a Gram matrix are positive semidefinite.
    #[test]
    fn schoenberg_psd(d in 2usize..=24, n in 2usize..=64, seed in any::<u64>()) {
        let c = random_code(d, n, seed).unwrap();
        for i in 1..=10 {
            let m = DMatrix::from_fn(n, n, |a, b| {
                if a == b { 1.0 } else { gegenbauer_eval_f64(d, i, c.float_dot(a, b)) }
            });
            let lo = sym_eig(&m, 1e-9).unwrap().values[0];
            prop_assert!(lo >= -1e-8, "d={} n={} i={} min eigenvalue {}", d, n, i, lo);
        }
    }
}
