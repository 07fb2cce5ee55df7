//! Named configurations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{leech, ExactModel, SphericalCode};
use crate::error::{Error, Result};

pub const CATALOG_HELP: &str = "simplex(d,N) simplex(d) cross_polytope(d) ngon(N) icosahedron cell600 \
e8_roots leech_minimal kissing(d) for d in {5,6,7,22,23}";

fn parse_args(name: &str) -> Result<(String, Vec<usize>)> {
    let name = name.trim();
    let Some(open) = name.find('(') else {
        return Ok((name.to_string(), Vec::new()));
    };
    let inner = name[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::UnknownCode(name.to_string()))?;
    let args = inner
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::UnknownCode(name.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok((name[..open].trim().to_string(), args))
}

/// Builds a catalog code by name, e.g. `e8_roots`, `simplex(3,4)`, `kissing(7)`.
pub fn generate(name: &str) -> Result<SphericalCode> {
    let (base, args) = parse_args(name)?;
    let unknown = || Error::UnknownCode(name.to_string());
    let code = match (base.as_str(), args.as_slice()) {
        ("simplex", &[d]) => simplex(d, d + 1)?,
        ("simplex", &[d, n]) => simplex(d, n)?,
        ("cross_polytope", &[d]) => cross_polytope(d)?,
        ("ngon", &[n]) => ngon(n)?,
        ("icosahedron", &[]) => icosahedron()?,
        ("cell600", &[]) => cell600()?,
        ("e8_roots", &[]) => e8_roots()?,
        ("leech_minimal", &[]) => leech_minimal()?,
        ("kissing", &[d]) => match d {
            7 | 6 | 5 => kissing_subcode(&e8_roots()?, 8 - d)?,
            23 | 22 => kissing_subcode(&leech_minimal()?, 24 - d)?,
            _ => return Err(unknown()),
        },
        _ => return Err(unknown()),
    };
    Ok(code.with_label(name.trim()))
}

/// `N` vertices of a regular simplex in `R^d`, pairwise inner product `-1/(N-1)`.
///
/// Rows are `N e_i - (1,...,1)` in `R^N`.
fn simplex(d: usize, n: usize) -> Result<SphericalCode> {
    if d < 2 || n < 2 || n > d + 1 {
        return Err(Error::InvalidInput(format!("simplex needs 2 <= N <= d+1, got d={d}, N={n}")));
    }
    let n32 = n as i32;
    let rows: Vec<Vec<i32>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { n32 - 1 } else { -1 }).collect())
        .collect();
    let norm = i64::from((n32 - 1) * (n32 - 1) + n32 - 1);
    SphericalCode::from_exact(d, ExactModel::from_rows(norm, &rows)?, "")
}

/// `±e_i`, ordered `e_1, -e_1, e_2, ...`.
fn cross_polytope(d: usize) -> Result<SphericalCode> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("cross_polytope needs d >= 2, got {d}")));
    }
    let mut rows = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1, -1] {
            let mut r = vec![0; d];
            r[i] = s;
            rows.push(r);
        }
    }
    SphericalCode::from_exact(d, ExactModel::from_rows(1, &rows)?, "")
}

/// Regular `N`-gon in the plane. Exact for `N` in {1, 2, 3, 4, 6}, where all
/// inner products are rational.
fn ngon(n: usize) -> Result<SphericalCode> {
    let exact_rows: Option<(i64, Vec<Vec<i32>>)> = match n {
        1 => Some((1, vec![vec![1, 0]])),
        2 => Some((1, vec![vec![1, 0], vec![-1, 0]])),
        4 => Some((1, vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]])),
        3 | 6 => {
            let p = [vec![2, -1, -1], vec![-1, 2, -1], vec![-1, -1, 2]];
            let neg = |v: &Vec<i32>| v.iter().map(|x| -x).collect::<Vec<_>>();
            let rows = if n == 3 {
                p.to_vec()
            } else {
                vec![p[0].clone(), neg(&p[2]), p[1].clone(), neg(&p[0]), p[2].clone(), neg(&p[1])]
            };
            Some((6, rows))
        }
        _ => None,
    };
    if let Some((norm, rows)) = exact_rows {
        return SphericalCode::from_exact(2, ExactModel::from_rows(norm, &rows)?, "");
    }
    if n == 0 {
        return Err(Error::InvalidInput("ngon needs N >= 1".into()));
    }
    let pts = (0..n)
        .flat_map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    SphericalCode::from_unnormalized(2, pts, "")
}

fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// Cyclic permutations of `(0, ±1, ±phi)`.
fn icosahedron() -> Result<SphericalCode> {
    let phi = golden();
    let mut pts = Vec::with_capacity(36);
    for shift in 0..3 {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let base = [0.0, s1, s2 * phi];
                for k in 0..3 {
                    pts.push(base[(k + 3 - shift) % 3]);
                }
            }
        }
    }
    SphericalCode::from_unnormalized(3, pts, "")
}

/// The 120 unit quaternions of the binary icosahedral group.
fn cell600() -> Result<SphericalCode> {
    let phi = golden();
    let mut pts: Vec<[f64; 4]> = Vec::with_capacity(120);
    for i in 0..4 {
        for s in [1.0, -1.0] {
            let mut v = [0.0; 4];
            v[i] = s;
            pts.push(v);
        }
    }
    for signs in 0..16u32 {
        pts.push(std::array::from_fn(|k| if signs >> k & 1 == 0 { 0.5 } else { -0.5 }));
    }
    // Even permutations of (phi, 1, 1/phi, 0) / 2 with all sign choices.
    let even_perms: [[usize; 4]; 12] = [
        [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2], [1, 0, 3, 2], [1, 2, 0, 3], [1, 3, 2, 0],
        [2, 0, 1, 3], [2, 1, 3, 0], [2, 3, 0, 1], [3, 0, 2, 1], [3, 1, 0, 2], [3, 2, 1, 0],
    ];
    let base = [phi / 2.0, 0.5, 1.0 / (2.0 * phi), 0.0];
    for perm in even_perms {
        for signs in 0..8u32 {
            let mut v = [0.0; 4];
            for (k, &p) in perm.iter().enumerate() {
                let s = if k < 3 && signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                v[p] = s * base[k];
            }
            pts.push(v);
        }
    }
    SphericalCode::from_unnormalized(4, pts.concat(), "")
}

/// Doubled E8 roots: `(±2, ±2, 0^6)` and `(±1)^8` with an even number of minus signs.
fn e8_roots() -> Result<SphericalCode> {
    let mut rows = Vec::with_capacity(240);
    for i in 0..8 {
        for j in i + 1..8 {
            for (a, b) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
                let mut r = vec![0; 8];
                r[i] = a;
                r[j] = b;
                rows.push(r);
            }
        }
    }
    for signs in 0..256u32 {
        if signs.count_ones() % 2 == 0 {
            rows.push((0..8).map(|k| if signs >> k & 1 == 0 { 1 } else { -1 }).collect());
        }
    }
    SphericalCode::from_exact(8, ExactModel::from_rows(8, &rows)?, "")
}

fn leech_minimal() -> Result<SphericalCode> {
    let rows = leech::minimal_vectors()?;
    let coords = rows.iter().flat_map(|r| r.iter().map(|&v| i32::from(v))).collect();
    SphericalCode::from_exact(24, ExactModel::new(24, leech::LEECH_NORM, coords)?, "")
}

/// Points of an exact code at inner product `1/2` from each of `k` anchors
/// that are themselves pairwise at `1/2`, projected onto the orthogonal
/// complement of the anchors.
///
/// Anchors are chosen greedily in row order. With integer rows the
/// projection of `x` is proportional to `(k+1) x - sum(anchors)`, which
/// stays integral.
pub fn kissing_subcode(parent: &SphericalCode, k: usize) -> Result<SphericalCode> {
    let m = parent
        .exact_model()
        .ok_or_else(|| Error::InvalidInput("kissing sub-code needs an exact parent".into()))?;
    if k == 0 || k >= parent.dim() {
        return Err(Error::InvalidInput(format!("cannot fix {k} anchors")));
    }
    if m.norm() % 2 != 0 {
        return Err(Error::InvalidInput("parent norm must be even".into()));
    }
    let half = m.norm() / 2;
    let mut anchors: Vec<usize> = Vec::with_capacity(k);
    for i in 0..m.len() {
        if anchors.len() == k {
            break;
        }
        if anchors.iter().all(|&a| m.dot(a, i) == half) {
            anchors.push(i);
        }
    }
    if anchors.len() < k {
        return Err(Error::Degenerate(format!("only {} mutually adjacent anchors", anchors.len())));
    }
    let kk = (k + 1) as i32;
    let mut coords = Vec::new();
    let mut norm = None;
    for i in 0..m.len() {
        if anchors.contains(&i) || anchors.iter().any(|&a| m.dot(a, i) != half) {
            continue;
        }
        let row: Vec<i32> = (0..m.ambient())
            .map(|c| kk * m.row(i)[c] - anchors.iter().map(|&a| m.row(a)[c]).sum::<i32>())
            .collect();
        norm.get_or_insert_with(|| row.iter().map(|&v| i64::from(v) * i64::from(v)).sum::<i64>());
        coords.extend(row);
    }
    let norm = norm.ok_or_else(|| Error::Degenerate("no common neighbors".into()))?;
    SphericalCode::from_exact(parent.dim() - k, ExactModel::new(m.ambient(), norm, coords)?, "")
}

/// `n` independent uniform points on the sphere in `R^d`.
pub fn random_code(d: usize, n: usize, seed: u64) -> Result<SphericalCode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    SphericalCode::from_unnormalized(d, pts, format!("random({d},{n},{seed})"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{census, gram_entry, max_offdiag, Scalar};
    use crate::exactmath::rat;

    fn exact_max(name: &str) -> Scalar {
        max_offdiag(&generate(name).unwrap()).unwrap()
    }

    #[test]
    fn sizes_and_dimensions() {
        for (name, n, d) in [
            ("e8_roots", 240, 8),
            ("cross_polytope(3)", 6, 3),
            ("simplex(3,4)", 4, 3),
            ("simplex(5,3)", 3, 5),
            ("icosahedron", 12, 3),
            ("cell600", 120, 4),
            ("ngon(5)", 5, 2),
            ("ngon(6)", 6, 2),
        ] {
            let c = generate(name).unwrap();
            assert_eq!((c.len(), c.dim()), (n, d), "{name}");
            assert_eq!(c.label(), name);
        }
        assert!(matches!(generate("dodecahedron"), Err(Error::UnknownCode(_))));
        assert!(matches!(generate("kissing(8)"), Err(Error::UnknownCode(_))));
        assert!(generate("simplex(3,5)").is_err());
    }

    #[test]
    fn table_max_inner_products() {
        assert_eq!(exact_max("e8_roots"), Scalar::Exact(rat(1, 2)));
        assert_eq!(exact_max("simplex(3,4)"), Scalar::Exact(rat(-1, 3)));
        assert_eq!(exact_max("ngon(4)"), Scalar::Exact(rat(0, 1)));
        assert_eq!(exact_max("ngon(6)"), Scalar::Exact(rat(1, 2)));
        assert_eq!(exact_max("cross_polytope(5)"), Scalar::Exact(rat(0, 1)));
        let ico = exact_max("icosahedron").to_f64();
        assert!((ico - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        let c600 = exact_max("cell600").to_f64();
        assert!((c600 - golden() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn icosahedron_inner_products() {
        let c = generate("icosahedron").unwrap();
        let r5 = 1.0 / 5f64.sqrt();
        for i in 0..12 {
            for j in 0..12 {
                let t = c.float_dot(i, j);
                let ok = [1.0, -1.0, r5, -r5].iter().any(|v| (t - v).abs() < 1e-12);
                assert!(ok, "{t}");
            }
        }
    }

    #[test]
    fn e8_rows_and_gram_values() {
        let c = generate("e8_roots").unwrap();
        let m = c.exact_model().unwrap();
        assert_eq!(m.norm(), 8);
        let allowed = [rat(-1, 1), rat(-1, 2), rat(0, 1), rat(1, 2)];
        for j in 1..240 {
            let g = gram_entry(&c, 0, j).unwrap();
            assert!(allowed.contains(g.as_exact().unwrap()));
        }
        assert_eq!(gram_entry(&c, 5, 5).unwrap(), Scalar::Exact(rat(1, 1)));
    }

    #[test]
    fn e8_kissing_subcodes() {
        for (d, n, refs) in [
            (7, 56, vec![rat(-1, 1), rat(-1, 3), rat(1, 3)]),
            (6, 27, vec![rat(-1, 2), rat(1, 4)]),
            (5, 16, vec![rat(-3, 5), rat(1, 5)]),
        ] {
            let c = generate(&format!("kissing({d})")).unwrap();
            assert_eq!((c.len(), c.dim()), (n, d));
            let cen = census(&c, &refs, 0.0).unwrap();
            assert_eq!(cen.catch_all, 0, "kissing({d})");
            assert!(cen.counts.iter().all(|&k| k > 0), "kissing({d}) {:?}", cen.counts);
            for i in 0..n {
                let norm: f64 = c.point(i).iter().map(|x| x * x).sum();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_codes_are_deterministic() {
        let a = random_code(5, 7, 3).unwrap();
        let b = random_code(5, 7, 3).unwrap();
        assert_eq!(a.points(), b.points());
        assert_ne!(a.points(), random_code(5, 7, 4).unwrap().points());
    }
}
