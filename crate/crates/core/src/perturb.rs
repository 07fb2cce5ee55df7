//! Near-tight codes, closeness measurements and stability sweeps.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::codes::{max_float_dot, max_offdiag, SphericalCode};
use crate::error::{Error, Result};
use crate::lpbound::{weak_stability_constants, Certificate, WeakStabilityConstants};
use crate::specstab::{det_f64, strong_stability_constant, SpectralSummary, StrongConstant};
use crate::Rational;

/// Rounding slack allowed when checking the inner-product cap.
pub const CAP_SLACK: f64 = 1e-14;

const MAX_BACKTRACKS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    TangentNoise,
    PairStretch,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::TangentNoise => "tangent_noise",
            Strategy::PairStretch => "pair_stretch",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tangent_noise" => Ok(Strategy::TangentNoise),
            "pair_stretch" => Ok(Strategy::PairStretch),
            _ => Err(Error::InvalidInput(format!("unknown strategy {s:?} (tangent_noise, pair_stretch)"))),
        }
    }
}

/// Threshold `s` of a code: its largest off-diagonal inner product.
fn threshold_of(c: &SphericalCode) -> Result<f64> {
    Ok(max_offdiag(c)?.to_f64())
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An `(d, N, s+eps)`-code near `c`, where `s` is the largest inner product of `c`.
pub fn perturb_code(c: &SphericalCode, eps: f64, strategy: Strategy, seed: u64) -> Result<SphericalCode> {
    perturb_with_rng(c, eps, strategy, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn perturb_with_rng(c: &SphericalCode, eps: f64, strategy: Strategy, rng: &mut ChaCha8Rng) -> Result<SphericalCode> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be a finite number >= 0, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(c.clone());
    }
    let s = threshold_of(c)?;
    let cap = s + eps;
    match strategy {
        Strategy::TangentNoise => tangent_noise(c, cap, eps, rng),
        Strategy::PairStretch => pair_stretch(c, s, cap, rng),
    }
}

fn tangent_noise(c: &SphericalCode, cap: f64, eps: f64, rng: &mut ChaCha8Rng) -> Result<SphericalCode> {
    let (n, d) = (c.len(), c.dim());
    let mut noise: Vec<f64> = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    for i in 0..n {
        let x = c.point(i);
        let g = &mut noise[i * d..(i + 1) * d];
        let t = dot(g, x);
        g.iter_mut().zip(x).for_each(|(gi, xi)| *gi -= t * xi);
    }
    let mut eta = eps;
    for _ in 0..MAX_BACKTRACKS {
        let mut pts: Vec<f64> = c.points().iter().zip(&noise).map(|(x, g)| x + eta * g).collect();
        pts.chunks_exact_mut(d).for_each(normalize);
        let out = SphericalCode::from_points(d, pts, format!("{}+tangent_noise", c.label()))?;
        if max_float_dot(&out) <= cap + CAP_SLACK {
            return Ok(out);
        }
        eta /= 2.0;
    }
    Err(Error::OutsideRegime(format!(
        "tangent noise could not respect the cap {cap} after {MAX_BACKTRACKS} backtracks"
    )))
}

/// Moves `x_j` inside the plane of `x_i, x_j` so that `<x_i, x_j> = cap`,
/// over disjoint pairs at inner product `s` taken in random order.
fn pair_stretch(c: &SphericalCode, s: f64, cap: f64, rng: &mut ChaCha8Rng) -> Result<SphericalCode> {
    let (n, d) = (c.len(), c.dim());
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| (c.float_dot(i, j) - s).abs() <= 1e-12)
        .collect();
    pairs.shuffle(rng);
    let mut pts = c.points().to_vec();
    let mut used = vec![false; n];
    let (mut stretched, mut rejected) = (0usize, 0usize);
    let sin_cap = (1.0 - cap * cap).sqrt();
    for (i, j) in pairs {
        if used[i] || used[j] {
            continue;
        }
        let (i, j) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
        let xi = pts[i * d..(i + 1) * d].to_vec();
        let xj = &pts[j * d..(j + 1) * d];
        let t = dot(&xi, xj);
        let mut u: Vec<f64> = xj.iter().zip(&xi).map(|(b, a)| b - t * a).collect();
        normalize(&mut u);
        let new: Vec<f64> = xi.iter().zip(&u).map(|(a, b)| cap * a + sin_cap * b).collect();
        let ok = (0..n)
            .filter(|&k| k != j)
            .all(|k| dot(&new, &pts[k * d..(k + 1) * d]) <= cap + CAP_SLACK);
        if ok {
            pts[j * d..(j + 1) * d].copy_from_slice(&new);
            used[i] = true;
            used[j] = true;
            stretched += 1;
        } else {
            rejected += 1;
            if rejected >= MAX_BACKTRACKS && stretched == 0 {
                break;
            }
        }
    }
    if stretched == 0 {
        return Err(Error::OutsideRegime(format!(
            "no pair could be stretched to {cap} without breaking the cap"
        )));
    }
    SphericalCode::from_points(d, pts, format!("{}+pair_stretch", c.label()))
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials). Returns `sigma` with row `i` matched to column `sigma[i]`.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = none).
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0usize; n];
    for j in 1..=n {
        sigma[p[j] - 1] = j - 1;
    }
    sigma
}

fn check_same_shape(a: &SphericalCode, b: &SphericalCode) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("codes have {} and {} points", a.len(), b.len())));
    }
    Ok(())
}

fn check_bijective(sigma: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if sigma.len() != n {
        return Err(Error::InvalidInput(format!("matching has {} entries for {n} points", sigma.len())));
    }
    for &j in sigma {
        if j >= n || seen[j] {
            return Err(Error::InvalidInput("matching is not a bijection".into()));
        }
        seen[j] = true;
    }
    Ok(())
}

/// Angle between unit vectors, accurate for small angles.
pub fn angle(a: &[f64], b: &[f64]) -> f64 {
    let chord = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    2.0 * (chord / 2.0).min(1.0).asin()
}

/// Orthogonal map taking `A` onto `B` under a matching.
#[derive(Clone, Debug)]
pub struct Alignment {
    pub rotation: DMatrix<f64>,
    pub max_spherical_distance: f64,
}

/// Orthogonal `R` minimizing `sum ||R a_i - b_sigma(i)||^2` (reflections
/// allowed), from the polar factor of the cross-covariance.
pub fn align_codes(a: &SphericalCode, b: &SphericalCode, sigma: &[usize]) -> Result<Alignment> {
    check_same_shape(a, b)?;
    check_bijective(sigma, a.len())?;
    let d = a.dim();
    let mut h = DMatrix::<f64>::zeros(d, d);
    for (i, &j) in sigma.iter().enumerate() {
        let (x, y) = (a.point(i), b.point(j));
        for r in 0..d {
            for c in 0..d {
                h[(r, c)] += y[r] * x[c];
            }
        }
    }
    let svd = h.svd(true, true);
    if svd.singular_values.max() < 1e-12 {
        return Err(Error::Degenerate("cross-covariance vanishes".into()));
    }
    let rotation = svd.u.unwrap() * svd.v_t.unwrap();
    let mut worst = 0.0f64;
    let mut ra = vec![0.0; d];
    for (i, &j) in sigma.iter().enumerate() {
        let x = a.point(i);
        for (r, out) in ra.iter_mut().enumerate() {
            *out = (0..d).map(|c| rotation[(r, c)] * x[c]).sum();
        }
        normalize(&mut ra);
        worst = worst.max(angle(&ra, b.point(j)));
    }
    Ok(Alignment { rotation, max_spherical_distance: worst })
}

/// Largest `|<a_i,a_k> - <b_sigma(i), b_sigma(k)>|`.
pub fn gram_max_dev(a: &SphericalCode, b: &SphericalCode, sigma: &[usize]) -> Result<f64> {
    check_same_shape(a, b)?;
    check_bijective(sigma, a.len())?;
    let n = a.len();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|k| (a.float_dot(i, k) - b.float_dot(sigma[i], sigma[k])).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Matching, Gram deviation and alignment between two codes.
#[derive(Clone, Debug)]
pub struct Closeness {
    pub matching: Vec<usize>,
    pub gram_max_dev: f64,
    pub alignment: Alignment,
}

fn greedy_matching(a: &SphericalCode, b: &SphericalCode) -> Vec<usize> {
    let n = a.len();
    let mut taken = vec![false; n];
    (0..n)
        .map(|i| {
            let j = (0..n)
                .filter(|&j| !taken[j])
                .max_by(|&x, &y| dot(a.point(i), b.point(x)).total_cmp(&dot(a.point(i), b.point(y))).then(y.cmp(&x)))
                .unwrap();
            taken[j] = true;
            j
        })
        .collect()
}

fn assignment_after(a: &SphericalCode, b: &SphericalCode, r: &DMatrix<f64>) -> Vec<usize> {
    let (n, d) = (a.len(), a.dim());
    let moved: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let x = a.point(i);
            let mut y: Vec<f64> = (0..d).map(|row| (0..d).map(|c| r[(row, c)] * x[c]).sum()).collect();
            normalize(&mut y);
            y
        })
        .collect();
    let cost = DMatrix::from_fn(n, n, |i, j| angle(&moved[i], b.point(j)));
    min_cost_assignment(&cost)
}

/// Matching from a two-pass alignment: align on a greedy nearest-neighbour
/// matching, re-match by minimum total angle, re-align.
///
/// The reported deviation is an upper bound on the minimum over all permutations.
pub fn code_closeness(a: &SphericalCode, b: &SphericalCode) -> Result<Closeness> {
    check_same_shape(a, b)?;
    let greedy = greedy_matching(a, b);
    let first = align_codes(a, b, &greedy)?;
    let matching = assignment_after(a, b, &first.rotation);
    let alignment = align_codes(a, b, &matching)?;
    let gram_max_dev = gram_max_dev(a, b, &matching)?;
    Ok(Closeness { matching, gram_max_dev, alignment })
}

fn four_point_entries<T: Clone>(alpha: T, beta: T, one: T, half_d: [T; 4]) -> Vec<Vec<T>> {
    let [a, b, c, e] = half_d;
    vec![
        vec![one.clone(), alpha.clone(), a.clone(), b.clone()],
        vec![alpha, one.clone(), c.clone(), e.clone()],
        vec![a, c, one.clone(), beta.clone()],
        vec![b, e, beta, one],
    ]
}

/// Determinant of the Gram matrix of two pairs `x,y` and `z,t` with
/// `<x,y> = alpha`, `<z,t> = beta` and the cross products `1/2 + d_i`
/// ordered `xz, xt, yz, yt`.
pub fn four_point_det(alpha: f64, beta: f64, d: [f64; 4]) -> f64 {
    let rows = four_point_entries(alpha, beta, 1.0, d.map(|x| 0.5 + x));
    det_f64(&DMatrix::from_fn(4, 4, |r, c| rows[r][c]))
}

pub fn four_point_det_exact(alpha: &Rational, beta: &Rational, d: &[Rational; 4]) -> Rational {
    let half = Rational::new(1.into(), 2.into());
    let rows = four_point_entries(alpha.clone(), beta.clone(), Rational::one(), d.clone().map(|x| &half + x));
    det_exact(rows)
}

/// `(1-alpha)(1-beta)(alpha beta + alpha + beta)`, the value at `d = 0`.
pub fn four_point_closed_form(alpha: &Rational, beta: &Rational) -> Rational {
    let one = Rational::one();
    (&one - alpha) * (&one - beta) * (alpha * beta + alpha + beta)
}

/// Exact determinant by fraction-field elimination.
pub fn det_exact(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        for r in c + 1..n {
            let f = &a[r][c] / &a[c][c];
            for k in c..n {
                let sub = &f * &a[c][k];
                a[r][k] -= sub;
            }
        }
    }
    det
}

/// One perturbed code and what was measured on it.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationTrial {
    pub epsilon: f64,
    pub trial: usize,
    pub seed: u64,
    /// ChaCha stream of this trial: `(epsilon index << 32) | trial`.
    pub stream: u64,
    pub strategy: Strategy,
    pub achieved_max_offdiag: f64,
    pub gram_max_dev: f64,
    pub aligned_max_angle: f64,
    /// `epsilon < eps_count`, where the weak-stability bound applies.
    pub within_weak_regime: bool,
    /// `gram_max_dev <= K eps^(1/m)`.
    pub weak_bound_ok: bool,
    /// `aligned_max_angle <= C eps^(1/m)`.
    pub strong_bound_ok: bool,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub label: String,
    pub strategy: Strategy,
    pub trials: Vec<PerturbationTrial>,
    /// `(epsilon, median gram_max_dev, median aligned angle)`.
    pub medians: Vec<(f64, f64, f64)>,
    pub fitted_exponent: Option<f64>,
    pub fitted_prefactor: Option<f64>,
    pub weak: WeakStabilityConstants,
    pub strong: StrongConstant,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares line through `(ln x, ln y)`; returns `(slope, exp(intercept))`.
pub fn log_log_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, (my - slope * mx).exp()))
}

impl SweepReport {
    /// Median `gram_max_dev` never decreases along the grid.
    pub fn medians_monotone(&self) -> bool {
        self.medians.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,trial,gram_max_dev,aligned_max_angle\n");
        for t in &self.trials {
            out += &format!("{:?},{},{:?},{:?}\n", t.epsilon, t.trial, t.gram_max_dev, t.aligned_max_angle);
        }
        out
    }

    /// Whitespace-separated columns for plotting.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("# epsilon median_gram_max_dev median_aligned_max_angle\n");
        for (e, g, a) in &self.medians {
            out += &format!("{e:e} {g:e} {a:e}\n");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "code": self.label,
            "strategy": self.strategy.to_string(),
            "trials": self.trials.len(),
            "fitted_exponent": self.fitted_exponent,
            "fitted_prefactor": self.fitted_prefactor,
            "medians": self.medians.iter().map(|(e, g, a)| serde_json::json!({
                "epsilon": e, "gram_max_dev": g, "aligned_max_angle": a,
            })).collect::<Vec<_>>(),
            "medians_monotone": self.medians_monotone(),
            "m": self.weak.m,
            "K_weak": self.weak.k,
            "eps_count": self.weak.eps_count,
            "log10_C": self.strong.log10,
            "all_within_weak_regime": self.trials.iter().all(|t| t.within_weak_regime),
            "weak_bound_ok": self.trials.iter().all(|t| t.weak_bound_ok),
            "strong_bound_ok": self.trials.iter().all(|t| t.strong_bound_ok),
        })
    }
}

/// Perturbs a tight code at each `epsilon`, `trials_per_eps` times, and
/// measures Gram deviation and aligned distance against the stability bounds.
///
/// Trial `t` at grid index `e` draws from ChaCha stream `(e << 32) | t` of
/// `seed`, so results do not depend on scheduling.
pub fn stability_sweep(
    c: &SphericalCode,
    cert: &Certificate,
    eps_list: &[f64],
    trials_per_eps: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<SweepReport> {
    if eps_list.is_empty() || trials_per_eps == 0 {
        return Err(Error::InvalidInput("sweep needs at least one epsilon and one trial".into()));
    }
    if c.dim() != cert.dim {
        return Err(Error::DimensionMismatch { expected: cert.dim, got: c.dim() });
    }
    let weak = weak_stability_constants(cert, c.len() as u64)?;
    let spectral = match SpectralSummary::of_tight_frame(c) {
        Ok(s) => s,
        Err(_) => SpectralSummary::of_matrix(&DMatrix::from_row_slice(c.len(), c.len(), &c.gram_f64()))?,
    };
    let strong = strong_stability_constant(&spectral, weak.k, weak.m, c.dim());
    let inv_m = 1.0 / weak.m.max(1) as f64;
    let jobs: Vec<(usize, usize)> =
        (0..eps_list.len()).flat_map(|e| (0..trials_per_eps).map(move |t| (e, t))).collect();
    let trials = jobs
        .par_iter()
        .map(|&(e, t)| {
            let eps = eps_list[e];
            let stream = ((e as u64) << 32) | t as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let p = perturb_with_rng(c, eps, strategy, &mut rng)?;
            let close = code_closeness(c, &p)?;
            let scale = eps.powf(inv_m);
            let angle = close.alignment.max_spherical_distance;
            Ok(PerturbationTrial {
                epsilon: eps,
                trial: t,
                seed,
                stream,
                strategy,
                achieved_max_offdiag: max_float_dot(&p),
                gram_max_dev: close.gram_max_dev,
                aligned_max_angle: angle,
                within_weak_regime: eps < weak.eps_count,
                weak_bound_ok: close.gram_max_dev <= weak.k * scale,
                strong_bound_ok: angle.log10() <= strong.log10 + scale.log10() || angle == 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let medians: Vec<(f64, f64, f64)> = eps_list
        .iter()
        .enumerate()
        .map(|(e, &eps)| {
            let rows = &trials[e * trials_per_eps..(e + 1) * trials_per_eps];
            (
                eps,
                median(rows.iter().map(|t| t.gram_max_dev).collect()),
                median(rows.iter().map(|t| t.aligned_max_angle).collect()),
            )
        })
        .collect();
    let fit = log_log_fit(&medians.iter().map(|m| (m.0, m.1)).collect::<Vec<_>>());
    Ok(SweepReport {
        label: c.label().to_string(),
        strategy,
        trials,
        medians,
        fitted_exponent: fit.map(|f| f.0),
        fitted_prefactor: fit.map(|f| f.1),
        weak,
        strong,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::generate;
    use crate::exactmath::rat;

    #[test]
    fn zero_epsilon_is_identity() {
        let c = generate("e8_roots").unwrap();
        let p = perturb_code(&c, 0.0, Strategy::TangentNoise, 3).unwrap();
        assert_eq!(p.points(), c.points());
        assert!(perturb_code(&c, -1.0, Strategy::TangentNoise, 3).is_err());
    }

    #[test]
    fn tangent_noise_respects_cap() {
        let c = generate("e8_roots").unwrap();
        let p = perturb_code(&c, 1e-4, Strategy::TangentNoise, 7).unwrap();
        assert!(max_float_dot(&p) <= 0.5 + 1e-4 + CAP_SLACK);
        assert!(max_float_dot(&p) > 0.5);
        let again = perturb_code(&c, 1e-4, Strategy::TangentNoise, 7).unwrap();
        assert_eq!(p.points(), again.points());
    }

    #[test]
    fn pair_stretch_hits_the_cap() {
        let c = generate("cross_polytope(3)").unwrap();
        let p = perturb_code(&c, 1e-3, Strategy::PairStretch, 1).unwrap();
        let n = p.len();
        let hits = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| (p.float_dot(i, j) - 1e-3).abs() <= 1e-12)
            .count();
        assert!(hits >= 1);
        assert!(max_float_dot(&p) <= 1e-3 + CAP_SLACK);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            let cost = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
            let sigma = min_cost_assignment(&cost);
            let total = |s: &[usize]| s.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| best = best.min(total(p)));
            assert!((total(&sigma) - best).abs() < 1e-12);
        }
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn shuffled_code_is_zero_close() {
        let c = generate("e8_roots").unwrap();
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
        let s = c.select(&order).unwrap();
        let cl = code_closeness(&c, &s).unwrap();
        assert_eq!(cl.gram_max_dev, 0.0);
        assert!(cl.alignment.max_spherical_distance < 1e-7);
        let self_cl = code_closeness(&c, &c).unwrap();
        assert_eq!(self_cl.gram_max_dev, 0.0);
        assert_eq!(self_cl.matching, (0..c.len()).collect::<Vec<_>>());
    }

    #[test]
    fn antipodal_map_is_absorbed() {
        let c = generate("icosahedron").unwrap();
        let flipped: Vec<f64> = c.points().iter().map(|x| -x).collect();
        let f = SphericalCode::from_points(3, flipped, "flipped").unwrap();
        let id: Vec<usize> = (0..c.len()).collect();
        let al = align_codes(&c, &f, &id).unwrap();
        assert!(al.max_spherical_distance < 1e-7);
        assert!((al.rotation.determinant() + 1.0).abs() < 1e-12);
        assert!(code_closeness(&c, &f).unwrap().alignment.max_spherical_distance < 1e-7);
    }

    #[test]
    fn four_point_values() {
        assert_eq!(four_point_det(0.0, 0.0, [0.0; 4]), 0.0);
        assert!((four_point_det(-0.1, -0.1, [0.0; 4]) + 0.2299).abs() < 1e-15);
        let z = [rat(0, 1), rat(0, 1), rat(0, 1), rat(0, 1)];
        assert_eq!(four_point_det_exact(&rat(-1, 10), &rat(-1, 10), &z), rat(-2299, 10000));
        assert_eq!(four_point_closed_form(&rat(-1, 10), &rat(-1, 10)), rat(-2299, 10000));
    }

    #[test]
    fn log_log_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1e-6, 1e-5, 1e-4].iter().map(|&x: &f64| (x, 3.0 * x.powf(0.5))).collect();
        let (slope, pre) = log_log_fit(&pts).unwrap();
        assert!((slope - 0.5).abs() < 1e-12 && (pre - 3.0).abs() < 1e-9);
        assert!(log_log_fit(&[(0.0, 0.0)]).is_none());
    }
}
