//! Streamed inner-product histograms.
//!
//! Pairs are visited in fixed blocks of rows; every block produces a partial
//! result and the partials are reduced in block order, so the output does not
//! depend on how rayon schedules the blocks.

use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::{ExactModel, SphericalCode};
use crate::error::{Error, Result};
use crate::exactmath::{format_rational, rat, to_f64, Rational};

const BLOCK: usize = 64;

/// Ordered-pair counts of the integer dot products of an exact model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDistribution {
    norm: i64,
    /// `counts[k + norm]` is the number of ordered pairs with dot product `k`.
    counts: Vec<u64>,
}

impl ExactDistribution {
    fn empty(norm: i64) -> Self {
        ExactDistribution { norm, counts: vec![0; 2 * norm as usize + 1] }
    }

    pub fn norm(&self) -> i64 {
        self.norm
    }

    pub fn count(&self, dot: i64) -> u64 {
        if dot.abs() > self.norm {
            return 0;
        }
        self.counts[(dot + self.norm) as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Nonzero entries as `(inner product, ordered-pair count)`, ascending.
    pub fn values(&self) -> Vec<(Rational, u64)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (rat(k as i64 - self.norm, self.norm), c))
            .collect()
    }

    pub fn max_dot(&self) -> Option<i64> {
        self.counts.iter().rposition(|&c| c > 0).map(|k| k as i64 - self.norm)
    }
}

/// Accumulator for the pair kernels; `i16` when no partial sum can overflow it.
trait Acc: Copy + Default {
    fn from_i32(v: i32) -> Self;
    fn mul_add(self, a: Self, b: Self) -> Self;
    fn to_i32(self) -> i32;
}

impl Acc for i16 {
    fn from_i32(v: i32) -> Self {
        v as i16
    }
    #[inline(always)]
    fn mul_add(self, a: Self, b: Self) -> Self {
        self.wrapping_add(a.wrapping_mul(b))
    }
    fn to_i32(self) -> i32 {
        i32::from(self)
    }
}

impl Acc for i32 {
    fn from_i32(v: i32) -> Self {
        v
    }
    #[inline(always)]
    fn mul_add(self, a: Self, b: Self) -> Self {
        self + a * b
    }
    fn to_i32(self) -> i32 {
        self
    }
}

/// Rows of fixed width `D` (or any width when `D == 0`) in accumulator type.
struct Packed<T> {
    width: usize,
    data: Vec<T>,
}

#[inline(always)]
fn dot<T: Acc, const D: usize>(p: &Packed<T>, i: usize, j: usize) -> i32 {
    let w = if D == 0 { p.width } else { D };
    let a = &p.data[i * w..(i + 1) * w];
    let b = &p.data[j * w..(j + 1) * w];
    let mut s = T::default();
    for k in 0..w {
        s = s.mul_add(a[k], b[k]);
    }
    s.to_i32()
}

/// Unordered-pair histogram for rows `lo..hi` against all later rows.
#[inline(always)]
fn block_hist<T: Acc, const D: usize>(p: &Packed<T>, norm: i64, lo: usize, hi: usize) -> Vec<u64> {
    let n = p.data.len() / p.width;
    let bins = 2 * norm as usize + 1;
    let off = norm as i32;
    // Four interleaved histograms keep consecutive increments independent.
    let mut lanes = vec![0u64; 4 * bins];
    for i in lo..hi {
        let mut j = i + 1;
        while j + 4 <= n {
            for u in 0..4 {
                lanes[u * bins + (dot::<T, D>(p, i, j + u) + off) as usize] += 1;
            }
            j += 4;
        }
        for j in j..n {
            lanes[(dot::<T, D>(p, i, j) + off) as usize] += 1;
        }
    }
    (0..bins).map(|b| (0..4).map(|u| lanes[u * bins + b]).sum()).collect()
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn block_hist_avx2<T: Acc, const D: usize>(p: &Packed<T>, norm: i64, lo: usize, hi: usize) -> Vec<u64> {
    block_hist::<T, D>(p, norm, lo, hi)
}

fn block_hist_dispatch<T: Acc, const D: usize>(p: &Packed<T>, norm: i64, lo: usize, hi: usize) -> Vec<u64> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the feature was detected at runtime.
        return unsafe { block_hist_avx2::<T, D>(p, norm, lo, hi) };
    }
    block_hist::<T, D>(p, norm, lo, hi)
}

fn unordered_hist<T: Acc + Send + Sync>(m: &ExactModel, rows: &[usize]) -> Vec<u64> {
    let width = m.ambient();
    let data = rows.iter().flat_map(|&i| m.row(i).iter().map(|&v| T::from_i32(v))).collect();
    let p = Packed { width, data };
    let n = rows.len();
    let norm = m.norm();
    let blocks: Vec<(usize, usize)> = (0..n).step_by(BLOCK).map(|lo| (lo, (lo + BLOCK).min(n))).collect();
    let partials: Vec<Vec<u64>> = blocks
        .par_iter()
        .map(|&(lo, hi)| match width {
            8 => block_hist_dispatch::<T, 8>(&p, norm, lo, hi),
            24 => block_hist_dispatch::<T, 24>(&p, norm, lo, hi),
            _ => block_hist_dispatch::<T, 0>(&p, norm, lo, hi),
        })
        .collect();
    let mut total = vec![0u64; 2 * norm as usize + 1];
    for part in &partials {
        total.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    total
}

/// One row out of every antipodal pair, if the code is closed under negation.
fn antipodal_representatives(m: &ExactModel) -> Option<Vec<usize>> {
    let n = m.len();
    if n % 2 != 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m.row(a).cmp(m.row(b)));
    let mut reps = Vec::with_capacity(n / 2);
    for i in 0..n {
        let neg: Vec<i32> = m.row(i).iter().map(|v| -v).collect();
        let k = order.binary_search_by(|&a| m.row(a).cmp(&neg)).ok()?;
        if order[k] == i {
            return None;
        }
        if m.row(i) > neg.as_slice() {
            reps.push(i);
        }
    }
    Some(reps)
}

fn exact_hist(m: &ExactModel) -> ExactDistribution {
    let max = i64::from(m.max_abs());
    let narrow = max * max * m.ambient() as i64 <= i64::from(i16::MAX);
    let wide = max * max * m.ambient() as i64 <= i64::from(i32::MAX);
    let norm = m.norm();
    let mut h = ExactDistribution::empty(norm);
    if !wide {
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                h.counts[(m.dot(i, j) + norm) as usize] += 2;
            }
        }
        return h;
    }
    let hist = |rows: &[usize]| {
        if narrow {
            unordered_hist::<i16>(m, rows)
        } else {
            unordered_hist::<i32>(m, rows)
        }
    };
    match antipodal_representatives(m) {
        // Each unordered pair {r, r'} of representatives with dot k stands for
        // four ordered pairs at k and four at -k among {±r, ±r'}; each
        // representative adds two ordered pairs at -norm with its negation.
        Some(reps) => {
            let half = hist(&reps);
            let bins = half.len();
            for (b, &c) in half.iter().enumerate() {
                h.counts[b] += 4 * c;
                h.counts[bins - 1 - b] += 4 * c;
            }
            h.counts[0] += 2 * reps.len() as u64;
        }
        None => {
            let all: Vec<usize> = (0..m.len()).collect();
            for (b, c) in hist(&all).into_iter().enumerate() {
                h.counts[b] += 2 * c;
            }
        }
    }
    h
}

fn require_exact(c: &SphericalCode) -> Result<&ExactModel> {
    c.exact_model()
        .ok_or_else(|| Error::InvalidInput(format!("code {} has no exact model", c.label())))
}

/// Distribution of all off-diagonal inner products (ordered pairs).
pub fn exact_distribution(c: &SphericalCode) -> Result<ExactDistribution> {
    Ok(exact_hist(require_exact(c)?))
}

/// Distribution of `<x_i, x_j>` over `j != i`.
pub fn point_distribution(c: &SphericalCode, i: usize) -> Result<ExactDistribution> {
    let m = require_exact(c)?;
    if i >= m.len() {
        return Err(Error::IndexOutOfRange(i, i, m.len()));
    }
    let mut h = ExactDistribution::empty(m.norm());
    for j in (0..m.len()).filter(|&j| j != i) {
        h.counts[(m.dot(i, j) + m.norm()) as usize] += 1;
    }
    Ok(h)
}

/// Bucketed histogram of off-diagonal inner products.
#[derive(Clone, Debug, PartialEq)]
pub struct Census {
    pub n: usize,
    pub exact: bool,
    pub reference_values: Vec<Rational>,
    /// Ordered-pair counts per reference value.
    pub counts: Vec<u64>,
    pub max_deviation: Vec<f64>,
    /// `sum (<x,y> - alpha)` over the ordered pairs of each bucket.
    pub deviation_sums: Vec<f64>,
    pub catch_all: u64,
    /// Some pair `(i, j)`, `i < j`, that landed in the catch-all.
    pub first_stray: Option<(usize, usize)>,
}

impl Census {
    /// Counts per point, when every bucket count is divisible by `n`.
    pub fn per_point(&self) -> Option<Vec<u64>> {
        let n = self.n as u64;
        self.counts.iter().map(|&c| (c % n == 0).then_some(c / n)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,count,max_deviation\n");
        for (k, a) in self.reference_values.iter().enumerate() {
            s.push_str(&format!("{},{},{:e}\n", format_rational(a), self.counts[k], self.max_deviation[k]));
        }
        s.push_str(&format!("other,{},\n", self.catch_all));
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let buckets: Vec<_> = self
            .reference_values
            .iter()
            .enumerate()
            .map(|(k, a)| {
                serde_json::json!({
                    "alpha": format_rational(a),
                    "count": self.counts[k],
                    "max_deviation": self.max_deviation[k],
                })
            })
            .collect();
        serde_json::json!({
            "n": self.n,
            "mode": if self.exact { "exact" } else { "float" },
            "buckets": buckets,
            "catch_all": self.catch_all,
            "first_stray": self.first_stray,
        })
    }
}

fn check_refs(refs: &[Rational]) -> Result<()> {
    if refs.is_empty() || refs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("reference values must be nonempty and strictly increasing".into()));
    }
    Ok(())
}

/// Buckets an exact distribution; only exact matches count.
pub fn census_from_distribution(n: usize, dist: &ExactDistribution, refs: &[Rational]) -> Result<Census> {
    check_refs(refs)?;
    let mut counts = vec![0u64; refs.len()];
    let mut catch_all = 0;
    for (v, c) in dist.values() {
        match refs.binary_search(&v) {
            Ok(k) => counts[k] += c,
            Err(_) => catch_all += c,
        }
    }
    Ok(Census {
        n,
        exact: true,
        reference_values: refs.to_vec(),
        counts,
        max_deviation: vec![0.0; refs.len()],
        deviation_sums: vec![0.0; refs.len()],
        catch_all,
        first_stray: None,
    })
}

#[derive(Clone)]
struct FloatPartial {
    counts: Vec<u64>,
    max_dev: Vec<f64>,
    dev_sum: Vec<f64>,
    catch_all: u64,
    first_stray: Option<(usize, usize)>,
}

impl FloatPartial {
    fn new(m: usize) -> Self {
        FloatPartial { counts: vec![0; m], max_dev: vec![0.0; m], dev_sum: vec![0.0; m], catch_all: 0, first_stray: None }
    }
}

/// Bucket index of `t`: nearest reference with ties going up, or `None`
/// when the deviation exceeds `cap`.
fn bucket(refs: &[f64], mids: &[f64], t: f64, cap: f64) -> Option<usize> {
    let k = mids.partition_point(|&m| m <= t);
    ((t - refs[k]).abs() <= cap).then_some(k)
}

fn float_census(c: &SphericalCode, refs: &[Rational], tol: f64) -> Census {
    let n = c.len();
    let rf: Vec<f64> = refs.iter().map(to_f64).collect();
    let mids: Vec<f64> = rf.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    let blocks: Vec<(usize, usize)> = (0..n).step_by(BLOCK).map(|lo| (lo, (lo + BLOCK).min(n))).collect();
    let partials: Vec<FloatPartial> = blocks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut p = FloatPartial::new(rf.len());
            for i in lo..hi {
                for j in i + 1..n {
                    let t = c.float_dot(i, j);
                    match bucket(&rf, &mids, t, tol) {
                        Some(k) => {
                            let dev = t - rf[k];
                            p.counts[k] += 2;
                            p.dev_sum[k] += 2.0 * dev;
                            p.max_dev[k] = p.max_dev[k].max(dev.abs());
                        }
                        None => {
                            p.catch_all += 2;
                            p.first_stray.get_or_insert((i, j));
                        }
                    }
                }
            }
            p
        })
        .collect();
    let mut total = FloatPartial::new(rf.len());
    for p in &partials {
        for k in 0..rf.len() {
            total.counts[k] += p.counts[k];
            total.dev_sum[k] += p.dev_sum[k];
            total.max_dev[k] = total.max_dev[k].max(p.max_dev[k]);
        }
        total.catch_all += p.catch_all;
        if total.first_stray.is_none() {
            total.first_stray = p.first_stray;
        }
    }
    Census {
        n,
        exact: false,
        reference_values: refs.to_vec(),
        counts: total.counts,
        max_deviation: total.max_dev,
        deviation_sums: total.dev_sum,
        catch_all: total.catch_all,
        first_stray: total.first_stray,
    }
}

fn first_exact_stray(m: &ExactModel, refs: &[Rational]) -> Option<(usize, usize)> {
    let n = m.len();
    let hits: Vec<bool> = (-m.norm()..=m.norm())
        .map(|k| refs.binary_search(&rat(k, m.norm())).is_ok())
        .collect();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .find(|&(i, j)| !hits[(m.dot(i, j) + m.norm()) as usize])
}

/// Census against `refs`. Exact codes bucket by exact equality and ignore
/// `tol`; float codes use nearest-reference buckets capped at `tol`.
pub fn census(c: &SphericalCode, refs: &[Rational], tol: f64) -> Result<Census> {
    check_refs(refs)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be nonnegative")));
    }
    match c.exact_model() {
        Some(m) => {
            let mut cen = census_from_distribution(c.len(), &exact_hist(m), refs)?;
            if cen.catch_all > 0 {
                cen.first_stray = first_exact_stray(m, refs);
            }
            Ok(cen)
        }
        None => Ok(float_census(c, refs, tol)),
    }
}

/// `#{k != i, j : <x_i,x_k> and <x_j,x_k> both match value}`; exact codes
/// compare exactly, float codes within `tol`.
pub fn common_neighbor_count(c: &SphericalCode, i: usize, j: usize, value: &Rational, tol: f64) -> Result<u64> {
    let n = c.len();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange(i, j, n));
    }
    if i == j {
        return Err(Error::InvalidInput("common neighbors need two distinct points".into()));
    }
    let others = (0..n).filter(|&k| k != i && k != j);
    if let Some(m) = c.exact_model() {
        let scaled = value * Rational::from_integer(m.norm().into());
        if !scaled.is_integer() {
            return Ok(0);
        }
        let v = scaled.to_integer().to_i64().unwrap_or(i64::MAX);
        return Ok(others.filter(|&k| m.dot(i, k) == v && m.dot(j, k) == v).count() as u64);
    }
    let v = to_f64(value);
    Ok(others
        .filter(|&k| (c.float_dot(i, k) - v).abs() <= tol && (c.float_dot(j, k) - v).abs() <= tol)
        .count() as u64)
}

/// Largest off-diagonal inner product of the float coordinates.
pub fn max_float_dot(c: &SphericalCode) -> f64 {
    let n = c.len();
    (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| c.float_dot(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

impl Census {
    /// `true` when every pair landed in some bucket.
    pub fn is_complete(&self) -> bool {
        self.catch_all == 0 && self.counts.iter().sum::<u64>() + self.n as u64 == (self.n as u64).pow(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::generate;

    fn refs(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(p, q)| rat(p, q)).collect()
    }

    #[test]
    fn e8_census_per_point() {
        let c = generate("e8_roots").unwrap();
        let cen = census(&c, &refs(&[(-1, 1), (-1, 2), (0, 1), (1, 2)]), 0.0).unwrap();
        assert_eq!(cen.per_point().unwrap(), vec![1, 56, 126, 56]);
        assert!(cen.is_complete());
        for i in [0, 17, 239] {
            let p = point_distribution(&c, i).unwrap();
            assert_eq!([p.count(-8), p.count(-4), p.count(0), p.count(4)], [1, 56, 126, 56]);
        }
    }

    #[test]
    fn float_census_matches_exact_census() {
        let c = generate("e8_roots").unwrap();
        let r = refs(&[(-1, 1), (-1, 2), (0, 1), (1, 2)]);
        let a = census(&c, &r, 0.0).unwrap();
        let b = census(&c.to_float(), &r, 0.1).unwrap();
        assert_eq!(a.counts, b.counts);
        assert!(b.max_deviation.iter().all(|&d| d < 1e-15));
    }

    #[test]
    fn cross_polytope_census_and_strays() {
        let c = generate("cross_polytope(4)").unwrap();
        let cen = census(&c, &refs(&[(-1, 1), (0, 1)]), 0.0).unwrap();
        assert_eq!(cen.per_point().unwrap(), vec![1, 6]);
        let partial = census(&c, &refs(&[(0, 1)]), 0.0).unwrap();
        assert_eq!(partial.catch_all, 8);
        assert_eq!(partial.first_stray, Some((0, 1)));
        let fl = census(&c.to_float(), &refs(&[(0, 1)]), 0.1).unwrap();
        assert_eq!(fl.catch_all, 8);
        assert_eq!(fl.first_stray, Some((0, 1)));
    }

    #[test]
    fn kernels_match_brute_force() {
        for name in ["e8_roots", "simplex(6)", "kissing(6)", "kissing(7)", "cross_polytope(5)", "ngon(6)"] {
            let c = generate(name).unwrap();
            let m = c.exact_model().unwrap();
            let mut brute = ExactDistribution::empty(m.norm());
            for i in 0..m.len() {
                for j in (0..m.len()).filter(|&j| j != i) {
                    brute.counts[(m.dot(i, j) + m.norm()) as usize] += 1;
                }
            }
            assert_eq!(exact_distribution(&c).unwrap(), brute, "{name}");
        }
        let e8 = generate("e8_roots").unwrap();
        assert_eq!(antipodal_representatives(e8.exact_model().unwrap()).unwrap().len(), 120);
        let k6 = generate("kissing(6)").unwrap();
        assert!(antipodal_representatives(k6.exact_model().unwrap()).is_none());
    }

    #[test]
    fn half_open_buckets() {
        let r = [0.0, 1.0];
        let mids = [0.5];
        assert_eq!(bucket(&r, &mids, 0.4999, 0.6), Some(0));
        assert_eq!(bucket(&r, &mids, 0.5, 0.6), Some(1));
        assert_eq!(bucket(&r, &mids, 0.5, 0.1), None);
    }

    #[test]
    fn e8_common_neighbors() {
        let c = generate("e8_roots").unwrap();
        let m = c.exact_model().unwrap();
        let j = (1..240).find(|&j| m.dot(0, j) == 0).unwrap();
        assert_eq!(common_neighbor_count(&c, 0, j, &rat(1, 2), 0.0).unwrap(), 12);
        assert_eq!(common_neighbor_count(&c.to_float(), 0, j, &rat(1, 2), 1e-9).unwrap(), 12);
        assert_eq!(common_neighbor_count(&c, 0, j, &rat(1, 3), 0.0).unwrap(), 0);
    }

    #[test]
    fn census_rejects_unsorted_refs() {
        let c = generate("ngon(4)").unwrap();
        assert!(census(&c, &refs(&[(0, 1), (-1, 1)]), 0.1).is_err());
    }
}
