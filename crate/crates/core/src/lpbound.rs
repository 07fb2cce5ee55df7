//! Delsarte linear-programming certificates and the quantities built on them.
//!
//! A certificate is a polynomial `f = sum f_i Q_i` in dimension `d` with
//! `f_0 > 0`, `f_i >= 0` for `i >= 1`, and `f <= 0` on `[-1, s]`. Any code
//! with inner products at most `s` then has at most `f(1)/f_0` points.

use std::path::Path;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::codes::{exact_distribution, Census, ExactDistribution, Scalar, SphericalCode};
use crate::error::{Error, Result};
use crate::exactmath::{
    expand, format_rational, gegenbauer_eval, gegenbauer_eval_f64, gegenbauer_monomial, int,
    max_on_interval, nonpositive_on_interval, parse_rational, rat, real_roots_with_multiplicity,
    reconstruct, to_f64, ExtremumBound, GegenbauerExpansion, MonomialPoly, Rational, RootList,
    RootLocation,
};

/// A verified certificate together with its derived data.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub dim: usize,
    pub s: Rational,
    pub expansion: GegenbauerExpansion,
    pub poly: MonomialPoly,
    /// Roots of `f` in `[-1, s]`.
    pub roots: RootList,
    /// Largest multiplicity among `roots`.
    pub m: usize,
    pub bound: Rational,
}

/// Checks the three certificate conditions exactly and computes the bound.
pub fn verify_certificate(dim: usize, e: &GegenbauerExpansion, s: &Rational) -> Result<Certificate> {
    if e.dim != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: e.dim });
    }
    if e.coeffs.len() < 2 {
        return Err(Error::CertificateRejected("degree must be at least 1".into()));
    }
    let minus_one = int(-1);
    if s <= &minus_one || s >= &Rational::one() {
        return Err(Error::CertificateRejected(format!(
            "threshold s = {} must lie in (-1, 1)",
            format_rational(s)
        )));
    }
    let f0 = &e.coeffs[0];
    if !f0.is_positive() {
        return Err(Error::CertificateRejected(format!("f_0 = {} is not positive", format_rational(f0))));
    }
    if let Some((i, fi)) = e.coeffs.iter().enumerate().skip(1).find(|(_, c)| c.is_negative()) {
        return Err(Error::CertificateRejected(format!("f_{i} = {} is negative", format_rational(fi))));
    }
    let poly = reconstruct(e);
    let verdict = nonpositive_on_interval(&poly, &minus_one, s)?;
    if !verdict.holds {
        let w = verdict.witness.expect("witness accompanies a failed sign check");
        return Err(Error::CertificateRejected(format!(
            "f is positive on [-1, {}]: f({}) = {} (~{:.6e} at t ~ {:.6})",
            format_rational(s),
            format_rational(&w),
            format_rational(&poly.eval(&w)),
            to_f64(&poly.eval(&w)),
            to_f64(&w),
        )));
    }
    let roots = real_roots_with_multiplicity(&poly, &minus_one, s)?;
    let bound = poly.eval(&Rational::one()) / f0;
    Ok(Certificate { dim, s: s.clone(), expansion: e.clone(), m: roots.max_multiplicity(), roots, poly, bound })
}

impl Certificate {
    pub fn f0(&self) -> &Rational {
        &self.expansion.coeffs[0]
    }

    pub fn degree(&self) -> usize {
        self.expansion.coeffs.len() - 1
    }

    pub fn to_file(&self) -> CertificateFile {
        CertificateFile {
            dim: self.dim,
            s: format_rational(&self.s),
            coeffs: self.expansion.coeffs.iter().map(format_rational).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let roots: Vec<_> = self
            .roots
            .entries
            .iter()
            .map(|r| match &r.location {
                RootLocation::Exact(x) => serde_json::json!({
                    "root": format_rational(x), "multiplicity": r.multiplicity }),
                RootLocation::Isolated { lo, hi } => serde_json::json!({
                    "interval": [format_rational(lo), format_rational(hi)],
                    "approx": to_f64(&((lo + hi) / int(2))),
                    "multiplicity": r.multiplicity }),
            })
            .collect();
        serde_json::json!({
            "dim": self.dim,
            "s": format_rational(&self.s),
            "coeffs": self.to_file().coeffs,
            "roots": roots,
            "m": self.m,
            "bound": format_rational(&self.bound),
        })
    }
}

/// On-disk certificate: `{"dim": d, "s": "p/q", "coeffs": ["f_0", ...]}` in the Gegenbauer basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub dim: usize,
    pub s: String,
    pub coeffs: Vec<String>,
}

impl CertificateFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn expansion(&self) -> Result<GegenbauerExpansion> {
        let coeffs = self.coeffs.iter().map(|c| parse_rational(c)).collect::<Result<Vec<_>>>()?;
        GegenbauerExpansion::new(self.dim, coeffs)
    }

    pub fn threshold(&self) -> Result<Rational> {
        parse_rational(&self.s)
    }

    pub fn verify(&self) -> Result<Certificate> {
        verify_certificate(self.dim, &self.expansion()?, &self.threshold()?)
    }
}

fn product_poly(c: Rational, roots: &[((i64, i64), usize)]) -> MonomialPoly {
    let r: Vec<(Rational, usize)> = roots.iter().map(|&((p, q), k)| (rat(p, q), k)).collect();
    MonomialPoly::from_roots(c, &r)
}

/// `320/3 (t+1)(t+1/2)^2 t^2 (t-1/2)`.
pub fn e8_polynomial() -> MonomialPoly {
    product_poly(rat(320, 3), &[((-1, 1), 1), ((-1, 2), 2), ((0, 1), 2), ((1, 2), 1)])
}

/// `1490944/15 (t+1)(t+1/2)^2 (t+1/4)^2 t^2 (t-1/4)^2 (t-1/2)`.
pub fn leech_polynomial() -> MonomialPoly {
    product_poly(
        rat(1_490_944, 15),
        &[((-1, 1), 1), ((-1, 2), 2), ((-1, 4), 2), ((0, 1), 2), ((1, 4), 2), ((1, 2), 1)],
    )
}

/// Certificates for the catalog codes that have one: `e8`, `leech`,
/// `cross_polytope(d)` with `f = t(t+1)`, and `simplex(d)` with `f = t + 1/d`.
pub fn catalog_certificate(name: &str) -> Result<Certificate> {
    let name = name.trim();
    let arg = |prefix: &str| -> Option<usize> {
        name.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?.trim().parse().ok()
    };
    let (dim, poly, s) = if name == "e8" || name == "e8_roots" {
        (8, e8_polynomial(), rat(1, 2))
    } else if name == "leech" || name == "leech_minimal" {
        (24, leech_polynomial(), rat(1, 2))
    } else if let Some(d) = arg("cross_polytope") {
        (d, product_poly(int(1), &[((-1, 1), 1), ((0, 1), 1)]), int(0))
    } else if let Some(d) = arg("simplex") {
        (d, MonomialPoly::new(vec![rat(1, d.max(1) as i64), int(1)]), rat(-1, d.max(1) as i64))
    } else {
        return Err(Error::UnknownCode(format!("no certificate for {name}")));
    };
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
    }
    verify_certificate(dim, &expand(dim, &poly)?, &s)
}

/// Off-diagonal inner products of a code, in whichever form is available.
pub enum PairData<'a> {
    /// Exact ordered-pair histogram.
    Exact(ExactDistribution),
    /// Float code; sums are formed pair by pair.
    Float(&'a SphericalCode),
}

impl<'a> PairData<'a> {
    pub fn of(c: &'a SphericalCode) -> Result<Self> {
        Ok(match c.exact_model() {
            Some(_) => PairData::Exact(exact_distribution(c)?),
            None => PairData::Float(c),
        })
    }

    fn max_offdiag(&self) -> Option<Scalar> {
        match self {
            PairData::Exact(d) => d.max_dot().map(|k| Scalar::Exact(rat(k, d.norm()))),
            PairData::Float(c) => {
                let n = c.len();
                let mut best = f64::NEG_INFINITY;
                for i in 0..n {
                    for j in i + 1..n {
                        best = best.max(c.float_dot(i, j));
                    }
                }
                (n >= 2).then_some(Scalar::Approx(best))
            }
        }
    }

    /// `sum_{x != y} g(<x,y>)` with `g` given exactly and in floating point.
    fn offdiag_sum(&self, exact: impl Fn(&Rational) -> Rational, float: impl Fn(f64) -> f64) -> Scalar {
        match self {
            PairData::Exact(d) => Scalar::Exact(
                d.values()
                    .iter()
                    .fold(Rational::zero(), |acc, (v, c)| acc + exact(v) * int(*c as i64)),
            ),
            PairData::Float(c) => {
                let n = c.len();
                let mut s = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        s += 2.0 * float(c.float_dot(i, j));
                    }
                }
                Scalar::Approx(s)
            }
        }
    }
}

fn check_dim(c: &SphericalCode, e: &GegenbauerExpansion) -> Result<()> {
    if c.dim() != e.dim {
        return Err(Error::DimensionMismatch { expected: e.dim, got: c.dim() });
    }
    Ok(())
}

fn add_scalar(s: Scalar, exact: Rational) -> Scalar {
    match s {
        Scalar::Exact(r) => Scalar::Exact(r + exact),
        Scalar::Approx(x) => Scalar::Approx(x + to_f64(&exact)),
    }
}

/// `N f(1) + sum_{x != y} f(<x,y>) - N^2 f_0`, from precomputed pair data.
pub fn lp_slack_from(n: usize, pairs: &PairData, e: &GegenbauerExpansion) -> Scalar {
    let f = reconstruct(e);
    let fc = f.to_f64_coeffs();
    let nn = int(n as i64);
    let sum = pairs.offdiag_sum(|t| f.eval(t), |t| fc.iter().rev().fold(0.0, |acc, c| acc * t + c));
    add_scalar(sum, &nn * f.eval(&Rational::one()) - &nn * &nn * &e.coeffs[0])
}

pub fn lp_slack(c: &SphericalCode, e: &GegenbauerExpansion) -> Result<Scalar> {
    check_dim(c, e)?;
    Ok(lp_slack_from(c.len(), &PairData::of(c)?, e))
}

/// `sum_{x,y} Q_i(<x,y>)` for `i = 1..=k`, diagonal included.
pub fn component_sums_from(n: usize, pairs: &PairData, dim: usize, k: usize) -> Vec<Scalar> {
    (1..=k)
        .map(|i| {
            let sum = pairs.offdiag_sum(|t| gegenbauer_eval(dim, i, t), |t| gegenbauer_eval_f64(dim, i, t));
            add_scalar(sum, int(n as i64))
        })
        .collect()
}

pub fn component_sums(c: &SphericalCode, e: &GegenbauerExpansion) -> Result<Vec<Scalar>> {
    check_dim(c, e)?;
    Ok(component_sums_from(c.len(), &PairData::of(c)?, e.dim, e.coeffs.len() - 1))
}

/// Outcome of checking whether a code meets a certificate with equality.
#[derive(Clone, Debug, PartialEq)]
pub struct TightnessReport {
    pub n: usize,
    pub max_offdiag: Option<Scalar>,
    /// False when some inner product exceeds the certificate threshold.
    pub applicable: bool,
    pub lp_slack: Option<Scalar>,
    /// `(i, sum)` for every `i >= 1` with `f_i > 0`.
    pub component_sums: Vec<(usize, Scalar)>,
    pub is_tight: bool,
}

impl TightnessReport {
    pub fn to_json(&self) -> serde_json::Value {
        let sums: Vec<_> = self
            .component_sums
            .iter()
            .map(|(i, v)| serde_json::json!({ "i": i, "sum": v.to_json() }))
            .collect();
        serde_json::json!({
            "n": self.n,
            "max_offdiag": self.max_offdiag.as_ref().map(Scalar::to_json),
            "applicable": self.applicable,
            "lp_slack": self.lp_slack.as_ref().map(Scalar::to_json),
            "component_sums": sums,
            "tight": self.is_tight,
        })
    }
}

/// Float results count as zero within `1e-8 N^2`.
fn float_tolerance(n: usize) -> f64 {
    1e-8 * (n as f64).powi(2)
}

fn is_zero_scalar(v: &Scalar, n: usize) -> bool {
    match v {
        Scalar::Exact(r) => r.is_zero(),
        Scalar::Approx(x) => x.abs() <= float_tolerance(n),
    }
}

pub fn tightness_report_from(n: usize, pairs: &PairData, cert: &Certificate) -> TightnessReport {
    let max_offdiag = pairs.max_offdiag();
    let applicable = match &max_offdiag {
        None => true,
        Some(Scalar::Exact(r)) => r <= &cert.s,
        Some(Scalar::Approx(x)) => *x <= to_f64(&cert.s) + float_tolerance(1),
    };
    if !applicable {
        return TightnessReport {
            n,
            max_offdiag,
            applicable,
            lp_slack: None,
            component_sums: Vec::new(),
            is_tight: false,
        };
    }
    let slack = lp_slack_from(n, pairs, &cert.expansion);
    let all = component_sums_from(n, pairs, cert.dim, cert.degree());
    let listed: Vec<(usize, Scalar)> = all
        .into_iter()
        .enumerate()
        .map(|(k, v)| (k + 1, v))
        .filter(|(i, _)| cert.expansion.coeffs[*i].is_positive())
        .collect();
    // Zero slack alone allows N below the bound when f is negative on some pair.
    let attains = Rational::from_integer(n.into()) == cert.bound;
    let is_tight = attains && is_zero_scalar(&slack, n) && listed.iter().all(|(_, v)| is_zero_scalar(v, n));
    TightnessReport { n, max_offdiag, applicable, lp_slack: Some(slack), component_sums: listed, is_tight }
}

pub fn tightness_report(c: &SphericalCode, cert: &Certificate) -> Result<TightnessReport> {
    check_dim(c, &cert.expansion)?;
    Ok(tightness_report_from(c.len(), &PairData::of(c)?, cert))
}

/// Constants of the weak (Gram-matrix) stability estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakStabilityConstants {
    pub n: u64,
    pub m: usize,
    /// Smallest root of `f` in `(s, 1)`, or 1.
    pub r: Rational,
    /// `max f(t)/(t-s)` on `[s, (s+r)/2]`.
    pub big_m: ExtremumBound,
    /// `max f(t)/(t-s)` on `[s, 1]`.
    pub big_m_full: ExtremumBound,
    /// Certified lower bound on `min_{[-1,1]} max_j |f(t)/(t-x_j)^{m_j}|`.
    pub m_prime: Rational,
    /// True when `m_prime` is the exact minimum, attained at a rational point.
    pub m_prime_exact: bool,
    pub m_prime_at: f64,
    pub k: f64,
    pub eps_count: f64,
    /// `f_0 / (N M)` with `M` taken on `[s, 1]`.
    pub eps_count_full: f64,
    pub eps_geom: f64,
}

impl WeakStabilityConstants {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "m": self.m,
            "r": format_rational(&self.r),
            "M": format_rational(&self.big_m.value),
            "M_approx": to_f64(&self.big_m.value),
            "M_exact": self.big_m.exact,
            "M_on_s_to_1": format_rational(&self.big_m_full.value),
            "M_on_s_to_1_exact": self.big_m_full.exact,
            "M_prime_lower_bound": to_f64(&self.m_prime),
            "M_prime_exact": self.m_prime_exact,
            "M_prime_at": self.m_prime_at,
            "K": self.k,
            "eps_count": self.eps_count,
            "eps_count_on_s_to_1": self.eps_count_full,
            "eps_geom": self.eps_geom,
        })
    }
}

/// `f / (t - x)^m` as an exact polynomial.
fn deflate(f: &MonomialPoly, x: &Rational, m: usize) -> Result<MonomialPoly> {
    let lin = MonomialPoly::new(vec![-x.clone(), Rational::one()]);
    f.div_exact(&lin.pow(m))
}

/// Lower bound for `max_j |h_j|` over `[lo, hi]` from interval enclosures.
fn max_abs_lower(hs: &[MonomialPoly], lo: &Rational, hi: &Rational) -> Rational {
    hs.iter()
        .map(|h| {
            let (a, b) = h.enclose(lo, hi);
            if a.is_positive() {
                a
            } else if b.is_negative() {
                -b
            } else {
                Rational::zero()
            }
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

fn max_abs_at(hs: &[MonomialPoly], t: &Rational) -> Rational {
    hs.iter().map(|h| h.eval(t).abs()).max().unwrap_or_else(Rational::zero)
}

/// Minimum over `[-1, 1]` of `max_j |h_j(t)|`, where `h_j = f/(t-x_j)^{m_j}`
/// runs over the real roots of `f` in `[-1, 1]`.
///
/// The minimum of a maximum of smooth functions is attained at an endpoint,
/// at a critical point or zero of a single `h_j`, or where two of them agree
/// in absolute value. All such candidates are isolated exactly; irrational
/// ones contribute a certified lower bound.
fn m_prime(f: &MonomialPoly) -> Result<(Rational, bool, f64)> {
    let (a, b) = (int(-1), int(1));
    let roots = real_roots_with_multiplicity(f, &a, &b)?;
    let mut hs = Vec::new();
    for e in &roots.entries {
        let x = e.location.exact().ok_or_else(|| {
            Error::Degenerate("M' needs the roots of f in [-1, 1] to be rational".into())
        })?;
        hs.push(deflate(f, x, e.multiplicity)?);
    }
    if hs.is_empty() {
        return Err(Error::Degenerate("f has no roots in [-1, 1]".into()));
    }
    let mut polys: Vec<MonomialPoly> = Vec::new();
    for (i, h) in hs.iter().enumerate() {
        polys.push(h.derivative());
        polys.push(h.clone());
        for g in &hs[i + 1..] {
            polys.push(h - g);
            polys.push(h + g);
        }
    }
    let mut best: Option<(Rational, bool, f64)> = None;
    let mut consider = |value: Rational, exact: bool, at: f64| {
        if best.as_ref().map_or(true, |(v, _, _)| value < *v) {
            best = Some((value, exact, at));
        }
    };
    for t in [&a, &b] {
        consider(max_abs_at(&hs, t), true, to_f64(t));
    }
    for p in polys.iter().filter(|p| p.degree().unwrap_or(0) > 0) {
        for e in real_roots_with_multiplicity(p, &a, &b)?.entries {
            match &e.location {
                RootLocation::Exact(t) => consider(max_abs_at(&hs, t), true, to_f64(t)),
                RootLocation::Isolated { lo, hi } => {
                    consider(max_abs_lower(&hs, lo, hi), false, e.location.approx())
                }
            }
        }
    }
    Ok(best.expect("endpoints are always candidates"))
}

/// Weak-stability constants of a certificate for a tight code of size `n`.
///
/// Requires `f(s) = 0`, so that `f(t)/(t-s)` is a polynomial.
pub fn weak_stability_constants(cert: &Certificate, n: u64) -> Result<WeakStabilityConstants> {
    let f = &cert.poly;
    let s = &cert.s;
    if !f.eval(s).is_zero() {
        return Err(Error::Degenerate(format!("f({}) != 0; f/(t-s) is not a polynomial", format_rational(s))));
    }
    if n < 2 {
        return Err(Error::InvalidInput("N must be at least 2".into()));
    }
    let one = Rational::one();
    let upper = real_roots_with_multiplicity(f, s, &one)?;
    let r = upper
        .entries
        .iter()
        .map(|e| e.location.lo().clone())
        .find(|x| x > s)
        .unwrap_or_else(|| one.clone());
    // An isolated root is only known up to its interval; its lower end keeps
    // the geometric margin conservative.
    let g = deflate(f, s, 1)?;
    let mid = (s + &r) / int(2);
    let big_m = max_on_interval(&g, s, &mid)?;
    let big_m_full = max_on_interval(&g, s, &one)?;
    if !big_m.value.is_positive() {
        return Err(Error::Degenerate("f(t)/(t-s) is not positive near s".into()));
    }
    let (mp, mp_exact, mp_at) = m_prime(f)?;
    if !mp.is_positive() {
        return Err(Error::Degenerate("M' is zero".into()));
    }
    let nf = n as f64;
    let ratio = to_f64(&(&big_m.value / &mp));
    let k = ((nf * nf - nf - 1.0) * ratio).max(1.0);
    let f0 = cert.f0();
    let eps_count = to_f64(&(f0 / (&big_m.value * int(n as i64))));
    let eps_count_full = to_f64(&(f0 / (&big_m_full.value * int(n as i64))));
    let eps_geom = to_f64(&((&r - s) / int(2)));
    Ok(WeakStabilityConstants {
        n,
        m: cert.m,
        r,
        big_m,
        big_m_full,
        m_prime: mp,
        m_prime_exact: mp_exact,
        m_prime_at: mp_at,
        k,
        eps_count,
        eps_count_full,
        eps_geom,
    })
}

/// `Q_i'(alpha)` for `i = 1..=k` and each reference value.
pub fn linearization_coefficients(dim: usize, refs: &[Rational], k: usize) -> Vec<Vec<Rational>> {
    (1..=k)
        .map(|i| {
            let dq = gegenbauer_monomial(dim, i).derivative();
            refs.iter().map(|a| dq.eval(a)).collect()
        })
        .collect()
}

/// Bucket deviations and their first-order effect on the component sums.
#[derive(Clone, Debug, PartialEq)]
pub struct SAlphaReport {
    pub reference_values: Vec<Rational>,
    pub counts: Vec<u64>,
    /// `S_alpha = sum over ordered pairs in the bucket of (<x,y> - alpha)`.
    pub s_alpha: Vec<f64>,
    pub max_deviation: f64,
    /// `N + sum_alpha count_alpha Q_i(alpha)`, for `i = 1..=k`.
    pub baseline: Vec<f64>,
    /// `sum_alpha Q_i'(alpha) S_alpha`.
    pub linearized: Vec<f64>,
    /// `sum_{x,y} Q_i(<x,y>)` evaluated directly.
    pub component_sums: Vec<f64>,
}

impl SAlphaReport {
    pub fn to_json(&self) -> serde_json::Value {
        let buckets: Vec<_> = self
            .reference_values
            .iter()
            .zip(&self.counts)
            .zip(&self.s_alpha)
            .map(|((a, c), s)| serde_json::json!({ "alpha": format_rational(a), "count": c, "S": s }))
            .collect();
        serde_json::json!({
            "buckets": buckets,
            "max_deviation": self.max_deviation,
            "baseline": self.baseline,
            "linearized": self.linearized,
            "component_sums": self.component_sums,
        })
    }
}

/// `S_alpha` sums and the linearized component sums for `i = 1..=k`.
pub fn s_alpha_sums(c: &SphericalCode, refs: &[Rational], tol: f64, k: usize) -> Result<SAlphaReport> {
    let cen = crate::codes::census(c, refs, tol)?;
    s_alpha_from_census(c, &cen, k)
}

pub fn s_alpha_from_census(c: &SphericalCode, cen: &Census, k: usize) -> Result<SAlphaReport> {
    if cen.catch_all > 0 {
        return Err(Error::StrayPairs { count: cen.catch_all, first: cen.first_stray.unwrap_or((0, 0)) });
    }
    let refs = &cen.reference_values;
    let dim = c.dim();
    let n = c.len() as f64;
    let coeffs = linearization_coefficients(dim, refs, k);
    let linearized = coeffs
        .iter()
        .map(|row| row.iter().zip(&cen.deviation_sums).map(|(q, s)| to_f64(q) * s).sum())
        .collect();
    let baseline = (1..=k)
        .map(|i| {
            n + refs
                .iter()
                .zip(&cen.counts)
                .map(|(a, &cnt)| cnt as f64 * to_f64(&gegenbauer_eval(dim, i, a)))
                .sum::<f64>()
        })
        .collect();
    let pairs = PairData::of(c)?;
    let component_sums = component_sums_from(c.len(), &pairs, dim, k).iter().map(Scalar::to_f64).collect();
    Ok(SAlphaReport {
        reference_values: refs.clone(),
        counts: cen.counts.clone(),
        s_alpha: cen.deviation_sums.clone(),
        max_deviation: cen.max_deviation.iter().cloned().fold(0.0, f64::max),
        baseline,
        linearized,
        component_sums,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::generate;

    fn coeffs(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(p, q)| rat(p, q)).collect()
    }

    #[test]
    fn e8_and_leech_certificates() {
        let e8 = catalog_certificate("e8").unwrap();
        assert_eq!(e8.bound, int(240));
        assert_eq!(e8.m, 2);
        assert_eq!(e8.roots.len(), 4);
        let leech = catalog_certificate("leech").unwrap();
        assert_eq!(leech.bound, int(196_560));
        assert_eq!(leech.m, 2);
        assert_eq!(leech.roots.len(), 6);
    }

    #[test]
    fn rejections_name_the_condition() {
        let e8 = catalog_certificate("e8").unwrap();
        match verify_certificate(8, &e8.expansion, &rat(3, 4)) {
            Err(Error::CertificateRejected(msg)) => assert!(msg.contains("positive"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let neg = GegenbauerExpansion::new(8, coeffs(&[(1, 1), (-1, 2), (1, 1)])).unwrap();
        assert!(matches!(verify_certificate(8, &neg, &rat(0, 1)), Err(Error::CertificateRejected(m)) if m.contains("f_1")));
        let zero_f0 = GegenbauerExpansion::new(8, coeffs(&[(0, 1), (1, 1)])).unwrap();
        assert!(matches!(verify_certificate(8, &zero_f0, &rat(-1, 2)), Err(Error::CertificateRejected(m)) if m.contains("f_0")));
        let constant = GegenbauerExpansion::new(8, coeffs(&[(1, 1)])).unwrap();
        assert!(verify_certificate(8, &constant, &rat(0, 1)).is_err());
    }

    #[test]
    fn small_catalog_certificates_are_tight() {
        for d in 2..7 {
            let cp = catalog_certificate(&format!("cross_polytope({d})")).unwrap();
            assert_eq!(cp.bound, int(2 * d as i64));
            assert_eq!(cp.m, 1);
            let code = generate(&format!("cross_polytope({d})")).unwrap();
            assert!(tightness_report(&code, &cp).unwrap().is_tight);
            let sx = catalog_certificate(&format!("simplex({d})")).unwrap();
            assert_eq!(sx.bound, int(d as i64 + 1));
            let code = generate(&format!("simplex({d})")).unwrap();
            assert!(tightness_report(&code, &sx).unwrap().is_tight);
        }
    }

    #[test]
    fn single_point_component_sums_are_one() {
        let c = generate("ngon(1)").unwrap();
        let e = expand(2, &product_poly(int(1), &[((-1, 1), 1), ((0, 1), 2)])).unwrap();
        for v in component_sums(&c, &e).unwrap() {
            assert_eq!(v, Scalar::Exact(int(1)));
        }
    }

    #[test]
    fn slope_maxima_on_s_to_one() {
        let e8 = catalog_certificate("e8").unwrap();
        let w = weak_stability_constants(&e8, 240).unwrap();
        assert_eq!(w.big_m_full.value, int(480));
        assert!(w.big_m_full.exact);
        assert_eq!(w.r, int(1));
        let leech = catalog_certificate("leech").unwrap();
        let w = weak_stability_constants(&leech, 196_560).unwrap();
        assert_eq!(w.big_m_full.value, int(393_120));
    }

    #[test]
    fn cross_polytope_constants() {
        let cp = catalog_certificate("cross_polytope(3)").unwrap();
        let w = weak_stability_constants(&cp, 6).unwrap();
        assert_eq!((w.m, w.r.clone()), (1, int(1)));
        // f = t(t+1): h_1 = t, h_2 = t + 1; max(|t|, |t+1|) is smallest at -1/2.
        assert_eq!(w.m_prime, rat(1, 2));
        assert!(w.m_prime_exact);
        // f/(t-0) = t + 1 is increasing, so M = 1 + 1/2 on [0, 1/2].
        assert_eq!(w.big_m.value, rat(3, 2));
    }

    #[test]
    fn e8_weak_constants_dominate() {
        let w = weak_stability_constants(&catalog_certificate("e8").unwrap(), 240).unwrap();
        assert_eq!(w.m, 2);
        assert!(w.eps_count >= 5e-6, "{}", w.eps_count);
        assert!(w.k >= 1.0);
        assert!((w.eps_geom - 0.25).abs() < 1e-15);
    }

    #[test]
    fn e8_linearization_coefficients() {
        let refs = coeffs(&[(-1, 1), (-1, 2), (0, 1), (1, 2)]);
        let q = linearization_coefficients(8, &refs, 2);
        assert!(q[0].iter().all(|v| v == &int(1)));
        // Q_2 = (8t^2 - 1)/7, so Q_2' = 16t/7.
        assert_eq!(q[1], coeffs(&[(-16, 7), (-8, 7), (0, 1), (8, 7)]));
    }

    #[test]
    fn tight_code_has_zero_s_alpha() {
        let c = generate("e8_roots").unwrap();
        let refs = coeffs(&[(-1, 1), (-1, 2), (0, 1), (1, 2)]);
        let rep = s_alpha_sums(&c.to_float(), &refs, 0.1, 4).unwrap();
        assert!(rep.s_alpha.iter().all(|s| s.abs() < 1e-9));
        for (b, s) in rep.baseline.iter().zip(&rep.component_sums) {
            assert!((b - s).abs() < 1e-6);
        }
        let partial = coeffs(&[(-1, 2), (0, 1), (1, 2)]);
        assert!(matches!(s_alpha_sums(&c, &partial, 0.0, 4), Err(Error::StrayPairs { .. })));
    }
}
