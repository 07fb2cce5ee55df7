//! Exact univariate polynomial arithmetic over the rationals.
//!
//! Everything in this module is exact: coefficients are arbitrary-precision
//! rationals, Gegenbauer polynomials are generated by their three-term
//! recursion, and sign questions on intervals are settled with Sturm
//! sequences over primitive integer polynomials. No floating point is used
//! except in the explicit `*_f64` convenience evaluators.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Width below which isolating intervals of irrational roots are reported.
pub const ROOT_WIDTH: f64 = 1e-30;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.75"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Renders a rational as `p/q` (or `p` when integral), never as a float.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Polynomial in the power basis; `coeffs[i]` multiplies `t^i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonomialPoly {
    coeffs: Vec<Rational>,
}

impl MonomialPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        MonomialPoly { coeffs }
    }

    pub fn zero() -> Self {
        MonomialPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// The identity polynomial `t`.
    pub fn t() -> Self {
        Self::new(vec![Rational::zero(), Rational::one()])
    }

    /// `c * prod (t - r)^k` over the given `(root, multiplicity)` pairs.
    pub fn from_roots(c: Rational, roots: &[(Rational, usize)]) -> Self {
        let mut p = Self::constant(c);
        for (r, k) in roots {
            let lin = Self::new(vec![-r.clone(), Rational::one()]);
            for _ in 0..*k {
                p = &p * &lin;
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + to_f64(c))
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(to_f64).collect()
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * int(i as i64))
                .collect(),
        )
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.leading().recip())
    }

    /// Euclidean division over Q. Panics on division by the zero polynomial.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by zero polynomial");
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![Rational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in divisor.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Exact quotient; errors if the division leaves a remainder.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self> {
        let (q, r) = self.div_rem(divisor);
        if r.is_zero() {
            Ok(q)
        } else {
            Err(Error::InvalidInput("polynomial division is not exact".into()))
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut p = Self::constant(Rational::one());
        for _ in 0..k {
            p = &p * self;
        }
        p
    }

    /// Square-free decomposition (Yun): pairs `(s_i, i)` with `self = c * prod s_i^i`,
    /// each `s_i` monic, square-free and pairwise coprime. Empty for constants.
    pub fn squarefree_decomposition(&self) -> Vec<(Self, usize)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let a0 = Self::gcd(&f, &df);
        let mut b = f.div_rem(&a0).0;
        let c = df.div_rem(&a0).0;
        let mut d = &c - &b.derivative();
        let mut i = 1;
        while b.degree().unwrap_or(0) > 0 {
            let a = Self::gcd(&b, &d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            let nb = b.div_rem(&a).0;
            let nc = d.div_rem(&a).0;
            d = &nc - &nb.derivative();
            b = nb;
            i += 1;
        }
        out
    }

    /// The square-free part (product of distinct irreducible factors), monic.
    pub fn squarefree_part(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return Self::constant(Rational::one());
        }
        let g = Self::gcd(self, &self.derivative());
        self.div_rem(&g).0.monic()
    }

    /// Enclosure `[lo, hi]` of the values on `[l, u]` by interval Horner evaluation.
    pub fn enclose(&self, l: &Rational, u: &Rational) -> (Rational, Rational) {
        let mut lo = Rational::zero();
        let mut hi = Rational::zero();
        for c in self.coeffs.iter().rev() {
            let prods = [&lo * l, &lo * u, &hi * l, &hi * u];
            let mn = prods.iter().min().unwrap().clone();
            let mx = prods.iter().max().unwrap().clone();
            lo = mn + c;
            hi = mx + c;
        }
        (lo, hi)
    }
}

impl fmt::Display for MonomialPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("({c})t"),
                _ => format!("({c})t^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Add for &MonomialPoly {
    type Output = MonomialPoly;
    fn add(self, rhs: &MonomialPoly) -> MonomialPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let z = Rational::zero();
        MonomialPoly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + rhs.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }
}

impl Sub for &MonomialPoly {
    type Output = MonomialPoly;
    fn sub(self, rhs: &MonomialPoly) -> MonomialPoly {
        self + &(-rhs)
    }
}

impl Neg for &MonomialPoly {
    type Output = MonomialPoly;
    fn neg(self) -> MonomialPoly {
        MonomialPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &MonomialPoly {
    type Output = MonomialPoly;
    fn mul(self, rhs: &MonomialPoly) -> MonomialPoly {
        if self.is_zero() || rhs.is_zero() {
            return MonomialPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        MonomialPoly::new(out)
    }
}

// ---------------------------------------------------------------------------
// Gegenbauer basis

/// Coefficients `f_0..f_k` of `sum f_i Q_i` for the dimension-`dim` family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GegenbauerExpansion {
    pub dim: usize,
    pub coeffs: Vec<Rational>,
}

impl GegenbauerExpansion {
    pub fn new(dim: usize, mut coeffs: Vec<Rational>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        Ok(GegenbauerExpansion { dim, coeffs })
    }

    /// Highest index `k` carried by the expansion.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn f0(&self) -> &Rational {
        &self.coeffs[0]
    }
}

/// `Q_i(t)` for the dimension-`d` family normalized by `Q_i(1) = 1`.
pub fn gegenbauer_eval(d: usize, i: usize, t: &Rational) -> Rational {
    let mut prev = Rational::one();
    if i == 0 {
        return prev;
    }
    let mut cur = t.clone();
    for k in 1..i {
        let a = int((2 * k + d - 2) as i64);
        let b = int(k as i64);
        let c = int((k + d - 2) as i64);
        let next = (a * t * &cur - b * &prev) / c;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

pub fn gegenbauer_eval_f64(d: usize, i: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    if i == 0 {
        return prev;
    }
    let mut cur = t;
    for k in 1..i {
        let next =
            ((2 * k + d - 2) as f64 * t * cur - k as f64 * prev) / (k + d - 2) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Power-basis forms of `Q_0..=Q_max`.
pub fn gegenbauer_table(d: usize, max: usize) -> Vec<MonomialPoly> {
    let mut table = vec![MonomialPoly::constant(Rational::one())];
    if max == 0 {
        return table;
    }
    table.push(MonomialPoly::t());
    let t = MonomialPoly::t();
    for k in 1..max {
        let a = int((2 * k + d - 2) as i64);
        let b = int(k as i64);
        let c = int((k + d - 2) as i64).recip();
        let next = &(&t * &table[k]).scale(&a) - &table[k - 1].scale(&b);
        table.push(next.scale(&c));
    }
    table
}

pub fn gegenbauer_monomial(d: usize, i: usize) -> MonomialPoly {
    gegenbauer_table(d, i).pop().unwrap()
}

/// Change of basis from powers of `t` to `Q_0..Q_k` by back-substitution.
pub fn expand(d: usize, p: &MonomialPoly) -> Result<GegenbauerExpansion> {
    let Some(k) = p.degree() else {
        return GegenbauerExpansion::new(d, vec![Rational::zero()]);
    };
    let table = gegenbauer_table(d, k);
    let mut rest = p.clone();
    let mut coeffs = vec![Rational::zero(); k + 1];
    for i in (0..=k).rev() {
        let ci = rest.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
        if ci.is_zero() {
            continue;
        }
        let fi = ci / table[i].leading();
        rest = &rest - &table[i].scale(&fi);
        coeffs[i] = fi;
    }
    debug_assert!(rest.is_zero());
    GegenbauerExpansion::new(d, coeffs)
}

pub fn reconstruct(e: &GegenbauerExpansion) -> MonomialPoly {
    let table = gegenbauer_table(e.dim, e.degree());
    e.coeffs
        .iter()
        .zip(&table)
        .fold(MonomialPoly::zero(), |acc, (c, q)| &acc + &q.scale(c))
}

// ---------------------------------------------------------------------------
// Integer polynomials and Sturm sequences

/// Primitive integer polynomial, positive multiple of the rational polynomial it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
struct IntPoly(Vec<BigInt>);

impl IntPoly {
    fn from_rational(p: &MonomialPoly) -> Self {
        let lcm = p
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let v: Vec<BigInt> = p
            .coeffs
            .iter()
            .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer())
            .collect();
        IntPoly(v).primitive()
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn trim(mut self) -> Self {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    /// Divides out the (positive) content.
    fn primitive(self) -> Self {
        let s = self.trim();
        let g = s.0.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() || g.is_one() {
            return s;
        }
        IntPoly(s.0.into_iter().map(|c| c / &g).collect())
    }

    fn derivative(&self) -> Self {
        IntPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
        .trim()
    }

    /// Pseudo-remainder `lc(b)^(deg a - deg b + 1) * a mod b`.
    fn prem(&self, b: &Self) -> Self {
        let db = b.degree();
        let lb = b.0.last().unwrap().clone();
        let wanted = (self.degree() + 1).saturating_sub(db);
        let mut r = self.0.clone();
        let mut steps = 0;
        while !r.is_empty() && r.len() > db {
            let lr = r.last().unwrap().clone();
            let shift = r.len() - 1 - db;
            for c in r.iter_mut() {
                *c *= &lb;
            }
            for (j, bc) in b.0.iter().enumerate() {
                r[shift + j] -= &lr * bc;
            }
            r.pop();
            steps += 1;
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        for _ in steps..wanted {
            for c in r.iter_mut() {
                *c *= &lb;
            }
        }
        IntPoly(r).trim()
    }

    fn sign_at(&self, x: &Rational) -> Ordering {
        // Homogenized Horner: sum c_i p^i q^(n-i), q > 0.
        let (p, q) = (x.numer(), x.denom());
        let mut acc = BigInt::zero();
        let mut qpow = BigInt::one();
        for c in self.0.iter().rev() {
            acc = acc * p + c * &qpow;
            qpow *= q;
        }
        acc.sign().cmp_zero()
    }
}

trait SignExt {
    fn cmp_zero(self) -> Ordering;
}

impl SignExt for num_bigint::Sign {
    fn cmp_zero(self) -> Ordering {
        match self {
            num_bigint::Sign::Minus => Ordering::Less,
            num_bigint::Sign::NoSign => Ordering::Equal,
            num_bigint::Sign::Plus => Ordering::Greater,
        }
    }
}

/// Sturm chain of a square-free polynomial, built with pseudo-remainders
/// and content stripping.
struct Sturm {
    poly: IntPoly,
    chain: Vec<IntPoly>,
}

impl Sturm {
    fn new(p: &MonomialPoly) -> Self {
        let poly = IntPoly::from_rational(p);
        let mut chain = vec![poly.clone()];
        let d = poly.derivative().primitive();
        if !d.is_zero() {
            chain.push(d);
        }
        while chain.len() >= 2 {
            let a = &chain[chain.len() - 2];
            let b = &chain[chain.len() - 1];
            if b.degree() == 0 {
                break;
            }
            let mut r = a.prem(b);
            if r.is_zero() {
                break;
            }
            let delta = a.degree() - b.degree() + 1;
            let lb_neg = b.0.last().unwrap().is_negative();
            if !(lb_neg && delta % 2 == 1) {
                // r is a positive multiple of rem(a, b); the chain wants -rem.
                r = IntPoly(r.0.into_iter().map(|c| -c).collect());
            }
            chain.push(r.primitive());
        }
        Sturm { poly, chain }
    }

    fn sign(&self, x: &Rational) -> Ordering {
        self.poly.sign_at(x)
    }

    fn variations(&self, x: &Rational) -> usize {
        let mut last = Ordering::Equal;
        let mut v = 0;
        for p in &self.chain {
            let s = p.sign_at(x);
            if s == Ordering::Equal {
                continue;
            }
            if last != Ordering::Equal && s != last {
                v += 1;
            }
            last = s;
        }
        v
    }

    /// Number of distinct roots in `(a, b]`.
    fn count(&self, a: &Rational, b: &Rational) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }

    fn leading(&self) -> BigInt {
        self.poly.0.last().cloned().unwrap_or_else(BigInt::one)
    }
}

/// Location of a real root: exact rational, or an open interval with a sign change
/// of the square-free polynomial across it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootLocation {
    Exact(Rational),
    Isolated { lo: Rational, hi: Rational },
}

impl RootLocation {
    pub fn lo(&self) -> &Rational {
        match self {
            RootLocation::Exact(r) => r,
            RootLocation::Isolated { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> &Rational {
        match self {
            RootLocation::Exact(r) => r,
            RootLocation::Isolated { hi, .. } => hi,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            RootLocation::Exact(r) => Some(r),
            RootLocation::Isolated { .. } => None,
        }
    }

    pub fn midpoint(&self) -> Rational {
        (self.lo() + self.hi()) / int(2)
    }

    pub fn approx(&self) -> f64 {
        to_f64(&self.midpoint())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootEntry {
    pub location: RootLocation,
    pub multiplicity: usize,
}

/// Real roots sorted increasingly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RootList {
    pub entries: Vec<RootEntry>,
}

impl RootList {
    pub fn max_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn half(a: &Rational, b: &Rational) -> Rational {
    (a + b) / int(2)
}

/// Roots of a square-free polynomial in `[a, b]` as exact points (when hit by
/// an endpoint or bisection point) or open intervals with a sign change.
fn isolate(st: &Sturm, a: &Rational, b: &Rational) -> Vec<RootLocation> {
    let mut out = Vec::new();
    if st.sign(a) == Ordering::Equal {
        out.push(RootLocation::Exact(a.clone()));
    }
    if a < b {
        let n = st.count(a, b);
        isolate_rec(st, a.clone(), b.clone(), n, &mut out);
    }
    out
}

fn isolate_rec(st: &Sturm, l: Rational, u: Rational, n: usize, out: &mut Vec<RootLocation>) {
    if n == 0 {
        return;
    }
    if n == 1 {
        if st.sign(&u) == Ordering::Equal {
            out.push(RootLocation::Exact(u));
            return;
        }
        if st.sign(&l) != Ordering::Equal {
            out.push(RootLocation::Isolated { lo: l, hi: u });
            return;
        }
    }
    let m = half(&l, &u);
    let left = st.count(&l, &m);
    isolate_rec(st, l, m.clone(), left, out);
    isolate_rec(st, m, u, n - left, out);
}

/// One bisection step of an isolating interval.
fn bisect(st: &Sturm, loc: RootLocation) -> RootLocation {
    match loc {
        RootLocation::Exact(_) => loc,
        RootLocation::Isolated { lo, hi } => {
            let m = half(&lo, &hi);
            let sm = st.sign(&m);
            if sm == Ordering::Equal {
                RootLocation::Exact(m)
            } else if st.sign(&lo) != sm {
                RootLocation::Isolated { lo, hi: m }
            } else {
                RootLocation::Isolated { lo: m, hi }
            }
        }
    }
}

fn width(loc: &RootLocation) -> Rational {
    loc.hi() - loc.lo()
}

/// Fraction with the smallest denominator strictly inside `(l, u)`.
fn simplest_between(l: &Rational, u: &Rational) -> Rational {
    let fl = l.floor();
    let next = &fl + Rational::one();
    if &next < u {
        return next;
    }
    let lo = l - &fl;
    let hi = u - &fl;
    if lo.is_zero() {
        let k = hi.recip().floor() + Rational::one();
        return fl + k.recip();
    }
    fl + simplest_between(&hi.recip(), &lo.recip()).recip()
}

/// Refines an isolating interval until it is either an exact rational root or
/// an interval narrower than `ROOT_WIDTH` around an irrational root.
fn pin_down(st: &Sturm, mut loc: RootLocation) -> RootLocation {
    // Two fractions with denominators <= |lc| are at least 1/lc^2 apart, so
    // once the interval is narrower only the simplest fraction inside can be
    // a rational root (whose denominator must divide lc).
    let lc = Rational::from_integer(st.leading().abs());
    let sep = (&lc * &lc).recip() / int(2);
    while matches!(loc, RootLocation::Isolated { .. }) && width(&loc) >= sep {
        loc = bisect(st, loc);
    }
    if let RootLocation::Isolated { lo, hi } = &loc {
        let cand = simplest_between(lo, hi);
        if st.sign(&cand) == Ordering::Equal {
            return RootLocation::Exact(cand);
        }
    }
    let target = Rational::from_float(ROOT_WIDTH).unwrap();
    while matches!(loc, RootLocation::Isolated { .. }) && width(&loc) >= target {
        loc = bisect(st, loc);
    }
    loc
}

/// All real roots of `p` in `[a, b]` with their exact multiplicities.
pub fn real_roots_with_multiplicity(
    p: &MonomialPoly,
    a: &Rational,
    b: &Rational,
) -> Result<RootList> {
    if p.is_zero() {
        return Err(Error::InvalidInput("zero polynomial has no isolated roots".into()));
    }
    if a > b {
        return Err(Error::InvalidInput("empty interval".into()));
    }
    let mut found: Vec<(RootLocation, usize, usize)> = Vec::new();
    let factors = p.squarefree_decomposition();
    let sturms: Vec<Sturm> = factors.iter().map(|(s, _)| Sturm::new(s)).collect();
    for (fi, ((_, mult), st)) in factors.iter().zip(&sturms).enumerate() {
        for loc in isolate(st, a, b) {
            found.push((pin_down(st, loc), *mult, fi));
        }
    }
    // Roots of distinct factors are distinct; refine until intervals are disjoint.
    loop {
        found.sort_by(|x, y| x.0.lo().cmp(y.0.lo()).then(x.0.hi().cmp(y.0.hi())));
        let clash = found
            .windows(2)
            .position(|w| w[1].0.lo() < w[0].0.hi() || w[1].0 == w[0].0);
        let Some(i) = clash else { break };
        for j in [i, i + 1] {
            let (loc, m, fi) = found[j].clone();
            found[j] = (bisect(&sturms[fi], loc), m, fi);
        }
    }
    Ok(RootList {
        entries: found
            .into_iter()
            .map(|(location, multiplicity, _)| RootEntry { location, multiplicity })
            .collect(),
    })
}

/// Outcome of a sign check on an interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignVerdict {
    pub holds: bool,
    /// A rational point where the polynomial is strictly positive, when `holds` is false.
    pub witness: Option<Rational>,
}

/// Decides exactly whether `p(t) <= 0` for all `t` in `[a, b]`.
pub fn nonpositive_on_interval(p: &MonomialPoly, a: &Rational, b: &Rational) -> Result<SignVerdict> {
    if a >= b {
        return Err(Error::InvalidInput("nonpositive_on_interval needs a < b".into()));
    }
    if p.is_zero() {
        return Ok(SignVerdict { holds: true, witness: None });
    }
    let sq = p.squarefree_part();
    let st = Sturm::new(&sq);
    let mut roots = isolate(&st, a, b);
    // Shrink intervals until every gap between consecutive barriers is non-empty,
    // so each sign region gets a strictly interior sample point.
    loop {
        let mut changed = false;
        for i in 0..roots.len() {
            let prev_hi = if i == 0 { a.clone() } else { roots[i - 1].hi().clone() };
            let next_lo = if i + 1 == roots.len() { b.clone() } else { roots[i + 1].lo().clone() };
            if let RootLocation::Isolated { lo, hi } = &roots[i] {
                if *lo <= prev_hi || *hi >= next_lo {
                    roots[i] = bisect(&st, roots[i].clone());
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut samples = Vec::new();
    let mut prev = a.clone();
    let mut prev_is_root = false;
    for r in &roots {
        if r.lo() > &prev {
            samples.push(half(&prev, r.lo()));
        } else if !prev_is_root && r.lo() == &prev && r.exact().is_none() {
            samples.push(prev.clone());
        }
        prev = r.hi().clone();
        prev_is_root = r.exact().is_some();
    }
    if &prev < b {
        samples.push(half(&prev, b));
    }
    for s in samples {
        if p.eval(&s).is_positive() {
            return Ok(SignVerdict { holds: false, witness: Some(s) });
        }
    }
    Ok(SignVerdict { holds: true, witness: None })
}

/// Certified bound on the maximum of a polynomial over a closed interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtremumBound {
    /// Upper bound on the maximum; equal to it when `exact`.
    pub value: Rational,
    /// True when the maximum is attained at a rational point and `value` is exact.
    pub exact: bool,
    pub argmax: Option<Rational>,
}

/// Maximum of `p` over `[a, b]` from its critical points. Rational critical
/// points are evaluated exactly; irrational ones contribute the upper end of an
/// interval enclosure over their isolating interval.
pub fn max_on_interval(p: &MonomialPoly, a: &Rational, b: &Rational) -> Result<ExtremumBound> {
    if a > b {
        return Err(Error::InvalidInput("empty interval".into()));
    }
    let mut best = ExtremumBound { value: p.eval(a), exact: true, argmax: Some(a.clone()) };
    let mut consider = |value: Rational, at: Option<Rational>| {
        if value > best.value {
            best = ExtremumBound { exact: at.is_some(), value, argmax: at };
        }
    };
    consider(p.eval(b), Some(b.clone()));
    let dp = p.derivative();
    if !dp.is_zero() && a < b {
        for e in real_roots_with_multiplicity(&dp, a, b)?.entries {
            match e.location {
                RootLocation::Exact(r) => consider(p.eval(&r), Some(r)),
                RootLocation::Isolated { lo, hi } => consider(p.enclose(&lo, &hi).1, None),
            }
        }
    }
    Ok(best)
}

/// Lower bound on the minimum, by symmetry with [`max_on_interval`].
pub fn min_on_interval(p: &MonomialPoly, a: &Rational, b: &Rational) -> Result<ExtremumBound> {
    let m = max_on_interval(&-p, a, b)?;
    Ok(ExtremumBound { value: -m.value, ..m })
}

// ---------------------------------------------------------------------------
// JSON interchange

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Monomial,
    Gegenbauer,
}

/// `{"basis": "monomial"|"gegenbauer", "dim": d, "coeffs": ["p/q", ...]}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub basis: Basis,
    pub dim: Option<usize>,
    pub coeffs: Vec<String>,
}

impl PolyJson {
    pub fn from_monomial(p: &MonomialPoly, dim: Option<usize>) -> Self {
        PolyJson {
            basis: Basis::Monomial,
            dim,
            coeffs: p.coeffs.iter().map(format_rational).collect(),
        }
    }

    pub fn from_expansion(e: &GegenbauerExpansion) -> Self {
        PolyJson {
            basis: Basis::Gegenbauer,
            dim: Some(e.dim),
            coeffs: e.coeffs.iter().map(format_rational).collect(),
        }
    }

    fn parsed(&self) -> Result<Vec<Rational>> {
        self.coeffs.iter().map(|s| parse_rational(s)).collect()
    }

    /// Power-basis polynomial regardless of the stored basis.
    pub fn to_monomial(&self) -> Result<MonomialPoly> {
        match self.basis {
            Basis::Monomial => Ok(MonomialPoly::new(self.parsed()?)),
            Basis::Gegenbauer => Ok(reconstruct(&self.to_expansion()?)),
        }
    }

    pub fn to_expansion(&self) -> Result<GegenbauerExpansion> {
        let dim = self
            .dim
            .ok_or_else(|| Error::Parse("polynomial JSON is missing `dim`".into()))?;
        match self.basis {
            Basis::Gegenbauer => GegenbauerExpansion::new(dim, self.parsed()?),
            Basis::Monomial => expand(dim, &MonomialPoly::new(self.parsed()?)),
        }
    }
}
