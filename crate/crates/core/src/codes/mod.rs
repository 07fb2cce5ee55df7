//! Spherical codes: catalog construction, Gram access, and the inner-product census.

mod catalog;
mod census;
pub mod leech;

use std::fmt;
use std::io::{BufRead, Write};

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exactmath::{format_rational, rat, to_f64, Rational};

pub use catalog::{generate, kissing_subcode, random_code, CATALOG_HELP};
pub use census::{
    census, census_from_distribution, common_neighbor_count, exact_distribution, max_float_dot, point_distribution,
    Census, ExactDistribution,
};

/// Integer coordinates with a shared squared norm; the unit points are `row / sqrt(norm)`.
///
/// Rows may live in an ambient space larger than the code dimension (for
/// instance a simplex written in barycentric form); only their Gram matrix
/// matters, and it is exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactModel {
    ambient: usize,
    norm: i64,
    coords: Vec<i32>,
}

impl ExactModel {
    pub fn new(ambient: usize, norm: i64, coords: Vec<i32>) -> Result<Self> {
        if ambient == 0 || coords.len() % ambient != 0 || norm <= 0 {
            return Err(Error::InvalidInput("malformed exact model".into()));
        }
        let m = ExactModel { ambient, norm, coords };
        for i in 0..m.len() {
            let r = m.row(i);
            let n: i64 = r.iter().map(|&v| i64::from(v) * i64::from(v)).sum();
            if n != norm {
                return Err(Error::InvalidInput(format!(
                    "row {i} has squared norm {n}, expected {norm}"
                )));
            }
        }
        Ok(m)
    }

    pub fn from_rows(norm: i64, rows: &[Vec<i32>]) -> Result<Self> {
        let ambient = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ambient) {
            return Err(Error::InvalidInput("ragged integer rows".into()));
        }
        Self::new(ambient, norm, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.ambient
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn norm(&self) -> i64 {
        self.norm
    }

    pub fn row(&self, i: usize) -> &[i32] {
        &self.coords[i * self.ambient..(i + 1) * self.ambient]
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords
    }

    pub fn dot(&self, i: usize, j: usize) -> i64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(&a, &b)| i64::from(a) * i64::from(b))
            .sum()
    }

    /// Largest absolute coordinate; the census kernels use it to pick a narrow integer type.
    pub fn max_abs(&self) -> i32 {
        self.coords.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// Float coordinates in R^dim, isometric to the rows scaled by `1/sqrt(norm)`.
    ///
    /// When the ambient space equals `dim` the rows are used directly.
    /// Otherwise the rows are expressed in an orthonormal basis of their span,
    /// found by modified Gram-Schmidt over the rows in order.
    fn float_points(&self, dim: usize) -> Result<Vec<f64>> {
        let scale = 1.0 / (self.norm as f64).sqrt();
        let n = self.len();
        if self.ambient == dim {
            return Ok(self.coords.iter().map(|&v| f64::from(v) * scale).collect());
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            let mut v: Vec<f64> = self.row(i).iter().map(|&x| f64::from(x)).collect();
            for _ in 0..2 {
                for b in &basis {
                    let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 1e-9 * (self.norm as f64).sqrt() {
                v.iter_mut().for_each(|x| *x /= len);
                basis.push(v);
            }
            if basis.len() == self.ambient {
                break;
            }
        }
        if basis.len() > dim {
            return Err(Error::RankMismatch(format!(
                "integer rows span {} dimensions, code dimension is {dim}",
                basis.len()
            )));
        }
        let mut out = vec![0.0; n * dim];
        for i in 0..n {
            let row = self.row(i);
            for (k, b) in basis.iter().enumerate() {
                let c: f64 = row.iter().zip(b).map(|(&x, y)| f64::from(x) * y).sum();
                out[i * dim + k] = c * scale;
            }
        }
        Ok(out)
    }
}

/// An exact rational or a float, depending on whether the code has an exact model.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Approx(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => to_f64(r),
            Scalar::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Approx(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Approx(x) => *x < 0.0,
        }
    }

    /// `Exact` values as `"p/q"` strings, floats as JSON numbers.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Scalar::Exact(r) => serde_json::Value::String(format_rational(r)),
            Scalar::Approx(x) => serde_json::json!(x),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{}", format_rational(r)),
            Scalar::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// `N` unit vectors in `R^dim`, optionally backed by an exact integer model.
#[derive(Clone, Debug)]
pub struct SphericalCode {
    dim: usize,
    points: Vec<f64>,
    exact: Option<ExactModel>,
    label: String,
}

const UNIT_TOL: f64 = 1e-12;

impl SphericalCode {
    /// Float-mode code; rows must have unit norm within `1e-12`.
    pub fn from_points(dim: usize, points: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not form rows of length {dim}",
                points.len()
            )));
        }
        for (i, row) in points.chunks_exact(dim).enumerate() {
            let n: f64 = row.iter().map(|x| x * x).sum();
            if (n - 1.0).abs() > UNIT_TOL * 4.0 || !n.is_finite() {
                return Err(Error::InvalidInput(format!("row {i} has squared norm {n}")));
            }
        }
        Ok(SphericalCode { dim, points, exact: None, label: label.into() })
    }

    /// Normalizes each row before building a float-mode code.
    pub fn from_unnormalized(dim: usize, mut points: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::InvalidInput("ragged coordinates".into()));
        }
        for row in points.chunks_exact_mut(dim) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 || !n.is_finite() {
                return Err(Error::Degenerate("zero row cannot be normalized".into()));
            }
            row.iter_mut().for_each(|x| *x /= n);
        }
        Self::from_points(dim, points, label)
    }

    pub fn from_exact(dim: usize, model: ExactModel, label: impl Into<String>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
        }
        if model.is_empty() {
            return Err(Error::InvalidInput("empty code".into()));
        }
        let points = model.float_points(dim)?;
        Ok(SphericalCode { dim, points, exact: Some(model), label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn exact_model(&self) -> Option<&ExactModel> {
        self.exact.as_ref()
    }

    /// Drops the exact model, keeping the float coordinates.
    pub fn to_float(&self) -> Self {
        SphericalCode { exact: None, ..self.clone() }
    }

    pub fn float_dot(&self, i: usize, j: usize) -> f64 {
        self.point(i).iter().zip(self.point(j)).map(|(a, b)| a * b).sum()
    }

    /// Subset of points in the given order; the exact model follows along.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange(bad, bad, n));
        }
        let points = indices.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        let exact = match &self.exact {
            Some(m) => {
                let coords = indices.iter().flat_map(|&i| m.row(i).iter().copied()).collect();
                Some(ExactModel { ambient: m.ambient, norm: m.norm, coords })
            }
            None => None,
        };
        Ok(SphericalCode { dim: self.dim, points, exact, label: self.label.clone() })
    }

    /// Dense float Gram matrix, row-major. Intended for small codes.
    pub fn gram_f64(&self) -> Vec<f64> {
        let n = self.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = if let Some(m) = &self.exact {
                    m.dot(i, j) as f64 / m.norm as f64
                } else {
                    self.float_dot(i, j)
                };
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }
}

/// `<x_i, x_j>`, exact when the code carries an integer model.
pub fn gram_entry(c: &SphericalCode, i: usize, j: usize) -> Result<Scalar> {
    let n = c.len();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange(i, j, n));
    }
    Ok(match &c.exact {
        Some(m) => Scalar::Exact(rat(m.dot(i, j), m.norm)),
        None => Scalar::Approx(c.float_dot(i, j)),
    })
}

/// Largest off-diagonal inner product.
pub fn max_offdiag(c: &SphericalCode) -> Result<Scalar> {
    if c.len() < 2 {
        return Err(Error::InvalidInput("max_offdiag needs at least two points".into()));
    }
    if let Some(m) = &c.exact {
        let dist = exact_distribution(c)?;
        let k = dist.max_dot().expect("at least one pair");
        return Ok(Scalar::Exact(rat(k, m.norm)));
    }
    Ok(Scalar::Approx(census::max_float_dot(c)))
}

/// Writes the code in the plain-text format `d N mode` followed by one row per point.
pub fn write_code<W: Write>(c: &SphericalCode, mut w: W) -> Result<()> {
    match &c.exact {
        Some(m) => {
            writeln!(w, "{} {} exact", c.dim, c.len())?;
            for i in 0..m.len() {
                let row: Vec<String> = m.row(i).iter().map(i32::to_string).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
            writeln!(w, "/sqrt({})", m.norm)?;
        }
        None => {
            writeln!(w, "{} {} float", c.dim, c.len())?;
            for i in 0..c.len() {
                let row: Vec<String> = c.point(i).iter().map(|x| format!("{x:?}")).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
    }
    Ok(())
}

/// Reads the format produced by [`write_code`].
pub fn read_code<R: BufRead>(r: R, label: &str) -> Result<SphericalCode> {
    let mut lines = r
        .lines()
        .map(|l| l.map(|s| s.trim().to_string()))
        .filter(|l| l.as_ref().map_or(true, |s| !s.is_empty() && !s.starts_with('#')));
    let header = lines.next().ok_or_else(|| Error::Parse("empty code file".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("bad header line: {header}")));
    }
    let parse_usize =
        |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
    let (dim, n) = (parse_usize(parts[0])?, parse_usize(parts[1])?);
    match parts[2] {
        "exact" => {
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next().ok_or_else(|| Error::Parse("missing rows".into()))??;
                let row = line
                    .split_whitespace()
                    .map(|t| t.parse::<i32>().map_err(|_| Error::Parse(format!("bad integer {t:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                rows.push(row);
            }
            let tail = lines.next().ok_or_else(|| Error::Parse("missing /sqrt(n0) line".into()))??;
            let norm = tail
                .strip_prefix("/sqrt(")
                .and_then(|s| s.strip_suffix(')'))
                .and_then(|s| s.parse::<i64>().ok())
                .ok_or_else(|| Error::Parse(format!("bad norm line: {tail}")))?;
            SphericalCode::from_exact(dim, ExactModel::from_rows(norm, &rows)?, label)
        }
        "float" => {
            let mut pts = Vec::with_capacity(n * dim);
            for _ in 0..n {
                let line = lines.next().ok_or_else(|| Error::Parse("missing rows".into()))??;
                let row = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
                }
                pts.extend(row);
            }
            SphericalCode::from_points(dim, pts, label)
        }
        other => Err(Error::Parse(format!("unknown mode {other:?}"))),
    }
}
