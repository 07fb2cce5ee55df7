//! Symmetric eigendecomposition and the square-root stability machinery.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::codes::SphericalCode;
use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
    pub rank: usize,
    pub rank_tol: f64,
}

impl SpectralData {
    /// Spectral norm `max |lambda|`.
    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Eigenvalues grouped into clusters whose consecutive members differ by
    /// at most `rank_tol`; each entry is `(mean, member indices)`.
    pub fn clusters(&self) -> Vec<(f64, Vec<usize>)> {
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            match out.last_mut() {
                Some((_, idx)) if v - self.values[*idx.last().unwrap()] <= self.rank_tol => idx.push(i),
                _ => out.push((0.0, vec![i])),
            }
        }
        for (mean, idx) in &mut out {
            *mean = idx.iter().map(|&i| self.values[i]).sum::<f64>() / idx.len() as f64;
        }
        out
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Largest entrywise difference.
pub fn max_norm_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let asym = max_norm_diff(m, &m.transpose());
    if asym > tol {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Default rank tolerance `1e-10 N ||M||`.
pub fn default_rank_tol(n: usize, norm: f64) -> f64 {
    1e-10 * n as f64 * norm
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps over all off-diagonal positions until the off-diagonal Frobenius
/// norm is at most `1e-13` times the Frobenius norm of the input.
pub fn sym_eig(m: &DMatrix<f64>, tol: f64) -> Result<SpectralData> {
    check_symmetric(m, tol)?;
    let n = m.nrows();
    // Row-major working copy of the symmetrized input.
    let mut a: Vec<f64> = (0..n * n).map(|k| 0.5 * (m[(k / n, k % n)] + m[(k % n, k / n)])).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-13 * fro;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[k * n + p] = np;
                    a[p * n + k] = np;
                    a[k * n + q] = nq;
                    a[q * n + k] = nq;
                }
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    let norm = values.iter().fold(0.0f64, |x, y| x.max(y.abs()));
    let rank_tol = default_rank_tol(n, norm);
    let rank = values.iter().filter(|&&x| x > rank_tol).count();
    Ok(SpectralData { values, vectors, rank, rank_tol })
}

/// `min` of the gaps between consecutive distinct eigenvalues and the smallest
/// positive eigenvalue.
pub fn delta_gap(spec: &SpectralData) -> Result<f64> {
    let clusters = spec.clusters();
    let smallest_positive = clusters
        .iter()
        .map(|c| c.0)
        .find(|&v| v > spec.rank_tol)
        .ok_or_else(|| Error::Degenerate("matrix has no positive eigenvalue".into()))?;
    let gaps = clusters.windows(2).map(|w| w[1].0 - w[0].0);
    Ok(gaps.fold(smallest_positive, f64::min))
}

/// Norm and gap of a PSD matrix, the two spectral inputs of the constants below.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSummary {
    pub n: usize,
    /// Spectral norm.
    pub norm: f64,
    pub delta: f64,
}

impl SpectralSummary {
    pub fn of_matrix(b: &DMatrix<f64>) -> Result<Self> {
        let spec = sym_eig(b, 1e-12 * max_abs(b).max(1.0))?;
        Ok(SpectralSummary { n: b.nrows(), norm: spec.norm(), delta: delta_gap(&spec)? })
    }

    /// Spectral data of the Gram matrix of an exact code that forms a tight
    /// frame, `sum_x x x^T = (N/d) I`: the Gram matrix then has eigenvalue
    /// `N/d` with multiplicity `d` and 0 otherwise, so norm and gap are both `N/d`.
    ///
    /// The frame identity is checked exactly on the integer model.
    pub fn of_tight_frame(c: &SphericalCode) -> Result<Self> {
        let m = c
            .exact_model()
            .ok_or_else(|| Error::InvalidInput("tight-frame check needs an exact model".into()))?;
        let (n, d, w) = (c.len(), c.dim(), m.ambient());
        if w != d {
            return Err(Error::InvalidInput("tight-frame check needs ambient dimension = d".into()));
        }
        let mut frame = vec![0i64; d * d];
        for i in 0..n {
            let r = m.row(i);
            for a in 0..d {
                for b in 0..d {
                    frame[a * d + b] += i64::from(r[a]) * i64::from(r[b]);
                }
            }
        }
        // sum z z^T must equal (N n0 / d) I.
        let scaled = n as i64 * m.norm();
        for a in 0..d {
            for b in 0..d {
                let want = if a == b { scaled } else { 0 };
                if frame[a * d + b] * d as i64 != want {
                    return Err(Error::Degenerate(format!(
                        "code is not a tight frame: entry ({a},{b}) of sum z z^T is {}",
                        frame[a * d + b]
                    )));
                }
            }
        }
        let lam = n as f64 / d as f64;
        Ok(SpectralSummary { n, norm: lam, delta: lam })
    }
}

/// `85 N^5 max(sqrt(||B||), 1) / Delta`.
pub fn remark_k_from(s: &SpectralSummary) -> f64 {
    85.0 * (s.n as f64).powi(5) * s.norm.sqrt().max(1.0) / s.delta
}

pub fn remark_k(b: &DMatrix<f64>) -> Result<f64> {
    if b.nrows() < 2 {
        return Err(Error::InvalidInput("matrix must be at least 2x2".into()));
    }
    Ok(remark_k_from(&SpectralSummary::of_matrix(b)?))
}

/// Largest admissible input distance: `14 N^4 delta / Delta < 1/(2N)`.
pub fn delta_zero(n: usize, delta_gap: f64) -> f64 {
    delta_gap / (28.0 * (n as f64).powi(5))
}

/// Symmetric orthogonalization: the columns of `U (U^T U)^{-1/2}`.
///
/// Among all orthonormal bases it minimizes `sum ||u_i - w_i||^2`.
fn symmetric_orthogonalization(u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = u.transpose() * u;
    let spec = sym_eig(&g, 1e-9)?;
    if spec.values.first().map_or(true, |&v| v <= 0.0) {
        return Err(Error::Degenerate("vectors are linearly dependent".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        spec.values.len(),
        spec.values.iter().map(|v| 1.0 / v.sqrt()),
    ));
    Ok(u * (&spec.vectors * inv_sqrt * spec.vectors.transpose()))
}

/// Orthonormal basis `w_i` close to `d` nearly orthogonal unit vectors
/// (the columns of `u`), with `||u_i - w_i|| <= 2 d eps` when
/// `|<u_i,u_j>| <= eps < 1/(2d)`.
pub fn near_orthonormal_basis(u: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let d = u.ncols();
    if d < 2 || u.nrows() != d {
        return Err(Error::InvalidInput(format!("need d >= 2 vectors in R^d, got {}x{}", u.nrows(), d)));
    }
    if !(eps >= 0.0 && eps < 1.0 / (2.0 * d as f64)) {
        return Err(Error::InvalidInput(format!("eps = {eps} is not below 1/(2d) = {}", 0.5 / d as f64)));
    }
    let g = u.transpose() * u;
    for i in 0..d {
        if (g[(i, i)] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("vector {i} is not a unit vector")));
        }
        for j in 0..i {
            if g[(i, j)].abs() > eps {
                return Err(Error::InvalidInput(format!(
                    "|<u_{j},u_{i}>| = {} exceeds eps = {eps}",
                    g[(i, j)].abs()
                )));
            }
        }
    }
    symmetric_orthogonalization(u)
}

/// Per-column distances `||u_i - w_i||`.
pub fn column_deviations(u: &DMatrix<f64>, w: &DMatrix<f64>) -> Vec<f64> {
    (0..u.ncols()).map(|i| (u.column(i) - w.column(i)).norm()).collect()
}

/// The two square roots of the stability construction, with its diagnostics.
#[derive(Clone, Debug)]
pub struct SqrtAlignment {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// `||A - B||_max`.
    pub delta: f64,
    /// Spectral gap of `B`.
    pub big_delta: f64,
    pub delta_zero: f64,
    pub k: f64,
    pub rank: usize,
    /// `||P - Q||_max`.
    pub p_minus_q: f64,
    /// `||F - Id||` (spectral norm) of the aligning rotation.
    pub f_minus_id: f64,
    pub residual_a: f64,
    pub residual_b: f64,
    pub bound_satisfied: bool,
}

impl SqrtAlignment {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "delta": self.delta,
            "Delta": self.big_delta,
            "delta0": self.delta_zero,
            "K": self.k,
            "rank": self.rank,
            "p_minus_q_max": self.p_minus_q,
            "bound": self.k * self.delta,
            "bound_margin": self.k * self.delta - self.p_minus_q,
            "f_minus_id": self.f_minus_id,
            "residual_pp_minus_a": self.residual_a,
            "residual_qq_minus_b": self.residual_b,
            "bound_satisfied": self.bound_satisfied,
        })
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let s = sym_eig(&(m.transpose() * m), f64::INFINITY)?;
    Ok(s.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Orthonormal basis close to the given unit columns inside a subspace of
/// dimension `cols`; a single vector is kept as is.
fn orthonormalize_block(u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if u.ncols() == 1 {
        return Ok(u.clone());
    }
    symmetric_orthogonalization(u)
}

/// Square roots `P` of `A` and `Q` of `B` built as in the stability
/// argument, checked against `||P - Q||_max <= K delta`.
///
/// `B` is diagonalized by an orthogonal `M`. Each eigenvector `v_i` of
/// `M^T A M` is projected onto the eigenspace of `B` (or onto the kernel)
/// that carries most of it, normalized, and the projections are turned into
/// an orthonormal basis `w_i` per eigenspace. Rotating `M` inside each
/// eigenspace so that the `w_i` become coordinate vectors leaves `sqrt(D)`
/// unchanged and makes the aligning map `F` (with `F w_i = v_i`) a matrix
/// close to the identity. Then `P = M F sqrt(D~) F^T M^T` and
/// `Q = M sqrt(D) M^T`.
pub fn aligned_sqrt_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SqrtAlignment> {
    let n = b.nrows();
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
    }
    if n < 2 {
        return Err(Error::InvalidInput("matrices must be at least 2x2".into()));
    }
    let sym_tol = 1e-12 * max_abs(b).max(1.0);
    check_symmetric(a, sym_tol)?;
    let sb = sym_eig(b, sym_tol)?;
    if sb.values[0] < -sb.rank_tol {
        return Err(Error::InvalidInput(format!("B is not PSD: eigenvalue {}", sb.values[0])));
    }
    let sa = sym_eig(a, sym_tol)?;
    let rank_a = sa.values.iter().filter(|&&v| v.abs() > sb.rank_tol).count();
    if rank_a != sb.rank {
        return Err(Error::RankMismatch(format!("rank A = {rank_a}, rank B = {}", sb.rank)));
    }
    let r = sb.rank;
    let big_delta = delta_gap(&sb)?;
    let delta = max_norm_diff(a, b);
    let d0 = delta_zero(n, big_delta);
    if delta >= d0 {
        let nf = n as f64;
        return Err(Error::OutsideRegime(format!(
            "14 N^4 / Delta * delta = {:.6e} is not below 1/(2N) = {:.6e} (delta = {delta:.3e}, delta0 = {d0:.3e})",
            14.0 * nf.powi(4) / big_delta * delta,
            0.5 / nf
        )));
    }

    // Columns of M: positive eigenvalues ascending first, then the kernel.
    let pos: Vec<usize> = (0..n).filter(|&i| sb.values[i] > sb.rank_tol).collect();
    let ker: Vec<usize> = (0..n).filter(|&i| sb.values[i] <= sb.rank_tol).collect();
    let order: Vec<usize> = pos.iter().chain(&ker).copied().collect();
    let m0 = DMatrix::from_fn(n, n, |row, c| sb.vectors[(row, order[c])]);
    let lambda: Vec<f64> = order.iter().map(|&i| sb.values[i].max(0.0)).collect();

    // Blocks: eigenspaces L_1..L_k of B in the new coordinates, then L^perp.
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for c in 0..r {
        match blocks.last_mut() {
            Some(bl) if lambda[c] - lambda[*bl.last().unwrap()] <= sb.rank_tol => bl.push(c),
            _ => blocks.push(vec![c]),
        }
    }
    if r < n {
        blocks.push((r..n).collect());
    }

    let c_mat = m0.transpose() * a * &m0;
    let sc = sym_eig(&c_mat, f64::INFINITY)?;
    // v_i with the r largest eigenvalues play the role of the positive part.
    let mu_order: Vec<usize> = (0..n).rev().collect();
    let mu: Vec<f64> = mu_order.iter().map(|&i| sc.values[i]).collect();
    let v_all = DMatrix::from_fn(n, n, |row, c| sc.vectors[(row, mu_order[c])]);
    if r < n && mu[r - 1] <= big_delta / 2.0 {
        return Err(Error::Degenerate("eigenvalues of A do not separate from the kernel".into()));
    }

    // Assign each v_i to the block carrying the largest part of it.
    let block_of = |i: usize| -> usize {
        let col = v_all.column(i);
        let range: Vec<usize> = if i < r {
            (0..blocks.len()).filter(|&j| blocks[j][0] < r).collect()
        } else {
            vec![blocks.len() - 1]
        };
        *range
            .iter()
            .max_by(|&&x, &&y| {
                let nx: f64 = blocks[x].iter().map(|&c| col[c] * col[c]).sum();
                let ny: f64 = blocks[y].iter().map(|&c| col[c] * col[c]).sum();
                nx.total_cmp(&ny)
            })
            .unwrap()
    };
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    for i in 0..n {
        members[block_of(i)].push(i);
    }
    for (j, bl) in blocks.iter().enumerate() {
        if members[j].len() != bl.len() {
            return Err(Error::Degenerate(format!(
                "eigenspace {j} of B (dimension {}) received {} eigenvectors of A",
                bl.len(),
                members[j].len()
            )));
        }
    }

    // Renumber the v_i so that v_i lands in the block containing coordinate i,
    // and build the rotation W that turns the w_i into coordinate vectors.
    let mut v = DMatrix::zeros(n, n);
    let mut mu_sorted = vec![0.0; n];
    let mut w_rot = DMatrix::zeros(n, n);
    for (j, bl) in blocks.iter().enumerate() {
        let dim = bl.len();
        let mut u = DMatrix::zeros(dim, dim);
        for (slot, &i) in members[j].iter().enumerate() {
            let col = v_all.column(i);
            let proj: Vec<f64> = bl.iter().map(|&c| col[c]).collect();
            let len = proj.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (row, x) in proj.iter().enumerate() {
                u[(row, slot)] = x / len;
            }
            v.set_column(bl[slot], &col);
            mu_sorted[bl[slot]] = if bl[slot] < r { mu[i] } else { 0.0 };
        }
        let w = orthonormalize_block(&u)?;
        for (x, &cx) in bl.iter().enumerate() {
            for (y, &cy) in bl.iter().enumerate() {
                w_rot[(cx, cy)] = w[(x, y)];
            }
        }
    }
    let m = &m0 * &w_rot;
    let f = w_rot.transpose() * &v;
    let f_minus_id = spectral_norm(&(&f - DMatrix::identity(n, n)))?;
    let sqrt_mu = DMatrix::from_diagonal(&DVector::from_iterator(n, mu_sorted.iter().map(|x| x.max(0.0).sqrt())));
    let sqrt_d = DMatrix::from_diagonal(&DVector::from_iterator(n, lambda.iter().map(|x| x.sqrt())));
    let p = &m * &f * sqrt_mu * f.transpose() * m.transpose();
    let q = &m * sqrt_d * m.transpose();
    let p = (&p + p.transpose()) * 0.5;
    let q = (&q + q.transpose()) * 0.5;
    let k = remark_k_from(&SpectralSummary { n, norm: sb.norm(), delta: big_delta });
    let p_minus_q = max_norm_diff(&p, &q);
    Ok(SqrtAlignment {
        residual_a: max_norm_diff(&(&p * &p), a),
        residual_b: max_norm_diff(&(&q * &q), b),
        bound_satisfied: p_minus_q <= k * delta,
        p,
        q,
        delta,
        big_delta,
        delta_zero: d0,
        k,
        rank: r,
        p_minus_q,
        f_minus_id,
    })
}

/// Result of the almost-perpendicular estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct AlmostPerp {
    pub z_perp: Vec<f64>,
    pub lambda1: f64,
    pub bound: f64,
    pub actual_angle: f64,
}

/// Angle between `x` and the unit normal of `span(Z)`, against
/// `(pi/2) sqrt((d-1)/lambda_1(G)) delta` where `G` is the Gram matrix of `Z`.
///
/// `z` holds the `d-1` vectors as columns.
pub fn almost_perp(x: &[f64], z: &DMatrix<f64>, delta: f64) -> Result<AlmostPerp> {
    let d = x.len();
    if d < 2 || z.nrows() != d || z.ncols() != d - 1 {
        return Err(Error::DimensionMismatch { expected: d - 1, got: z.ncols() });
    }
    let xv = DVector::from_column_slice(x);
    for i in 0..d - 1 {
        let dot = z.column(i).dot(&xv);
        if dot.abs() > delta {
            return Err(Error::InvalidInput(format!("|<x, z_{i}>| = {} exceeds delta = {delta}", dot.abs())));
        }
    }
    let g = z.transpose() * z;
    let lambda1 = sym_eig(&g, 1e-9)?.values[0];
    if lambda1 < 1e-12 {
        return Err(Error::RankMismatch(format!("Z is rank deficient: lambda_1(G) = {lambda1:e}")));
    }
    // The kernel of Z^T is the eigenvector of Z Z^T for its zero eigenvalue.
    let zz = z * z.transpose();
    let spec = sym_eig(&zz, 1e-9)?;
    let mut n: DVector<f64> = spec.vectors.column(0).into_owned();
    n /= n.norm();
    if n.dot(&xv) < 0.0 {
        n = -n;
    }
    let cos = n.dot(&xv);
    let sin = (&xv - &n * cos).norm();
    let actual_angle = sin.atan2(cos);
    let bound = std::f64::consts::FRAC_PI_2 * ((d - 1) as f64 / lambda1).sqrt() * delta;
    Ok(AlmostPerp { z_perp: n.iter().copied().collect(), lambda1, bound, actual_angle })
}

/// Unit vectors in `R^d` whose Gram matrix is `g`.
pub fn factor_code(g: &DMatrix<f64>, d: usize) -> Result<SphericalCode> {
    let n = g.nrows();
    let tol = 1e-9;
    check_symmetric(g, tol)?;
    for i in 0..n {
        if (g[(i, i)] - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!("diagonal entry {i} is {}", g[(i, i)])));
        }
    }
    let spec = sym_eig(g, tol)?;
    if spec.values[0] < -tol * n as f64 {
        return Err(Error::InvalidInput(format!("negative eigenvalue {}", spec.values[0])));
    }
    if spec.rank > d {
        return Err(Error::RankMismatch(format!("Gram matrix has rank {} > {d}", spec.rank)));
    }
    let mut pts = vec![0.0; n * d];
    for k in 0..d.min(n) {
        let col = n - 1 - k;
        let s = spec.values[col].max(0.0).sqrt();
        for i in 0..n {
            pts[i * d + k] = spec.vectors[(i, col)] * s;
        }
    }
    SphericalCode::from_unnormalized(d, pts, "factored")
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det_f64(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[(x, c)].abs().total_cmp(&a[(y, c)].abs())).unwrap();
        if a[(p, c)] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap_rows(p, c);
            det = -det;
        }
        det *= a[(c, c)];
        for r in c + 1..n {
            let f = a[(r, c)] / a[(c, c)];
            for k in c..n {
                a[(r, k)] -= f * a[(c, k)];
            }
        }
    }
    det
}

/// Largest `|det|` over all principal minors of size greater than `d`.
///
/// Exhaustive, so restricted to `N <= 12`.
pub fn max_principal_minor_above(g: &DMatrix<f64>, d: usize) -> Result<f64> {
    let n = g.nrows();
    if n > 12 {
        return Err(Error::InvalidInput(format!("principal-minor enumeration is limited to N <= 12, got {n}")));
    }
    let mut worst = 0.0f64;
    for mask in 0u32..1 << n {
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if idx.len() <= d {
            continue;
        }
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| g[(idx[r], idx[c])]);
        worst = worst.max(det_f64(&sub).abs());
    }
    Ok(worst)
}

/// `C = (pi/2) sqrt(d) K_remark K_weak`, with the Holder exponent `1/m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrongConstant {
    pub value: f64,
    pub log10: f64,
    pub exponent: f64,
    pub remark_k: f64,
}

pub fn strong_stability_constant(b: &SpectralSummary, k_weak: f64, m: usize, d: usize) -> StrongConstant {
    let rk = remark_k_from(b);
    let log10 = (std::f64::consts::FRAC_PI_2 * (d as f64).sqrt()).log10() + rk.log10() + k_weak.log10();
    StrongConstant { value: 10f64.powf(log10), log10, exponent: 1.0 / m.max(1) as f64, remark_k: rk }
}

/// Writes a matrix as comma-separated rows.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in 0..m.nrows() {
        wr.write_record(m.row(r).iter().map(|x| format!("{x:?}")))
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse("ragged matrix rows".into()));
            }
        }
        rows.push(row);
    }
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::generate;

    fn gram(c: &SphericalCode) -> DMatrix<f64> {
        let n = c.len();
        DMatrix::from_row_slice(n, n, &c.gram_f64())
    }

    #[test]
    fn jacobi_basics() {
        let s = sym_eig(&DMatrix::identity(5, 5), 0.0).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let s = sym_eig(&DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])), 0.0).unwrap();
        assert_eq!(s.values, vec![1.0, 4.0]);
        assert!((s.vectors[(1, 0)].abs() - 1.0).abs() < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&bad, 1e-9), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let m = DMatrix::from_fn(9, 9, |i, j| ((i * 7 + j * 3) % 11) as f64 + ((j * 7 + i * 3) % 11) as f64);
        let s = sym_eig(&m, 1e-12).unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_vec(s.values.clone()));
        let back = &s.vectors * d * s.vectors.transpose();
        assert!(max_norm_diff(&back, &m) < 1e-11);
        let ortho = s.vectors.transpose() * &s.vectors;
        assert!(max_norm_diff(&ortho, &DMatrix::identity(9, 9)) < 1e-12);
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn e8_gram_spectrum() {
        let b = gram(&generate("e8_roots").unwrap());
        let s = sym_eig(&b, 1e-12).unwrap();
        assert_eq!(s.rank, 8);
        assert!(s.values[232..].iter().all(|&v| (v - 30.0).abs() < 1e-9));
        assert!(s.values[..232].iter().all(|&v| v.abs() < 1e-9));
        assert!((delta_gap(&s).unwrap() - 30.0).abs() < 1e-9);
        let k = remark_k(&b).unwrap();
        let want = 85.0 * 240f64.powi(5) * 30f64.sqrt() / 30.0;
        assert!((k / want - 1.0).abs() < 1e-9);
        let tf = SpectralSummary::of_tight_frame(&generate("e8_roots").unwrap()).unwrap();
        assert_eq!((tf.norm, tf.delta), (30.0, 30.0));
    }

    #[test]
    fn gap_and_remark_constant() {
        let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()));
        assert_eq!(delta_gap(&sym_eig(&diag(&[4.0, 1.0, 0.0]), 0.0).unwrap()).unwrap(), 1.0);
        assert_eq!(delta_gap(&sym_eig(&DMatrix::identity(3, 3), 0.0).unwrap()).unwrap(), 1.0);
        assert_eq!(remark_k(&diag(&[4.0, 1.0])).unwrap(), 5440.0);
        assert_eq!(remark_k(&DMatrix::identity(2, 2)).unwrap(), 2720.0);
        assert!(delta_gap(&sym_eig(&DMatrix::zeros(3, 3), 0.0).unwrap()).is_err());
    }

    #[test]
    fn sqrt_pair_diagonal_cases() {
        let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()));
        let same = aligned_sqrt_pair(&diag(&[4.0, 1.0]), &diag(&[4.0, 1.0])).unwrap();
        assert!(max_norm_diff(&same.p, &diag(&[2.0, 1.0])) < 1e-15);
        assert_eq!(same.delta, 0.0);
        // delta = 0.01 is far outside delta0 = 1/(28 * 32) for N = 2.
        let near = diag(&[4.01, 1.0]);
        assert!(matches!(aligned_sqrt_pair(&near, &diag(&[4.0, 1.0])), Err(Error::OutsideRegime(_))));
        let tiny = diag(&[4.0 + 1e-5, 1.0]);
        let out = aligned_sqrt_pair(&tiny, &diag(&[4.0, 1.0])).unwrap();
        assert!((out.p_minus_q - ((4.0f64 + 1e-5).sqrt() - 2.0)).abs() < 1e-12);
        assert!(out.bound_satisfied);
    }

    #[test]
    fn sqrt_pair_rank_mismatch() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-6]));
        assert!(matches!(aligned_sqrt_pair(&a, &b), Err(Error::RankMismatch(_))));
    }

    #[test]
    fn near_orthonormal_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        let w = near_orthonormal_basis(&id, 0.0).unwrap();
        assert!(max_norm_diff(&w, &id) < 1e-15);
        let u = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.1, 0.99f64.sqrt()]);
        let w = near_orthonormal_basis(&u, 0.1).unwrap();
        assert!(column_deviations(&u, &w).iter().all(|&x| x <= 0.4));
        assert!(max_norm_diff(&(w.transpose() * &w), &DMatrix::identity(2, 2)) < 1e-12);
        assert!(near_orthonormal_basis(&u, 0.3).is_err());
        assert!(near_orthonormal_basis(&u, 0.05).is_err());
    }

    #[test]
    fn almost_perp_closed_form() {
        let x = [0.01, 0.01, (1.0f64 - 2e-4).sqrt()];
        let z = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let r = almost_perp(&x, &z, 0.01).unwrap();
        assert!((r.actual_angle - (2e-4f64).sqrt().asin()).abs() < 1e-12);
        assert!((r.actual_angle - 0.014142).abs() < 1e-6);
        assert!((r.bound - 0.022214).abs() < 1e-6);
        let flat = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(almost_perp(&x, &flat, 0.02), Err(Error::RankMismatch(_))));
        let on_axis = almost_perp(&[0.0, 0.0, 1.0], &z, 0.0).unwrap();
        assert_eq!(on_axis.actual_angle, 0.0);
    }

    #[test]
    fn factor_round_trips() {
        for name in ["cross_polytope(3)", "e8_roots"] {
            let c = generate(name).unwrap();
            let g = gram(&c);
            let f = factor_code(&g, c.dim()).unwrap();
            assert!(max_norm_diff(&gram(&f), &g) < 1e-10, "{name}");
        }
        let id = factor_code(&DMatrix::identity(4, 4), 4).unwrap();
        assert!(max_norm_diff(&gram(&id), &DMatrix::identity(4, 4)) < 1e-14);
        assert!(matches!(factor_code(&DMatrix::identity(4, 4), 3), Err(Error::RankMismatch(_))));
        let g = gram(&generate("cross_polytope(3)").unwrap());
        assert!(max_principal_minor_above(&g, 3).unwrap() < 1e-12);
        assert!(max_principal_minor_above(&g, 2).unwrap() > 0.5);
    }

    #[test]
    fn strong_constant_by_substitution() {
        let s = SpectralSummary::of_matrix(&DMatrix::identity(2, 2)).unwrap();
        let c = strong_stability_constant(&s, 1.0, 1, 2);
        let want = std::f64::consts::FRAC_PI_2 * 2f64.sqrt() * 2720.0;
        assert!((c.value / want - 1.0).abs() < 1e-12);
        assert_eq!(c.exponent, 1.0);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 1e-300, 0.1, 2.0, 3.25]);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }
}
