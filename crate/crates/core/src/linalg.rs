//! Dense real linear algebra.
//!
//! Every reduction runs as a plain left-to-right loop over indices so results
//! are bit-reproducible across runs and platforms that honour IEEE-754.

use std::fmt;
use std::ops::Index;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// A point of a finite-dimensional real Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Vector {
    coords: Vec<f64>,
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords.iter()).finish()
    }
}

impl Vector {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Other("vector dimension must be positive".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector coordinates"));
        }
        Ok(Self { coords })
    }

    /// Wraps raw coordinates without validation. Intermediate results of a
    /// diverging iteration may legitimately hold non-finite values; callers
    /// that care check [`Vector::is_finite`].
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_raw(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self::from_raw(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot_slices(&self.coords, &other.coords))
    }

    pub fn norm_sq(&self) -> f64 {
        dot_slices(&self.coords, &self.coords)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// `s * self + t * other`.
    pub fn combine(&self, s: f64, other: &Vector, t: f64) -> Result<Vector> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.lincomb_raw(s, other, t))
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector::from_raw(self.coords.iter().map(|c| s * c).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector::from_raw(self.coords.iter().map(|&c| f(c)).collect())
    }

    pub(crate) fn lincomb_raw(&self, s: f64, other: &Vector, t: f64) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| s * a + t * b)
                .collect(),
        )
    }

    pub(crate) fn sub_raw(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub(crate) fn add_raw(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::dims(a, b));
    }
    Ok(())
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Euclidean inner product.
pub fn dot(a: &Vector, b: &Vector) -> Result<f64> {
    a.dot(b)
}

pub fn norm(a: &Vector) -> f64 {
    a.norm()
}

/// `s * a + t * b`, componentwise.
pub fn combine(a: &Vector, s: f64, b: &Vector, t: f64) -> Result<Vector> {
    a.combine(s, b, t)
}

/// A point `(x, y)` of a product space `X x Y`.
#[derive(Clone, PartialEq, Debug)]
pub struct BlockVector {
    pub primal: Vector,
    pub dual: Vector,
}

impl BlockVector {
    pub fn new(primal: Vector, dual: Vector) -> Self {
        Self { primal, dual }
    }

    pub fn zeros(primal_dim: usize, dual_dim: usize) -> Self {
        Self::new(Vector::zeros(primal_dim), Vector::zeros(dual_dim))
    }
}

/// Operations the iteration engine needs from a point type.
///
/// The methods assume matching shapes; the engine and the operator handles
/// validate shapes before they get here.
pub trait Point: Clone + Send + Sync + fmt::Debug + 'static {
    type Shape: Copy + PartialEq + fmt::Debug + Send + Sync;

    fn shape(&self) -> Self::Shape;
    /// Euclidean inner product on the (product) space.
    fn inner(&self, other: &Self) -> f64;
    /// `s * self + t * other`.
    fn lincomb(&self, s: f64, other: &Self, t: f64) -> Self;
    fn all_finite(&self) -> bool;
}

impl Point for Vector {
    type Shape = usize;

    fn shape(&self) -> usize {
        self.dim()
    }
    fn inner(&self, other: &Self) -> f64 {
        dot_slices(&self.coords, &other.coords)
    }
    fn lincomb(&self, s: f64, other: &Self, t: f64) -> Self {
        self.lincomb_raw(s, other, t)
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl Point for BlockVector {
    type Shape = (usize, usize);

    fn shape(&self) -> (usize, usize) {
        (self.primal.dim(), self.dual.dim())
    }
    fn inner(&self, other: &Self) -> f64 {
        self.primal.inner(&other.primal) + self.dual.inner(&other.dual)
    }
    fn lincomb(&self, s: f64, other: &Self, t: f64) -> Self {
        BlockVector::new(
            self.primal.lincomb_raw(s, &other.primal, t),
            self.dual.lincomb_raw(s, &other.dual, t),
        )
    }
    fn all_finite(&self) -> bool {
        self.primal.is_finite() && self.dual.is_finite()
    }
}

type InnerFn<P> = dyn Fn(&P, &P) -> f64 + Send + Sync;

/// Inner product in which an operator's averagedness holds and in which
/// the engine measures distances.
#[derive(Clone)]
pub enum Metric<P> {
    Euclidean,
    /// A positive (semi)definite bilinear form, given as a closure.
    Induced(Arc<InnerFn<P>>),
}

impl<P> fmt::Debug for Metric<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Euclidean => f.write_str("Euclidean"),
            Metric::Induced(_) => f.write_str("Induced(..)"),
        }
    }
}

impl<P: Point> Metric<P> {
    pub fn inner(&self, a: &P, b: &P) -> f64 {
        match self {
            Metric::Euclidean => a.inner(b),
            Metric::Induced(f) => f(a, b),
        }
    }

    pub fn norm_sq(&self, a: &P) -> f64 {
        self.inner(a, a)
    }

    /// Norm of `a`; a tiny negative square from rounding in a semidefinite
    /// form is read as zero.
    pub fn norm(&self, a: &P) -> f64 {
        self.norm_sq(a).max(0.0).sqrt()
    }

    pub fn dist(&self, a: &P, b: &P) -> f64 {
        self.norm(&a.lincomb(1.0, b, -1.0))
    }
}

/// Row-major real matrix viewed as a linear map `R^cols -> R^rows`.
///
/// Storage is dense; a compressed-row index is built on first use when at
/// most a quarter of the entries are nonzero, and products go through it.
#[derive(Clone)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    sparse: OnceLock<Option<Csr>>,
}

const SPARSE_DENSITY: f64 = 0.25;

#[derive(Clone, Debug)]
struct Csr {
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn build(rows: usize, cols: usize, data: &[f64]) -> Option<Csr> {
        let nnz = data.iter().filter(|v| **v != 0.0).count();
        if nnz as f64 > SPARSE_DENSITY * (rows * cols) as f64 {
            return None;
        }
        let mut csr = Csr {
            row_ptr: Vec::with_capacity(rows + 1),
            col: Vec::with_capacity(nnz),
            val: Vec::with_capacity(nnz),
        };
        csr.row_ptr.push(0);
        for row in data.chunks(cols) {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    csr.col.push(j);
                    csr.val.push(v);
                }
            }
            csr.row_ptr.push(csr.col.len());
        }
        Some(csr)
    }
}

impl PartialEq for LinearMap {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearMap({}x{})", self.rows, self.cols)
    }
}

impl LinearMap {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Other("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::dims(rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self::from_parts(rows, cols, data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Other("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        Self {
            rows,
            cols,
            data,
            sparse: OnceLock::new(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self::diagonal(&vec![s; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    /// 1-D forward differences on `R^n`: `(Dx)_i = x_{i+1} - x_i` for
    /// `i < n - 1`, giving an `(n - 1) x n` map.
    pub fn forward_difference(n: usize) -> Self {
        assert!(n >= 2);
        let mut m = Self::zeros(n - 1, n);
        for i in 0..n - 1 {
            m.data[i * n + i] = -1.0;
            m.data[i * n + i + 1] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dims(self.cols, x.dim())?;
        Ok(self.apply_raw(x))
    }

    pub fn apply_adjoint(&self, y: &Vector) -> Result<Vector> {
        check_dims(self.rows, y.dim())?;
        Ok(self.apply_adjoint_raw(y))
    }

    fn csr(&self) -> Option<&Csr> {
        self.sparse
            .get_or_init(|| Csr::build(self.rows, self.cols, &self.data))
            .as_ref()
    }

    /// The diagonal, if every off-diagonal entry is zero.
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.cols;
        let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || self.data[i * n + j] == 0.0));
        off_zero.then(|| (0..n).map(|i| self.data[i * n + i]).collect())
    }

    pub(crate) fn apply_raw(&self, x: &Vector) -> Vector {
        let xs = x.as_slice();
        if let Some(c) = self.csr() {
            return Vector::from_raw(
                c.row_ptr
                    .windows(2)
                    .map(|w| (w[0]..w[1]).map(|p| c.val[p] * xs[c.col[p]]).sum())
                    .collect(),
            );
        }
        Vector::from_raw((0..self.rows).map(|i| dot_slices(self.row(i), xs)).collect())
    }

    pub(crate) fn apply_adjoint_raw(&self, y: &Vector) -> Vector {
        let mut out = vec![0.0; self.cols];
        if let Some(c) = self.csr() {
            for (i, w) in c.row_ptr.windows(2).enumerate() {
                let yi = y[i];
                for p in w[0]..w[1] {
                    out[c.col[p]] += c.val[p] * yi;
                }
            }
            return Vector::from_raw(out);
        }
        for i in 0..self.rows {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Vector::from_raw(out)
    }

    pub fn transpose(&self) -> LinearMap {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &LinearMap) -> Result<LinearMap> {
        check_dims(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A^T A`, symmetrized exactly.
    pub fn gram(&self) -> LinearMap {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for r in 0..self.rows {
                    acc += self.data[r * n + i] * self.data[r * n + j];
                }
                g.data[i * n + j] = acc;
                g.data[j * n + i] = acc;
            }
        }
        g
    }

    /// `s * self + t * other`.
    pub fn combine(&self, s: f64, other: &LinearMap, t: f64) -> Result<LinearMap> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(
                (self.rows, self.cols),
                (other.rows, other.cols),
            ));
        }
        Ok(LinearMap::from_parts(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(a, b)| s * a + t * b).collect(),
        ))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(m: &LinearMap) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::dims((m.rows, m.rows), (m.rows, m.cols)));
        }
        if !m.is_symmetric(1e-12) {
            return Err(Error::NotSymmetric);
        }
        let n = m.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        check_dims(self.n, b.dim())?;
        Ok(self.solve_raw(b))
    }

    pub(crate) fn solve_raw(&self, b: &Vector) -> Vector {
        let n = self.n;
        let l = &self.lower;
        let mut z = b.as_slice().to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[i * n + k] * z[k];
            }
            z[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= l[k * n + i] * z[k];
            }
            z[i] = s / l[i * n + i];
        }
        Vector::from_raw(z)
    }
}

/// Solves `M x = b` for symmetric positive definite `M` by Cholesky.
pub fn solve_spd(m: &LinearMap, b: &Vector) -> Result<Vector> {
    Cholesky::factor(m)?.solve(b)
}

/// Eigen decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: LinearMap,
}

/// Cyclic Jacobi eigenvalue iteration. Converges quadratically; a dozen
/// sweeps suffice at the dimensions this crate targets.
pub fn symmetric_eigen(m: &LinearMap) -> Result<SymmetricEigen> {
    if !m.is_symmetric(1e-12) {
        return Err(Error::NotSymmetric);
    }
    let n = m.rows;
    let mut a = m.data.clone();
    let mut v = LinearMap::identity(n).data;
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-15 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
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
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = LinearMap::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.data[r * n + new_col] = v[r * n + old_col];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Power-iteration estimate of the largest singular value `||L||`.
///
/// Iterates `v <- L^T L v / ||L^T L v||` from a seeded random start and
/// returns the largest `||L v||` seen with `||v|| = 1`. Every such value is
/// a lower bound on `||L||`; the sequence approaches it from below.
pub fn operator_norm_estimate(l: &LinearMap, iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(Error::param("iters", 0.0, "must be at least 1"));
    }
    if l.is_zero() {
        return Ok(0.0);
    }
    let mut rng = SplitMix64::new(seed);
    let mut v = Vector::from_raw(rng.gaussian_vec(l.cols));
    let n0 = v.norm();
    v = v.scale(1.0 / n0);
    let mut best = 0.0_f64;
    for _ in 0..iters {
        let lv = l.apply_raw(&v);
        best = best.max(lv.norm());
        let w = l.apply_adjoint_raw(&lv);
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        v = w.scale(1.0 / nw);
    }
    let lv = l.apply_raw(&v);
    Ok(best.max(lv.norm()))
}

/// Random orthogonal matrix as a product of `n` seeded Householder reflections.
pub(crate) fn random_orthogonal(n: usize, rng: &mut SplitMix64) -> LinearMap {
    let mut q = LinearMap::identity(n);
    for _ in 0..n {
        let u = Vector::from_raw(rng.gaussian_vec(n));
        let nu = u.norm_sq();
        if nu == 0.0 {
            continue;
        }
        // q <- q (I - 2 u u^T / |u|^2)
        for r in 0..n {
            let row = &mut q.data[r * n..(r + 1) * n];
            let proj = dot_slices(row, u.as_slice()) * 2.0 / nu;
            for (x, ui) in row.iter_mut().zip(u.as_slice()) {
                *x -= proj * ui;
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> LinearMap {
        let mut rng = SplitMix64::new(seed);
        LinearMap::new(rows, cols, rng.gaussian_vec(rows * cols)).unwrap()
    }

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(dot(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), 11.0);
        assert!(matches!(
            dot(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&v(&[3.0, 4.0])), 5.0);
        assert_eq!(norm(&Vector::zeros(4)), 0.0);
    }

    #[test]
    fn combine_examples() {
        let x = v(&[1.0, -2.0, 3.5]);
        let y = v(&[0.25, 4.0, -1.0]);
        assert_eq!(combine(&x, 1.0, &y, 0.0).unwrap(), x);
        assert_eq!(combine(&x, 0.5, &x, 0.5).unwrap(), x);
        let d = combine(&x, 1.0, &y, -1.0).unwrap();
        assert_eq!(combine(&d, 1.0, &y, 1.0).unwrap(), x);
        assert!(combine(&x, 1.0, &v(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn vector_rejects_non_finite_and_empty() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn adjoint_consistency_on_random_probes() {
        let l = random_matrix(7, 5, 11);
        let mut rng = SplitMix64::new(12);
        for _ in 0..200 {
            let x = Vector::from_raw(rng.gaussian_vec(5));
            let y = Vector::from_raw(rng.gaussian_vec(7));
            let lhs = l.apply(&x).unwrap().dot(&y).unwrap();
            let rhs = x.dot(&l.apply_adjoint(&y).unwrap()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn transpose_and_gram() {
        let l = random_matrix(4, 3, 5);
        let g = l.gram();
        let g2 = l.transpose().matmul(&l).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((g.get(i, j) - g2.get(i, j)).abs() < 1e-12);
            }
        }
        assert!(g.is_symmetric(0.0));
    }

    #[test]
    fn operator_norm_identity() {
        let est = operator_norm_estimate(&LinearMap::identity(3), 10, 1).unwrap();
        assert!((est - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn operator_norm_diagonal() {
        let est = operator_norm_estimate(&LinearMap::diagonal(&[1.0, 2.0, 5.0]), 200, 3).unwrap();
        assert!((est - 5.0).abs() <= 1e-8, "{est}");
    }

    #[test]
    fn operator_norm_zero_map_and_bad_iters() {
        assert_eq!(operator_norm_estimate(&LinearMap::zeros(2, 3), 5, 0).unwrap(), 0.0);
        assert!(operator_norm_estimate(&LinearMap::identity(2), 0, 0).is_err());
    }

    #[test]
    fn operator_norm_is_monotone_lower_bound() {
        let l = random_matrix(6, 9, 21);
        let exact = symmetric_eigen(&l.gram()).unwrap().values[8].sqrt();
        let mut prev = 0.0;
        for iters in [1, 2, 5, 10, 50, 500] {
            let est = operator_norm_estimate(&l, iters, 4).unwrap();
            assert!(est <= exact * (1.0 + 1e-14));
            assert!(est >= prev);
            prev = est;
        }
        assert!((prev - exact).abs() < 1e-8);
    }

    #[test]
    fn operator_norm_difference_matrix_against_nalgebra_eigensolve() {
        let d = LinearMap::forward_difference(8);
        // Spec form: n = 8 columns with a zero row appended at the end.
        let mut rows: Vec<Vec<f64>> = (0..7).map(|i| (0..8).map(|j| d.get(i, j)).collect()).collect();
        rows.push(vec![0.0; 8]);
        let d8 = LinearMap::from_rows(&rows).unwrap();
        let dtd = d8.gram();
        let na = nalgebra::DMatrix::from_fn(8, 8, |i, j| dtd.get(i, j));
        let eig = nalgebra::SymmetricEigen::new(na);
        let oracle = eig.eigenvalues.iter().cloned().fold(0.0, f64::max).sqrt();
        let est = operator_norm_estimate(&d8, 2000, 9).unwrap();
        assert!((est - oracle).abs() < 1e-8, "{est} vs {oracle}");
        // Closed form for the path-graph Laplacian: 2 cos(pi / (2n)).
        assert!((oracle - 2.0 * (std::f64::consts::PI / 16.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn solve_spd_examples() {
        let b = v(&[1.0, -2.0, 3.0]);
        assert_eq!(solve_spd(&LinearMap::identity(3), &b).unwrap(), b);
        let half = solve_spd(&LinearMap::scaled_identity(3, 2.0), &b).unwrap();
        assert!(half.sub_raw(&b.scale(0.5)).norm_inf() < 1e-15);
    }

    #[test]
    fn solve_spd_random_residual() {
        for seed in 0..10 {
            let g = random_matrix(12, 8, seed);
            let m = g.gram().combine(1.0, &LinearMap::identity(8), 0.1).unwrap();
            let mut rng = SplitMix64::new(seed + 100);
            let b = Vector::from_raw(rng.gaussian_vec(8));
            let x = solve_spd(&m, &b).unwrap();
            let r = m.apply(&x).unwrap().sub_raw(&b).norm();
            assert!(r <= 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn solve_spd_rejects_indefinite_and_asymmetric() {
        let m = LinearMap::diagonal(&[1.0, -1.0]);
        assert!(matches!(
            solve_spd(&m, &v(&[1.0, 1.0])),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
        let a = LinearMap::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(solve_spd(&a, &v(&[1.0, 1.0])), Err(Error::NotSymmetric));
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let g = random_matrix(10, 10, 77).gram();
        let ours = symmetric_eigen(&g).unwrap();
        let na = nalgebra::DMatrix::from_fn(10, 10, |i, j| g.get(i, j));
        let mut theirs: Vec<f64> = nalgebra::SymmetricEigen::new(na).eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.values.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
        // A v = lambda v for each column.
        for c in 0..10 {
            let col = Vector::from_raw((0..10).map(|r| ours.vectors.get(r, c)).collect());
            let av = g.apply(&col).unwrap();
            let err = av.sub_raw(&col.scale(ours.values[c])).norm();
            assert!(err < 1e-9 * (1.0 + ours.values[c].abs()));
        }
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = SplitMix64::new(5);
        let q = random_orthogonal(6, &mut rng);
        let qtq = q.transpose().matmul(&q).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.get(i, j) - e).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(a in prop::collection::vec(-1e3..1e3f64, 1..20), seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let b: Vec<f64> = (0..a.len()).map(|_| rng.uniform(-1e3, 1e3)).collect();
            let (a, b) = (v(&a), v(&b));
            prop_assert!(a.dot(&b).unwrap().abs() <= a.norm() * b.norm() * (1.0 + 1e-12));
        }

        #[test]
        fn self_dot_is_squared_norm(a in prop::collection::vec(-1e3..1e3f64, 1..20)) {
            let a = v(&a);
            let d = a.dot(&a).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!((d.sqrt() - a.norm()).abs() <= 1e-12 * (1.0 + a.norm()));
        }

        #[test]
        fn norm_is_homogeneous(a in prop::collection::vec(-1e3..1e3f64, 1..20), s in -50.0..50.0f64) {
            let a = v(&a);
            prop_assert!((a.scale(s).norm() - s.abs() * a.norm()).abs() <= 1e-12 * (1.0 + s.abs() * a.norm()));
        }
    }
}
