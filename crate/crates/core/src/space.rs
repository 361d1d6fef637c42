//! The ambient inner-product space and the dense kernels everything else is built on.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::basis_axis::Basis;
use crate::error::{Error, Result};

/// Numerical thresholds shared by every computation on a [`Space`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative tolerance for equalities between computed quantities.
    pub rel: f64,
    /// Absolute floor used where a relative test degenerates near zero.
    pub abs: f64,
    /// Pivots below `rank_tol * max|A|` count as zero.
    pub rank_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-9,
            abs: 1e-12,
            rank_tol: 1e-10,
        }
    }
}

impl Tolerance {
    /// Derives all three fields from a single relative tolerance, keeping the default ratios.
    pub fn from_rel(rel: f64) -> Result<Self> {
        let d = Self::default();
        Self {
            rel,
            abs: rel * d.abs / d.rel,
            rank_tol: rel * d.rank_tol / d.rel,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.rel) && ok(self.abs) && ok(self.rank_tol) {
            Ok(self)
        } else {
            Err(Error::Precondition(format!(
                "tolerances must be finite and positive: {self:?}"
            )))
        }
    }

    /// Acceptance threshold for decomposition residuals (`10 * rel`, i.e. 1e-8 by default).
    pub fn accept(&self) -> f64 {
        10.0 * self.rel
    }
}

/// Coordinates of an element of the space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// The `i`-th standard coordinate vector of length `n`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Dense row-major real matrix. Operators are square; a few internal helpers use
/// rectangular shapes (e.g. a basis of a subspace stored column-wise).
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &d) in entries.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Matrix whose `j`-th column is `cols[j]`.
    pub fn from_columns(cols: &[Vector]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vector::len);
        let mut m = Self::zeros(r, c);
        for (j, v) in cols.iter().enumerate() {
            for i in 0..r {
                m[(i, j)] = v[i];
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn columns(&self) -> Vec<Vector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.len(), "matrix-vector shape mismatch");
        Vector(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(x.as_slice())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect(),
        )
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_1(&self) -> f64 {
        self.transpose().norm_inf()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub(crate) struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
    min_pivot: f64,
    scale: f64,
}

impl Lu {
    pub(crate) fn factor(a: &Matrix) -> Self {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            min_pivot = min_pivot.min(pivot.abs());
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Self {
            lu,
            perm,
            sign,
            min_pivot: if n == 0 { 0.0 } else { min_pivot },
            scale: a.max_abs(),
        }
    }

    pub(crate) fn det(&self) -> f64 {
        let n = self.lu.nrows();
        (0..n).map(|i| self.lu[(i, i)]).product::<f64>() * self.sign
    }

    pub(crate) fn check_nonsingular(&self, rank_tol: f64) -> Result<()> {
        let threshold = rank_tol * self.scale;
        if self.lu.nrows() > 0 && !(self.min_pivot >= threshold && self.min_pivot > 0.0) {
            return Err(Error::Singular {
                pivot: self.min_pivot,
                threshold,
            });
        }
        Ok(())
    }

    /// Solves `A x = b`; the caller must have checked non-singularity.
    pub(crate) fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

/// Number of pivots above `threshold` under row-echelon reduction with partial pivoting.
pub(crate) fn echelon_rank(a: &Matrix, threshold: f64) -> usize {
    let (m, n) = (a.nrows(), a.ncols());
    let mut w = a.clone();
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let p = (row..m)
            .max_by(|&i, &j| w[(i, col)].abs().total_cmp(&w[(j, col)].abs()))
            .unwrap();
        let pivot = w[(p, col)];
        if !(pivot.abs() > threshold) {
            continue;
        }
        if p != row {
            for j in 0..n {
                w.data.swap(row * n + j, p * n + j);
            }
        }
        for i in row + 1..m {
            let f = w[(i, col)] / pivot;
            if f != 0.0 {
                for j in col..n {
                    w[(i, j)] -= f * w[(row, j)];
                }
            }
        }
        row += 1;
    }
    row
}

/// `R^n` with the inner product `<x, y> = x^T G y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    gram: Matrix,
    tol: Tolerance,
}

impl Space {
    /// Validates `gram` (square, symmetric, positive definite) and builds the space.
    pub fn new(gram: Matrix) -> Result<Self> {
        Self::with_tolerance(gram, Tolerance::default())
    }

    pub fn with_tolerance(gram: Matrix, tol: Tolerance) -> Result<Self> {
        let tol = tol.validated()?;
        let n = gram.nrows();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if !gram.is_square() {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: gram.ncols(),
            });
        }
        if !gram.is_finite() {
            return Err(Error::Precondition(
                "gram matrix has non-finite entries".into(),
            ));
        }
        let scale = gram.max_abs();
        let asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (gram[(i, j)] - gram[(j, i)]).abs())
            .fold(0.0, f64::max);
        if asym > tol.rel * scale + tol.abs {
            return Err(Error::NotSymmetric(asym));
        }
        // Cholesky; every pivot must clear rank_tol relative to the largest entry.
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let d = gram[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
            if !(d > tol.rank_tol * scale) {
                return Err(Error::NotPositiveDefinite(d));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let s = gram[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { gram, tol })
    }

    /// Euclidean space of dimension `n` (`G = I`).
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(Matrix::identity(n))
    }

    /// Same metric, different thresholds.
    pub fn retol(&self, tol: Tolerance) -> Result<Self> {
        Ok(Self {
            gram: self.gram.clone(),
            tol: tol.validated()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    pub(crate) fn check_vector(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_matrix(&self, a: &Matrix) -> Result<()> {
        let n = self.dim();
        for actual in [a.nrows(), a.ncols()] {
            if actual != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual,
                });
            }
        }
        Ok(())
    }

    /// `x^T G y` without shape checks.
    pub(crate) fn ip(&self, x: &Vector, y: &Vector) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            let row = self.gram.row(i);
            let gy: f64 = row.iter().zip(y.as_slice()).map(|(g, b)| g * b).sum();
            s += x[i] * gy;
        }
        s
    }

    pub(crate) fn nrm(&self, x: &Vector) -> f64 {
        self.ip(x, x).max(0.0).sqrt()
    }

    pub(crate) fn unit(&self, x: &Vector) -> Result<Vector> {
        let n = self.nrm(x);
        if !(n > self.tol.abs) {
            return Err(Error::ZeroVector);
        }
        Ok(x.scaled(1.0 / n))
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_vector(x)?;
        self.check_vector(y)?;
        Ok(self.ip(x, y))
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        self.check_vector(x)?;
        Ok(self.nrm(x))
    }

    /// Angle in `[0, pi]`; the cosine is clamped to `[-1, 1]` before `acos`.
    pub fn angle(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_vector(x)?;
        self.check_vector(y)?;
        let (nx, ny) = (self.nrm(x), self.nrm(y));
        if !(nx > self.tol.abs && ny > self.tol.abs) {
            return Err(Error::ZeroVector);
        }
        Ok((self.ip(x, y) / (nx * ny)).clamp(-1.0, 1.0).acos())
    }

    /// Solves `A x = b` by LU with partial pivoting.
    pub fn solve(&self, a: &Matrix, b: &Vector) -> Result<Vector> {
        self.check_matrix(a)?;
        self.check_vector(b)?;
        let lu = Lu::factor(a);
        lu.check_nonsingular(self.tol.rank_tol)?;
        Ok(Vector(lu.solve_unchecked(b.as_slice())))
    }

    pub fn det(&self, a: &Matrix) -> Result<f64> {
        self.check_matrix(a)?;
        Ok(Lu::factor(a).det())
    }

    pub fn rank(&self, a: &Matrix) -> Result<usize> {
        self.check_matrix(a)?;
        Ok(echelon_rank(a, self.tol.rank_tol * a.max_abs()))
    }

    /// Inverse via LU; errors when singular relative to `rank_tol`.
    pub fn inverse(&self, a: &Matrix) -> Result<Matrix> {
        self.check_matrix(a)?;
        inverse_with(a, self.tol.rank_tol)
    }

    /// A `G`-orthonormal basis, from Gram–Schmidt on the coordinate vectors.
    pub fn orthonormal_basis(&self) -> Basis {
        let n = self.dim();
        let vectors = self.orthonormalize((0..n).map(|i| Vector::unit(n, i)), n);
        Basis::from_vectors_unchecked(vectors)
    }

    /// Modified Gram–Schmidt (two passes) under `G`; skips candidates that collapse.
    /// Stops once `limit` vectors are collected.
    pub(crate) fn orthonormalize(
        &self,
        candidates: impl IntoIterator<Item = Vector>,
        limit: usize,
    ) -> Vec<Vector> {
        let mut out: Vec<Vector> = Vec::with_capacity(limit);
        for c in candidates {
            if out.len() == limit {
                break;
            }
            let n0 = self.nrm(&c);
            if n0 == 0.0 {
                continue;
            }
            let mut v = c;
            for _ in 0..2 {
                for q in &out {
                    v = v.axpy(-self.ip(q, &v), q);
                }
            }
            let n1 = self.nrm(&v);
            if n1 > 1e-8 * n0 {
                out.push(v.scaled(1.0 / n1));
            }
        }
        out
    }
}

pub(crate) fn inverse_with(a: &Matrix, rank_tol: f64) -> Result<Matrix> {
    let n = a.nrows();
    let lu = Lu::factor(a);
    lu.check_nonsingular(rank_tol)?;
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let x = lu.solve_unchecked(&e);
        for i in 0..n {
            inv[(i, j)] = x[i];
        }
    }
    Ok(inv)
}
