//! Equimodular bases, axial vectors, axes and cones.
//!
//! An axial vector of a basis `{b_i}` is a nonzero `α` making one common angle with every
//! `b_i`. It is found by normalizing the basis to `u_i = b_i / |b_i|` and solving the Gram
//! system `A x = (1, ..., 1)` with `A_ij = <u_i, u_j>`; then `α = Σ x_i u_i` satisfies
//! `<u_i, α> = 1` for every `i`. Any two axial vectors are parallel, so the axis (their
//! span) is well defined.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::space::{echelon_rank, Lu, Matrix, Space, Vector};

/// An ordered basis of the space.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: Vec<Vector>,
}

impl Basis {
    /// Checks shape and linear independence (rank `n` under `rank_tol`).
    pub fn new(space: &Space, vectors: Vec<Vector>) -> Result<Self> {
        let n = space.dim();
        if vectors.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: vectors.len(),
            });
        }
        for v in &vectors {
            space.check_vector(v)?;
        }
        let cols = Matrix::from_columns(&vectors);
        if !cols.is_finite() {
            return Err(Error::Precondition("basis has non-finite entries".into()));
        }
        let rank = echelon_rank(&cols, space.tol().rank_tol * cols.max_abs());
        if rank < n {
            return Err(Error::DependentBasis { rank, dim: n });
        }
        Ok(Self { vectors })
    }

    /// Basis from the columns of a square matrix.
    pub fn from_columns(space: &Space, m: &Matrix) -> Result<Self> {
        space.check_matrix(m)?;
        Self::new(space, m.columns())
    }

    pub(crate) fn from_vectors_unchecked(vectors: Vec<Vector>) -> Self {
        Self { vectors }
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Matrix with the basis vectors as columns.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.vectors)
    }

    /// The image `{M b_i}`, validated as a basis.
    pub fn image(&self, space: &Space, m: &Matrix) -> Result<Self> {
        space.check_matrix(m)?;
        Self::new(space, self.vectors.iter().map(|b| m.mul_vec(b)).collect())
    }

    /// `{b_i / |b_i|}`
    pub fn normalized(&self, space: &Space) -> Result<Self> {
        Ok(Self {
            vectors: self
                .vectors
                .iter()
                .map(|b| space.unit(b))
                .collect::<Result<_>>()?,
        })
    }

    pub(crate) fn norms(&self, space: &Space) -> Vec<f64> {
        self.vectors.iter().map(|b| space.nrm(b)).collect()
    }
}

/// Returns the common norm `δ` when every basis vector has the same norm within `rel`.
pub fn is_equimodular(space: &Space, basis: &Basis) -> Option<f64> {
    let norms = basis.norms(space);
    let max = norms.iter().copied().fold(0.0, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min <= space.tol().rel * max && max > 0.0)
        .then(|| norms.iter().sum::<f64>() / norms.len() as f64)
}

pub fn is_unimodular(space: &Space, basis: &Basis) -> bool {
    is_equimodular(space, basis).is_some_and(|d| (d - 1.0).abs() <= space.tol().rel)
}

/// An axial vector together with its normalization and common angle.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialCertificate {
    /// `α`, oriented so that `<u_i, α> = omega > 0` for the normalized basis.
    pub axial: Vector,
    pub omega: f64,
    /// Common angle between `α` and every basis vector.
    pub vertex_angle: f64,
}

/// Axial vector of an arbitrary basis via the Gram system of its normalization.
pub fn axial_vector(space: &Space, basis: &Basis) -> Result<AxialCertificate> {
    let n = space.dim();
    if basis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: basis.len(),
        });
    }
    let u = basis.normalized(space)?;
    let u = u.vectors();
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let g = space.ip(&u[i], &u[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let lu = Lu::factor(&gram);
    if lu.check_nonsingular(space.tol().rank_tol).is_err() {
        let rank = echelon_rank(&gram, space.tol().rank_tol * gram.max_abs());
        return Err(Error::DependentBasis {
            rank: rank.min(n - 1),
            dim: n,
        });
    }
    let combine = |x: &[f64]| {
        x.iter()
            .zip(u)
            .fold(Vector::zeros(n), |acc, (&xi, ui)| acc.axpy(xi, ui))
    };
    let omega = 1.0;
    let mut alpha = combine(&lu.solve_unchecked(&vec![omega; n]));
    // One step of iterative refinement on the defining relation <u_i, α> = ω.
    let residual: Vec<f64> = u.iter().map(|ui| omega - space.ip(ui, &alpha)).collect();
    alpha = alpha.add(&combine(&lu.solve_unchecked(&residual)));

    let alpha_norm = space.nrm(&alpha);
    if !(alpha_norm > 0.0 && alpha_norm.is_finite()) {
        return Err(Error::Breakdown("axial vector vanished".into()));
    }
    let cosines: Vec<f64> = u
        .iter()
        .map(|ui| (space.ip(ui, &alpha) / alpha_norm).clamp(-1.0, 1.0))
        .collect();
    let vertex_angle = cosines[0].acos();
    let spread = cosines
        .iter()
        .map(|c| (c.acos() - vertex_angle).abs())
        .fold(0.0, f64::max);
    if spread > space.tol().accept() {
        return Err(Error::Breakdown(format!(
            "basis vectors disagree on the axial angle by {spread:e}"
        )));
    }
    Ok(AxialCertificate {
        axial: alpha,
        omega,
        vertex_angle,
    })
}

/// The relation `<v_i, α> |v_j| = <v_j, α> |v_i|` on the unnormalized basis, as the largest
/// violation relative to `|α| max|v_i|^2`.
pub fn axial_relation_defect(space: &Space, basis: &Basis, alpha: &Vector) -> f64 {
    let norms = basis.norms(space);
    let dots: Vec<f64> = basis.vectors().iter().map(|v| space.ip(v, alpha)).collect();
    let scale = space.nrm(alpha) * norms.iter().fold(0.0f64, |m, x| m.max(x * x));
    let mut worst = 0.0f64;
    for i in 0..norms.len() {
        for j in 0..norms.len() {
            worst = worst.max((dots[i] * norms[j] - dots[j] * norms[i]).abs());
        }
    }
    worst / scale
}

/// A one-dimensional subspace, stored by a unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub direction: Vector,
}

impl Line {
    pub fn through(space: &Space, v: &Vector) -> Result<Self> {
        space.check_vector(v)?;
        Ok(Self {
            direction: space.unit(v)?,
        })
    }
}

pub fn axis_of(space: &Space, basis: &Basis) -> Result<Line> {
    let cert = axial_vector(space, basis)?;
    Line::through(space, &cert.axial)
}

/// Lines are equal when their directions agree up to sign: `|<d1, d2>| >= 1 - rel`.
pub fn lines_equal(space: &Space, a: &Line, b: &Line) -> bool {
    space.ip(&a.direction, &b.direction).abs() >= 1.0 - space.tol().rel
}

/// `{x : <x, α> = |x| |α| cos θ}` for a unit axis direction `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    pub axis_dir: Vector,
    pub vertex_angle: f64,
}

impl Cone {
    pub fn new(space: &Space, axis: &Vector, vertex_angle: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&vertex_angle) {
            return Err(Error::Precondition(format!(
                "vertex angle {vertex_angle} outside [0, pi]"
            )));
        }
        space.check_vector(axis)?;
        Ok(Self {
            axis_dir: space.unit(axis)?,
            vertex_angle,
        })
    }

    pub fn axis(&self) -> Line {
        Line {
            direction: self.axis_dir.clone(),
        }
    }
}

pub fn cone_contains(space: &Space, cone: &Cone, x: &Vector) -> Result<bool> {
    space.check_vector(x)?;
    let nx = space.nrm(x);
    if !(nx > space.tol().abs) {
        return Err(Error::ZeroVector);
    }
    let t = space.tol();
    Ok((space.ip(x, &cone.axis_dir) - nx * cone.vertex_angle.cos()).abs() <= t.rel * nx + t.abs)
}

/// The cone through the basis vectors around the basis axis.
pub fn associated_cone(space: &Space, basis: &Basis) -> Result<Cone> {
    let cert = axial_vector(space, basis)?;
    Cone::new(space, &cert.axial, cert.vertex_angle)
}

/// Set equality of cones: same axis, and the same angle measured from the same side.
pub fn cones_equal(space: &Space, a: &Cone, b: &Cone) -> bool {
    if !lines_equal(space, &a.axis(), &b.axis()) {
        return false;
    }
    let rel = space.tol().rel;
    if space.ip(&a.axis_dir, &b.axis_dir) > 0.0 {
        (a.vertex_angle - b.vertex_angle).abs() <= rel
    } else {
        (a.vertex_angle - (PI - b.vertex_angle)).abs() <= rel
    }
}

/// Whether `angle` can be the common angle of a basis (`n >= 2`): inside `(0, pi)` and away
/// from `pi/2`, each within `rel`.
pub(crate) fn admissible_vertex_angle(space: &Space, angle: f64) -> bool {
    let rel = space.tol().rel;
    angle.is_finite() && angle > rel && angle < PI - rel && (angle - FRAC_PI_2).abs() > rel
}
