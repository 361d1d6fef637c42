//! Factor types and operator classifiers.
//!
//! A planar rotation rotates a `G`-orthonormal pair `(u, v)` by `θ`
//! (`u ↦ cos θ u + sin θ v`, `v ↦ -sin θ u + cos θ v`) and fixes the orthogonal complement.
//! A planar reflection negates one unit direction and fixes its complement. In dimension 1
//! the identity counts as a rotation.

use crate::basis_axis::{
    admissible_vertex_angle, axial_vector, axis_of, is_equimodular, lines_equal, Basis,
};
use crate::error::{Error, Result};
use crate::space::{echelon_rank, inverse_with, Matrix, Space, Vector};

/// One factor of a decomposition, carrying the geometric data that defines it.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// Rotation by `theta` in the plane of the `G`-orthonormal pair `(plane_u, plane_v)`.
    Rotational {
        plane_u: Vector,
        plane_v: Vector,
        theta: f64,
    },
    /// `-1` on the span of the unit vector `negated`, identity on its complement.
    Reflectional {
        negated: Vector,
    },
    Scalar {
        c: f64,
    },
    /// `b_i ↦ entries[i] * b_i`.
    DiagonalInBasis {
        basis: Basis,
        entries: Vec<f64>,
    },
    /// Rotates each vector of an equimodular basis by `delta` toward the basis axis.
    Shear {
        basis: Basis,
        delta: f64,
    },
    /// An axonal operator with the witness pair it maps between.
    GeneralAxonal {
        matrix: Matrix,
        witness_in: Basis,
        witness_out: Basis,
    },
}

impl Factor {
    pub fn kind(&self) -> &'static str {
        match self {
            Factor::Rotational { .. } => "rotational",
            Factor::Reflectional { .. } => "reflectional",
            Factor::Scalar { .. } => "scalar",
            Factor::DiagonalInBasis { .. } => "diagonal_in_basis",
            Factor::Shear { .. } => "shear",
            Factor::GeneralAxonal { .. } => "general_axonal",
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(
            self,
            Factor::Rotational { .. } | Factor::Reflectional { .. }
        )
    }

    /// Validated planar rotation.
    pub fn rotation(space: &Space, plane_u: Vector, plane_v: Vector, theta: f64) -> Result<Self> {
        let f = Factor::Rotational {
            plane_u,
            plane_v,
            theta,
        };
        f.validate(space)?;
        Ok(f)
    }

    /// Planar reflection negating the direction of `v` (normalized here).
    pub fn reflection(space: &Space, v: &Vector) -> Result<Self> {
        space.check_vector(v)?;
        Ok(Factor::Reflectional {
            negated: space.unit(v)?,
        })
    }

    /// The identity as a rotation by zero, in the plane of the first two orthonormal basis
    /// vectors (in dimension 1 the second plane vector is zero).
    pub fn identity_rotation(space: &Space) -> Self {
        let b = space.orthonormal_basis();
        let u = b.vectors()[0].clone();
        let v = b
            .vectors()
            .get(1)
            .cloned()
            .unwrap_or_else(|| Vector::zeros(space.dim()));
        Factor::Rotational {
            plane_u: u,
            plane_v: v,
            theta: 0.0,
        }
    }

    /// Axonal factor mapping `witness_in` onto `witness_out`.
    pub fn general_axonal(space: &Space, witness_in: Basis, witness_out: Basis) -> Result<Self> {
        let inv = inverse_with(&witness_in.to_matrix(), space.tol().rank_tol)?;
        let matrix = witness_out.to_matrix().mul(&inv);
        let f = Factor::GeneralAxonal {
            matrix,
            witness_in,
            witness_out,
        };
        f.validate(space)?;
        Ok(f)
    }

    /// Checks the payload invariants of the tag.
    pub fn validate(&self, space: &Space) -> Result<()> {
        let n = space.dim();
        let rel = space.tol().rel;
        let bad = |msg: String| Err(Error::MalformedFactor(msg));
        match self {
            Factor::Rotational {
                plane_u,
                plane_v,
                theta,
            } => {
                space.check_vector(plane_u)?;
                space.check_vector(plane_v)?;
                if !theta.is_finite() {
                    return bad(format!("rotation angle {theta}"));
                }
                let (uu, vv, uv) = (
                    space.ip(plane_u, plane_u),
                    space.ip(plane_v, plane_v),
                    space.ip(plane_u, plane_v),
                );
                let one_dim_identity = n == 1 && *theta == 0.0 && vv == 0.0;
                if (uu - 1.0).abs() > rel
                    || (!one_dim_identity && ((vv - 1.0).abs() > rel || uv.abs() > rel))
                {
                    return bad(format!(
                        "rotation plane is not orthonormal (|u|^2={uu}, |v|^2={vv}, <u,v>={uv})"
                    ));
                }
            }
            Factor::Reflectional { negated } => {
                space.check_vector(negated)?;
                let nn = space.ip(negated, negated);
                if (nn - 1.0).abs() > rel {
                    return bad(format!("reflection direction has |a|^2 = {nn}"));
                }
            }
            Factor::Scalar { c } => {
                if !(c.is_finite() && *c != 0.0) {
                    return bad(format!("scalar {c}"));
                }
            }
            Factor::DiagonalInBasis { basis, entries } => {
                Basis::new(space, basis.vectors().to_vec())?;
                if entries.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: entries.len(),
                    });
                }
                if entries.iter().any(|e| !(e.is_finite() && *e != 0.0)) {
                    return bad(format!("diagonal entries {entries:?}"));
                }
            }
            Factor::Shear { basis, delta } => {
                let basis = Basis::new(space, basis.vectors().to_vec())?;
                if n < 2 {
                    return bad("shear needs dimension >= 2".into());
                }
                if is_equimodular(space, &basis).is_none() {
                    return bad("shear basis is not equimodular".into());
                }
                let theta0 = axial_vector(space, &basis)?.vertex_angle;
                if !admissible_vertex_angle(space, theta0 - delta) {
                    return Err(Error::InadmissibleAngle {
                        angle: theta0 - delta,
                    });
                }
            }
            Factor::GeneralAxonal {
                matrix,
                witness_in,
                witness_out,
            } => {
                space.check_matrix(matrix)?;
                let win = Basis::new(space, witness_in.vectors().to_vec())?;
                let wout = Basis::new(space, witness_out.vectors().to_vec())?;
                let mapped = matrix.mul(&win.to_matrix());
                let target = wout.to_matrix();
                let defect = mapped.sub(&target).max_abs();
                if defect > space.tol().accept() * target.max_abs().max(1.0) {
                    return bad(format!("matrix misses its witness by {defect:e}"));
                }
                if is_equimodular(space, &win).is_none() || is_equimodular(space, &wout).is_none() {
                    return bad("axonal witnesses must be equimodular".into());
                }
                if !lines_equal(space, &axis_of(space, &win)?, &axis_of(space, &wout)?) {
                    return bad("axonal witnesses do not share an axis".into());
                }
            }
        }
        Ok(())
    }

    /// Dense matrix of the factor in the space's coordinates.
    pub fn materialize(&self, space: &Space) -> Result<Matrix> {
        let n = space.dim();
        match self {
            Factor::Rotational {
                plane_u,
                plane_v,
                theta,
            } => {
                space.check_vector(plane_u)?;
                space.check_vector(plane_v)?;
                let (s, c) = theta.sin_cos();
                let gu = space.gram().mul_vec(plane_u);
                let gv = space.gram().mul_vec(plane_v);
                let mut m = Matrix::identity(n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] += (c - 1.0) * (plane_u[i] * gu[j] + plane_v[i] * gv[j])
                            + s * (plane_v[i] * gu[j] - plane_u[i] * gv[j]);
                    }
                }
                Ok(m)
            }
            Factor::Reflectional { negated } => {
                space.check_vector(negated)?;
                let ga = space.gram().mul_vec(negated);
                let mut m = Matrix::identity(n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] -= 2.0 * negated[i] * ga[j];
                    }
                }
                Ok(m)
            }
            Factor::Scalar { c } => Ok(Matrix::identity(n).scaled(*c)),
            Factor::DiagonalInBasis { basis, entries } => {
                if entries.len() != n || basis.len() != n {
                    return Err(Error::MalformedFactor("diagonal shape".into()));
                }
                let b = basis.to_matrix();
                let inv = inverse_with(&b, space.tol().rank_tol)?;
                Ok(b.mul(&Matrix::diagonal(entries)).mul(&inv))
            }
            Factor::Shear { basis, delta } => {
                if *delta == 0.0 {
                    return Ok(Matrix::identity(n));
                }
                let theta0 = axial_vector(space, basis)?.vertex_angle;
                let image = rotate_basis_toward_axis(space, basis, theta0 - delta)?;
                let inv = inverse_with(&basis.to_matrix(), space.tol().rank_tol)?;
                Ok(image.to_matrix().mul(&inv))
            }
            Factor::GeneralAxonal { matrix, .. } => {
                space.check_matrix(matrix)?;
                Ok(matrix.clone())
            }
        }
    }

    /// Determinant from the payload where it is known in closed form.
    pub fn det(&self, space: &Space) -> Result<f64> {
        Ok(match self {
            Factor::Rotational { .. } => 1.0,
            Factor::Reflectional { .. } => -1.0,
            Factor::Scalar { c } => c.powi(space.dim() as i32),
            Factor::DiagonalInBasis { entries, .. } => entries.iter().product(),
            _ => space.det(&self.materialize(space)?)?,
        })
    }
}

/// `x - 2 <a, x> a`: the image of `x` under the reflection negating unit `a`.
pub(crate) fn reflect(space: &Space, a: &Vector, x: &Vector) -> Vector {
    x.axpy(-2.0 * space.ip(a, x), a)
}

/// Residual of the metric identity, `|M^T G M - λ G|_inf`.
fn metric_defect(space: &Space, m: &Matrix, lambda: f64) -> f64 {
    let g = space.gram();
    m.transpose()
        .mul(g)
        .mul(m)
        .sub(&g.scaled(lambda))
        .norm_inf()
}

pub fn is_orthogonal(space: &Space, m: &Matrix) -> bool {
    space.check_matrix(m).is_ok()
        && metric_defect(space, m, 1.0) <= space.tol().rel * space.gram().norm_inf()
}

/// Witness of `<Mx, My> = λ <x, y>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalityCertificate {
    pub lambda: f64,
}

/// `λ = |M b_1|^2` for the first orthonormal basis vector, accepted when the metric
/// identity holds for that `λ`. `None` when it does not.
pub fn is_conformal(space: &Space, m: &Matrix) -> Option<ConformalityCertificate> {
    space.check_matrix(m).ok()?;
    let basis = space.orthonormal_basis();
    let mb = m.mul_vec(&basis.vectors()[0]);
    let lambda = space.ip(&mb, &mb);
    (lambda > 0.0
        && lambda.is_finite()
        && metric_defect(space, m, lambda) <= space.tol().rel * lambda * space.gram().norm_inf())
    .then_some(ConformalityCertificate { lambda })
}

/// Rank of `M - I`, thresholded against the scale of `M` itself.
fn rank_of_displacement(space: &Space, m: &Matrix) -> usize {
    let d = m.sub(&Matrix::identity(space.dim()));
    echelon_rank(&d, space.tol().rank_tol * m.max_abs())
}

pub fn is_rotational(space: &Space, m: &Matrix) -> bool {
    if !is_orthogonal(space, m) || rank_of_displacement(space, m) > 2 {
        return false;
    }
    space
        .det(m)
        .is_ok_and(|d| (d - 1.0).abs() <= space.tol().rel)
}

pub fn is_reflectional(space: &Space, m: &Matrix) -> bool {
    if !is_orthogonal(space, m) || rank_of_displacement(space, m) != 1 {
        return false;
    }
    space
        .det(m)
        .is_ok_and(|d| (d + 1.0).abs() <= space.tol().rel)
}

/// Recovers the planar factor of a matrix that classifies as rotational or reflectional.
pub fn planar_factor_of(space: &Space, m: &Matrix) -> Option<Factor> {
    let n = space.dim();
    let displacement = m.sub(&Matrix::identity(n));
    // Columns of M - I span the moved subspace; order them by G-norm.
    let mut cols = displacement.columns();
    cols.sort_by(|a, b| space.nrm(b).total_cmp(&space.nrm(a)));
    if is_reflectional(space, m) {
        return Factor::reflection(space, &cols[0]).ok();
    }
    if !is_rotational(space, m) {
        return None;
    }
    if rank_of_displacement(space, m) == 0 {
        return Some(Factor::identity_rotation(space));
    }
    let plane = space.orthonormalize(cols, 2);
    let [u, v] = <[Vector; 2]>::try_from(plane).ok()?;
    let mu = m.mul_vec(&u);
    let theta = space.ip(&mu, &v).atan2(space.ip(&mu, &u));
    Factor::rotation(space, u, v, theta).ok()
}

/// Whether `m` maps the equimodular basis `basis` to an equimodular basis with the same axis.
pub fn is_axonal_witness(space: &Space, m: &Matrix, basis: &Basis) -> bool {
    if space.check_matrix(m).is_err() || is_equimodular(space, basis).is_none() {
        return false;
    }
    let Ok(image) = basis.image(space, m) else {
        return false;
    };
    if is_equimodular(space, &image).is_none() {
        return false;
    }
    match (axis_of(space, basis), axis_of(space, &image)) {
        (Ok(a), Ok(b)) => lines_equal(space, &a, &b),
        _ => false,
    }
}

/// Rotates every vector of an equimodular basis inside the plane it spans with the axis, so
/// that each ends up at angle `phi` from the axial vector (norms unchanged). Vectors move
/// toward the axis when `phi` is below the current vertex angle, away from it otherwise.
pub fn rotate_basis_toward_axis(space: &Space, basis: &Basis, phi: f64) -> Result<Basis> {
    if space.dim() < 2 {
        return Err(Error::Precondition(
            "rotating toward the axis needs dimension >= 2".into(),
        ));
    }
    if is_equimodular(space, basis).is_none() {
        return Err(Error::Precondition("basis is not equimodular".into()));
    }
    if !admissible_vertex_angle(space, phi) {
        return Err(Error::InadmissibleAngle { angle: phi });
    }
    let axis = space.unit(&axial_vector(space, basis)?.axial)?;
    let rotated = basis
        .vectors()
        .iter()
        .map(|b| {
            let r = space.nrm(b);
            let p = b.scaled(1.0 / r);
            let c0 = space.ip(&p, &axis);
            let perp = axis.axpy(-c0, &p);
            let s0 = space.nrm(&perp);
            if !(s0 > space.tol().rel) {
                return Err(Error::Breakdown(
                    "basis vector parallel to its own axis".into(),
                ));
            }
            let q = perp.scaled(1.0 / s0);
            let step = s0.atan2(c0) - phi;
            let (s, c) = step.sin_cos();
            Ok(p.scaled(c).axpy(s, &q).scaled(r))
        })
        .collect::<Result<Vec<_>>>()?;
    Basis::new(space, rotated)
}

/// The shear rotating each vector of `basis` by `delta` toward the axis; the new common
/// angle `θ0 - delta` must stay admissible.
pub fn shear_of_basis(space: &Space, basis: &Basis, delta: f64) -> Result<Factor> {
    let f = Factor::Shear {
        basis: basis.clone(),
        delta,
    };
    if is_equimodular(space, basis).is_none() {
        return Err(Error::Precondition("shear basis is not equimodular".into()));
    }
    f.validate(space)?;
    Ok(f)
}
