//! Factorizations of invertible, conformal and orthogonal operators.
//!
//! * invertible `T`: `[R, A, D]`, a planar rotation carrying the axis of an orthonormal
//!   basis onto the axis of its image, an axonal map, and a diagonal map in the image basis;
//! * conformal `T`: `[R_1, ..., R_{n-2}, ρ, Scalar(c)]`, planar rotations, then one planar
//!   rotation or reflection, then a positive scalar;
//! * orthogonal `T`: the same list without the scalar.
//!
//! The orthogonal case recurses: once the axis of an orthonormal basis is carried onto the
//! axis of its image, the remaining orthogonal map fixes that axis (up to sign) and acts on
//! its orthogonal complement, one dimension lower.

use crate::basis_axis::{associated_cone, axial_vector, axis_of, cones_equal, Basis, Line};
use crate::error::{Error, Result};
use crate::operators::{
    is_axonal_witness, is_conformal, is_orthogonal, planar_factor_of, reflect, shear_of_basis,
    Factor,
};
use crate::space::{Lu, Matrix, Space, Vector};

/// How factor lists are ordered: the first factor is applied first.
pub const CONVENTION: &str = "apply-left-to-right";

/// Angles between axes below this are treated as zero when building the aligning rotation.
const SNAP_ANGLE: f64 = 1e-12;

/// An ordered factor list `[F1, ..., Fk]` standing for `Fk ∘ ... ∘ F1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub factors: Vec<Factor>,
    /// Relative Frobenius distance between the recomposed product and the input.
    pub residual: f64,
}

impl Decomposition {
    /// Product of the materialized factors in application order (`I` when empty).
    pub fn recompose(&self, space: &Space) -> Result<Matrix> {
        recompose_factors(space, &self.factors)
    }

    pub fn planar_count(&self) -> usize {
        self.factors.iter().filter(|f| f.is_planar()).count()
    }

    pub fn reflection_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| matches!(f, Factor::Reflectional { .. }))
            .count()
    }
}

pub(crate) fn recompose_factors(space: &Space, factors: &[Factor]) -> Result<Matrix> {
    factors
        .iter()
        .try_fold(Matrix::identity(space.dim()), |acc, f| {
            Ok(f.materialize(space)?.mul(&acc))
        })
}

/// `|recompose - T|_F / |T|_F`
pub fn relative_residual(space: &Space, t: &Matrix, factors: &[Factor]) -> Result<f64> {
    let r = recompose_factors(space, factors)?;
    Ok(r.sub(t).frobenius() / t.frobenius())
}

fn finish(space: &Space, t: &Matrix, factors: Vec<Factor>) -> Result<Decomposition> {
    let residual = relative_residual(space, t, &factors)?;
    if !(residual <= space.tol().accept()) {
        return Err(Error::Breakdown(format!(
            "recomposition residual {residual:e} exceeds {:e}",
            space.tol().accept()
        )));
    }
    Ok(Decomposition { factors, residual })
}

/// The planar rotation carrying `from` onto `to` by the acute principal angle between them.
pub fn rotation_between_lines(space: &Space, from: &Line, to: &Line) -> Result<Factor> {
    space.check_vector(&from.direction)?;
    space.check_vector(&to.direction)?;
    let d1 = space.unit(&from.direction)?;
    let mut d2 = space.unit(&to.direction)?;
    let mut c = space.ip(&d1, &d2);
    if c < 0.0 {
        d2 = d2.scaled(-1.0);
        c = -c;
    }
    let perp = d2.axpy(-c, &d1);
    let s = space.nrm(&perp);
    let theta = s.atan2(c);
    if theta < SNAP_ANGLE {
        return Ok(Factor::identity_rotation(space));
    }
    Factor::rotation(space, d1, perp.scaled(1.0 / s), theta)
}

/// `T = D ∘ A ∘ R` for invertible `T`, returned as `[R, A, D]`.
pub fn decompose_invertible(space: &Space, t: &Matrix) -> Result<Decomposition> {
    space.check_matrix(t)?;
    Lu::factor(t).check_nonsingular(space.tol().rank_tol)?;

    let u = space.orthonormal_basis();
    let images: Vec<Vector> = u.vectors().iter().map(|x| t.mul_vec(x)).collect();
    let lengths: Vec<f64> = images.iter().map(|v| space.nrm(v)).collect();
    let w = Basis::new(
        space,
        images
            .iter()
            .zip(&lengths)
            .map(|(v, l)| v.scaled(1.0 / l))
            .collect(),
    )?;

    let rotation = rotation_between_lines(space, &axis_of(space, &u)?, &axis_of(space, &w)?)?;
    let rotated = u.image(space, &rotation.materialize(space)?)?;
    let axonal = Factor::general_axonal(space, rotated, w.clone())?;
    let diagonal = Factor::DiagonalInBasis {
        basis: w,
        entries: lengths,
    };
    finish(space, t, vec![rotation, axonal, diagonal])
}

/// Per-level diagnostics of the orthogonal recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    pub dim: usize,
    /// `|A^T G A - G|_inf` for the map left after aligning the axes.
    pub orthogonality_defect: f64,
    /// `min(|Aγ - γ|, |Aγ + γ|) / |γ|` for the unit axial vector `γ`.
    pub axis_defect: f64,
    /// Whether the axis was reversed (`Aγ = -γ`).
    pub flipped: bool,
}

/// `T = c ∘ ρ ∘ R_{n-2} ∘ ... ∘ R_1` for conformal `T`.
pub fn decompose_conformal(space: &Space, t: &Matrix) -> Result<Decomposition> {
    decompose_conformal_traced(space, t).map(|(d, _)| d)
}

/// [`decompose_conformal`] plus the diagnostics collected at each recursion level.
pub fn decompose_conformal_traced(
    space: &Space,
    t: &Matrix,
) -> Result<(Decomposition, Vec<LevelTrace>)> {
    space.check_matrix(t)?;
    let cert = is_conformal(space, t).ok_or(Error::NotConformal)?;
    let mut trace = Vec::new();
    if space.dim() == 1 {
        let factors = vec![Factor::Scalar { c: t[(0, 0)] }];
        return Ok((finish(space, t, factors)?, trace));
    }
    let c = cert.lambda.sqrt();
    let mut factors = orthogonal_chain(space, &t.scaled(1.0 / c), &mut trace)?;
    factors.push(Factor::Scalar { c });
    Ok((finish(space, t, factors)?, trace))
}

/// `T = ρ ∘ R_{n-2} ∘ ... ∘ R_1` for orthogonal `T`.
pub fn decompose_orthogonal(space: &Space, t: &Matrix) -> Result<Decomposition> {
    space.check_matrix(t)?;
    if !is_orthogonal(space, t) {
        return Err(Error::NotOrthogonal);
    }
    let factors = orthogonal_chain(space, t, &mut Vec::new())?;
    finish(space, t, factors)
}

/// Planar factors of an orthogonal `q`: exactly `n - 1` of them for `n >= 2`, rotations
/// first, at most one reflection last.
fn orthogonal_chain(space: &Space, q: &Matrix, trace: &mut Vec<LevelTrace>) -> Result<Vec<Factor>> {
    let n = space.dim();
    if n == 1 {
        return Ok(if q[(0, 0)] > 0.0 {
            Vec::new()
        } else {
            vec![Factor::reflection(space, &Vector::unit(1, 0))?]
        });
    }
    if n == 2 {
        return Ok(vec![planar_2d(space, q)?]);
    }
    if let Some(f) = planar_factor_of(space, q) {
        return pad_to(space, vec![f], n - 1);
    }

    let u = space.orthonormal_basis();
    let images: Vec<Vector> = u
        .vectors()
        .iter()
        .map(|x| {
            let y = q.mul_vec(x);
            space.unit(&y)
        })
        .collect::<Result<_>>()?;
    let w = Basis::new(space, images)?;
    let align = rotation_between_lines(space, &axis_of(space, &u)?, &axis_of(space, &w)?)?;
    let Factor::Rotational {
        plane_u,
        plane_v,
        theta,
    } = &align
    else {
        unreachable!("rotation_between_lines returns a rotation");
    };
    let undo = Factor::Rotational {
        plane_u: plane_u.clone(),
        plane_v: plane_v.clone(),
        theta: -theta,
    };
    let mut rest = q.mul(&undo.materialize(space)?);
    let orthogonality_defect = rest
        .transpose()
        .mul(space.gram())
        .mul(&rest)
        .sub(space.gram())
        .norm_inf();
    if !is_orthogonal(space, &rest) {
        return Err(Error::Breakdown(format!(
            "aligned remainder is not orthogonal (defect {orthogonality_defect:e})"
        )));
    }

    let aligned = u.image(space, &align.materialize(space)?)?;
    let gamma = space.unit(&axial_vector(space, &aligned)?.axial)?;
    let moved = rest.mul_vec(&gamma);
    let (fixed, reversed) = (space.nrm(&moved.sub(&gamma)), space.nrm(&moved.add(&gamma)));
    let flipped = reversed < fixed;
    let axis_defect = fixed.min(reversed);
    trace.push(LevelTrace {
        dim: n,
        orthogonality_defect,
        axis_defect,
        flipped,
    });
    if axis_defect > space.tol().accept() {
        return Err(Error::Breakdown(format!(
            "remainder moves the axis by {axis_defect:e}"
        )));
    }

    let mut factors = Vec::with_capacity(n);
    if flipped {
        // rest ∘ F fixes γ, with F the reflection negating γ; F ∘ align is a single
        // reflection inside the plane of `align`.
        let flip = Factor::reflection(space, &gamma)?;
        rest = rest.mul(&flip.materialize(space)?);
        factors.push(absorb_rotation(space, &align, &gamma)?);
    } else {
        factors.push(align);
    }

    // G-orthonormal basis of the complement of γ, and the remainder in those coordinates.
    let n_basis = space.orthonormalize(
        std::iter::once(gamma.clone()).chain((0..n).map(|i| Vector::unit(n, i))),
        n,
    );
    if n_basis.len() != n {
        return Err(Error::Breakdown(
            "could not complete the axis to a basis".into(),
        ));
    }
    let complement = &n_basis[1..];
    let mut sub_matrix = Matrix::zeros(n - 1, n - 1);
    for (j, qj) in complement.iter().enumerate() {
        let img = rest.mul_vec(qj);
        for (i, qi) in complement.iter().enumerate() {
            sub_matrix[(i, j)] = space.ip(qi, &img);
        }
    }
    let sub_space = Space::euclidean(n - 1)?.retol(*space.tol())?;
    if !is_orthogonal(&sub_space, &sub_matrix) {
        return Err(Error::Breakdown(
            "restriction to the complement is not orthogonal".into(),
        ));
    }
    let lift = |x: &Vector| {
        complement
            .iter()
            .enumerate()
            .fold(Vector::zeros(n), |acc, (k, qk)| acc.axpy(x[k], qk))
    };
    for f in orthogonal_chain(&sub_space, &sub_matrix, trace)? {
        factors.push(match f {
            Factor::Rotational {
                plane_u,
                plane_v,
                theta,
            } => Factor::Rotational {
                plane_u: lift(&plane_u),
                plane_v: lift(&plane_v),
                theta,
            },
            Factor::Reflectional { negated } => Factor::Reflectional {
                negated: lift(&negated),
            },
            other => {
                return Err(Error::Breakdown(format!(
                    "orthogonal recursion produced a {} factor",
                    other.kind()
                )))
            }
        });
    }
    let canonical = canonicalize_factors(space, factors)?;
    pad_to(space, canonical, n - 1)
}

/// The single planar factor of a two-dimensional orthogonal map.
fn planar_2d(space: &Space, q: &Matrix) -> Result<Factor> {
    let det = space.det(q)?;
    let b = space.orthonormal_basis();
    let (b1, b2) = (&b.vectors()[0], &b.vectors()[1]);
    if (det - 1.0).abs() <= (det + 1.0).abs() {
        let qb = q.mul_vec(b1);
        let theta = space.ip(&qb, b2).atan2(space.ip(&qb, b1));
        Factor::rotation(space, b1.clone(), b2.clone(), theta)
    } else {
        // The -1 eigendirection spans the range of I - Q.
        let d = Matrix::identity(2).sub(q);
        let (c0, c1) = (d.column(0), d.column(1));
        let pick = if space.nrm(&c0) >= space.nrm(&c1) {
            c0
        } else {
            c1
        };
        Factor::reflection(space, &pick)
    }
}

/// `F ∘ R` for a rotation `R` whose plane contains the unit direction `a` negated by `F`:
/// again a planar reflection in that plane.
fn absorb_rotation(space: &Space, rotation: &Factor, a: &Vector) -> Result<Factor> {
    let Factor::Rotational {
        plane_u,
        plane_v,
        theta,
    } = rotation
    else {
        return Err(Error::MalformedFactor("expected a rotation".into()));
    };
    if *theta == 0.0 {
        return Factor::reflection(space, a);
    }
    let (cu, cv) = (space.ip(a, plane_u), space.ip(a, plane_v));
    let off_plane = space.nrm(&a.axpy(-cu, plane_u).axpy(-cv, plane_v));
    if off_plane > space.tol().accept() {
        return Err(Error::Breakdown(format!(
            "reversed axis leaves the aligning plane by {off_plane:e}"
        )));
    }
    let beta = cv.atan2(cu) - theta / 2.0;
    Factor::reflection(space, &plane_u.scaled(beta.cos()).axpy(beta.sin(), plane_v))
}

/// `S_b ∘ S_a` for unit `a`, `b`: rotation in span{a, b} by twice the angle from `a` to `b`.
fn merge_reflections(space: &Space, a: &Vector, b: &Vector) -> Result<Factor> {
    let c = space.ip(a, b);
    let perp = b.axpy(-c, a);
    let s = space.nrm(&perp);
    if s <= space.tol().rel {
        return Ok(Factor::identity_rotation(space));
    }
    Factor::rotation(space, a.clone(), perp.scaled(1.0 / s), 2.0 * s.atan2(c))
}

/// `S R S` for the reflection `S` negating `a`.
fn conjugate_by_reflection(space: &Space, f: Factor, a: &Vector) -> Factor {
    match f {
        Factor::Rotational {
            plane_u,
            plane_v,
            theta,
        } => Factor::Rotational {
            plane_u: reflect(space, a, &plane_u),
            plane_v: reflect(space, a, &plane_v),
            theta,
        },
        Factor::Reflectional { negated } => Factor::Reflectional {
            negated: reflect(space, a, &negated),
        },
        other => other,
    }
}

/// `-I` as planar factors: π-rotations on consecutive orthonormal pairs, plus one
/// reflection in odd dimension.
fn negative_identity(space: &Space) -> Result<Vec<Factor>> {
    let b = space.orthonormal_basis();
    let v = b.vectors();
    let mut out: Vec<Factor> = v
        .chunks_exact(2)
        .map(|p| Factor::rotation(space, p[0].clone(), p[1].clone(), std::f64::consts::PI))
        .collect::<Result<_>>()?;
    if v.len() % 2 == 1 {
        out.push(Factor::reflection(space, &v[v.len() - 1])?);
    }
    Ok(out)
}

/// Rewrites a list of planar and scalar factors into normal form without changing the
/// product: rotations first, then at most one reflection, then at most one scalar.
///
/// Scalars are collected (a negative product is split into `|c|` and `-I`). Each reflection
/// is moved later by conjugating the rotations it passes, and two reflections meeting merge
/// into one rotation.
pub fn canonicalize(space: &Space, d: &Decomposition) -> Result<Decomposition> {
    Ok(Decomposition {
        factors: canonicalize_factors(space, d.factors.clone())?,
        residual: d.residual,
    })
}

fn canonicalize_factors(space: &Space, factors: Vec<Factor>) -> Result<Vec<Factor>> {
    let mut scalar: Option<f64> = None;
    let mut planar = Vec::with_capacity(factors.len());
    for f in factors {
        f.validate(space)?;
        match f {
            Factor::Scalar { c } => scalar = Some(scalar.unwrap_or(1.0) * c),
            f @ (Factor::Rotational { .. } | Factor::Reflectional { .. }) => planar.push(f),
            other => {
                return Err(Error::MalformedFactor(format!(
                    "cannot canonicalize a {} factor",
                    other.kind()
                )))
            }
        }
    }
    if let Some(c) = scalar.filter(|c| *c < 0.0) {
        planar.extend(negative_identity(space)?);
        scalar = Some(-c);
    }

    let mut out = Vec::with_capacity(planar.len() + 2);
    let mut pending: Option<Vector> = None;
    for f in planar {
        match (f, pending.take()) {
            (Factor::Reflectional { negated }, None) => pending = Some(negated),
            (Factor::Reflectional { negated }, Some(a)) => {
                out.push(merge_reflections(space, &a, &negated)?)
            }
            (rot, None) => out.push(rot),
            (rot, Some(a)) => {
                // R ∘ S = S ∘ (S R S)
                out.push(conjugate_by_reflection(space, rot, &a));
                pending = Some(a);
            }
        }
    }
    if let Some(a) = pending {
        out.push(Factor::Reflectional { negated: a });
    }
    if let Some(c) = scalar {
        out.push(Factor::Scalar { c });
    }
    Ok(out)
}

fn is_identity_rotation(f: &Factor) -> bool {
    matches!(f, Factor::Rotational { theta, .. } if theta.sin().abs() <= 1e-15 && theta.cos() > 0.0)
}

/// Pads with leading identity rotations, or drops identity rotations, to reach exactly
/// `target` planar factors.
fn pad_to(space: &Space, mut factors: Vec<Factor>, target: usize) -> Result<Vec<Factor>> {
    let count = |fs: &[Factor]| fs.iter().filter(|f| f.is_planar()).count();
    while count(&factors) > target {
        match factors.iter().position(is_identity_rotation) {
            Some(i) => {
                factors.remove(i);
            }
            None => {
                return Err(Error::Breakdown(format!(
                    "{} planar factors where at most {target} are expected",
                    count(&factors)
                )))
            }
        }
    }
    let missing = target - count(&factors);
    let mut out: Vec<Factor> = std::iter::repeat_with(|| Factor::identity_rotation(space))
        .take(missing)
        .collect();
    out.append(&mut factors);
    Ok(out)
}

/// Splits an axonal map `A` with witness basis `B` into `A' ∘ S`: `S` a shear bringing the
/// common angle of `B` to that of `A·B`, and `A'` an axonal map between two bases with the
/// same associated cone. Returns `(A', S)`.
pub fn factor_axonal_shear(space: &Space, a: &Matrix, basis: &Basis) -> Result<(Factor, Factor)> {
    space.check_matrix(a)?;
    if space.dim() < 2 {
        return Err(Error::Precondition(
            "shear factorization needs dimension >= 2".into(),
        ));
    }
    if !is_axonal_witness(space, a, basis) {
        return Err(Error::Precondition(
            "matrix and basis are not an axonal witness".into(),
        ));
    }
    let image = basis.image(space, a)?;
    let before = axial_vector(space, basis)?;
    let after = axial_vector(space, &image)?;
    // Measure the target angle against the axial vector of `basis`; the image's axial
    // vector may point the other way along the same axis.
    let target = if space.ip(&before.axial, &after.axial) >= 0.0 {
        after.vertex_angle
    } else {
        std::f64::consts::PI - after.vertex_angle
    };
    let delta = before.vertex_angle - target;
    let shear = shear_of_basis(space, basis, delta)?;
    let sheared = basis.image(space, &shear.materialize(space)?)?;
    if !cones_equal(
        space,
        &associated_cone(space, &sheared)?,
        &associated_cone(space, &image)?,
    ) {
        return Err(Error::Breakdown(
            "sheared basis missed the target cone".into(),
        ));
    }
    let rest = Factor::general_axonal(space, sheared, image)?;
    let product = rest.materialize(space)?.mul(&shear.materialize(space)?);
    let residual = product.sub(a).frobenius() / a.frobenius();
    if !(residual <= space.tol().accept()) {
        return Err(Error::Breakdown(format!(
            "shear factorization residual {residual:e}"
        )));
    }
    Ok((rest, shear))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{is_reflectional, is_rotational};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec())
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn close(a: &Matrix, b: &Matrix, eps: f64) -> bool {
        a.sub(b).max_abs() <= eps
    }

    fn rot2(theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        m(&[&[c, -s], &[s, c]])
    }

    #[test]
    fn invertible_identity_and_scaling() {
        let s = Space::euclidean(3).unwrap();
        for scale in [1.0, 2.0] {
            let d = decompose_invertible(&s, &Matrix::identity(3).scaled(scale)).unwrap();
            assert_eq!(d.factors.len(), 3);
            assert!(close(
                &d.factors[0].materialize(&s).unwrap(),
                &Matrix::identity(3),
                0.0
            ));
            assert!(close(
                &d.factors[1].materialize(&s).unwrap(),
                &Matrix::identity(3),
                1e-15
            ));
            match &d.factors[2] {
                Factor::DiagonalInBasis { entries, .. } => {
                    assert!(entries.iter().all(|e| (e - scale).abs() < 1e-15))
                }
                f => panic!("unexpected {f:?}"),
            }
            assert!(d.residual < 1e-15);
        }
    }

    #[test]
    fn invertible_rejects_singular() {
        let s = Space::euclidean(2).unwrap();
        assert!(matches!(
            decompose_invertible(&s, &m(&[&[1., 2.], &[2., 4.]])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn invertible_postconditions_on_a_fixed_matrix() {
        let s = Space::euclidean(4).unwrap();
        let t = m(&[
            &[2., 1., 0., -1.],
            &[0., 3., 1., 0.5],
            &[1., 0., -1., 2.],
            &[0.5, -2., 0., 1.],
        ]);
        let d = decompose_invertible(&s, &t).unwrap();
        assert!(d.residual <= 1e-12);
        assert!(is_rotational(&s, &d.factors[0].materialize(&s).unwrap()));
        let Factor::GeneralAxonal {
            matrix, witness_in, ..
        } = &d.factors[1]
        else {
            panic!()
        };
        assert!(is_axonal_witness(&s, matrix, witness_in));
        let Factor::DiagonalInBasis { entries, .. } = &d.factors[2] else {
            panic!()
        };
        assert!(entries.iter().all(|e| *e > 0.0));
    }

    #[test]
    fn rotation_between_lines_examples() {
        let s = Space::euclidean(2).unwrap();
        let e1 = Line::through(&s, &v(&[1., 0.])).unwrap();
        let id = rotation_between_lines(&s, &e1, &e1).unwrap();
        assert_eq!(id.materialize(&s).unwrap(), Matrix::identity(2));

        let e2 = Line::through(&s, &v(&[0., 1.])).unwrap();
        let r = rotation_between_lines(&s, &e1, &e2).unwrap();
        let Factor::Rotational { theta, .. } = r else {
            panic!()
        };
        assert_abs_diff_eq!(theta, FRAC_PI_2, epsilon = 1e-15);

        let near_opposite = Line::through(&s, &v(&[-1., 1e-3])).unwrap();
        let r = rotation_between_lines(&s, &e1, &near_opposite).unwrap();
        let Factor::Rotational { theta, .. } = &r else {
            panic!()
        };
        // Candidates are ~1e-3 (to -d) and ~π - 1e-3 (to d); the acute one wins.
        let acute = (1e-3f64).atan();
        assert_abs_diff_eq!(*theta, acute, epsilon = 1e-15);
        let image = r.materialize(&s).unwrap().mul_vec(&e1.direction);
        assert!(lines_equal_euclid(&image, &near_opposite.direction));
    }

    fn lines_equal_euclid(a: &Vector, b: &Vector) -> bool {
        let s = Space::euclidean(a.len()).unwrap();
        (s.ip(a, b).abs() / (s.nrm(a) * s.nrm(b)) - 1.0).abs() < 1e-14
    }

    #[test]
    fn conformal_base_case() {
        let s = Space::euclidean(2).unwrap();
        let d = decompose_conformal(&s, &rot2(1.0).scaled(3.0)).unwrap();
        assert_eq!(d.factors.len(), 2);
        let Factor::Rotational { theta, .. } = d.factors[0] else {
            panic!()
        };
        assert_abs_diff_eq!(theta, 1.0, epsilon = 1e-14);
        let Factor::Scalar { c } = d.factors[1] else {
            panic!()
        };
        assert_abs_diff_eq!(c, 3.0, epsilon = 1e-14);

        let refl = m(&[&[0., 2.], &[2., 0.]]);
        let d = decompose_conformal(&s, &refl).unwrap();
        assert_eq!(d.factors[0].kind(), "reflectional");
        assert!(d.residual < 1e-15);
    }

    #[test]
    fn conformal_rejects_non_conformal() {
        let s = Space::euclidean(2).unwrap();
        assert_eq!(
            decompose_conformal(&s, &Matrix::diagonal(&[1., 2.])),
            Err(Error::NotConformal)
        );
    }

    #[test]
    fn conformal_identity_is_all_identity() {
        let s = Space::euclidean(4).unwrap();
        let d = decompose_conformal(&s, &Matrix::identity(4)).unwrap();
        assert_eq!(d.planar_count(), 3);
        for f in &d.factors[..3] {
            assert!(is_identity_rotation(f));
        }
        assert_eq!(d.factors[3], Factor::Scalar { c: 1.0 });
    }

    #[test]
    fn one_dimensional_cases() {
        let s = Space::euclidean(1).unwrap();
        let d = decompose_conformal(&s, &m(&[&[-4.]])).unwrap();
        assert_eq!(d.factors, vec![Factor::Scalar { c: -4.0 }]);
        let d = decompose_orthogonal(&s, &m(&[&[-1.]])).unwrap();
        assert_eq!(d.factors.len(), 1);
        assert_eq!(d.reflection_count(), 1);
        assert!(decompose_orthogonal(&s, &m(&[&[1.]]))
            .unwrap()
            .factors
            .is_empty());
        let d = decompose_invertible(&s, &m(&[&[-4.]])).unwrap();
        assert!(d.residual < 1e-15);
    }

    #[test]
    fn orthogonal_rotation_about_z() {
        let s = Space::euclidean(3).unwrap();
        let (sn, cs) = 0.8f64.sin_cos();
        let t = m(&[&[cs, -sn, 0.], &[sn, cs, 0.], &[0., 0., 1.]]);
        let d = decompose_orthogonal(&s, &t).unwrap();
        assert_eq!(d.reflection_count(), 0);
        assert!(d.planar_count() <= 2);
        assert!(close(&d.recompose(&s).unwrap(), &t, 1e-14));
    }

    #[test]
    fn orthogonal_negative_identity_in_3d() {
        let s = Space::euclidean(3).unwrap();
        let t = Matrix::identity(3).scaled(-1.0);
        let d = decompose_orthogonal(&s, &t).unwrap();
        assert_eq!(d.factors.len(), 2);
        assert_eq!(d.factors[0].kind(), "rotational");
        let Factor::Rotational { theta, .. } = d.factors[0] else {
            panic!()
        };
        assert_abs_diff_eq!(theta.abs(), PI, epsilon = 1e-12);
        assert_eq!(d.factors[1].kind(), "reflectional");
        // Brute-force product of the two factors.
        let p = d.factors[1]
            .materialize(&s)
            .unwrap()
            .mul(&d.factors[0].materialize(&s).unwrap());
        assert!(close(&p, &t, 1e-12));
    }

    #[test]
    fn orthogonal_single_reflection() {
        for n in 2..=5 {
            let s = Space::euclidean(n).unwrap();
            let mut diag = vec![1.0; n];
            diag[n - 1] = -1.0;
            let d = decompose_orthogonal(&s, &Matrix::diagonal(&diag)).unwrap();
            assert_eq!(d.planar_count(), n - 1);
            let last = d.factors.last().unwrap();
            let Factor::Reflectional { negated } = last else {
                panic!()
            };
            assert_abs_diff_eq!(negated[n - 1].abs(), 1.0, epsilon = 1e-15);
            for f in &d.factors[..d.factors.len() - 1] {
                assert!(is_identity_rotation(f));
            }
        }
    }

    #[test]
    fn orthogonal_rejects_non_orthogonal() {
        let s = Space::euclidean(3).unwrap();
        assert_eq!(
            decompose_orthogonal(&s, &Matrix::identity(3).scaled(2.0)),
            Err(Error::NotOrthogonal)
        );
    }

    #[test]
    fn orthogonal_general_permutation() {
        // A 5-cycle with a sign: neither planar nor trivially structured.
        let s = Space::euclidean(5).unwrap();
        let mut t = Matrix::zeros(5, 5);
        for i in 0..5 {
            t[((i + 1) % 5, i)] = if i == 2 { -1.0 } else { 1.0 };
        }
        let d = decompose_orthogonal(&s, &t).unwrap();
        assert_eq!(d.planar_count(), 4);
        assert_eq!(d.reflection_count(), 1);
        assert_eq!(d.factors.last().unwrap().kind(), "reflectional");
        assert!(d.residual < 1e-12);
        for f in &d.factors[..3] {
            assert!(is_rotational(&s, &f.materialize(&s).unwrap()));
        }
        assert!(is_reflectional(&s, &d.factors[3].materialize(&s).unwrap()));
    }

    #[test]
    fn canonicalize_merges_reflection_pair() {
        let s = Space::euclidean(3).unwrap();
        let d = Decomposition {
            factors: vec![
                Factor::reflection(&s, &v(&[1., 0., 0.])).unwrap(),
                Factor::reflection(&s, &v(&[0., 1., 0.])).unwrap(),
            ],
            residual: 0.0,
        };
        let c = canonicalize(&s, &d).unwrap();
        assert_eq!(
            c.factors,
            vec![Factor::Rotational {
                plane_u: v(&[1., 0., 0.]),
                plane_v: v(&[0., 1., 0.]),
                theta: PI
            }]
        );
        assert!(close(
            &c.recompose(&s).unwrap(),
            &Matrix::diagonal(&[-1., -1., 1.]),
            1e-15
        ));
    }

    #[test]
    fn canonicalize_moves_reflection_last_and_is_idempotent() {
        let s = Space::euclidean(4).unwrap();
        let rot = Factor::rotation(&s, Vector::unit(4, 2), Vector::unit(4, 3), 0.4).unwrap();
        let refl = Factor::reflection(&s, &Vector::unit(4, 0)).unwrap();
        let d = Decomposition {
            factors: vec![refl.clone(), rot.clone()],
            residual: 0.0,
        };
        let c = canonicalize(&s, &d).unwrap();
        assert_eq!(c.factors, vec![rot.clone(), refl.clone()]);
        assert!(close(
            &c.recompose(&s).unwrap(),
            &d.recompose(&s).unwrap(),
            1e-15
        ));
        assert_eq!(canonicalize(&s, &c).unwrap(), c);
    }

    #[test]
    fn canonicalize_conjugates_overlapping_rotations() {
        let s = Space::euclidean(3).unwrap();
        let d = Decomposition {
            factors: vec![
                Factor::reflection(&s, &v(&[1., 1., 0.])).unwrap(),
                Factor::rotation(&s, Vector::unit(3, 0), Vector::unit(3, 2), 0.9).unwrap(),
                Factor::Scalar { c: -2.0 },
            ],
            residual: 0.0,
        };
        let c = canonicalize(&s, &d).unwrap();
        assert!(close(
            &c.recompose(&s).unwrap(),
            &d.recompose(&s).unwrap(),
            1e-14
        ));
        assert!(c.reflection_count() <= 1);
        assert_eq!(c.factors.last().unwrap(), &Factor::Scalar { c: 2.0 });
        let kinds: Vec<_> = c.factors.iter().map(Factor::kind).collect();
        let first_refl = kinds.iter().position(|k| *k == "reflectional");
        if let Some(i) = first_refl {
            assert!(kinds[i + 1..].iter().all(|k| *k == "scalar"));
        }
    }

    #[test]
    fn canonicalize_rejects_non_planar() {
        let s = Space::euclidean(2).unwrap();
        let d = Decomposition {
            factors: vec![Factor::DiagonalInBasis {
                basis: s.orthonormal_basis(),
                entries: vec![1., 2.],
            }],
            residual: 0.0,
        };
        assert!(matches!(
            canonicalize(&s, &d),
            Err(Error::MalformedFactor(_))
        ));
    }

    #[test]
    fn absorbing_a_rotation_into_a_reflection() {
        let s = Space::euclidean(3).unwrap();
        let rot = Factor::rotation(&s, Vector::unit(3, 0), Vector::unit(3, 1), 0.7).unwrap();
        let a = s.unit(&v(&[0.3, -0.8, 0.])).unwrap();
        let f = absorb_rotation(&s, &rot, &a).unwrap();
        let want = Factor::reflection(&s, &a)
            .unwrap()
            .materialize(&s)
            .unwrap()
            .mul(&rot.materialize(&s).unwrap());
        assert!(close(&f.materialize(&s).unwrap(), &want, 1e-15));
    }

    #[test]
    fn shear_factorization_identity_case() {
        let s = Space::euclidean(3).unwrap();
        let b = s.orthonormal_basis();
        // A rotation about the axis (1,1,1) preserves the cone of the standard basis.
        let p = s.unit(&v(&[1., -1., 0.])).unwrap();
        let q = s.unit(&v(&[1., 1., -2.])).unwrap();
        let a = Factor::rotation(&s, p, q, 0.5)
            .unwrap()
            .materialize(&s)
            .unwrap();
        let (rest, shear) = factor_axonal_shear(&s, &a, &b).unwrap();
        let Factor::Shear { delta, .. } = shear else {
            panic!()
        };
        assert_abs_diff_eq!(delta, 0.0, epsilon = 1e-12);
        assert!(close(&rest.materialize(&s).unwrap(), &a, 1e-12));
    }

    #[test]
    fn shear_factorization_recovers_known_delta() {
        let s = Space::euclidean(3).unwrap();
        let b = s.orthonormal_basis();
        let phi = (1.0 / 3f64.sqrt()).acos();
        let target = 0.6;
        let sheared = crate::operators::rotate_basis_toward_axis(&s, &b, target).unwrap();
        // Follow with a same-cone map: rotation about the axis plus a uniform scale.
        let p = s.unit(&v(&[1., -1., 0.])).unwrap();
        let q = s.unit(&v(&[1., 1., -2.])).unwrap();
        let spin = Factor::rotation(&s, p, q, 1.1)
            .unwrap()
            .materialize(&s)
            .unwrap()
            .scaled(1.7);
        let a = spin
            .mul(&sheared.to_matrix())
            .mul(&s.inverse(&b.to_matrix()).unwrap());
        let (rest, shear) = factor_axonal_shear(&s, &a, &b).unwrap();
        let Factor::Shear { delta, .. } = &shear else {
            panic!()
        };
        assert_abs_diff_eq!(*delta, phi - target, epsilon = 1e-12);
        let prod = rest
            .materialize(&s)
            .unwrap()
            .mul(&shear.materialize(&s).unwrap());
        assert!(close(&prod, &a, 1e-12));
    }

    #[test]
    fn shear_factorization_with_reversed_axis() {
        let s = Space::euclidean(3).unwrap();
        let b = s.orthonormal_basis();
        let a = Matrix::identity(3).scaled(-2.0);
        let (rest, shear) = factor_axonal_shear(&s, &a, &b).unwrap();
        let prod = rest
            .materialize(&s)
            .unwrap()
            .mul(&shear.materialize(&s).unwrap());
        assert!(close(&prod, &a, 1e-12));
    }

    #[test]
    fn shear_factorization_rejects_non_witness() {
        let s = Space::euclidean(2).unwrap();
        assert!(matches!(
            factor_axonal_shear(&s, &Matrix::diagonal(&[1., 2.]), &s.orthonormal_basis()),
            Err(Error::Precondition(_))
        ));
    }
}
