//! Seeded instance generators, an independent closed-form oracle for dimensions 2 and 3,
//! and certificate checking for decompositions.
//!
//! Generators draw from ChaCha8 seeded with `seed_from_u64(seed)`, so a `(kind, dim, seed)`
//! triple names the same instance on every platform.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis_axis::{axial_vector, Basis};
use crate::decompose::{relative_residual, Decomposition};
use crate::error::{Error, Result};
use crate::operators::{
    is_axonal_witness, is_orthogonal, is_reflectional, is_rotational, rotate_basis_toward_axis,
    Factor,
};
use crate::space::{inverse_with, Matrix, Space, Vector};

/// Condition-number gate (1-norm estimate) for generated matrices and bases.
pub const MAX_CONDITION: f64 = 1e6;

/// Product of the materialized factors in application order.
pub fn recompose(space: &Space, d: &Decomposition) -> Result<Matrix> {
    d.recompose(space)
}

/// Which theorem a decomposition claims to instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    Invertible,
    Conformal,
    Orthogonal,
}

impl FromStr for Claim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "invertible" => Ok(Claim::Invertible),
            "conformal" => Ok(Claim::Conformal),
            "orthogonal" => Ok(Claim::Orthogonal),
            other => Err(Error::Precondition(format!("unknown claim {other:?}"))),
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Claim::Invertible => "invertible",
            Claim::Conformal => "conformal",
            Claim::Orthogonal => "orthogonal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: String,
    pub measured: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub residual: f64,
    pub violations: Vec<Violation>,
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, invariant: impl Into<String>, measured: f64, threshold: f64) {
        self.0.push(Violation {
            invariant: invariant.into(),
            measured,
            threshold,
        });
    }

    /// Records a failed boolean check as measured 0 against threshold 1.
    fn require(&mut self, ok: bool, invariant: impl Into<String>) {
        if !ok {
            self.push(invariant, 0.0, 1.0);
        }
    }
}

/// Certifies `d` as a decomposition of `t` of the claimed shape. Every failure is reported
/// as a violation; nothing is thrown.
pub fn check_decomposition(
    space: &Space,
    t: &Matrix,
    d: &Decomposition,
    claim: Claim,
) -> CheckReport {
    let n = space.dim();
    let accept = space.tol().accept();
    let mut v = Collector(Vec::new());

    if let Err(e) = space.check_matrix(t) {
        v.push(format!("input shape: {e}"), f64::NAN, 0.0);
        return CheckReport {
            passed: false,
            residual: f64::NAN,
            violations: v.0,
        };
    }

    let residual = relative_residual(space, t, &d.factors).unwrap_or(f64::NAN);
    if !(residual <= accept) {
        v.push("residual", residual, accept);
    }

    let mut materialized = Vec::with_capacity(d.factors.len());
    for (i, f) in d.factors.iter().enumerate() {
        if let Err(e) = f.validate(space) {
            v.push(format!("factor[{i}] payload: {e}"), f64::NAN, 0.0);
            materialized.push(None);
            continue;
        }
        let m = f.materialize(space).ok();
        let ok = match (f, &m) {
            (_, None) => false,
            (Factor::Rotational { .. }, Some(m)) => is_rotational(space, m),
            (Factor::Reflectional { .. }, Some(m)) => is_reflectional(space, m),
            (
                Factor::GeneralAxonal {
                    matrix, witness_in, ..
                },
                _,
            ) => is_axonal_witness(space, matrix, witness_in),
            (Factor::Shear { basis, .. }, Some(m)) => is_axonal_witness(space, m, basis),
            (Factor::Scalar { .. } | Factor::DiagonalInBasis { .. }, Some(_)) => true,
        };
        v.require(ok, format!("factor[{i}] is {}", f.kind()));
        materialized.push(m);
    }

    // Determinant bookkeeping.
    if let (Ok(det_t), Some(dets)) = (
        space.det(t),
        d.factors
            .iter()
            .map(|f| f.det(space).ok())
            .collect::<Option<Vec<f64>>>(),
    ) {
        let det_prod: f64 = dets.iter().product();
        let threshold = accept * n as f64 * det_t.abs() + space.tol().abs;
        if !((det_prod - det_t).abs() <= threshold) {
            v.push("determinant", (det_prod - det_t).abs(), threshold);
        }
    }

    let kinds: Vec<&str> = d.factors.iter().map(Factor::kind).collect();
    let planar = d.planar_count();
    let reflections = d.reflection_count();
    let reflection_is_last_planar = kinds
        .iter()
        .position(|k| *k == "reflectional")
        .is_none_or(|i| !kinds[i + 1..].contains(&"rotational"));

    match claim {
        Claim::Invertible => {
            let shape_ok = kinds.len() == 3
                && kinds[0] == "rotational"
                && matches!(kinds[1], "general_axonal" | "shear")
                && kinds[2] == "diagonal_in_basis";
            v.require(
                shape_ok,
                "structure: [rotational, axonal, diagonal_in_basis]",
            );
            if let Some(Factor::DiagonalInBasis { entries, .. }) = d.factors.get(2) {
                v.require(
                    entries.iter().all(|e| *e > 0.0),
                    "structure: positive diagonal",
                );
            }
        }
        Claim::Conformal | Claim::Orthogonal => {
            let scalars: Vec<f64> = d
                .factors
                .iter()
                .filter_map(|f| match f {
                    Factor::Scalar { c } => Some(*c),
                    _ => None,
                })
                .collect();
            let foreign = kinds
                .iter()
                .filter(|k| !matches!(**k, "rotational" | "reflectional" | "scalar"))
                .count();
            if foreign > 0 {
                v.push("structure: non-planar factors", foreign as f64, 0.0);
            }
            if reflections > 1 {
                v.push("structure: reflection count", reflections as f64, 1.0);
            }
            v.require(
                reflection_is_last_planar,
                "structure: reflection after rotations",
            );

            let scalar_sign_flips = scalars.iter().product::<f64>() < 0.0 && n % 2 == 1;
            let det_negative = space.det(t).is_ok_and(|x| x < 0.0);
            let expect_reflection = det_negative != scalar_sign_flips;
            v.require(
                (reflections == 1) == expect_reflection,
                "structure: reflection present iff orientation reversed",
            );

            if claim == Claim::Orthogonal {
                if !scalars.is_empty() {
                    v.push("structure: scalar factors", scalars.len() as f64, 0.0);
                }
                let bound = (n - 1).max(1);
                if planar > bound {
                    v.push(
                        "structure: planar factor count",
                        planar as f64,
                        bound as f64,
                    );
                }
            } else {
                v.require(
                    scalars.len() == 1 && kinds.last() == Some(&"scalar"),
                    "structure: one trailing scalar",
                );
                let want = n - 1;
                if planar != want {
                    v.push("structure: planar factor count", planar as f64, want as f64);
                }
            }
        }
    }

    CheckReport {
        passed: v.0.is_empty(),
        residual,
        violations: v.0,
    }
}

/// Instance families produced by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Invertible,
    Orthogonal,
    Conformal,
    EquimodularBasis,
    AxonalWitness,
}

impl Kind {
    pub const ALL: [Kind; 5] = [
        Kind::Invertible,
        Kind::Orthogonal,
        Kind::Conformal,
        Kind::EquimodularBasis,
        Kind::AxonalWitness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Invertible => "invertible",
            Kind::Orthogonal => "orthogonal",
            Kind::Conformal => "conformal",
            Kind::EquimodularBasis => "equimodular_basis",
            Kind::AxonalWitness => "axonal_witness",
        }
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown instance kind {s:?}")))
    }
}

/// A generated test instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Invertible(Matrix),
    Orthogonal(Matrix),
    /// `scale * Q` with `Q` orthogonal.
    Conformal {
        matrix: Matrix,
        scale: f64,
    },
    EquimodularBasis(Basis),
    /// `matrix` maps the equimodular `basis` onto an equimodular basis with the same axis.
    AxonalWitness {
        matrix: Matrix,
        basis: Basis,
    },
}

impl Instance {
    pub fn matrix(&self) -> Option<&Matrix> {
        match self {
            Instance::Invertible(m) | Instance::Orthogonal(m) => Some(m),
            Instance::Conformal { matrix, .. } | Instance::AxonalWitness { matrix, .. } => {
                Some(matrix)
            }
            Instance::EquimodularBasis(_) => None,
        }
    }

    pub fn basis(&self) -> Option<&Basis> {
        match self {
            Instance::EquimodularBasis(b) | Instance::AxonalWitness { basis: b, .. } => Some(b),
            _ => None,
        }
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    m
}

/// `|A|_1 |A^-1|_1`, infinite when singular.
pub fn condition_estimate(a: &Matrix) -> f64 {
    match inverse_with(a, 1e-14) {
        Ok(inv) => a.norm_1() * inv.norm_1(),
        Err(_) => f64::INFINITY,
    }
}

fn well_conditioned(rng: &mut impl Rng, n: usize) -> Matrix {
    loop {
        let m = random_matrix(rng, n);
        if condition_estimate(&m) < MAX_CONDITION {
            return m;
        }
    }
}

/// A `G`-orthogonal matrix: maps the orthonormal basis onto a random `G`-orthonormal
/// basis (Gram–Schmidt of a random matrix), with one column negated half of the time.
fn random_orthogonal(space: &Space, rng: &mut impl Rng) -> Matrix {
    let n = space.dim();
    let cols = loop {
        let cols = space.orthonormalize(random_matrix(rng, n).columns(), n);
        if cols.len() == n {
            break cols;
        }
    };
    let mut c = Matrix::from_columns(&cols);
    if rng.random_bool(0.5) {
        let j = rng.random_range(0..n);
        for i in 0..n {
            c[(i, j)] = -c[(i, j)];
        }
    }
    // B^{-1} = B^T G for the G-orthonormal basis B.
    let b = space.orthonormal_basis().to_matrix();
    c.mul(&b.transpose().mul(space.gram()))
}

fn random_equimodular(space: &Space, rng: &mut impl Rng) -> Basis {
    let n = space.dim();
    loop {
        let delta = rng.random_range(0.5..2.0);
        let vectors: Vec<Vector> = well_conditioned(rng, n)
            .columns()
            .into_iter()
            .map(|c| c.scaled(delta / space.nrm(&c)))
            .collect();
        if let Ok(b) = Basis::new(space, vectors) {
            if condition_estimate(&b.to_matrix()) < MAX_CONDITION {
                return b;
            }
        }
    }
}

/// Common angle for a rotated basis, kept 0.1 rad away from 0, π/2 and π.
fn random_admissible_angle(rng: &mut impl Rng) -> f64 {
    let a = rng.random_range(0.1..FRAC_PI_2 - 0.1);
    if rng.random_bool(0.5) {
        a
    } else {
        PI - a
    }
}

fn random_axonal(space: &Space, rng: &mut impl Rng) -> Result<(Matrix, Basis)> {
    let n = space.dim();
    loop {
        let basis = random_equimodular(space, rng);
        let scale = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        if n == 1 {
            return Ok((Matrix::identity(1).scaled(scale), basis));
        }
        let image = rotate_basis_toward_axis(space, &basis, random_admissible_angle(rng))?;
        let mut image_m = image.to_matrix();
        if rng.random_bool(0.5) {
            // Same-cone map: spin about the axis, then rescale uniformly.
            let axis = space.unit(&axial_vector(space, &basis)?.axial)?;
            if n >= 3 {
                let candidates = std::iter::once(axis)
                    .chain(random_matrix(rng, n).columns())
                    .collect::<Vec<_>>();
                let frame = space.orthonormalize(candidates, 3);
                if frame.len() == 3 {
                    let spin = Factor::rotation(
                        space,
                        frame[1].clone(),
                        frame[2].clone(),
                        rng.random_range(-PI..PI),
                    )?;
                    image_m = spin.materialize(space)?.mul(&image_m);
                }
            }
            image_m = image_m.scaled(scale);
        }
        if condition_estimate(&image_m) >= MAX_CONDITION {
            continue;
        }
        let matrix = image_m.mul(&inverse_with(&basis.to_matrix(), space.tol().rank_tol)?);
        if is_axonal_witness(space, &matrix, &basis) {
            return Ok((matrix, basis));
        }
    }
}

/// Deterministic instance of the requested family.
pub fn generate(space: &Space, kind: Kind, seed: u64) -> Result<Instance> {
    let mut rng = rng_for(seed);
    let n = space.dim();
    Ok(match kind {
        Kind::Invertible => Instance::Invertible(well_conditioned(&mut rng, n)),
        Kind::Orthogonal => Instance::Orthogonal(random_orthogonal(space, &mut rng)),
        Kind::Conformal => {
            let scale = rng.random_range(0.2..5.0);
            Instance::Conformal {
                matrix: random_orthogonal(space, &mut rng).scaled(scale),
                scale,
            }
        }
        Kind::EquimodularBasis => Instance::EquimodularBasis(random_equimodular(space, &mut rng)),
        Kind::AxonalWitness => {
            let (matrix, basis) = random_axonal(space, &mut rng)?;
            Instance::AxonalWitness { matrix, basis }
        }
    })
}

/// Random SPD Gram matrix `Q diag(λ) Q^T` with eigenvalues in `[1, max_condition)`.
pub fn generate_gram(n: usize, max_condition: f64, seed: u64) -> Result<Matrix> {
    if !(max_condition > 1.0) {
        return Err(Error::Precondition("condition bound must exceed 1".into()));
    }
    let mut rng = rng_for(seed);
    let euclid = Space::euclidean(n)?;
    let q = Matrix::from_columns(&loop {
        let cols = euclid.orthonormalize(random_matrix(&mut rng, n).columns(), n);
        if cols.len() == n {
            break cols;
        }
    });
    let lambdas: Vec<f64> = (0..n)
        .map(|_| rng.random_range(1.0..max_condition))
        .collect();
    let g = q.mul(&Matrix::diagonal(&lambdas)).mul(&q.transpose());
    // Symmetrize away rounding.
    Ok(g.add(&g.transpose()).scaled(0.5))
}

/// Closed-form decomposition of an orthogonal map in dimension 2 or 3, computed in
/// orthonormal coordinates: angle extraction in the plane, axis–angle in space.
pub fn oracle_small_dim(space: &Space, t: &Matrix) -> Result<Decomposition> {
    let n = space.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::Precondition(format!(
            "oracle covers dimensions 2 and 3, not {n}"
        )));
    }
    space.check_matrix(t)?;
    if !is_orthogonal(space, t) {
        return Err(Error::NotOrthogonal);
    }
    let b = space.orthonormal_basis().to_matrix();
    let local = b.transpose().mul(space.gram()).mul(t).mul(&b);
    let lift = |x: &[f64]| b.mul_vec(&Vector::new(x.to_vec()));
    let det = space.det(t)?;

    let factors = if n == 2 {
        let phi = local[(1, 0)].atan2(local[(0, 0)]);
        if det > 0.0 {
            vec![Factor::Rotational {
                plane_u: lift(&[1.0, 0.0]),
                plane_v: lift(&[0.0, 1.0]),
                theta: phi,
            }]
        } else {
            // [[cos φ, sin φ], [sin φ, -cos φ]] negates the direction at angle φ/2 + π/2.
            let a = phi / 2.0 + FRAC_PI_2;
            vec![Factor::Reflectional {
                negated: lift(&[a.cos(), a.sin()]),
            }]
        }
    } else {
        let p = if det > 0.0 {
            local.clone()
        } else {
            local.scaled(-1.0)
        };
        let (axis, theta) = axis_angle(&p);
        let k = (0..3)
            .min_by(|&i, &j| axis[i].abs().total_cmp(&axis[j].abs()))
            .unwrap();
        let mut u = [0.0; 3];
        u[k] = 1.0;
        for (i, ui) in u.iter_mut().enumerate() {
            *ui -= axis[k] * axis[i];
        }
        let un = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        let u = u.map(|x| x / un);
        let v = cross(&axis, &u);
        if det > 0.0 {
            vec![Factor::Rotational {
                plane_u: lift(&u),
                plane_v: lift(&v),
                theta,
            }]
        } else {
            // -P = (reflection of the axis) ∘ (half-turn about the axis) ∘ P.
            vec![
                Factor::Rotational {
                    plane_u: lift(&u),
                    plane_v: lift(&v),
                    theta: theta + PI,
                },
                Factor::Reflectional {
                    negated: lift(&axis),
                },
            ]
        }
    };
    let residual = relative_residual(space, t, &factors)?;
    Ok(Decomposition { factors, residual })
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit axis and angle in `[0, π]` of a 3×3 rotation matrix.
fn axis_angle(p: &Matrix) -> ([f64; 3], f64) {
    let w = [
        (p[(2, 1)] - p[(1, 2)]) / 2.0,
        (p[(0, 2)] - p[(2, 0)]) / 2.0,
        (p[(1, 0)] - p[(0, 1)]) / 2.0,
    ];
    let s = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let c = ((p[(0, 0)] + p[(1, 1)] + p[(2, 2)]) - 1.0) / 2.0;
    if c >= 0.0 {
        if s == 0.0 {
            return ([0.0, 0.0, 1.0], 0.0);
        }
        return (w.map(|x| x / s), s.atan2(c));
    }
    // Near a half-turn the skew part is small; read the axis off the symmetric part,
    // (P + P^T)/2 - c I = (1 - c) a a^T.
    let k = (0..3)
        .max_by(|&i, &j| p[(i, i)].total_cmp(&p[(j, j)]))
        .unwrap();
    let mut a = [0.0; 3];
    for (i, ai) in a.iter_mut().enumerate() {
        let sym = (p[(i, k)] + p[(k, i)]) / 2.0 - if i == k { c } else { 0.0 };
        *ai = sym;
    }
    let an = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let mut a = a.map(|x| x / an);
    let mut sin = a[0] * w[0] + a[1] * w[1] + a[2] * w[2];
    if sin < 0.0 {
        a = a.map(|x| -x);
        sin = -sin;
    }
    (a, sin.atan2(c))
}
