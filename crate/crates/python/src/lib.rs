//! Python bindings for `axdecomp`.
//!
//! Matrices are lists of rows, bases are lists of vectors, and factors are dicts keyed by
//! `"kind"` with the same fields as the command-line JSON encoding.

use axdecomp::basis_axis::{associated_cone, axial_vector};
use axdecomp::decompose::{
    canonicalize, decompose_conformal, decompose_invertible, decompose_orthogonal,
};
use axdecomp::operators::{
    is_conformal, is_orthogonal, is_reflectional, is_rotational, rotate_basis_toward_axis,
};
use axdecomp::verify::{check_decomposition, Claim, Instance, Kind};
use axdecomp::{Basis, Decomposition, Factor, Matrix, Tolerance, Vector, CONVENTION};
use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(axdecomp_py, AxdecompError, PyValueError);

fn to_py(e: axdecomp::Error) -> PyErr {
    AxdecompError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

fn vectors(b: &Basis) -> Vec<Vec<f64>> {
    b.vectors().iter().map(|v| v.as_slice().to_vec()).collect()
}

/// `R^n` with the inner product `x^T G y`.
#[pyclass(module = "axdecomp_py", frozen)]
struct Space {
    inner: axdecomp::Space,
}

impl Space {
    fn basis(&self, vs: Vec<Vec<f64>>) -> PyResult<Basis> {
        Basis::new(&self.inner, vs.into_iter().map(Vector::new).collect()).map_err(to_py)
    }
}

#[pymethods]
impl Space {
    /// Either `gram` (an SPD matrix) or `dim` for the Euclidean space. `tolerance` sets the
    /// relative tolerance; the other thresholds scale with it.
    #[new]
    #[pyo3(signature = (gram = None, *, dim = None, tolerance = None))]
    fn new(
        gram: Option<Vec<Vec<f64>>>,
        dim: Option<usize>,
        tolerance: Option<f64>,
    ) -> PyResult<Self> {
        let tol = match tolerance {
            Some(r) => Tolerance::from_rel(r).map_err(to_py)?,
            None => Tolerance::default(),
        };
        let g = match (gram, dim) {
            (Some(g), _) => matrix(g)?,
            (None, Some(n)) => Matrix::identity(n),
            (None, None) => return Err(PyValueError::new_err("give gram or dim")),
        };
        let inner = axdecomp::Space::with_tolerance(g, tol).map_err(to_py)?;
        Ok(Space { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn gram(&self) -> Vec<Vec<f64>> {
        rows(self.inner.gram())
    }

    fn inner_product(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner
            .inner(&Vector::new(x), &Vector::new(y))
            .map_err(to_py)
    }

    fn norm(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.norm(&Vector::new(x)).map_err(to_py)
    }

    fn angle(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner
            .angle(&Vector::new(x), &Vector::new(y))
            .map_err(to_py)
    }

    fn orthonormal_basis(&self) -> Vec<Vec<f64>> {
        vectors(&self.inner.orthonormal_basis())
    }

    fn __repr__(&self) -> String {
        format!("Space(dim={})", self.inner.dim())
    }
}

fn factor_to_dict<'py>(py: Python<'py>, f: &Factor) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kind", f.kind())?;
    match f {
        Factor::Rotational {
            plane_u,
            plane_v,
            theta,
        } => {
            d.set_item("plane_u", plane_u.as_slice())?;
            d.set_item("plane_v", plane_v.as_slice())?;
            d.set_item("theta", theta)?;
        }
        Factor::Reflectional { negated } => d.set_item("negated", negated.as_slice())?,
        Factor::Scalar { c } => d.set_item("c", c)?,
        Factor::DiagonalInBasis { basis, entries } => {
            d.set_item("basis", vectors(basis))?;
            d.set_item("entries", entries)?;
        }
        Factor::Shear { basis, delta } => {
            d.set_item("basis", vectors(basis))?;
            d.set_item("delta", delta)?;
        }
        Factor::GeneralAxonal {
            matrix,
            witness_in,
            witness_out,
        } => {
            d.set_item("matrix", rows(matrix))?;
            d.set_item("witness_in", vectors(witness_in))?;
            d.set_item("witness_out", vectors(witness_out))?;
        }
    }
    Ok(d)
}

fn get<'py, T: for<'a> FromPyObject<'a, 'py, Error = PyErr>>(
    d: &Bound<'py, PyDict>,
    key: &str,
) -> PyResult<T> {
    d.get_item(key)?
        .ok_or_else(|| PyKeyError::new_err(key.to_string()))?
        .extract()
}

fn factor_from_dict(space: &Space, d: &Bound<'_, PyDict>) -> PyResult<Factor> {
    let kind: String = get(d, "kind")?;
    let vec = |key: &str| get::<Vec<f64>>(d, key).map(Vector::new);
    Ok(match kind.as_str() {
        "rotational" => Factor::Rotational {
            plane_u: vec("plane_u")?,
            plane_v: vec("plane_v")?,
            theta: get(d, "theta")?,
        },
        "reflectional" => Factor::Reflectional {
            negated: vec("negated")?,
        },
        "scalar" => Factor::Scalar { c: get(d, "c")? },
        "diagonal_in_basis" => Factor::DiagonalInBasis {
            basis: space.basis(get(d, "basis")?)?,
            entries: get(d, "entries")?,
        },
        "shear" => Factor::Shear {
            basis: space.basis(get(d, "basis")?)?,
            delta: get(d, "delta")?,
        },
        "general_axonal" => Factor::GeneralAxonal {
            matrix: matrix(get(d, "matrix")?)?,
            witness_in: space.basis(get(d, "witness_in")?)?,
            witness_out: space.basis(get(d, "witness_out")?)?,
        },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown factor kind {other:?}"
            )))
        }
    })
}

fn factors_from(space: &Space, list: Vec<Bound<'_, PyDict>>) -> PyResult<Vec<Factor>> {
    list.iter().map(|d| factor_from_dict(space, d)).collect()
}

fn decomposition_dict<'py>(py: Python<'py>, d: &Decomposition) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("convention", CONVENTION)?;
    let factors = d
        .factors
        .iter()
        .map(|f| factor_to_dict(py, f))
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("factors", factors)?;
    out.set_item("residual", d.residual)?;
    Ok(out)
}

fn claim(name: &str) -> PyResult<Claim> {
    name.parse().map_err(to_py)
}

/// Axial vector (ω = +1), vertex angle and unit axis direction of a basis.
#[pyfunction]
fn axis<'py>(py: Python<'py>, space: &Space, basis: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let b = space.basis(basis)?;
    let cert = axial_vector(&space.inner, &b).map_err(to_py)?;
    let cone = associated_cone(&space.inner, &b).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("axial", cert.axial.as_slice())?;
    d.set_item("vertex_angle", cert.vertex_angle)?;
    d.set_item("axis_dir", cone.axis_dir.as_slice())?;
    Ok(d)
}

/// Rotates each vector of an equimodular basis toward (or away from) its axis so that it
/// sits at angle `phi` from the axial vector.
#[pyfunction]
fn rotate_toward_axis(space: &Space, basis: Vec<Vec<f64>>, phi: f64) -> PyResult<Vec<Vec<f64>>> {
    let b = space.basis(basis)?;
    rotate_basis_toward_axis(&space.inner, &b, phi)
        .map(|r| vectors(&r))
        .map_err(to_py)
}

/// Factor `matrix` in the given mode: `"invertible"`, `"conformal"` or `"orthogonal"`.
#[pyfunction]
#[pyo3(signature = (space, matrix, mode = "invertible"))]
fn decompose<'py>(
    py: Python<'py>,
    space: &Space,
    matrix: Vec<Vec<f64>>,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let t = self::matrix(matrix)?;
    let d = match claim(mode)? {
        Claim::Invertible => decompose_invertible(&space.inner, &t),
        Claim::Conformal => decompose_conformal(&space.inner, &t),
        Claim::Orthogonal => decompose_orthogonal(&space.inner, &t),
    }
    .map_err(to_py)?;
    decomposition_dict(py, &d)
}

/// Normal form of a list of rotational, reflectional and scalar factors.
#[pyfunction]
fn canonical<'py>(
    py: Python<'py>,
    space: &Space,
    factors: Vec<Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let d = Decomposition {
        factors: factors_from(space, factors)?,
        residual: f64::NAN,
    };
    let c = canonicalize(&space.inner, &d).map_err(to_py)?;
    decomposition_dict(py, &c)
}

/// Product of the factors in application order.
#[pyfunction]
fn recompose(space: &Space, factors: Vec<Bound<'_, PyDict>>) -> PyResult<Vec<Vec<f64>>> {
    let d = Decomposition {
        factors: factors_from(space, factors)?,
        residual: f64::NAN,
    };
    d.recompose(&space.inner).map(|m| rows(&m)).map_err(to_py)
}

/// Certificate check. Returns `{"passed", "residual", "violations"}`.
#[pyfunction]
fn check<'py>(
    py: Python<'py>,
    space: &Space,
    matrix: Vec<Vec<f64>>,
    factors: Vec<Bound<'py, PyDict>>,
    claim: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let t = self::matrix(matrix)?;
    let d = Decomposition {
        factors: factors_from(space, factors)?,
        residual: f64::NAN,
    };
    let report = check_decomposition(&space.inner, &t, &d, self::claim(claim)?);
    let out = PyDict::new(py);
    out.set_item("passed", report.passed)?;
    out.set_item("residual", report.residual)?;
    let violations = report
        .violations
        .iter()
        .map(|v| {
            let d = PyDict::new(py);
            d.set_item("invariant", &v.invariant)?;
            d.set_item("measured", v.measured)?;
            d.set_item("threshold", v.threshold)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("violations", violations)?;
    Ok(out)
}

/// Operator predicates; `"conformal"` is the factor λ or `None`.
#[pyfunction]
fn classify<'py>(
    py: Python<'py>,
    space: &Space,
    matrix: Vec<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = self::matrix(matrix)?;
    let s = &space.inner;
    let d = PyDict::new(py);
    d.set_item("invertible", s.inverse(&m).is_ok())?;
    d.set_item("orthogonal", is_orthogonal(s, &m))?;
    d.set_item("rotational", is_rotational(s, &m))?;
    d.set_item("reflectional", is_reflectional(s, &m))?;
    d.set_item("conformal", is_conformal(s, &m).map(|c| c.lambda))?;
    Ok(d)
}

/// Seeded instance of `kind`: `"invertible"`, `"orthogonal"`, `"conformal"`,
/// `"equimodular_basis"` or `"axonal_witness"`.
#[pyfunction]
fn generate<'py>(
    py: Python<'py>,
    space: &Space,
    kind: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: Kind = kind.parse().map_err(to_py)?;
    let d = PyDict::new(py);
    match axdecomp::verify::generate(&space.inner, kind, seed).map_err(to_py)? {
        Instance::Invertible(m) | Instance::Orthogonal(m) => d.set_item("matrix", rows(&m))?,
        Instance::Conformal { matrix, scale } => {
            d.set_item("matrix", rows(&matrix))?;
            d.set_item("scale", scale)?;
        }
        Instance::EquimodularBasis(b) => d.set_item("basis", vectors(&b))?,
        Instance::AxonalWitness { matrix, basis } => {
            d.set_item("matrix", rows(&matrix))?;
            d.set_item("basis", vectors(&basis))?;
        }
    }
    Ok(d)
}

#[pymodule]
fn axdecomp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AxdecompError", m.py().get_type::<AxdecompError>())?;
    m.add("CONVENTION", CONVENTION)?;
    m.add_class::<Space>()?;
    m.add_function(wrap_pyfunction!(axis, m)?)?;
    m.add_function(wrap_pyfunction!(rotate_toward_axis, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(canonical, m)?)?;
    m.add_function(wrap_pyfunction!(recompose, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
