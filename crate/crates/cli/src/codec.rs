//! JSON documents and factor encodings.

use axdecomp::{Basis, Decomposition, Factor, Matrix, Space, Vector, CONVENTION};
use serde_json::{json, Map, Value};

/// A problem with the shape or content of an input document.
#[derive(Debug)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Parsed<T> = Result<T, ParseError>;

fn err<T>(msg: impl Into<String>) -> Parsed<T> {
    Err(ParseError(msg.into()))
}

/// Input document: a dimension, an optional Gram matrix and the payload fields.
#[derive(Debug, Default)]
pub struct Document {
    pub dim: usize,
    pub gram: Option<Matrix>,
    pub matrix: Option<Matrix>,
    /// Basis vectors, one per row.
    pub basis: Option<Vec<Vector>>,
    pub decomposition: Option<Value>,
}

impl Document {
    pub fn parse(text: &str) -> Parsed<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ParseError(format!("invalid JSON: {e}")))?;
        let Value::Object(obj) = value else {
            return err("document must be a JSON object");
        };
        let dim = match obj.get("dim").and_then(Value::as_u64) {
            Some(d) if d >= 1 => d as usize,
            _ => return err("\"dim\" must be a positive integer"),
        };
        let square = |key: &str| -> Parsed<Option<Matrix>> {
            obj.get(key).map(|v| square_matrix(v, dim, key)).transpose()
        };
        let basis = square("basis")?.map(|m| m.to_rows().into_iter().map(Vector::new).collect());
        Ok(Document {
            dim,
            gram: square("gram")?,
            matrix: square("matrix")?,
            basis,
            decomposition: obj.get("decomposition").cloned(),
        })
    }

    pub fn space(&self, tol: axdecomp::Tolerance) -> Result<Space, axdecomp::Error> {
        let gram = self
            .gram
            .clone()
            .unwrap_or_else(|| Matrix::identity(self.dim));
        Space::with_tolerance(gram, tol)
    }

    pub fn require_matrix(&self) -> Parsed<&Matrix> {
        self.matrix
            .as_ref()
            .ok_or_else(|| ParseError("document has no \"matrix\"".into()))
    }

    pub fn require_basis(&self) -> Parsed<&[Vector]> {
        self.basis
            .as_deref()
            .ok_or_else(|| ParseError("document has no \"basis\"".into()))
    }

    /// The factor list, given either directly or as the `"factors"` field of decompose output.
    pub fn require_factors(&self, space: &Space) -> Parsed<Vec<Factor>> {
        let list = match &self.decomposition {
            Some(Value::Array(a)) => a,
            Some(Value::Object(o)) => match o.get("factors") {
                Some(Value::Array(a)) => a,
                _ => return err("\"decomposition\" object needs a \"factors\" list"),
            },
            Some(_) => return err("\"decomposition\" must be a list of factors"),
            None => return err("document has no \"decomposition\""),
        };
        list.iter()
            .enumerate()
            .map(|(i, f)| {
                decode_factor(space, f).map_err(|e| ParseError(format!("factor[{i}]: {e}")))
            })
            .collect()
    }
}

fn number(v: &Value, what: &str) -> Parsed<f64> {
    v.as_f64()
        .ok_or_else(|| ParseError(format!("{what}: expected a number")))
}

fn vector(v: &Value, n: usize, what: &str) -> Parsed<Vector> {
    let Some(items) = v.as_array() else {
        return err(format!("{what}: expected an array"));
    };
    if items.len() != n {
        return err(format!("{what}: expected length {n}, got {}", items.len()));
    }
    items
        .iter()
        .map(|x| number(x, what))
        .collect::<Parsed<Vec<_>>>()
        .map(Vector::new)
}

/// An `n × n` array of rows.
pub fn square_matrix(v: &Value, n: usize, what: &str) -> Parsed<Matrix> {
    let Some(rows) = v.as_array() else {
        return err(format!("{what}: expected an array of rows"));
    };
    if rows.len() != n {
        return err(format!("{what}: expected {n} rows, got {}", rows.len()));
    }
    let rows = rows
        .iter()
        .map(|r| vector(r, n, what).map(Vector::into_inner))
        .collect::<Parsed<Vec<_>>>()?;
    Matrix::from_rows(&rows).map_err(|e| ParseError(format!("{what}: {e}")))
}

fn basis_rows(space: &Space, v: &Value, what: &str) -> Parsed<Basis> {
    let m = square_matrix(v, space.dim(), what)?;
    let vectors = m.to_rows().into_iter().map(Vector::new).collect();
    Basis::new(space, vectors).map_err(|e| ParseError(format!("{what}: {e}")))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Parsed<&'a Value> {
    obj.get(key)
        .ok_or_else(|| ParseError(format!("missing field \"{key}\"")))
}

pub fn decode_factor(space: &Space, v: &Value) -> Parsed<Factor> {
    let n = space.dim();
    let Some(obj) = v.as_object() else {
        return err("factor must be an object");
    };
    let kind = field(obj, "kind")?
        .as_str()
        .ok_or_else(|| ParseError("\"kind\" must be a string".into()))?;
    Ok(match kind {
        "rotational" => Factor::Rotational {
            plane_u: vector(field(obj, "plane_u")?, n, "plane_u")?,
            plane_v: vector(field(obj, "plane_v")?, n, "plane_v")?,
            theta: number(field(obj, "theta")?, "theta")?,
        },
        "reflectional" => Factor::Reflectional {
            negated: vector(field(obj, "negated")?, n, "negated")?,
        },
        "scalar" => Factor::Scalar {
            c: number(field(obj, "c")?, "c")?,
        },
        "diagonal_in_basis" => Factor::DiagonalInBasis {
            basis: basis_rows(space, field(obj, "basis")?, "basis")?,
            entries: vector(field(obj, "entries")?, n, "entries")?.into_inner(),
        },
        "shear" => Factor::Shear {
            basis: basis_rows(space, field(obj, "basis")?, "basis")?,
            delta: number(field(obj, "delta")?, "delta")?,
        },
        "general_axonal" => Factor::GeneralAxonal {
            matrix: square_matrix(field(obj, "matrix")?, n, "matrix")?,
            witness_in: basis_rows(space, field(obj, "witness_in")?, "witness_in")?,
            witness_out: basis_rows(space, field(obj, "witness_out")?, "witness_out")?,
        },
        other => return err(format!("unknown factor kind {other:?}")),
    })
}

pub fn encode_vector(v: &Vector) -> Value {
    json!(v.as_slice())
}

pub fn encode_matrix(m: &Matrix) -> Value {
    json!(m.to_rows())
}

pub fn encode_basis(b: &Basis) -> Value {
    Value::Array(b.vectors().iter().map(encode_vector).collect())
}

pub fn encode_factor(f: &Factor) -> Value {
    match f {
        Factor::Rotational {
            plane_u,
            plane_v,
            theta,
        } => json!({
            "kind": f.kind(),
            "plane_u": encode_vector(plane_u),
            "plane_v": encode_vector(plane_v),
            "theta": theta,
        }),
        Factor::Reflectional { negated } => {
            json!({ "kind": f.kind(), "negated": encode_vector(negated) })
        }
        Factor::Scalar { c } => json!({ "kind": f.kind(), "c": c }),
        Factor::DiagonalInBasis { basis, entries } => json!({
            "kind": f.kind(),
            "basis": encode_basis(basis),
            "entries": entries,
        }),
        Factor::Shear { basis, delta } => json!({
            "kind": f.kind(),
            "basis": encode_basis(basis),
            "delta": delta,
        }),
        Factor::GeneralAxonal {
            matrix,
            witness_in,
            witness_out,
        } => json!({
            "kind": f.kind(),
            "matrix": encode_matrix(matrix),
            "witness_in": encode_basis(witness_in),
            "witness_out": encode_basis(witness_out),
        }),
    }
}

pub fn encode_decomposition(d: &Decomposition) -> Value {
    json!({
        "convention": CONVENTION,
        "factors": d.factors.iter().map(encode_factor).collect::<Vec<_>>(),
        "residual": d.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_round_trip() {
        let s = Space::euclidean(2).unwrap();
        let b = Basis::new(
            &s,
            vec![Vector::new(vec![1., 0.]), Vector::new(vec![0.6, 0.8])],
        )
        .unwrap();
        let factors = vec![
            Factor::identity_rotation(&s),
            Factor::Reflectional {
                negated: Vector::new(vec![0., 1.]),
            },
            Factor::Scalar { c: -2.5 },
            Factor::DiagonalInBasis {
                basis: b.clone(),
                entries: vec![1., 3.],
            },
            Factor::Shear {
                basis: b.clone(),
                delta: 0.25,
            },
            Factor::general_axonal(&s, b.clone(), b).unwrap(),
        ];
        for f in factors {
            let text = encode_factor(&f).to_string();
            let back = decode_factor(&s, &serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn rejects_malformed_documents() {
        for text in [
            "[]",
            "{}",
            r#"{"dim": 0}"#,
            r#"{"dim": 2, "matrix": [[1, 0]]}"#,
            r#"{"dim": 2, "matrix": [[1, 0], [0, "x"]]}"#,
            "{",
        ] {
            assert!(Document::parse(text).is_err(), "{text}");
        }
        let s = Space::euclidean(2).unwrap();
        for f in [
            json!({"kind": "twist"}),
            json!({"kind": "scalar"}),
            json!({"kind": "reflectional", "negated": [1.0]}),
            json!({"kind": "shear", "basis": [[1, 0], [2, 0]], "delta": 0.1}),
        ] {
            assert!(decode_factor(&s, &f).is_err(), "{f}");
        }
    }
}
