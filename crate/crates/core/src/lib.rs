//! Geometry of bases in a real inner-product space and the factorizations built on it.
//!
//! The ambient space is `R^n` with the inner product `<x, y> = x^T G y` for an SPD Gram
//! matrix `G` ([`Space`]). On top of it the crate provides:
//!
//! * axial vectors, axes and associated cones of bases ([`basis_axis`]),
//! * planar rotations and reflections, axonal witnesses and k-shears ([`operators`]),
//! * factorizations of invertible, conformal and orthogonal operators ([`decompose`]),
//! * generators, oracles and certificate checking ([`verify`]).
//!
//! Factor lists are stored in application order: `[F1, F2, ..., Fk]` represents
//! `Fk ∘ ... ∘ F2 ∘ F1`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis_axis;
pub mod decompose;
mod error;
pub mod operators;
pub mod space;
pub mod verify;

pub use basis_axis::{AxialCertificate, Basis, Cone, Line};
pub use decompose::{Decomposition, CONVENTION};
pub use error::{Error, Result};
pub use operators::{ConformalityCertificate, Factor};
pub use space::{Matrix, Space, Tolerance, Vector};
