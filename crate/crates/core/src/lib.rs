//! Numerical toolkit for the sphere maps `x ↦ (a + Tx) / ‖a + Tx‖` induced by
//! invertible affine maps of Euclidean space.

// `!(x > tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod circle;
pub mod classify;
pub mod error;
pub mod linalg;
pub mod product;
pub mod sphere;
pub mod sphere_n;
pub mod sweep;

pub use certificate::{verify, VerificationReport, Witness, WitnessKind};
pub use circle::{FixedPointRecord, Stability};
pub use error::{Error, Result};
pub use linalg::{Matrix, SpectralSummary, Vector};
pub use product::{DistalityVerdict, ExpansivityVerdict, ProductSphereSystem};
pub use sphere::{AffineSphereSystem, OrbitSegment, SystemDescription};
