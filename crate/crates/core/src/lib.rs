//! Nonexpansive operator algebra in finite dimensions.
//!
//! Builds affine and projection-based nonexpansive maps, tracks their
//! averagedness, and computes minimal displacement vectors of their
//! compositions and convex combinations. The [`verify`] module turns the
//! range and displacement identities for such maps into executable checks,
//! and [`cli`] wires scenario files to deterministic JSON reports.

pub mod cli;
pub mod displacement;
pub mod error;
pub mod numeric;
pub mod operators;
pub mod sets;
pub mod verify;

pub use displacement::{DisplacementEstimate, EstimatorConfig, Method};
pub use error::{Error, Result};
pub use numeric::{AffineSubspaceRep, Matrix, Vector};
pub use operators::{MonotoneAffine, Operator, Regularity};
pub use sets::ConvexSet;
pub use verify::CheckReport;
