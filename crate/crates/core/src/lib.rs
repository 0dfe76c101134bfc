//! Robust subspace recovery with Tyler's M-estimator (TME) and the
//! subspace-constrained Tyler's estimator (STE).
//!
//! The crate is split along the lines of the computation:
//!
//! * [`spectral`]: symmetric eigendecompositions, block views relative to a
//!   subspace, Schur splits and principal angles.
//! * [`estimators`]: the TME and STE fixed-point iterations.
//! * [`diagnostics`]: the initialization and data quantities that govern
//!   recovery (κ₁, κ₂, κ₃, κ_in,*, 𝒜, ℛ, ν and the condition constants).
//! * [`generators`]: seeded synthetic data (haystack and cone-noise models)
//!   and initializers.
//! * [`dataset`] and [`io`]: the point-cloud type and its file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod format;
pub mod generators;
pub mod io;
pub mod spectral;
pub mod tol;

pub use dataset::{Dataset, GroundTruth, Label};
pub use error::{Result, RsrError};
pub use estimators::{EstimatorConfig, EstimatorResult, IterationTrace};
pub use spectral::{EigenSystem, SubspaceBasis, SymMatrix};
