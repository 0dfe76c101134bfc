//! Numerical thresholds used throughout the crate.
//!
//! Every tolerance that a test or a contract refers to lives here, so the
//! property suites and the implementation agree on the exact numbers.

/// `|M[i,j] − M[j,i]| ≤ SYMMETRY_REL · (1 + max|M|)`.
pub const SYMMETRY_REL: f64 = 1e-12;

/// `‖UᵀU − I‖_max` bound for a subspace basis.
pub const ORTHONORMAL: f64 = 1e-10;

/// Relative reconstruction error allowed for an eigendecomposition.
pub const RECONSTRUCTION_REL: f64 = 1e-9;

/// Eigenvalues closer than this (relative to `1 + max|σ|`) are a tie for the
/// ordering policy.
pub const EIGEN_TIE_REL: f64 = 1e-12;

/// Minimum relative eigenvalue floor when inverting `Σ_{L⊥,L⊥}` in a Schur split.
pub const SCHUR_FLOOR_REL: f64 = 1e-12;

/// Smallest eigenvalue may be as low as `−PSD_REL · (1 + ‖M‖)` and still count as PSD.
pub const PSD_REL: f64 = 1e-9;

/// Smallest eigenvalue must exceed `PD_REL · ‖M‖` to count as PD.
pub const PD_REL: f64 = 1e-14;

/// `σ_d − σ_{d+1} ≤ DEGENERATE_GAP_REL · σ₁` flags an ill-defined top-d subspace.
pub const DEGENERATE_GAP_REL: f64 = 1e-12;

/// Default relative eigenvalue floor used when computing robust weights.
pub const RIDGE_REL_DEFAULT: f64 = 1e-12;

/// Exact-rank mode: eigenvalues below `EXACT_RANK_REL · σ₁` are outside the range.
pub const EXACT_RANK_REL: f64 = 1e-12;

/// Exact-rank mode: a point with `‖x − P_range x‖ > RANGE_RESIDUAL_REL · ‖x‖`
/// is outside the range and receives weight zero.
pub const RANGE_RESIDUAL_REL: f64 = 1e-10;

/// Denominators below `ZERO_REL · scale` are treated as zero (ratios become +∞).
pub const ZERO_REL: f64 = 1e-14;

/// Trace of a normalized estimate must be within this of 1.
pub const TRACE_NORM: f64 = 1e-10;

/// Default termination threshold on `‖Σ^(k) − Σ^(k−1)‖`.
pub const TOL_DEFAULT: f64 = 1e-12;

/// Default iteration cap.
pub const MAX_ITER_DEFAULT: usize = 10_000;

/// A run recovers the subspace when `sin θ₁ ≤ RECOVERY_SIN`.
pub const RECOVERY_SIN: f64 = 1e-6;

/// Upper end of the window used to fit the contraction of `sin θ₁`.
pub const RATE_WINDOW_HIGH: f64 = 1e-2;

/// Lower end of the window used to fit the contraction of `sin θ₁`.
pub const RATE_WINDOW_LOW: f64 = 1e-10;

/// Expansion-constant estimates at or below this flag a degenerate support.
pub const C_E_DEGENERATE: f64 = 1e-12;

/// Beyond this value κ̂₁ is dominated by round-off and weight flooring.
pub const KAPPA_SATURATION: f64 = 1e10;

/// Smallest-to-largest eigenvalue ratio below which a TME solution is singular.
pub const TME_SINGULAR_REL: f64 = 1e-10;
