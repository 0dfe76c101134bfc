//! Tyler's M-estimator (TME) and the subspace-constrained Tyler's estimator
//! (STE) as fixed-point iterations on trace-normalized shape matrices.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::diagnostics::{hat_kappas, HatKappas};
use crate::error::{Result, RsrError};
use crate::spectral::{eigh, principal_angles, rank_d_truncation, SubspaceBasis, SymMatrix};
use crate::tol;

fn default_tol() -> f64 {
    tol::TOL_DEFAULT
}
fn default_max_iter() -> usize {
    tol::MAX_ITER_DEFAULT
}
fn default_true() -> bool {
    true
}
fn default_ridge() -> f64 {
    tol::RIDGE_REL_DEFAULT
}

/// Settings shared by both estimators.
///
/// `ridge_rel = 0` selects exact-rank mode: points with a component outside
/// the range of `Σ` get weight zero instead of a floored inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub d: usize,
    pub gamma: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_true")]
    pub trace_normalize: bool,
    #[serde(default = "default_ridge")]
    pub ridge_rel: f64,
}

impl EstimatorConfig {
    pub fn new(d: usize, gamma: f64) -> Self {
        EstimatorConfig {
            d,
            gamma,
            tol: tol::TOL_DEFAULT,
            max_iter: tol::MAX_ITER_DEFAULT,
            trace_normalize: true,
            ridge_rel: tol::RIDGE_REL_DEFAULT,
        }
    }

    /// Checks the settings the TME iteration depends on.
    pub fn validate_common(&self) -> Result<()> {
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(RsrError::InvalidConfig(format!("tol must be finite and >= 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(RsrError::InvalidConfig("max_iter must be positive".into()));
        }
        if !(self.ridge_rel >= 0.0) || !(self.ridge_rel < 1.0) {
            return Err(RsrError::InvalidConfig(format!("ridge_rel must lie in [0,1), got {}", self.ridge_rel)));
        }
        Ok(())
    }

    /// Checks everything, including `0 < γ < 1` and `1 ≤ d < D`.
    pub fn validate(&self, ambient: usize) -> Result<()> {
        self.validate_common()?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(RsrError::InvalidConfig(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        if self.d == 0 || self.d >= ambient {
            return Err(RsrError::InvalidConfig(format!("d must satisfy 1 <= d < D, got d={}, D={ambient}", self.d)));
        }
        Ok(())
    }
}

/// One iteration of a run. `k = 0` describes the initial matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub step_delta: f64,
    pub sin_theta1: Option<f64>,
    pub kappa_hat: Option<HatKappas>,
    pub wall_seconds: f64,
    pub degenerate_spectrum: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    /// `sin θ₁` per recorded iteration, when monitored.
    pub fn sin_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.sin_theta1).collect()
    }

    /// `κ̂₁` per recorded iteration, when monitored.
    pub fn kappa1_series(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.kappa_hat.as_ref().map(|h| h.kappa1)).collect()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub sigma_final: SymMatrix,
    /// Top-`d` eigenvectors of `sigma_final`.
    pub subspace: SubspaceBasis,
    pub iterations: usize,
    pub converged: bool,
    pub trace: IterationTrace,
}

/// What a monitored run measures itself against.
#[derive(Debug, Clone, Copy)]
pub struct Reference<'a> {
    pub basis: &'a SubspaceBasis,
    /// Enables κ̂ tracking when present.
    pub sigma_in_star: Option<&'a SymMatrix>,
}

/// Precomputed inverse of `Σ` under the weight convention.
struct Weigher {
    vectors: DMatrix<f64>,
    inv: Vec<f64>,
    exact_rank: bool,
}

impl Weigher {
    fn new(sigma: &SymMatrix, ridge_rel: f64) -> Result<Self> {
        let es = eigh(sigma)?;
        let top = es.values[0];
        if !(top > 0.0) {
            return Err(RsrError::NotPsd { min_eigenvalue: top });
        }
        let exact_rank = ridge_rel == 0.0;
        let inv = es
            .values
            .iter()
            .map(|&v| {
                if exact_rank {
                    if v > tol::EXACT_RANK_REL * top {
                        1.0 / v
                    } else {
                        0.0
                    }
                } else {
                    1.0 / v.max(ridge_rel * top)
                }
            })
            .collect();
        Ok(Weigher { vectors: es.vectors, inv, exact_rank })
    }

    fn weights(&self, points: &DMatrix<f64>) -> Vec<f64> {
        let coords = self.vectors.transpose() * points;
        coords
            .column_iter()
            .map(|c| {
                let mut q = 0.0;
                let mut outside = 0.0;
                let mut total = 0.0;
                for (ci, &inv) in c.iter().zip(&self.inv) {
                    let c2 = ci * ci;
                    total += c2;
                    if inv == 0.0 {
                        outside += c2;
                    } else {
                        q += c2 * inv;
                    }
                }
                if self.exact_rank && outside.sqrt() > tol::RANGE_RESIDUAL_REL * total.sqrt() {
                    0.0
                } else if q > 0.0 {
                    1.0 / q
                } else {
                    0.0
                }
            })
            .collect()
    }
}

fn check_sigma(sigma: &SymMatrix, data: &Dataset) -> Result<()> {
    if sigma.dim() != data.ambient_dim() {
        return Err(RsrError::DimensionError(format!(
            "shape matrix is {0}x{0}, data lives in R^{1}",
            sigma.dim(),
            data.ambient_dim()
        )));
    }
    Ok(())
}

/// `w_i = 1/(x_iᵀ Σ⁻¹ x_i)` under the singular-inverse convention.
pub fn robust_weights(sigma: &SymMatrix, data: &Dataset, ridge_rel: f64) -> Result<Vec<f64>> {
    check_sigma(sigma, data)?;
    Ok(Weigher::new(sigma, ridge_rel)?.weights(data.points()))
}

/// `Σ_i w_i x_i x_iᵀ` over the columns of `points`.
pub fn weighted_scatter(points: &DMatrix<f64>, weights: &[f64]) -> SymMatrix {
    let mut y = points.clone();
    for (j, &w) in weights.iter().enumerate() {
        y.column_mut(j).scale_mut(w.sqrt());
    }
    SymMatrix::symmetrize(&y * y.transpose())
}

/// `T₁(Σ) = Σ_x x xᵀ/(xᵀΣ⁻¹x)`.
pub fn t1_operator(sigma: &SymMatrix, data: &Dataset, ridge_rel: f64) -> Result<SymMatrix> {
    let w = robust_weights(sigma, data, ridge_rel)?;
    Ok(weighted_scatter(data.points(), &w))
}

/// `T₂(Σ) = Π_d(Σ) + γ·σ̄_tail(Σ)·P_tail(Σ)`, with its degeneracy flag.
pub fn t2_operator(sigma: &SymMatrix, d: usize, gamma: f64) -> Result<(SymMatrix, bool)> {
    let t = rank_d_truncation(sigma, d)?;
    let n = sigma.dim();
    let tail = t.eigen.values.as_slice()[d..].iter().sum::<f64>() / (n - d) as f64;
    Ok((t.pi_d.add(&t.p_tail.scaled(gamma * tail)), t.degenerate_spectrum))
}

fn finish(m: SymMatrix, normalize: bool) -> Result<SymMatrix> {
    let tr = m.trace();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(RsrError::DegenerateUpdate);
    }
    if normalize {
        Ok(m.scaled(1.0 / tr))
    } else {
        Ok(m)
    }
}

/// `(D/N) Σ_i w_i x_i x_iᵀ`, trace-normalized when configured.
pub fn tme_step(sigma: &SymMatrix, data: &Dataset, cfg: &EstimatorConfig) -> Result<SymMatrix> {
    let z = t1_operator(sigma, data, cfg.ridge_rel)?;
    let factor = data.ambient_dim() as f64 / data.len() as f64;
    finish(z.scaled(factor), cfg.trace_normalize)
}

/// Output of one STE update.
#[derive(Debug, Clone, PartialEq)]
pub struct SteStep {
    pub sigma: SymMatrix,
    /// `σ_d(Z) = σ_{d+1}(Z)` within tolerance.
    pub degenerate_spectrum: bool,
}

/// `T(Σ) = T₂(T₁(Σ))`, trace-normalized when configured.
pub fn ste_step(sigma: &SymMatrix, data: &Dataset, cfg: &EstimatorConfig) -> Result<SteStep> {
    let z = t1_operator(sigma, data, cfg.ridge_rel)?;
    if !(z.trace() > 0.0) {
        return Err(RsrError::DegenerateUpdate);
    }
    let (next, degenerate_spectrum) = t2_operator(&z, cfg.d, cfg.gamma)?;
    Ok(SteStep { sigma: finish(next, cfg.trace_normalize)?, degenerate_spectrum })
}

struct RunOutput {
    sigma: SymMatrix,
    iterations: usize,
    converged: bool,
    trace: IterationTrace,
}

fn monitor_record(
    k: usize,
    step_delta: f64,
    sigma: &SymMatrix,
    d: usize,
    reference: Option<&Reference<'_>>,
    start: &Instant,
    degenerate_spectrum: bool,
) -> Result<IterationRecord> {
    let (sin_theta1, kappa_hat) = match reference {
        Some(r) => {
            let top = eigh(sigma)?.top_subspace(d)?;
            let s = principal_angles(&top, r.basis)?.sin_largest;
            let h = match r.sigma_in_star {
                Some(sin) => Some(hat_kappas(sigma, r.basis, sin)?),
                None => None,
            };
            (Some(s), h)
        }
        None => (None, None),
    };
    Ok(IterationRecord {
        k,
        step_delta,
        sin_theta1,
        kappa_hat,
        wall_seconds: start.elapsed().as_secs_f64(),
        degenerate_spectrum,
    })
}

fn iterate(
    sigma0: &SymMatrix,
    cfg: &EstimatorConfig,
    monitor_dim: usize,
    reference: Option<&Reference<'_>>,
    mut step: impl FnMut(&SymMatrix) -> Result<(SymMatrix, bool)>,
) -> Result<RunOutput> {
    let start = Instant::now();
    let mut sigma = if cfg.trace_normalize { sigma0.trace_normalized()? } else { sigma0.clone() };
    let mut trace = IterationTrace::default();
    trace.records.push(monitor_record(0, 0.0, &sigma, monitor_dim, reference, &start, false)?);
    for k in 1..=cfg.max_iter {
        let (next, degenerate) = step(&sigma)?;
        let delta = next.sub(&sigma).spectral_norm();
        sigma = next;
        trace.records.push(monitor_record(k, delta, &sigma, monitor_dim, reference, &start, degenerate)?);
        if delta <= cfg.tol {
            return Ok(RunOutput { sigma, iterations: k, converged: true, trace });
        }
    }
    Ok(RunOutput { sigma, iterations: cfg.max_iter, converged: false, trace })
}

fn check_initial(sigma0: &SymMatrix, data: &Dataset) -> Result<()> {
    check_sigma(sigma0, data)?;
    sigma0.check_psd()
}

fn into_result(out: RunOutput, d: usize) -> Result<EstimatorResult> {
    let subspace = eigh(&out.sigma)?.top_subspace(d)?;
    Ok(EstimatorResult {
        sigma_final: out.sigma,
        subspace,
        iterations: out.iterations,
        converged: out.converged,
        trace: out.trace,
    })
}

/// Iterates [`tme_step`] from `sigma0`. Non-convergence is reported through
/// `converged = false`, not as an error.
pub fn tme_solve(data: &Dataset, cfg: &EstimatorConfig, sigma0: &SymMatrix) -> Result<EstimatorResult> {
    tme_solve_monitored(data, cfg, sigma0, None)
}

pub fn tme_solve_monitored(
    data: &Dataset,
    cfg: &EstimatorConfig,
    sigma0: &SymMatrix,
    reference: Option<&Reference<'_>>,
) -> Result<EstimatorResult> {
    cfg.validate(data.ambient_dim())?;
    check_initial(sigma0, data)?;
    let out = iterate(sigma0, cfg, cfg.d, reference, |s| Ok((tme_step(s, data, cfg)?, false)))?;
    into_result(out, cfg.d)
}

/// Iterates [`ste_step`] from `sigma0`, recording `sin θ₁` and the κ̂'s when
/// a reference is supplied.
pub fn ste_solve(
    data: &Dataset,
    cfg: &EstimatorConfig,
    sigma0: &SymMatrix,
    reference: Option<&Reference<'_>>,
) -> Result<EstimatorResult> {
    cfg.validate(data.ambient_dim())?;
    check_initial(sigma0, data)?;
    if let Some(r) = reference {
        if r.basis.ambient_dim() != data.ambient_dim() || r.basis.dim() != cfg.d {
            return Err(RsrError::DimensionError("reference subspace does not match d and D".into()));
        }
    }
    let out = iterate(sigma0, cfg, cfg.d, reference, |s| {
        let st = ste_step(s, data, cfg)?;
        Ok((st.sigma, st.degenerate_spectrum))
    })?;
    into_result(out, cfg.d)
}

/// Trace-one TME solution of the `d×n` matrix `points` (columns are points of ℝ^d).
pub fn tme_of_points(points: &DMatrix<f64>, cfg: &EstimatorConfig) -> Result<SymMatrix> {
    cfg.validate_common().map_err(|e| RsrError::InlierTmeFailed(e.to_string()))?;
    let d = points.nrows();
    if points.ncols() == 0 {
        return Err(RsrError::InlierTmeFailed("no inliers".into()));
    }
    let ds = Dataset::new(points.clone(), None).map_err(|e| RsrError::InlierTmeFailed(e.to_string()))?;
    let inner = EstimatorConfig { trace_normalize: true, ..cfg.clone() };
    let out = iterate(&SymMatrix::identity(d), &inner, d, None, |s| Ok((tme_step(s, &ds, &inner)?, false)))
        .map_err(|e| RsrError::InlierTmeFailed(e.to_string()))?;
    if !out.converged {
        return Err(RsrError::InlierTmeFailed(format!("no convergence in {} iterations", out.iterations)));
    }
    let ev = out.sigma.eigenvalues();
    if !(ev[d - 1] > tol::TME_SINGULAR_REL * ev[0]) {
        return Err(RsrError::InlierTmeFailed(format!(
            "solution is singular (condition ratio {:e})",
            ev[d - 1] / ev[0]
        )));
    }
    Ok(out.sigma)
}

/// `Σ_in,*`: the trace-one TME solution of the inliers projected onto `basis`.
pub fn projected_tme(data: &Dataset, basis: &SubspaceBasis, cfg: &EstimatorConfig) -> Result<SymMatrix> {
    let labels = data.labels().ok_or_else(|| RsrError::InvalidDataset("labels are required".into()))?;
    projected_tme_with_labels(data, labels, basis, cfg)
}

pub fn projected_tme_with_labels(
    data: &Dataset,
    labels: &[Label],
    basis: &SubspaceBasis,
    cfg: &EstimatorConfig,
) -> Result<SymMatrix> {
    if basis.ambient_dim() != data.ambient_dim() {
        return Err(RsrError::DimensionError("basis and data dimensions differ".into()));
    }
    let inl = data.select(labels, Label::Inlier)?;
    tme_of_points(&(basis.columns().transpose() * inl), cfg)
}
