//! Quantities that govern whether STE recovers the inlier subspace from a
//! given initialization: dssnr, κ₁/κ₂/κ₃, κ_in,*, the alignment statistics
//! 𝒜, ℛ and 𝒮, the per-iteration κ̂'s and ν, and the recovery conditions.
//!
//! Ratios whose denominator vanishes evaluate to `+∞`, so every checker is
//! total.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{label_counts, Dataset, GroundTruth, Label};
use crate::error::{Result, RsrError};
use crate::estimators::{projected_tme_with_labels, robust_weights, weighted_scatter, EstimatorConfig};
use crate::format::serde_inf;
use crate::spectral::{
    blocks, complement_basis, eigh, inv_sqrtm, schur_complement_block, BlockDecomposition, SubspaceBasis, SymMatrix,
};
use crate::tol;

/// `num/den`, or `+∞` when `den ≤ ZERO_REL·scale`.
fn ratio(num: f64, den: f64, scale: f64) -> f64 {
    if den <= tol::ZERO_REL * scale {
        f64::INFINITY
    } else {
        num / den
    }
}

fn sym_eigs(m: &DMatrix<f64>) -> Vec<f64> {
    SymMatrix::symmetrize(m.clone()).eigenvalues()
}

/// `(n1/d)/(n0/(D−d))`; `+∞` without outliers.
pub fn dssnr(n1: usize, n0: usize, d: usize, ambient: usize) -> Result<f64> {
    if d == 0 || d >= ambient {
        return Err(RsrError::DimensionError(format!("need 1 <= d < D, got d={d}, D={ambient}")));
    }
    if n0 == 0 {
        return Ok(f64::INFINITY);
    }
    Ok((n1 as f64 / d as f64) / (n0 as f64 / (ambient - d) as f64))
}

/// The spectral pieces κ₁, κ₂ and κ₃ are built from.
struct InitSpectra {
    schur_min: f64,
    pp_max: f64,
    ll_max: f64,
    sigma_min: f64,
    scale: f64,
}

fn init_spectra(sigma0: &SymMatrix, basis: &SubspaceBasis) -> Result<InitSpectra> {
    let b = blocks(sigma0, basis)?;
    let s = schur_complement_block(&b, 0.0)?;
    let ev = sigma0.eigenvalues();
    let schur = sym_eigs(&s);
    Ok(InitSpectra {
        schur_min: schur[schur.len() - 1].max(0.0),
        pp_max: sym_eigs(&b.sigma_pp)[0].max(0.0),
        ll_max: sym_eigs(&b.sigma_ll)[0],
        sigma_min: ev[ev.len() - 1].max(0.0),
        scale: ev[0].abs(),
    })
}

/// `σ_d(Σ_LL − Σ_LP Σ_PP⁻¹ Σ_PL) / σ₁(Σ_PP)`; `+∞` when `Σ_PP` vanishes.
pub fn kappa1(sigma0: &SymMatrix, basis: &SubspaceBasis) -> Result<f64> {
    let s = init_spectra(sigma0, basis)?;
    Ok(ratio(s.schur_min, s.pp_max, s.scale))
}

/// `σ₁(Σ_PP) / σ_D(Σ)`.
pub fn kappa2(sigma0: &SymMatrix, basis: &SubspaceBasis) -> Result<f64> {
    let s = init_spectra(sigma0, basis)?;
    Ok(ratio(s.pp_max, s.sigma_min, s.scale))
}

/// `σ₁(Σ_LL) / σ_d(Σ_LL − Σ_LP Σ_PP⁻¹ Σ_PL)`.
pub fn kappa3(sigma0: &SymMatrix, basis: &SubspaceBasis) -> Result<f64> {
    let s = init_spectra(sigma0, basis)?;
    Ok(ratio(s.ll_max, s.schur_min, s.scale))
}

/// `Σ_in,*` for the labelled inliers of `truth`.
pub fn sigma_in_star(data: &Dataset, truth: &GroundTruth, cfg: &EstimatorConfig) -> Result<SymMatrix> {
    truth.check_against(data)?;
    projected_tme_with_labels(data, &truth.labels, &truth.basis, cfg)
}

/// Condition number of a PD matrix, `σ₁/σ_d`.
pub fn condition_number(m: &SymMatrix) -> f64 {
    let ev = m.eigenvalues();
    ratio(ev[0], ev[ev.len() - 1], ev[0].abs())
}

/// `κ_in,* = σ₁(Σ_in,*)/σ_d(Σ_in,*)`.
pub fn kappa_in_star(data: &Dataset, truth: &GroundTruth, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(condition_number(&sigma_in_star(data, truth, cfg)?))
}

/// `Σ_{x∈out} x xᵀ / ‖U_{L⊥}ᵀx‖²` and the outlier count.
fn outlier_moment(data: &Dataset, truth: &GroundTruth) -> Result<(SymMatrix, usize)> {
    truth.check_against(data)?;
    let w = complement_basis(&truth.basis);
    let mut pts = DMatrix::zeros(data.ambient_dim(), 0);
    let mut weights = Vec::new();
    let mut idx = Vec::new();
    for (i, l) in truth.labels.iter().enumerate() {
        if *l != Label::Outlier {
            continue;
        }
        let x = data.points().column(i);
        let perp = (w.columns().transpose() * x).norm_squared();
        if !(perp.sqrt() > tol::RANGE_RESIDUAL_REL * x.norm()) {
            return Err(RsrError::OutlierOnSubspace { index: i });
        }
        idx.push(i);
        weights.push(1.0 / perp);
    }
    if !idx.is_empty() {
        pts = data.points().select_columns(idx.iter());
    }
    Ok((weighted_scatter(&pts, &weights), idx.len()))
}

/// `𝒜 = ((D−d)/n₀)·‖Σ_{x∈out} x xᵀ/‖U_{L⊥}ᵀx‖²‖`. Zero without outliers.
pub fn alignment_a(data: &Dataset, truth: &GroundTruth) -> Result<f64> {
    let (m, n0) = outlier_moment(data, truth)?;
    if n0 == 0 {
        return Ok(0.0);
    }
    let codim = (data.ambient_dim() - truth.basis.dim()) as f64;
    Ok(codim / n0 as f64 * m.eigenvalues()[0])
}

/// `𝒮 = σ̄_tail(Σ_x x xᵀ/‖x‖²)`, the mean of the `D−d` smallest eigenvalues.
pub fn s_stat(data: &Dataset, d: usize) -> Result<f64> {
    let w: Vec<f64> = data.points().column_iter().map(|c| 1.0 / c.norm_squared()).collect();
    crate::spectral::tail_mean(&weighted_scatter(data.points(), &w), d)
}

/// `ℛ = σ₁(Σ_{x∈out} x xᵀ/‖U_{L⊥}ᵀx‖²) / 𝒮`.
pub fn relative_alignment_r(data: &Dataset, truth: &GroundTruth) -> Result<f64> {
    let (m, n0) = outlier_moment(data, truth)?;
    if n0 == 0 {
        return Ok(0.0);
    }
    let s = s_stat(data, truth.basis.dim())?;
    let top = m.eigenvalues()[0];
    Ok(ratio(top, s, top))
}

/// `T₁(Σ)` split by label, and `ν = σ_d(Σ₊,in)/‖Σ₊,out‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDecomposition {
    pub sigma_plus_in: SymMatrix,
    pub sigma_plus_out: SymMatrix,
    pub nu: f64,
}

pub fn nu_decomposition(
    sigma: &SymMatrix,
    data: &Dataset,
    truth: &GroundTruth,
    cfg: &EstimatorConfig,
) -> Result<IterationDecomposition> {
    truth.check_against(data)?;
    let w = robust_weights(sigma, data, cfg.ridge_rel)?;
    let split = |which: Label| {
        let wl: Vec<f64> = w.iter().zip(&truth.labels).map(|(&wi, &l)| if l == which { wi } else { 0.0 }).collect();
        weighted_scatter(data.points(), &wl)
    };
    let sigma_plus_in = split(Label::Inlier);
    let sigma_plus_out = split(Label::Outlier);
    let d = truth.basis.dim();
    let num = sigma_plus_in.eigenvalues()[d - 1];
    let den = sigma_plus_out.spectral_norm();
    let scale = sigma_plus_in.spectral_norm().max(den);
    Ok(IterationDecomposition { nu: ratio(num, den, scale), sigma_plus_in, sigma_plus_out })
}

/// κ̂₁, κ̂₂, κ̂₃ of a shape matrix relative to `L*`, measured in the geometry
/// whitened by `Σ_in,*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatKappas {
    #[serde(with = "serde_inf")]
    pub kappa1: f64,
    #[serde(with = "serde_inf")]
    pub kappa2: f64,
    #[serde(with = "serde_inf")]
    pub kappa3: f64,
}

/// `h(Σ) = σ_d(φ([g₁(Σ)]_LL))` with `φ(X) = Σ_in,*^{-1/2} X Σ_in,*^{-1/2}`.
pub fn h_value(sigma: &SymMatrix, basis: &SubspaceBasis, sigma_in_star: &SymMatrix) -> Result<f64> {
    let b = blocks(sigma, basis)?;
    let w = whitener(basis, sigma_in_star)?;
    let phi = phi(&w, &schur_complement_block(&b, 0.0)?);
    Ok(phi[phi.len() - 1])
}

fn whitener(basis: &SubspaceBasis, sigma_in_star: &SymMatrix) -> Result<SymMatrix> {
    if sigma_in_star.dim() != basis.dim() {
        return Err(RsrError::DimensionError(format!(
            "inlier TME solution is {0}x{0} but d = {1}",
            sigma_in_star.dim(),
            basis.dim()
        )));
    }
    inv_sqrtm(sigma_in_star)
}

/// Eigenvalues of `W X W`, non-increasing.
fn phi(w: &SymMatrix, x: &DMatrix<f64>) -> Vec<f64> {
    sym_eigs(&(w.matrix() * x * w.matrix()))
}

pub fn hat_kappas(sigma: &SymMatrix, basis: &SubspaceBasis, sigma_in_star: &SymMatrix) -> Result<HatKappas> {
    let b: BlockDecomposition = blocks(sigma, basis)?;
    let w = whitener(basis, sigma_in_star)?;
    let g1 = phi(&w, &schur_complement_block(&b, 0.0)?);
    let ll = phi(&w, &b.sigma_ll);
    let h = g1[g1.len() - 1].max(0.0);
    let pp_max = sym_eigs(&b.sigma_pp)[0].max(0.0);
    let ev = sigma.eigenvalues();
    let scale = ev[0].abs();
    Ok(HatKappas {
        kappa1: ratio(h, pp_max, scale),
        kappa2: ratio(pp_max, ev[ev.len() - 1].max(0.0), scale),
        kappa3: ratio(ll[0], h, ll[0].abs()),
    })
}

/// `C = max(70, (46·dssnr + 14γ)/(dssnr−γ))` and `C₀ = 2·dssnr/(dssnr+γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c: f64,
    pub c0: f64,
}

pub fn constants(dssnr: f64, gamma: f64) -> Result<Constants> {
    if !(dssnr > gamma) {
        return Err(RsrError::RegimeViolation { dssnr, gamma });
    }
    if dssnr.is_infinite() {
        return Ok(Constants { c: 70.0, c0: 2.0 });
    }
    Ok(Constants {
        c: f64::max(70.0, (46.0 * dssnr + 14.0 * gamma) / (dssnr - gamma)),
        c0: 2.0 * dssnr / (dssnr + gamma),
    })
}

/// Right-hand side of the initialization condition
/// `κ₁ ≥ C·(κ_in,*·𝒜/dssnr)·(κ_in,* + 𝒜/(dssnr−γ) + κ₂ℛ(1+κ_in,*)/γ)`.
///
/// Any infinite `κ_in,*`, `𝒜`, `ℛ` or `κ₂` makes it `+∞`; `dssnr = ∞` makes it 0.
pub fn condition_rhs(c: f64, dssnr: f64, gamma: f64, kappa_in: f64, a: f64, r: f64, kappa2: f64) -> f64 {
    if [kappa_in, a, r, kappa2].iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    if dssnr.is_infinite() {
        return 0.0;
    }
    c * (kappa_in * a / dssnr) * (kappa_in + a / (dssnr - gamma) + kappa2 * r * (1.0 + kappa_in) / gamma)
}

/// `(satisfied, margin)` with margin `κ₁ − RHS`, `−∞` for an infinite RHS.
pub fn condition_outcome(kappa1: f64, rhs: f64) -> (bool, f64) {
    if rhs.is_infinite() {
        return (false, f64::NEG_INFINITY);
    }
    if kappa1.is_infinite() {
        return (true, f64::INFINITY);
    }
    (kappa1 >= rhs, kappa1 - rhs)
}

/// Every diagnostic of an initialization on a labelled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(with = "serde_inf")]
    pub dssnr: f64,
    pub gamma: f64,
    #[serde(with = "serde_inf")]
    pub kappa1: f64,
    #[serde(with = "serde_inf")]
    pub kappa2: f64,
    #[serde(with = "serde_inf")]
    pub kappa3: f64,
    #[serde(with = "serde_inf")]
    pub kappa_in_star: f64,
    #[serde(with = "serde_inf")]
    pub a_stat: f64,
    #[serde(with = "serde_inf")]
    pub r_stat: f64,
    #[serde(with = "serde_inf")]
    pub s_stat: f64,
    /// ν at the initialization.
    #[serde(with = "serde_inf")]
    pub nu: f64,
    pub c: f64,
    pub c0: f64,
    #[serde(with = "serde_inf")]
    pub condition_rhs: f64,
    #[serde(with = "serde_inf")]
    pub condition_margin: f64,
    pub condition_satisfied: bool,
}

/// `+∞` for failures that mean "undefined", otherwise propagate.
fn inf_on(r: Result<f64>, undefined: impl Fn(&RsrError) -> bool) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(e) if undefined(&e) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

pub fn diagnostics_report(
    sigma0: &SymMatrix,
    data: &Dataset,
    truth: &GroundTruth,
    gamma: f64,
    cfg: &EstimatorConfig,
) -> Result<DiagnosticsReport> {
    truth.check_against(data)?;
    let d = truth.basis.dim();
    let (n1, n0) = label_counts(&truth.labels);
    let s = dssnr(n1, n0, d, data.ambient_dim())?;
    let k = constants(s, gamma)?;
    let k1 = kappa1(sigma0, &truth.basis)?;
    let k2 = kappa2(sigma0, &truth.basis)?;
    let k3 = kappa3(sigma0, &truth.basis)?;
    let kin = inf_on(kappa_in_star(data, truth, cfg), |e| matches!(e, RsrError::InlierTmeFailed(_)))?;
    let on_sub = |e: &RsrError| matches!(e, RsrError::OutlierOnSubspace { .. });
    let a = inf_on(alignment_a(data, truth), on_sub)?;
    let r = inf_on(relative_alignment_r(data, truth), on_sub)?;
    let ss = s_stat(data, d)?;
    let nu = nu_decomposition(sigma0, data, truth, cfg)?.nu;
    let rhs = condition_rhs(k.c, s, gamma, kin, a, r, k2);
    let (satisfied, margin) = condition_outcome(k1, rhs);
    Ok(DiagnosticsReport {
        dssnr: s,
        gamma,
        kappa1: k1,
        kappa2: k2,
        kappa3: k3,
        kappa_in_star: kin,
        a_stat: a,
        r_stat: r,
        s_stat: ss,
        nu,
        c: k.c,
        c0: k.c0,
        condition_rhs: rhs,
        condition_margin: margin,
        condition_satisfied: satisfied,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub satisfied: bool,
    pub margin: f64,
    pub report: DiagnosticsReport,
}

/// Evaluates the noiseless initialization condition at `sigma0`.
pub fn check_main_condition(
    sigma0: &SymMatrix,
    data: &Dataset,
    truth: &GroundTruth,
    gamma: f64,
    cfg: &EstimatorConfig,
) -> Result<ConditionCheck> {
    let report = diagnostics_report(sigma0, data, truth, gamma, cfg)?;
    Ok(ConditionCheck { satisfied: report.condition_satisfied, margin: report.condition_margin, report })
}

/// `κ̃₁ = C·𝒜/(dssnr·σ_d(Σ_in,*))·(κ_in,* + 𝒜/(dssnr−γ) + κ₂ℛ(1+κ_in,*)/γ)`.
pub fn tilde_kappa1(report: &DiagnosticsReport, sigma_in_star: &SymMatrix) -> f64 {
    let (kin, a, r, k2) = (report.kappa_in_star, report.a_stat, report.r_stat, report.kappa2);
    if [kin, a, r, k2].iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let ev = sigma_in_star.eigenvalues();
    let sd = ev[ev.len() - 1];
    let s = report.dssnr;
    let g = report.gamma;
    report.c * a / (s * sd) * (kin + a / (s - g) + k2 * r * (1.0 + kin) / g)
}

/// Inputs of the noisy-regime constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyInputs {
    pub dssnr: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub c_e: f64,
    pub kappa_in_star: f64,
    pub n1: usize,
    pub n0: usize,
    pub d: usize,
    pub ambient_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyConstants {
    #[serde(with = "serde_inf")]
    pub c_noisy: f64,
    #[serde(with = "serde_inf")]
    pub c_kappa1: f64,
    pub c_kappa2: f64,
    #[serde(with = "serde_inf")]
    pub c_kappa3: f64,
    pub c_e_estimate: f64,
}

/// Evaluates the noisy-regime constants:
///
/// ```text
/// C      = 3340/C_E + (152(s+γ)/(2γ) + 16(s+2γ)²/(3γ)²·(s+γ)) / (1 − 2(s+2γ)/(3(s+γ)))
/// C_κ₂   = 7
/// C_κ₃   = 13κ_in,* + 1
/// C_κ₁   = 1/(100 ε C_κ₃) · min( min(s/γ−1, 1, C_E/2)²/(ε C_κ₂),
///                               n₀/(n₁(D−d)) · min(s/γ−1, 1) )
/// ```
/// where `s` is the dssnr.
pub fn noisy_constants_from(inp: &NoisyInputs) -> Result<NoisyConstants> {
    let NoisyInputs { dssnr: s, gamma: g, epsilon: eps, c_e, kappa_in_star: kin, n1, n0, d, ambient_dim } = *inp;
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(RsrError::InvalidConfig(format!("epsilon must lie in (0, 1/2], got {eps}")));
    }
    if !(c_e > 0.0 && c_e <= 1.0) {
        return Err(RsrError::InvalidConfig(format!("C_E must lie in (0, 1], got {c_e}")));
    }
    if d == 0 || d >= ambient_dim {
        return Err(RsrError::DimensionError(format!("need 1 <= d < D, got d={d}, D={ambient_dim}")));
    }
    if !(s > g) || !(g > 0.0) {
        return Err(RsrError::RegimeViolation { dssnr: s, gamma: g });
    }
    let c_kappa2 = 7.0;
    let c_kappa3 = 13.0 * kin + 1.0;
    let c_noisy = if s.is_infinite() {
        f64::INFINITY
    } else {
        let num = 152.0 * (s + g) / (2.0 * g) + 16.0 * (s + 2.0 * g).powi(2) / (3.0 * g).powi(2) * (s + g);
        let den = 1.0 - 2.0 * (s + 2.0 * g) / (3.0 * (s + g));
        3340.0 / c_e + num / den
    };
    let gap = (s / g - 1.0).min(1.0);
    let first = gap.min(c_e / 2.0).powi(2) / (eps * c_kappa2);
    let second = if n1 == 0 { f64::INFINITY } else { n0 as f64 / (n1 as f64 * (ambient_dim - d) as f64) * gap };
    let c_kappa1 = first.min(second) / (100.0 * eps * c_kappa3);
    Ok(NoisyConstants { c_noisy, c_kappa1, c_kappa2, c_kappa3, c_e_estimate: c_e })
}

/// [`noisy_constants_from`] with dssnr, counts and κ_in,* read off the data.
pub fn noisy_constants(
    data: &Dataset,
    truth: &GroundTruth,
    gamma: f64,
    epsilon: f64,
    c_e: f64,
    cfg: &EstimatorConfig,
) -> Result<NoisyConstants> {
    truth.check_against(data)?;
    let (n1, n0) = truth.counts();
    let d = truth.basis.dim();
    let big_d = data.ambient_dim();
    let kin = inf_on(kappa_in_star(data, truth, cfg), |e| matches!(e, RsrError::InlierTmeFailed(_)))?;
    noisy_constants_from(&NoisyInputs {
        dssnr: dssnr(n1, n0, d, big_d)?,
        gamma,
        epsilon,
        c_e,
        kappa_in_star: kin,
        n1,
        n0,
        d,
        ambient_dim: big_d,
    })
}

/// Outcome of the noisy-regime checks at an initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyCheck {
    pub constants: NoisyConstants,
    #[serde(with = "serde_inf")]
    pub condition_rhs: f64,
    #[serde(with = "serde_inf")]
    pub condition_margin: f64,
    pub condition_satisfied: bool,
    /// `κ₂ ≤ C_κ₂`.
    pub kappa2_ok: bool,
    /// `κ₃ ≤ C_κ₃/κ_in,*`.
    pub kappa3_ok: bool,
    /// `2√(κ_in,*/C_κ₁)`, the guaranteed error after enough iterations.
    #[serde(with = "serde_inf")]
    pub error_bound: f64,
    /// `log_{C₀}(C_κ₁/κ₁)`, the largest admissible iteration count.
    #[serde(with = "serde_inf")]
    pub max_iterations: f64,
}

/// The initialization condition with the noisy constant `C` in place of the
/// noiseless one, plus the side conditions on κ₂ and κ₃.
pub fn check_noisy_condition(report: &DiagnosticsReport, constants: &NoisyConstants) -> NoisyCheck {
    let rhs = condition_rhs(
        constants.c_noisy,
        report.dssnr,
        report.gamma,
        report.kappa_in_star,
        report.a_stat,
        report.r_stat,
        report.kappa2,
    );
    let (satisfied, margin) = condition_outcome(report.kappa1, rhs);
    let kappa2_ok = report.kappa2 <= constants.c_kappa2;
    let kappa3_ok = report.kappa3 <= constants.c_kappa3 / report.kappa_in_star;
    NoisyCheck {
        constants: *constants,
        condition_rhs: rhs,
        condition_margin: margin,
        condition_satisfied: satisfied,
        kappa2_ok,
        kappa3_ok,
        error_bound: 2.0 * (report.kappa_in_star / constants.c_kappa1).sqrt(),
        max_iterations: (constants.c_kappa1 / report.kappa1).ln() / report.c0.ln(),
    }
}

/// Smallest eigenvalue and its eigenvector of `Σ_y (yᵀv)² y yᵀ`.
fn expansion_min(y: &DMatrix<f64>, v: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let proj = y.transpose() * v;
    let w: Vec<f64> = proj.iter().map(|p| p * p).collect();
    let m = weighted_scatter(y, &w);
    let es = eigh(&m)?;
    let last = es.values.len() - 1;
    Ok((es.values[last], es.vectors.column(last).clone_owned()))
}

/// Heuristic estimate of the expansion constant `C_E` of a set of projected
/// inliers (columns of the `d×n` matrix `points`).
///
/// Points are whitened by `Σ_in,*^{-1/2}` and normalized to the unit sphere,
/// so the TME fixed point becomes the identity. The quantity
/// `σ_d(Σ_y (yᵀv)² y yᵀ)·d/n` is then minimized over unit `v`: each trial
/// draws a random `v` and alternates `u ← argmin_u Σ (yᵀu)²(yᵀv)²` and
/// `v ← u`, which never increases the value. The result is the running
/// minimum over trials, clamped to `(0, 1]`. It is an upper estimate of the
/// uniform constant, not a certificate.
pub fn estimate_c_e<R: Rng + ?Sized>(
    points: &DMatrix<f64>,
    sigma_in_star: &SymMatrix,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let d = points.nrows();
    let n = points.ncols();
    if sigma_in_star.dim() != d {
        return Err(RsrError::DimensionError("inlier TME solution does not match point dimension".into()));
    }
    if n == 0 || trials == 0 {
        return Err(RsrError::InvalidConfig("need at least one point and one trial".into()));
    }
    let w = inv_sqrtm(sigma_in_star)?;
    let mut y = w.matrix() * points;
    for mut c in y.column_iter_mut() {
        let nrm = c.norm();
        if nrm == 0.0 {
            return Err(RsrError::InvalidDataset("zero projected inlier".into()));
        }
        c.unscale_mut(nrm);
    }
    const REFINE: usize = 8;
    let scale = d as f64 / n as f64;
    let mut best = f64::INFINITY;
    for _ in 0..trials {
        let mut v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let nv = v.norm();
        if nv == 0.0 {
            continue;
        }
        v.unscale_mut(nv);
        for _ in 0..REFINE {
            let (val, u) = expansion_min(&y, &v)?;
            best = best.min(val * scale);
            v = u;
        }
    }
    let est = best.min(1.0);
    if !(est > tol::C_E_DEGENERATE) {
        return Err(RsrError::DegenerateSupport { estimate: est.max(0.0) });
    }
    Ok(est)
}
