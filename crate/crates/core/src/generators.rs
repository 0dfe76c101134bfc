//! Seeded synthetic data: random subspaces, subspaces at prescribed
//! principal angles, the generalized haystack model, cone noise, and the
//! standard initializations.
//!
//! Randomness comes from ChaCha8 streams. For a seed `s`, the generator for
//! purpose `p` and index `i` is ChaCha8 keyed by `seed_from_u64(s)` on stream
//! `(p << 40) | i`. Each point draws only from its own stream, so data can be
//! produced in any order or in parallel with identical results.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroundTruth, Label};
use crate::error::{Result, RsrError};
use crate::estimators::{tme_solve, EstimatorConfig};
use crate::spectral::{complement_basis, SubspaceBasis, SymMatrix};

/// Stream purposes.
pub mod purpose {
    pub const SUBSPACE: u64 = 1;
    pub const INLIER: u64 = 2;
    pub const OUTLIER: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const PERTURB: u64 = 6;
    pub const ESTIMATE: u64 = 7;
    pub const CELL: u64 = 8;
}

/// Source of independent, reproducible random streams for one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        SeedStreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, purpose: u64, index: u64) -> ChaCha8Rng {
        debug_assert!(index < 1 << 40);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((purpose << 40) | index);
        rng
    }

    /// A child seed, the first word of `stream(purpose, index)`.
    pub fn derive(&self, purpose: u64, index: u64) -> u64 {
        self.stream(purpose, index).next_u64()
    }
}

fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed `d`-subspace of ℝ^D: Gaussian columns, orthonormalized.
pub fn sample_subspace<R: Rng + ?Sized>(ambient: usize, d: usize, rng: &mut R) -> Result<SubspaceBasis> {
    if d == 0 || d >= ambient {
        return Err(RsrError::DimensionError(format!("need 1 <= d < D, got d={d}, D={ambient}")));
    }
    let g = DMatrix::from_fn(ambient, d, |_, _| rng.sample(StandardNormal));
    SubspaceBasis::orthonormalize(g)
}

/// Haar-distributed `n×n` orthogonal matrix (QR of a Gaussian matrix with
/// the signs of `R`'s diagonal moved into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Principal angles `θ₁ ≥ … ≥ θ_d` in `[0, π/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AngleProfile(Vec<f64>);

impl TryFrom<Vec<f64>> for AngleProfile {
    type Error = RsrError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        AngleProfile::new(v)
    }
}

impl From<AngleProfile> for Vec<f64> {
    fn from(p: AngleProfile) -> Self {
        p.0
    }
}

impl AngleProfile {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(RsrError::InfeasibleAngles("empty profile".into()));
        }
        for (i, &a) in angles.iter().enumerate() {
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&a) {
                return Err(RsrError::InfeasibleAngles(format!("angle {a} outside [0, pi/2]")));
            }
            if i > 0 && a > angles[i - 1] {
                return Err(RsrError::InfeasibleAngles("angles must be non-increasing".into()));
            }
        }
        Ok(AngleProfile(angles))
    }

    /// `d` copies of one angle.
    pub fn uniform(d: usize, angle: f64) -> Result<Self> {
        Self::new(vec![angle; d])
    }

    /// Profile from degrees, sorted into non-increasing order.
    pub fn from_degrees(degrees: &[f64]) -> Result<Self> {
        let mut v: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        Self::new(v)
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn largest(&self) -> f64 {
        self.0[0]
    }
}

/// A subspace whose principal angles to `base` are exactly `profile`.
///
/// With `u_i` a randomly rotated basis of `base` and `w_i` random orthonormal
/// vectors of its complement, the result is spanned by
/// `v_i = cos θ_i u_i + sin θ_i w_i`. Needs `d ≤ D − d`.
pub fn perturb_subspace<R: Rng + ?Sized>(
    base: &SubspaceBasis,
    profile: &AngleProfile,
    rng: &mut R,
) -> Result<SubspaceBasis> {
    let d = base.dim();
    let codim = base.ambient_dim() - d;
    if profile.angles().len() != d {
        return Err(RsrError::InfeasibleAngles(format!(
            "profile has {} angles for a {d}-subspace",
            profile.angles().len()
        )));
    }
    if d > codim && profile.angles().iter().any(|&a| a > 0.0) {
        return Err(RsrError::InfeasibleAngles(format!(
            "need d <= D - d for arbitrary angles, got d={d}, D={}",
            base.ambient_dim()
        )));
    }
    let rot = random_orthogonal(d, rng);
    let u = base.columns() * rot;
    let mut out = u.clone();
    if codim >= d {
        let w = complement_basis(base);
        let mix = random_orthogonal(codim, rng).columns(0, d).clone_owned();
        let wd = w.columns() * mix;
        for (i, &t) in profile.angles().iter().enumerate() {
            let col = u.column(i) * t.cos() + wd.column(i) * t.sin();
            out.set_column(i, &col);
        }
    }
    SubspaceBasis::orthonormalize(out)
}

/// Parameters of the generalized haystack model: `n1` inliers from
/// `N(0, U diag(inlier_spectrum) Uᵀ / d)` and `n0` outliers from
/// `N(0, outlier_covariance / D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaystackParams {
    pub n1: usize,
    pub n0: usize,
    pub d: usize,
    pub ambient_dim: usize,
    pub inlier_spectrum: Vec<f64>,
    pub outlier_covariance: SymMatrix,
    /// `L*`; drawn from the seed when absent.
    pub basis: Option<SubspaceBasis>,
    pub seed: u64,
}

impl HaystackParams {
    /// Isotropic inliers and identity outlier covariance.
    pub fn isotropic(n1: usize, n0: usize, d: usize, ambient_dim: usize, seed: u64) -> Self {
        HaystackParams {
            n1,
            n0,
            d,
            ambient_dim,
            inlier_spectrum: vec![1.0; d],
            outlier_covariance: SymMatrix::identity(ambient_dim),
            basis: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d, big_d) = (self.d, self.ambient_dim);
        if d == 0 || d >= big_d {
            return Err(RsrError::InvalidConfig(format!("need 1 <= d < D, got d={d}, D={big_d}")));
        }
        if self.n1 + self.n0 == 0 {
            return Err(RsrError::InvalidConfig("no points requested".into()));
        }
        if self.inlier_spectrum.len() != d || self.inlier_spectrum.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(RsrError::InvalidConfig("inlier spectrum must have d positive entries".into()));
        }
        if self.outlier_covariance.dim() != big_d {
            return Err(RsrError::InvalidConfig("outlier covariance must be D x D".into()));
        }
        self.outlier_covariance.check_pd()?;
        if let Some(b) = &self.basis {
            if b.ambient_dim() != big_d || b.dim() != d {
                return Err(RsrError::InvalidConfig("basis does not match d and D".into()));
            }
        }
        Ok(())
    }

    /// `L*` as generated for these parameters.
    pub fn subspace(&self) -> Result<SubspaceBasis> {
        match &self.basis {
            Some(b) => Ok(b.clone()),
            None => {
                sample_subspace(self.ambient_dim, self.d, &mut SeedStreams::new(self.seed).stream(purpose::SUBSPACE, 0))
            }
        }
    }
}

/// Outlier covariance `Q B Qᵀ` with `Q = [U_{L*} | U_{L*⊥}]`, `B_LL =
/// diag(l)`, `B_PP = diag(p)` and `B_LP[i,i] = cross·√(l_i p_i)` for
/// `i < min(d, D−d)`. `|cross| < 1` keeps it positive definite; `cross = 0`
/// gives a block-diagonal covariance.
pub fn outlier_covariance(basis: &SubspaceBasis, l: &[f64], p: &[f64], cross: f64) -> Result<SymMatrix> {
    let d = basis.dim();
    let big_d = basis.ambient_dim();
    if l.len() != d || p.len() != big_d - d {
        return Err(RsrError::InvalidConfig("outlier spectra have the wrong lengths".into()));
    }
    if l.iter().chain(p).any(|&v| !(v > 0.0)) {
        return Err(RsrError::InvalidConfig("outlier spectra must be positive".into()));
    }
    if !(cross.abs() < 1.0) {
        return Err(RsrError::InvalidConfig(format!("cross must lie in (-1, 1), got {cross}")));
    }
    let w = complement_basis(basis);
    let mut q = DMatrix::zeros(big_d, big_d);
    q.columns_mut(0, d).copy_from(basis.columns());
    q.columns_mut(d, big_d - d).copy_from(w.columns());
    let mut b = DMatrix::zeros(big_d, big_d);
    for i in 0..d {
        b[(i, i)] = l[i];
    }
    for i in 0..big_d - d {
        b[(d + i, d + i)] = p[i];
    }
    for i in 0..d.min(big_d - d) {
        let c = cross * (l[i] * p[i]).sqrt();
        b[(i, d + i)] = c;
        b[(d + i, i)] = c;
    }
    Ok(SymMatrix::symmetrize(&q * b * q.transpose()))
}

/// Samples the generalized haystack model. Points are interleaved by a
/// seeded shuffle; inlier `i` and outlier `i` draw from their own streams.
pub fn gen_haystack(params: &HaystackParams) -> Result<(Dataset, GroundTruth)> {
    params.validate()?;
    let streams = SeedStreams::new(params.seed);
    let (d, big_d) = (params.d, params.ambient_dim);
    let basis = params.subspace()?;
    let chol = Cholesky::new(params.outlier_covariance.matrix() / big_d as f64)
        .ok_or(RsrError::NotPd { min_eigenvalue: params.outlier_covariance.eigenvalues()[big_d - 1] })?
        .l();
    let scales: Vec<f64> = params.inlier_spectrum.iter().map(|l| (l / d as f64).sqrt()).collect();

    let n = params.n1 + params.n0;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut streams.stream(purpose::SHUFFLE, 0));

    let mut pts = DMatrix::zeros(big_d, n);
    let mut labels = Vec::with_capacity(n);
    for (slot, &k) in order.iter().enumerate() {
        let x = if k < params.n1 {
            let mut rng = streams.stream(purpose::INLIER, k as u64);
            let z = DVector::from_fn(d, |j, _| scales[j] * rng.sample::<f64, _>(StandardNormal));
            labels.push(Label::Inlier);
            basis.columns() * z
        } else {
            let mut rng = streams.stream(purpose::OUTLIER, (k - params.n1) as u64);
            labels.push(Label::Outlier);
            &chol * gaussian_vector(big_d, &mut rng)
        };
        pts.set_column(slot, &x);
    }
    let data = Dataset::new(pts, Some(labels.clone()))?;
    let truth = GroundTruth::new(basis, labels, None)?;
    Ok((data, truth))
}

/// Adds to each inlier `x` a component `z ∈ L*⊥` with
/// `‖z‖ = u·ε·‖P_{L*}x‖`, `u ~ U[0,1)` and a uniform direction. Inlier at
/// dataset index `i` draws `u` and then the direction from noise stream `i`,
/// so one seed couples runs across `ε`.
pub fn apply_cone_noise(
    data: &Dataset,
    truth: &GroundTruth,
    epsilon: f64,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    truth.check_against(data)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(RsrError::InvalidConfig(format!("epsilon must lie in [0,1], got {epsilon}")));
    }
    let streams = SeedStreams::new(seed);
    let w = complement_basis(&truth.basis);
    let codim = w.dim();
    let mut pts = data.points().clone();
    for (i, l) in truth.labels.iter().enumerate() {
        if *l != Label::Inlier {
            continue;
        }
        let mut rng = streams.stream(purpose::NOISE, i as u64);
        let u: f64 = rng.random();
        let g = gaussian_vector(codim, &mut rng);
        let in_norm = (truth.basis.columns().transpose() * pts.column(i)).norm();
        let gn = g.norm();
        if gn == 0.0 || epsilon == 0.0 {
            continue;
        }
        let z = w.columns() * g * (u * epsilon * in_norm / gn);
        let col = pts.column(i) + z;
        pts.set_column(i, &col);
    }
    let out = Dataset::new(pts, data.labels().map(|l| l.to_vec()))?;
    let truth = GroundTruth::new(truth.basis.clone(), truth.labels.clone(), Some(epsilon))?;
    Ok((out, truth))
}

pub fn init_identity(ambient: usize) -> SymMatrix {
    SymMatrix::identity(ambient)
}

/// `Π_{L̂} + αI`.
pub fn init_from_subspace(lhat: &SubspaceBasis, alpha: f64) -> Result<SymMatrix> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(RsrError::InvalidConfig(format!("alpha must be positive, got {alpha}")));
    }
    Ok(lhat.projector().add(&SymMatrix::identity(lhat.ambient_dim()).scaled(alpha)))
}

/// The TME solution started from the identity.
pub fn init_from_tme(data: &Dataset, cfg: &EstimatorConfig) -> Result<SymMatrix> {
    let r = tme_solve(data, cfg, &SymMatrix::identity(data.ambient_dim()))?;
    if !r.converged {
        let last_delta = r.trace.last().map_or(f64::NAN, |x| x.step_delta);
        return Err(RsrError::NotConverged { iterations: r.iterations, last_delta });
    }
    Ok(r.sigma_final)
}
