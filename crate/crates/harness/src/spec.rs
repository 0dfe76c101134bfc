//! Experiment configurations, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rsr_core::generators::{
    gen_haystack, init_from_subspace, init_from_tme, init_identity, outlier_covariance, perturb_subspace, purpose,
    AngleProfile, HaystackParams, SeedStreams,
};
use rsr_core::io::{load_dataset, load_truth};
use rsr_core::{Dataset, EstimatorConfig, GroundTruth, RsrError, SymMatrix};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Convergence,
    NoiseSweep,
    PhaseDiagram,
    TmeVsSte,
    Diagnose,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Convergence => "convergence",
            Kind::NoiseSweep => "noise_sweep",
            Kind::PhaseDiagram => "phase_diagram",
            Kind::TmeVsSte => "tme_vs_ste",
            Kind::Diagnose => "diagnose",
        }
    }
}

/// Outlier covariance `Q diag-blocks Qᵀ` relative to `L*`; see
/// [`outlier_covariance`]. Absent means the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSpec {
    pub l: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub cross: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaystackSpec {
    pub n1: usize,
    pub n0: usize,
    pub d: usize,
    pub ambient_dim: usize,
    /// Defaults to all ones.
    #[serde(default)]
    pub inlier_spectrum: Option<Vec<f64>>,
    #[serde(default)]
    pub outlier: Option<OutlierSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    /// Ground-truth sidecar; required by every kind.
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Haystack(HaystackSpec),
    Dataset(DatasetSpec),
}

/// Starting shape matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Identity,
    /// `Π_{L̂} + αI` with `L̂` at the given angles (degrees, one value or
    /// `d` values) from `L*`; `alpha` defaults to `sin²θ₁`.
    Subspace {
        #[serde(default)]
        alpha: Option<f64>,
        angles_deg: Vec<f64>,
    },
    Tme,
}

impl InitSpec {
    pub fn name(&self) -> &'static str {
        match self {
            InitSpec::Identity => "identity",
            InitSpec::Subspace { .. } => "subspace",
            InitSpec::Tme => "tme",
        }
    }
}

/// Swept values; a missing grid means the single base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    /// Sets `n1 = round(dssnr·d·n0/(D−d))` with `n0` fixed.
    #[serde(default)]
    pub dssnr: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub model: ModelSpec,
    pub estimator: EstimatorConfig,
    #[serde(default = "default_init")]
    pub init: InitSpec,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_init() -> InitSpec {
    InitSpec::Identity
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn check_grid(name: &str, g: &Option<Vec<f64>>, ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    if let Some(v) = g {
        if v.is_empty() {
            return Err(config_err(format!("grid `{name}` is empty")));
        }
        if let Some(bad) = v.iter().find(|&&x| !ok(x)) {
            return Err(config_err(format!("grid `{name}` value {bad} is not {what}")));
        }
    }
    Ok(())
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(config_err("replicates must be at least 1"));
        }
        self.estimator.validate_common().map_err(|e| config_err(e.to_string()))?;
        check_grid("dssnr", &self.grids.dssnr, |x| x > 0.0 && x.is_finite(), "positive and finite")?;
        check_grid("gamma", &self.grids.gamma, |x| x > 0.0 && x < 1.0, "in (0, 1)")?;
        check_grid("epsilon", &self.grids.epsilon, |x| (0.0..=0.5).contains(&x), "in [0, 1/2]")?;
        check_grid("alpha", &self.grids.alpha, |x| x > 0.0 && x.is_finite(), "positive and finite")?;
        for g in self.gammas() {
            EstimatorConfig { gamma: g, ..self.estimator.clone() }
                .validate(self.ambient_dim())
                .map_err(|e| config_err(e.to_string()))?;
        }
        match &self.model {
            ModelSpec::Haystack(h) => {
                if h.d != self.estimator.d {
                    return Err(config_err(format!("model d = {} but estimator d = {}", h.d, self.estimator.d)));
                }
                if self.grids.dssnr.is_some() && h.n0 == 0 {
                    return Err(config_err("a dssnr grid needs n0 > 0"));
                }
            }
            ModelSpec::Dataset(_) => {
                if self.grids.dssnr.is_some() {
                    return Err(config_err("a dssnr grid needs a haystack model"));
                }
            }
        }
        if let InitSpec::Subspace { alpha, angles_deg } = &self.init {
            if angles_deg.len() != 1 && angles_deg.len() != self.estimator.d {
                return Err(config_err("angles_deg needs one value or d values"));
            }
            if let Some(a) = alpha {
                if !(*a > 0.0) {
                    return Err(config_err("init alpha must be positive"));
                }
            }
        }
        if self.kind == Kind::NoiseSweep && self.grids.epsilon.is_none() {
            return Err(config_err("noise_sweep needs an epsilon grid"));
        }
        Ok(())
    }

    fn ambient_dim(&self) -> usize {
        match &self.model {
            ModelSpec::Haystack(h) => h.ambient_dim,
            // Checked against the file once it is loaded.
            ModelSpec::Dataset(_) => usize::MAX,
        }
    }

    /// Data-defining cells: the dssnr grid, or the one configured model.
    pub fn model_cells(&self) -> Vec<Option<f64>> {
        match &self.grids.dssnr {
            Some(v) => v.iter().map(|&x| Some(x)).collect(),
            None => vec![None],
        }
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.grids.gamma.clone().unwrap_or_else(|| vec![self.estimator.gamma])
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.grids.epsilon.clone().unwrap_or_else(|| vec![0.0])
    }

    /// `None` stands for the init's own α (or its default).
    pub fn alphas(&self) -> Vec<Option<f64>> {
        match &self.grids.alpha {
            Some(v) => v.iter().map(|&x| Some(x)).collect(),
            None => vec![None],
        }
    }

    /// Seed of the data for model cell `cell` and replicate `rep`. It does not
    /// depend on γ, ε or α, so those axes share samples.
    pub fn data_seed(&self, cell: usize, rep: usize) -> u64 {
        SeedStreams::new(self.seed).derive(purpose::CELL, ((cell as u64) << 24) | rep as u64)
    }

    /// Builds the labelled dataset for a model cell.
    pub fn instance(&self, dssnr: Option<f64>, seed: u64) -> Result<(Dataset, GroundTruth)> {
        match &self.model {
            ModelSpec::Haystack(h) => {
                let n1 = match dssnr {
                    Some(s) => (s * h.d as f64 * h.n0 as f64 / (h.ambient_dim - h.d) as f64).round() as usize,
                    None => h.n1,
                };
                let mut params = HaystackParams::isotropic(n1, h.n0, h.d, h.ambient_dim, seed);
                if let Some(spec) = &h.inlier_spectrum {
                    params.inlier_spectrum = spec.clone();
                }
                if let Some(o) = &h.outlier {
                    let basis = params.subspace()?;
                    params.outlier_covariance = outlier_covariance(&basis, &o.l, &o.p, o.cross)?;
                    params.basis = Some(basis);
                }
                Ok(gen_haystack(&params)?)
            }
            ModelSpec::Dataset(ds) => load_instance(&ds.path, ds.truth.as_deref()),
        }
    }

    /// `(Σ⁰, α, θ₁ in degrees)` for the configured init.
    pub fn initial(
        &self,
        data: &Dataset,
        truth: &GroundTruth,
        cfg: &EstimatorConfig,
        alpha_override: Option<f64>,
        seed: u64,
    ) -> Result<(SymMatrix, Option<f64>, Option<f64>)> {
        match &self.init {
            InitSpec::Identity => Ok((init_identity(data.ambient_dim()), None, None)),
            InitSpec::Tme => Ok((init_from_tme(data, cfg)?, None, None)),
            InitSpec::Subspace { alpha, angles_deg } => {
                let d = truth.basis.dim();
                let degs = if angles_deg.len() == 1 { vec![angles_deg[0]; d] } else { angles_deg.clone() };
                let profile = AngleProfile::from_degrees(&degs)?;
                let theta1 = profile.largest();
                let a = alpha_override.or(*alpha).unwrap_or_else(|| theta1.sin().powi(2));
                if !(a > 0.0) {
                    return Err(config_err("alpha defaults to sin²θ₁, which is 0 here; set alpha"));
                }
                let mut rng = SeedStreams::new(seed).stream(purpose::PERTURB, 0);
                let lhat = perturb_subspace(&truth.basis, &profile, &mut rng)?;
                Ok((init_from_subspace(&lhat, a)?, Some(a), Some(theta1.to_degrees())))
            }
        }
    }
}

/// Loads a dataset and its ground-truth sidecar.
pub fn load_instance(path: &Path, truth: Option<&Path>) -> Result<(Dataset, GroundTruth)> {
    let (data, eps) = load_dataset(path)?;
    let truth_path = truth.ok_or(HarnessError::Core(RsrError::NeedsGroundTruth))?;
    let mut truth = load_truth(truth_path)?;
    if truth.noise_epsilon.is_none() {
        truth.noise_epsilon = eps;
    }
    truth.check_against(&data)?;
    let data = data.with_labels(truth.labels.clone())?;
    Ok((data, truth))
}
