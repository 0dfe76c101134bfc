//! Result rows and their CSV/JSON encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use rsr_core::format::{fmt_g17, serde_inf};

use crate::error::Result;

/// One replicate of one grid cell. Fields that do not apply to the
/// experiment kind are empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub kind: String,
    pub cell: usize,
    pub replicate: usize,
    /// Seed the dataset was generated from.
    pub seed: u64,
    pub n1: usize,
    pub n0: usize,
    pub d: usize,
    pub ambient_dim: usize,
    /// Target of the dssnr grid, when swept.
    #[serde(with = "serde_inf::option")]
    pub dssnr_target: Option<f64>,
    /// Realized `(n1/d)/(n0/(D−d))`.
    #[serde(with = "serde_inf")]
    pub dssnr: f64,
    pub gamma: f64,
    pub epsilon: f64,
    #[serde(with = "serde_inf::option")]
    pub alpha: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub theta1_deg: Option<f64>,
    pub init: String,
    /// `dssnr ≤ γ`; such rows are left out of summary statistics.
    pub regime_violation: bool,
    pub status: String,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    #[serde(with = "serde_inf::option")]
    pub final_sin_theta1: Option<f64>,
    pub recovered: Option<bool>,
    #[serde(with = "serde_inf::option")]
    pub tme_sin_theta1: Option<f64>,
    /// `σ_{d+1}/σ_d` of the TME solution.
    #[serde(with = "serde_inf::option")]
    pub tme_gap: Option<f64>,
    pub tme_iterations: Option<usize>,
    #[serde(with = "serde_inf::option")]
    pub fitted_rate: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub c0: Option<f64>,
    /// `C₀^{−1/2}`.
    #[serde(with = "serde_inf::option")]
    pub rate_bound: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub condition_margin: Option<f64>,
    pub condition_satisfied: Option<bool>,
    #[serde(with = "serde_inf::option")]
    pub kappa1_growth_min: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub kappa1_growth_median: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub c_kappa1: Option<f64>,
    /// `2√(κ_in,*/C_κ₁)`.
    #[serde(with = "serde_inf::option")]
    pub noisy_error_bound: Option<f64>,
    pub runtime_seconds: f64,
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_g17).unwrap_or_default()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentRow {
    pub const HEADER: [&'static str; 34] = [
        "kind",
        "cell",
        "replicate",
        "seed",
        "n1",
        "n0",
        "d",
        "ambient_dim",
        "dssnr_target",
        "dssnr",
        "gamma",
        "epsilon",
        "alpha",
        "theta1_deg",
        "init",
        "regime_violation",
        "status",
        "converged",
        "iterations",
        "final_sin_theta1",
        "recovered",
        "tme_sin_theta1",
        "tme_gap",
        "tme_iterations",
        "fitted_rate",
        "c0",
        "rate_bound",
        "condition_margin",
        "condition_satisfied",
        "kappa1_growth_min",
        "kappa1_growth_median",
        "c_kappa1",
        "noisy_error_bound",
        "runtime_seconds",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.kind.clone(),
            self.cell.to_string(),
            self.replicate.to_string(),
            self.seed.to_string(),
            self.n1.to_string(),
            self.n0.to_string(),
            self.d.to_string(),
            self.ambient_dim.to_string(),
            opt_f(self.dssnr_target),
            fmt_g17(self.dssnr),
            fmt_g17(self.gamma),
            fmt_g17(self.epsilon),
            opt_f(self.alpha),
            opt_f(self.theta1_deg),
            self.init.clone(),
            self.regime_violation.to_string(),
            self.status.clone(),
            opt(self.converged),
            opt(self.iterations),
            opt_f(self.final_sin_theta1),
            opt(self.recovered),
            opt_f(self.tme_sin_theta1),
            opt_f(self.tme_gap),
            opt(self.tme_iterations),
            opt_f(self.fitted_rate),
            opt_f(self.c0),
            opt_f(self.rate_bound),
            opt_f(self.condition_margin),
            opt(self.condition_satisfied),
            opt_f(self.kappa1_growth_min),
            opt_f(self.kappa1_growth_median),
            opt_f(self.c_kappa1),
            opt_f(self.noisy_error_bound),
            fmt_g17(self.runtime_seconds),
        ]
    }
}

/// One iterate of a monitored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub cell: usize,
    pub replicate: usize,
    pub k: usize,
    #[serde(with = "serde_inf")]
    pub step_delta: f64,
    #[serde(with = "serde_inf::option")]
    pub sin_theta1: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub kappa1_hat: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub kappa2_hat: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub kappa3_hat: Option<f64>,
    pub degenerate_spectrum: bool,
    pub wall_seconds: f64,
}

impl TraceRow {
    pub const HEADER: [&'static str; 10] = [
        "cell",
        "replicate",
        "k",
        "step_delta",
        "sin_theta1",
        "kappa1_hat",
        "kappa2_hat",
        "kappa3_hat",
        "degenerate_spectrum",
        "wall_seconds",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.cell.to_string(),
            self.replicate.to_string(),
            self.k.to_string(),
            fmt_g17(self.step_delta),
            opt_f(self.sin_theta1),
            opt_f(self.kappa1_hat),
            opt_f(self.kappa2_hat),
            opt_f(self.kappa3_hat),
            self.degenerate_spectrum.to_string(),
            fmt_g17(self.wall_seconds),
        ]
    }
}

/// Something that can be written as a CSV table row.
pub trait Tabular: Serialize {
    fn header() -> &'static [&'static str];
    fn values(&self) -> Vec<String>;
}

impl Tabular for ExperimentRow {
    fn header() -> &'static [&'static str] {
        &Self::HEADER
    }
    fn values(&self) -> Vec<String> {
        self.record()
    }
}

impl Tabular for TraceRow {
    fn header() -> &'static [&'static str] {
        &Self::HEADER
    }
    fn values(&self) -> Vec<String> {
        self.record()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// CSV: an optional `# generated_at=…` line, the header, then rows.
/// JSON: `{"generated_at": …, "rows": […]}` with the stamp omitted when absent.
pub fn write_table<W: Write, T: Tabular>(mut w: W, rows: &[T], format: Format, stamp: Option<&str>) -> Result<()> {
    match format {
        Format::Csv => {
            if let Some(s) = stamp {
                writeln!(w, "# generated_at={s}")?;
            }
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(T::header())?;
            for r in rows {
                wr.write_record(r.values())?;
            }
            wr.flush()?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a, T> {
                #[serde(skip_serializing_if = "Option::is_none")]
                generated_at: Option<&'a str>,
                rows: &'a [T],
            }
            serde_json::to_writer_pretty(&mut w, &Doc { generated_at: stamp, rows })?;
            writeln!(w)?;
        }
    }
    Ok(())
}
