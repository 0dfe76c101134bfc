//! Grid runners. Every replicate of every cell is an independent task; tasks
//! run on a rayon pool and come back in grid order.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rsr_core::diagnostics::{
    check_main_condition, check_noisy_condition, constants, diagnostics_report, dssnr, estimate_c_e, kappa_in_star,
    noisy_constants_from, sigma_in_star, DiagnosticsReport, NoisyCheck, NoisyInputs,
};
use rsr_core::estimators::{ste_solve, tme_solve, Reference};
use rsr_core::format::serde_inf;
use rsr_core::generators::{apply_cone_noise, purpose, SeedStreams};
use rsr_core::spectral::{sin_largest_angle, SymMatrix};
use rsr_core::{tol, Dataset, EstimatorConfig, GroundTruth, Label};

use crate::error::{HarnessError, Result};
use crate::fit::{contraction_rate, growth_factors, median, power_exponent};
use crate::row::{write_table, ExperimentRow, Format, TraceRow};
use crate::spec::{ExperimentSpec, Kind};

/// Trials of the `C_E` estimate recorded with noisy rows.
const C_E_TRIALS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Record wall-clock runtimes. Off, they are written as 0 so reruns are
    /// byte-identical.
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: None, timings: true }
    }
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub model: usize,
    pub dssnr_target: Option<f64>,
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub epsilon: f64,
}

/// The grid in output order: dssnr, then γ, then α, then ε.
pub fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    for (m, s) in spec.model_cells().into_iter().enumerate() {
        for g in spec.gammas() {
            for a in spec.alphas() {
                for e in spec.epsilons() {
                    out.push(Cell { index: out.len(), model: m, dssnr_target: s, gamma: g, alpha: a, epsilon: e });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    #[serde(with = "serde_inf::option")]
    pub dssnr_target: Option<f64>,
    pub gamma: f64,
    #[serde(with = "serde_inf::option")]
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub replicates: usize,
    pub regime_violation: bool,
    pub failures: usize,
    #[serde(with = "serde_inf::option")]
    pub median_final_sin_theta1: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub median_tme_sin_theta1: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub recovery_fraction: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub median_fitted_rate: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub median_iterations: Option<f64>,
}

/// Noise-sweep statistics for one (dssnr, γ, α) slice, over the cells that
/// respect the regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSlice {
    #[serde(with = "serde_inf::option")]
    pub dssnr_target: Option<f64>,
    pub gamma: f64,
    #[serde(with = "serde_inf::option")]
    pub alpha: Option<f64>,
    pub epsilon: Vec<f64>,
    pub median_error: Vec<f64>,
    /// Median error over `√ε` for `ε > 0`.
    pub error_over_sqrt_epsilon: Vec<f64>,
    pub monotone: bool,
    /// Exponent `p` of `error ∝ ε^p` over `ε > 0`.
    #[serde(with = "serde_inf::option")]
    pub fitted_exponent: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub max_ratio: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub ratio_at_largest_epsilon: Option<f64>,
    #[serde(with = "serde_inf::option")]
    pub zero_epsilon_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: Kind,
    pub cells: Vec<CellSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise: Vec<NoiseSlice>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rows: Vec<ExperimentRow>,
    pub trace: Vec<TraceRow>,
    pub summary: Summary,
    /// True when the grid has a single cell.
    pub single_cell: bool,
}

impl Outcome {
    /// CLI status for a single-cell run: 3 for a regime violation, 4 when
    /// every replicate failed, else 0. Sweeps always report 0.
    pub fn exit_code(&self) -> i32 {
        if !self.single_cell {
            return 0;
        }
        if self.rows.iter().any(|r| r.regime_violation) {
            3
        } else if self.rows.iter().all(|r| r.status.starts_with("failed")) {
            4
        } else {
            0
        }
    }
}

struct TaskOutput {
    row: ExperimentRow,
    trace: Vec<TraceRow>,
}

/// Runs a grid experiment of any kind but `diagnose`.
pub fn run(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Outcome> {
    spec.validate()?;
    if spec.kind == Kind::Diagnose {
        return Err(HarnessError::Config("diagnose is not a grid experiment".into()));
    }
    let grid = cells(spec);
    let tasks: Vec<(Cell, usize)> = grid.iter().flat_map(|c| (0..spec.replicates).map(move |r| (*c, r))).collect();
    let go = |t: &(Cell, usize)| run_task(spec, &t.0, t.1, opts);
    let outputs: Vec<TaskOutput> = if tasks.len() == 1 {
        vec![go(&tasks[0])]
    } else {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.threads {
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(go).collect())
    };
    let mut rows = Vec::with_capacity(outputs.len());
    let mut trace = Vec::new();
    for o in outputs {
        rows.push(o.row);
        trace.extend(o.trace);
    }
    let summary = summarize(spec.kind, &grid, &rows);
    Ok(Outcome { rows, trace, summary, single_cell: grid.len() == 1 })
}

fn run_task(spec: &ExperimentSpec, cell: &Cell, rep: usize, opts: &RunOptions) -> TaskOutput {
    let start = Instant::now();
    let seed = spec.data_seed(cell.model, rep);
    let mut row = ExperimentRow {
        kind: spec.kind.name().into(),
        cell: cell.index,
        replicate: rep,
        seed,
        n1: 0,
        n0: 0,
        d: spec.estimator.d,
        ambient_dim: 0,
        dssnr_target: cell.dssnr_target,
        dssnr: f64::INFINITY,
        gamma: cell.gamma,
        epsilon: cell.epsilon,
        alpha: cell.alpha,
        theta1_deg: None,
        init: spec.init.name().into(),
        regime_violation: false,
        status: "ok".into(),
        converged: None,
        iterations: None,
        final_sin_theta1: None,
        recovered: None,
        tme_sin_theta1: None,
        tme_gap: None,
        tme_iterations: None,
        fitted_rate: None,
        c0: None,
        rate_bound: None,
        condition_margin: None,
        condition_satisfied: None,
        kappa1_growth_min: None,
        kappa1_growth_median: None,
        c_kappa1: None,
        noisy_error_bound: None,
        runtime_seconds: 0.0,
    };
    let mut trace = Vec::new();
    if let Err(e) = fill_task(spec, cell, rep, seed, &mut row, &mut trace) {
        row.status = format!("failed: {e}");
    }
    if opts.timings {
        row.runtime_seconds = start.elapsed().as_secs_f64();
    } else {
        for t in &mut trace {
            t.wall_seconds = 0.0;
        }
    }
    TaskOutput { row, trace }
}

/// The dataset of a task, with cone noise applied when `ε > 0`. A loaded
/// dataset that already records a noise level is used as is.
pub fn task_instance(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> Result<(Dataset, GroundTruth)> {
    let (data, truth) = spec.instance(cell.dssnr_target, seed)?;
    if let Some(have) = truth.noise_epsilon {
        if cell.epsilon > 0.0 && cell.epsilon != have {
            return Err(HarnessError::Config(format!(
                "dataset already carries noise level {have}, grid asks for {}",
                cell.epsilon
            )));
        }
        return Ok((data, truth));
    }
    if cell.epsilon > 0.0 {
        let noise_seed = SeedStreams::new(seed).derive(purpose::NOISE, 0);
        Ok(apply_cone_noise(&data, &truth, cell.epsilon, noise_seed)?)
    } else {
        Ok((data, truth))
    }
}

fn fill_task(
    spec: &ExperimentSpec,
    cell: &Cell,
    rep: usize,
    seed: u64,
    row: &mut ExperimentRow,
    trace: &mut Vec<TraceRow>,
) -> Result<()> {
    let (data, truth) = task_instance(spec, cell, seed)?;
    let (n1, n0) = truth.counts();
    let d = truth.basis.dim();
    let big_d = data.ambient_dim();
    row.n1 = n1;
    row.n0 = n0;
    row.ambient_dim = big_d;
    row.epsilon = truth.noise_epsilon.unwrap_or(cell.epsilon);
    row.dssnr = dssnr(n1, n0, d, big_d)?;
    row.regime_violation = !(row.dssnr > cell.gamma);
    let cfg = EstimatorConfig { gamma: cell.gamma, ..spec.estimator.clone() };
    cfg.validate(big_d)?;
    if !row.regime_violation {
        let k = constants(row.dssnr, cell.gamma)?;
        row.c0 = Some(k.c0);
        row.rate_bound = Some(k.c0.powf(-0.5));
    }
    match spec.kind {
        Kind::Convergence | Kind::PhaseDiagram | Kind::NoiseSweep => {
            let (sigma0, alpha, theta) = spec.initial(&data, &truth, &cfg, cell.alpha, seed)?;
            row.alpha = alpha;
            row.theta1_deg = theta;
            if !row.regime_violation && spec.kind != Kind::NoiseSweep {
                if let Ok(c) = check_main_condition(&sigma0, &data, &truth, cell.gamma, &cfg) {
                    row.condition_margin = Some(c.margin);
                    row.condition_satisfied = Some(c.satisfied);
                }
            }
            let sis = sigma_in_star(&data, &truth, &cfg).ok();
            let monitored = spec.kind == Kind::Convergence;
            let reference =
                Reference { basis: &truth.basis, sigma_in_star: if monitored { sis.as_ref() } else { None } };
            let r = ste_solve(&data, &cfg, &sigma0, Some(&reference))?;
            let fin = sin_largest_angle(&r.subspace, &truth.basis)?;
            row.converged = Some(r.converged);
            row.iterations = Some(r.iterations);
            row.final_sin_theta1 = Some(fin);
            row.recovered = Some(fin <= tol::RECOVERY_SIN);
            if !r.converged {
                row.status = "not_converged".into();
            }
            if monitored {
                row.fitted_rate = contraction_rate(&r.trace.sin_series());
                if sis.is_some() {
                    let g = growth_factors(&r.trace.kappa1_series());
                    row.kappa1_growth_min = g.iter().copied().reduce(f64::min);
                    row.kappa1_growth_median = median(&g);
                }
                for rec in &r.trace.records {
                    trace.push(TraceRow {
                        cell: cell.index,
                        replicate: rep,
                        k: rec.k,
                        step_delta: rec.step_delta,
                        sin_theta1: rec.sin_theta1,
                        kappa1_hat: rec.kappa_hat.map(|h| h.kappa1),
                        kappa2_hat: rec.kappa_hat.map(|h| h.kappa2),
                        kappa3_hat: rec.kappa_hat.map(|h| h.kappa3),
                        degenerate_spectrum: rec.degenerate_spectrum,
                        wall_seconds: rec.wall_seconds,
                    });
                }
            }
            if spec.kind == Kind::NoiseSweep && cell.epsilon > 0.0 && !row.regime_violation {
                if let Some(sis) = &sis {
                    if let Ok(nc) = noisy_bound(&data, &truth, sis, cell, &cfg, seed) {
                        row.c_kappa1 = Some(nc.0);
                        row.noisy_error_bound = Some(nc.1);
                    }
                }
            }
        }
        Kind::TmeVsSte => {
            let t = tme_solve(&data, &cfg, &SymMatrix::identity(big_d))?;
            let ev = t.sigma_final.eigenvalues();
            row.tme_sin_theta1 = Some(sin_largest_angle(&t.subspace, &truth.basis)?);
            row.tme_gap = Some(if ev[d - 1] > 0.0 { ev[d] / ev[d - 1] } else { f64::INFINITY });
            row.tme_iterations = Some(t.iterations);
            let s = ste_solve(&data, &cfg, &t.sigma_final, None)?;
            let fin = sin_largest_angle(&s.subspace, &truth.basis)?;
            row.converged = Some(s.converged && t.converged);
            row.iterations = Some(s.iterations);
            row.final_sin_theta1 = Some(fin);
            row.recovered = Some(fin <= tol::RECOVERY_SIN);
            if !(s.converged && t.converged) {
                row.status = "not_converged".into();
            }
        }
        Kind::Diagnose => unreachable!("rejected by run"),
    }
    Ok(())
}

/// `(C_κ₁, 2√(κ_in,*/C_κ₁))` with `C_E` estimated from the projected inliers.
fn noisy_bound(
    data: &Dataset,
    truth: &GroundTruth,
    sis: &SymMatrix,
    cell: &Cell,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    let (n1, n0) = truth.counts();
    let d = truth.basis.dim();
    let inl = data.select(&truth.labels, Label::Inlier)?;
    let proj = truth.basis.columns().transpose() * inl;
    let mut rng = SeedStreams::new(seed).stream(purpose::ESTIMATE, 0);
    let c_e = estimate_c_e(&proj, sis, C_E_TRIALS, &mut rng)?;
    let kin = kappa_in_star(data, truth, cfg)?;
    let nc = noisy_constants_from(&NoisyInputs {
        dssnr: dssnr(n1, n0, d, data.ambient_dim())?,
        gamma: cell.gamma,
        epsilon: cell.epsilon,
        c_e,
        kappa_in_star: kin,
        n1,
        n0,
        d,
        ambient_dim: data.ambient_dim(),
    })?;
    Ok((nc.c_kappa1, 2.0 * (kin / nc.c_kappa1).sqrt()))
}

fn summarize(kind: Kind, grid: &[Cell], rows: &[ExperimentRow]) -> Summary {
    let mut cells_out = Vec::with_capacity(grid.len());
    for c in grid {
        let rs: Vec<&ExperimentRow> = rows.iter().filter(|r| r.cell == c.index).collect();
        let ok: Vec<&&ExperimentRow> = rs.iter().filter(|r| r.final_sin_theta1.is_some()).collect();
        let pick = |f: &dyn Fn(&ExperimentRow) -> Option<f64>| -> Option<f64> {
            let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
            median(&v)
        };
        let recovered: Vec<f64> = ok.iter().map(|r| if r.recovered == Some(true) { 1.0 } else { 0.0 }).collect();
        cells_out.push(CellSummary {
            cell: c.index,
            dssnr_target: c.dssnr_target,
            gamma: c.gamma,
            alpha: rs.first().and_then(|r| r.alpha).or(c.alpha),
            epsilon: c.epsilon,
            replicates: rs.len(),
            regime_violation: rs.iter().any(|r| r.regime_violation),
            failures: rs.len() - ok.len(),
            median_final_sin_theta1: pick(&|r| r.final_sin_theta1),
            median_tme_sin_theta1: pick(&|r| r.tme_sin_theta1),
            recovery_fraction: if recovered.is_empty() {
                None
            } else {
                Some(recovered.iter().sum::<f64>() / recovered.len() as f64)
            },
            median_fitted_rate: pick(&|r| r.fitted_rate),
            median_iterations: pick(&|r| r.iterations.map(|i| i as f64)),
        });
    }
    let noise = if kind == Kind::NoiseSweep { noise_slices(grid, &cells_out) } else { Vec::new() };
    Summary { kind, cells: cells_out, noise }
}

fn noise_slices(grid: &[Cell], cells: &[CellSummary]) -> Vec<NoiseSlice> {
    let mut out: Vec<NoiseSlice> = Vec::new();
    let mut seen: Vec<(usize, u64, Option<u64>)> = Vec::new();
    for c in grid {
        let key = (c.model, c.gamma.to_bits(), c.alpha.map(f64::to_bits));
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let mut pts: Vec<(f64, f64)> = grid
            .iter()
            .filter(|o| (o.model, o.gamma.to_bits(), o.alpha.map(f64::to_bits)) == key)
            .filter_map(|o| {
                let s = &cells[o.index];
                if s.regime_violation {
                    return None;
                }
                s.median_final_sin_theta1.map(|m| (o.epsilon, m))
            })
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite epsilon"));
        let positive: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 > 0.0).collect();
        let ratios: Vec<f64> = positive.iter().map(|(e, m)| m / e.sqrt()).collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = positive.iter().copied().unzip();
        out.push(NoiseSlice {
            dssnr_target: c.dssnr_target,
            gamma: c.gamma,
            alpha: c.alpha,
            epsilon: pts.iter().map(|p| p.0).collect(),
            median_error: pts.iter().map(|p| p.1).collect(),
            monotone: pts.windows(2).all(|w| w[1].1 >= w[0].1),
            fitted_exponent: power_exponent(&xs, &ys),
            max_ratio: ratios.iter().copied().reduce(f64::max),
            ratio_at_largest_epsilon: ratios.last().copied(),
            zero_epsilon_error: pts.iter().find(|p| p.0 == 0.0).map(|p| p.1),
            error_over_sqrt_epsilon: ratios,
        });
    }
    out
}

/// Everything `diagnose` reports for one instance and initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOutput {
    pub seed: u64,
    pub report: DiagnosticsReport,
    pub main_condition_satisfied: bool,
    #[serde(with = "serde_inf")]
    pub main_condition_margin: f64,
    /// Present when the instance carries a positive noise level.
    pub noisy_condition: Option<NoisyCheck>,
}

/// Diagnostics of the first cell and replicate of `spec`.
pub fn diagnose(spec: &ExperimentSpec) -> Result<DiagnoseOutput> {
    spec.validate()?;
    let cell = cells(spec)[0];
    let seed = spec.data_seed(cell.model, 0);
    let (data, truth) = task_instance(spec, &cell, seed)?;
    let cfg = EstimatorConfig { gamma: cell.gamma, ..spec.estimator.clone() };
    cfg.validate(data.ambient_dim())?;
    let (sigma0, _, _) = spec.initial(&data, &truth, &cfg, cell.alpha, seed)?;
    let report = diagnostics_report(&sigma0, &data, &truth, cell.gamma, &cfg)?;
    let noisy_condition = match truth.noise_epsilon.filter(|e| *e > 0.0) {
        Some(eps) => {
            let sis = sigma_in_star(&data, &truth, &cfg)?;
            let inl = data.select(&truth.labels, Label::Inlier)?;
            let proj = truth.basis.columns().transpose() * inl;
            let mut rng = SeedStreams::new(seed).stream(purpose::ESTIMATE, 0);
            let c_e = estimate_c_e(&proj, &sis, C_E_TRIALS, &mut rng)?;
            let (n1, n0) = truth.counts();
            let nc = noisy_constants_from(&NoisyInputs {
                dssnr: report.dssnr,
                gamma: cell.gamma,
                epsilon: eps,
                c_e,
                kappa_in_star: report.kappa_in_star,
                n1,
                n0,
                d: truth.basis.dim(),
                ambient_dim: data.ambient_dim(),
            })?;
            Some(check_noisy_condition(&report, &nc))
        }
        None => None,
    };
    Ok(DiagnoseOutput {
        seed,
        main_condition_satisfied: report.condition_satisfied,
        main_condition_margin: report.condition_margin,
        report,
        noisy_condition,
    })
}

/// Writes `<kind>.<ext>`, `trace.<ext>` (when non-empty) and `summary.json`.
pub fn write_outcome(dir: &Path, outcome: &Outcome, format: Format, stamp: Option<&str>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let kind = outcome.summary.kind.name();
    let ext = format.extension();
    let f = std::fs::File::create(dir.join(format!("{kind}.{ext}")))?;
    write_table(std::io::BufWriter::new(f), &outcome.rows, format, stamp)?;
    if !outcome.trace.is_empty() {
        let f = std::fs::File::create(dir.join(format!("trace.{ext}")))?;
        write_table(std::io::BufWriter::new(f), &outcome.trace, format, stamp)?;
    }
    write_json(&dir.join("summary.json"), &outcome.summary, stamp)
}

/// Pretty JSON with an optional top-level `generated_at`.
pub fn write_json<T: Serialize>(path: &Path, value: &T, stamp: Option<&str>) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    if let (Some(s), Some(obj)) = (stamp, v.as_object_mut()) {
        obj.insert("generated_at".into(), serde_json::Value::String(s.into()));
    }
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
