use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use rsr_core::io::{save_dataset, save_truth, write_csv};
use rsr_harness::error::{HarnessError, Result};
use rsr_harness::runners::{self, cells, write_json, write_outcome, RunOptions};
use rsr_harness::spec::{DatasetSpec, ModelSpec};
use rsr_harness::{ExperimentSpec, Format, Kind};

#[derive(Parser)]
#[command(name = "rsr", version, about = "Robust subspace recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the first dataset of a config and its ground truth.
    Gen(Common),
    /// Run the experiment kind named in the config.
    Run(Common),
    /// Run the config as a noise sweep.
    NoiseSweep(Common),
    /// Run the config as a phase diagram.
    Phase(Common),
    /// Run TME followed by STE from the TME solution.
    Compare(Common),
    /// Report condition diagnostics for one instance.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Dataset file replacing the configured model.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Ground-truth sidecar for `--dataset`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Omit the generation stamp and zero all runtimes.
    #[arg(long)]
    no_timestamp: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::load(&self.config)?;
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        Ok(spec)
    }

    fn stamp(&self) -> Option<String> {
        if self.no_timestamp {
            return None;
        }
        let t = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Some(t.to_string())
    }

    fn options(&self) -> RunOptions {
        RunOptions { threads: self.threads, timings: !self.no_timestamp }
    }
}

fn grid(common: &Common, kind: Option<Kind>) -> Result<i32> {
    let mut spec = common.spec()?;
    if let Some(k) = kind {
        spec.kind = k;
    }
    if spec.kind == Kind::Diagnose {
        return Err(HarnessError::Config("use the diagnose subcommand for diagnose configs".into()));
    }
    let outcome = runners::run(&spec, &common.options())?;
    write_outcome(&common.out, &outcome, common.format.into(), common.stamp().as_deref())?;
    let failed = outcome.rows.iter().filter(|r| r.status.starts_with("failed")).count();
    eprintln!(
        "{}: {} rows, {} failed, written to {}",
        spec.kind.name(),
        outcome.rows.len(),
        failed,
        common.out.display()
    );
    Ok(outcome.exit_code())
}

fn gen(common: &Common) -> Result<i32> {
    let spec = common.spec()?;
    spec.validate()?;
    let cell = cells(&spec)[0];
    let seed = spec.data_seed(cell.model, 0);
    let (data, truth) = runners::task_instance(&spec, &cell, seed)?;
    std::fs::create_dir_all(&common.out)?;
    save_dataset(&common.out.join("dataset.rsrd"), &data, truth.noise_epsilon)?;
    save_truth(&common.out.join("truth.json"), &truth)?;
    if matches!(common.format, OutFormat::Csv) {
        let f = std::fs::File::create(common.out.join("dataset.csv"))?;
        write_csv(std::io::BufWriter::new(f), &data.with_labels(truth.labels.clone())?)?;
    }
    eprintln!("seed {seed}: {} points in dimension {}", data.len(), data.ambient_dim());
    Ok(0)
}

fn diagnose(common: &Common, dataset: Option<&Path>, truth: Option<&Path>) -> Result<i32> {
    let mut spec = common.spec()?;
    spec.kind = Kind::Diagnose;
    if let Some(p) = dataset {
        spec.model = ModelSpec::Dataset(DatasetSpec { path: p.to_path_buf(), truth: truth.map(Path::to_path_buf) });
    } else if truth.is_some() {
        return Err(HarnessError::Config("--truth needs --dataset".into()));
    }
    let out = runners::diagnose(&spec)?;
    std::fs::create_dir_all(&common.out)?;
    let path = common.out.join("report.json");
    write_json(&path, &out, common.stamp().as_deref())?;
    eprintln!(
        "main condition {} (margin {}), report written to {}",
        if out.main_condition_satisfied { "satisfied" } else { "not satisfied" },
        rsr_core::format::fmt_g17(out.main_condition_margin),
        path.display()
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Gen(c) => gen(c),
        Command::Run(c) => grid(c, None),
        Command::NoiseSweep(c) => grid(c, Some(Kind::NoiseSweep)),
        Command::Phase(c) => grid(c, Some(Kind::PhaseDiagram)),
        Command::Compare(c) => grid(c, Some(Kind::TmeVsSte)),
        Command::Diagnose { common, dataset, truth } => diagnose(common, dataset.as_deref(), truth.as_deref()),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
