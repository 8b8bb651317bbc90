//! `harbench` command line: dataset ingestion and generation, experiment
//! runs, leakage audits, LDA point clouds and report rendering.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harbench::data::{emit_dataset, FormatTag};
use harbench::experiment::{audit_plans, build_plans, lda_points, run_batch, DatasetSource};
use harbench::neuralnet::TrainConfig;
use harbench::report::{emit_report, fold_series_csv, lda_points_csv, ReportFormat};
use harbench::{Combination, Dataset, Error, ExperimentConfig, FeatureKind, Method, ResultTable, SyntheticSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "harbench", version, about = "Bias-aware benchmark harness for sensor-based activity recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a dataset directory and write it back in canonical form.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "canonical")]
        format: FormatTag,
        /// Where to write the canonical copy; omit to only validate.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset in canonical form.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, env = "HARBENCH_SEED", default_value_t = 42)]
        seed: u64,
    },
    /// Run one or more methods under one combination.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        plan: PlanArgs,
        /// Repeat for several methods, or pass `all`.
        #[arg(long = "method", required = true, num_args = 1..)]
        methods: Vec<String>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-fold accuracy series as CSV.
        #[arg(long)]
        folds_out: Option<PathBuf>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Print the leakage audit of a plan as flat JSON.
    Audit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-component LDA of one fold, as plot-ready CSV.
    Lda {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 0)]
        fold: usize,
        #[arg(long, value_enum, default_value_t = Features::MeanStd)]
        features: Features,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a saved JSON result table.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Features {
    MeanStd,
    MeanCorr,
}

impl From<Features> for FeatureKind {
    fn from(f: Features) -> Self {
        match f {
            Features::MeanStd => FeatureKind::MeanStd,
            Features::MeanCorr => FeatureKind::MeanCorr,
        }
    }
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, default_value_t = 6)]
    subjects: usize,
    #[arg(long, default_value_t = 4)]
    activities: usize,
    #[arg(long, default_value_t = 4)]
    trials_per_pair: usize,
    /// Trial length in samples.
    #[arg(long, default_value_t = 3000)]
    trial_len: usize,
    #[arg(long, default_value_t = 3)]
    channels: usize,
    #[arg(long, default_value_t = 50.0)]
    rate: f64,
    #[arg(long, default_value_t = 0.9)]
    trial_noise_corr: f64,
}

impl SpecArgs {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_subjects: self.subjects,
            n_activities: self.activities,
            trials_per_pair: self.trials_per_pair,
            trial_len_steps: self.trial_len,
            n_channels: self.channels,
            sample_rate_hz: self.rate,
            trial_noise_corr: self.trial_noise_corr,
            ..SyntheticSpec::default()
        }
    }
}

/// A dataset directory, or the synthetic fixture when `--data` is absent.
#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "canonical")]
    data_format: FormatTag,
    /// Seed of the synthetic fixture.
    #[arg(long, default_value_t = 42)]
    synth_seed: u64,
}

impl DataArgs {
    fn source(&self) -> DatasetSource {
        match &self.data {
            Some(path) => DatasetSource::Path {
                path: path.clone(),
                format: self.data_format,
            },
            None => DatasetSource::Synthetic {
                spec: SyntheticSpec::default(),
                seed: self.synth_seed,
            },
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, default_value = "SNCV")]
    combination: Combination,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 5.0)]
    window_sec: f64,
    #[arg(long, env = "HARBENCH_SEED", default_value_t = 0)]
    seed: u64,
}

impl PlanArgs {
    fn config(&self, source: DatasetSource, method: Method) -> ExperimentConfig {
        ExperimentConfig {
            k: self.k,
            window_sec: self.window_sec,
            ..ExperimentConfig::new(source, method, self.combination, self.seed)
        }
    }
}

fn write_out(out: Option<&Path>, doc: &str) -> harbench::Result<()> {
    match out {
        Some(path) => fs::write(path, doc)?,
        None => io::stdout().write_all(doc.as_bytes())?,
    }
    Ok(())
}

fn load(data: &DataArgs) -> harbench::Result<(DatasetSource, Dataset)> {
    let source = data.source();
    let ds = source.load()?;
    Ok((source, ds))
}

fn parse_methods(names: &[String]) -> harbench::Result<Vec<Method>> {
    if names.iter().any(|n| n == "all") {
        return Ok(Method::ALL.to_vec());
    }
    let mut methods = names.iter().map(|n| n.parse()).collect::<harbench::Result<Vec<Method>>>()?;
    methods.dedup();
    Ok(methods)
}

fn dataset_summary(ds: &Dataset) -> String {
    let doc = serde_json::json!({
        "name": ds.name,
        "sample_rate_hz": ds.sample_rate_hz,
        "channels": ds.channels.len(),
        "trials": ds.trials.len(),
        "subjects": ds.subject_set.len(),
        "activities": ds.activity_set.len(),
        "samples": ds.total_samples(),
    });
    format!("{doc:#}\n")
}

/// Runs a command; `Ok(true)` means every requested method was infeasible.
fn execute(command: Command) -> harbench::Result<bool> {
    match command {
        Command::Ingest { input, format, out } => {
            let ds = harbench::data::ingest_dataset(&input, format)?;
            if let Some(out) = out {
                emit_dataset(&ds, &out)?;
            }
            write_out(None, &dataset_summary(&ds))?;
        }
        Command::Synth { out, spec, seed } => {
            let ds = harbench::data::generate_synthetic(&spec.spec(), seed)?;
            emit_dataset(&ds, &out)?;
            write_out(None, &dataset_summary(&ds))?;
        }
        Command::Run {
            data,
            plan,
            methods,
            format,
            out,
            folds_out,
            max_epochs,
            batch_size,
        } => {
            let methods = parse_methods(&methods)?;
            let (source, ds) = load(&data)?;
            let mut cfg = plan.config(source, methods[0]);
            cfg.learner.opt = TrainConfig {
                max_epochs: max_epochs.unwrap_or(cfg.learner.opt.max_epochs),
                batch_size: batch_size.unwrap_or(cfg.learner.opt.batch_size),
                ..cfg.learner.opt
            };
            let table = run_batch(&ds, &methods, &cfg)?;
            write_out(out.as_deref(), &emit_report(&table, format)?)?;
            if let Some(path) = folds_out {
                fs::write(path, fold_series_csv(&table)?)?;
            }
            return Ok(table.all_infeasible());
        }
        Command::Audit { data, plan, out } => {
            let (source, ds) = load(&data)?;
            let cfg = plan.config(source, Method::Kwapisz);
            cfg.validate()?;
            let report = audit_plans(&build_plans(&ds, &cfg)?).expect("at least one plan");
            write_out(out.as_deref(), &format!("{:#}\n", report.to_flat_json()))?;
        }
        Command::Lda {
            data,
            plan,
            fold,
            features,
            out,
        } => {
            let (source, ds) = load(&data)?;
            let cfg = plan.config(source, Method::Kwapisz);
            cfg.validate()?;
            let plans = build_plans(&ds, &cfg)?;
            let points = lda_points(&ds, &plans[0], fold, features.into())?;
            write_out(out.as_deref(), &lda_points_csv(&points)?)?;
        }
        Command::Report { input, format, out } => {
            let table: ResultTable = serde_json::from_str(&fs::read_to_string(&input)?)?;
            write_out(out.as_deref(), &emit_report(&table, format)?)?;
        }
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("harbench: every requested method is infeasible on this dataset");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(e) => {
            eprintln!("harbench: {e}");
            match e {
                Error::InvalidConfig(_) | Error::UnknownFormat(_) => ExitCode::from(EXIT_CONFIG),
                Error::Infeasible(_) => ExitCode::from(EXIT_INFEASIBLE),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
