//! Command-line front end: data generation, preprocessing, training,
//! threshold sweeps, paired comparisons and report rendering.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freezenet::data::{generate_synthetic, save_trialset, write_atomic, SynthConfig};
use freezenet::experiment::{
    compare_before_after, emit_comparison, emit_report, emit_sweep, load_report, prepare_data, run_with_data,
    threshold_sweep, CheckpointPolicy, DataConfig, ExperimentConfig, RunOptions, DEFAULT_THRESHOLDS,
};
use freezenet::Error;

const CHECKPOINT_FILE: &str = "checkpoint.frzckp";

#[derive(Parser, Debug)]
#[command(name = "freezenet", version, about = "Weight-Freezing classifier experiments")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed (and the synthetic data seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct Threads {
    /// Worker threads for independent runs.
    #[arg(long, env = "FREEZENET_THREADS", default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic train.frz / test.frz from the config's data section.
    Generate(Common),
    /// Load data, run the preprocessing pipeline, write the prepared splits.
    Preprocess(Common),
    /// Train one model and write metrics, summary and charts.
    Train {
        #[command(flatten)]
        common: Common,
        /// Save a checkpoint every N epochs (always at the end).
        #[arg(long, default_value_t = 0)]
        checkpoint_every: usize,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// One run per threshold t on identical data and seed.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thresholds.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[command(flatten)]
        threads: Threads,
    },
    /// Baseline against Weight-Freezing at threshold t.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, short = 't')]
        threshold: f64,
    },
    /// Re-render report files from an existing run directory.
    Report {
        /// Directory holding metrics.csv and summary.json.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Shape(_) | Error::Domain(_) | Error::Mode(_) => 1,
        Error::NonFinite { .. } | Error::Invariant(_) => 3,
        Error::Format { .. }
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::DegenerateTrial { .. }
        | Error::InsufficientLength { .. }
        | Error::Range { .. } => 2,
    }
}

fn load_config(common: &Common) -> Result<(ExperimentConfig, Option<PathBuf>), Error> {
    let (mut cfg, base) = match &common.config {
        Some(p) => (ExperimentConfig::load(p)?, p.parent().map(Path::to_path_buf)),
        None => (ExperimentConfig::default(), None),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        if let DataConfig::Synthetic(s) = &mut cfg.data {
            s.seed = seed;
        }
    }
    cfg.validate()?;
    Ok((cfg, base))
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate(common) => {
            let (cfg, _) = load_config(&common)?;
            let synth: SynthConfig = match cfg.data {
                DataConfig::Synthetic(s) => s,
                _ => return Err(Error::Config("generate needs a synthetic data section".into())),
            };
            let (train, test) = generate_synthetic(&synth)?;
            create_dir(&common.out)?;
            save_trialset(&train, &common.out.join("train.frz"))?;
            save_trialset(&test, &common.out.join("test.frz"))?;
            log::info!("wrote {} train and {} test trials to {}", train.len(), test.len(), common.out.display());
        }
        Command::Preprocess(common) => {
            let (cfg, base) = load_config(&common)?;
            let (train, test) = prepare_data(&cfg, base.as_deref())?;
            create_dir(&common.out)?;
            save_trialset(&train, &common.out.join("train.frz"))?;
            save_trialset(&test, &common.out.join("test.frz"))?;
            let meta = serde_json::json!({
                "preprocess": cfg.preprocess,
                "train_trials": train.len(),
                "test_trials": test.len(),
                "channels": train.channel_count,
                "samples": train.samples(),
                "fs": train.fs,
            });
            let mut text = serde_json::to_string_pretty(&meta).expect("json");
            text.push('\n');
            write_atomic(&common.out.join("preprocess.json"), text.as_bytes())?;
            log::info!("prepared {}x{} trials into {}", train.channel_count, train.samples(), common.out.display());
        }
        Command::Train { common, checkpoint_every, resume } => {
            let (cfg, base) = load_config(&common)?;
            let (train, test) = prepare_data(&cfg, base.as_deref())?;
            create_dir(&common.out)?;
            let mut opts = match &resume {
                Some(p) => RunOptions::resume_from(p)?,
                None => RunOptions::default(),
            };
            opts.checkpoint = Some(CheckpointPolicy { path: common.out.join(CHECKPOINT_FILE), every: checkpoint_every });
            let out = run_with_data(&cfg, &train, &test, &opts)?;
            let report = out.report.expect("full run");
            emit_report(&report, &common.out)?;
            log::info!(
                "max test accuracy {:.4} at epoch {}, median-window {}",
                report.max_test_accuracy,
                report.max_test_accuracy_epoch,
                report.median_test_accuracy_window.map_or("n/a".into(), |m| format!("{m:.4}"))
            );
        }
        Command::Sweep { common, thresholds, threads } => {
            let (cfg, base) = load_config(&common)?;
            let ts = thresholds.unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec());
            if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(Error::Config(format!("threshold {t} outside [0, 1]")));
            }
            let (train, test) = prepare_data(&cfg, base.as_deref())?;
            let table = threshold_sweep(&cfg, &train, &test, &ts, threads.threads)?;
            emit_sweep(&table, &common.out)?;
            for row in &table.rows {
                match (&row.error, row.max_test_accuracy) {
                    (Some(e), _) => log::warn!("t={}: failed: {e}", row.threshold_t),
                    (None, Some(m)) => log::info!("t={}: max test accuracy {m:.4}", row.threshold_t),
                    _ => {}
                }
            }
        }
        Command::Compare { common, threshold } => {
            let (cfg, base) = load_config(&common)?;
            let (train, test) = prepare_data(&cfg, base.as_deref())?;
            let cmp = compare_before_after(&cfg, &train, &test, threshold, 1)?;
            emit_comparison(&cmp, &common.out)?;
            log::info!(
                "max accuracy baseline {:.4} / frozen {:.4}; median difference {}",
                cmp.baseline.max_test_accuracy,
                cmp.frozen.max_test_accuracy,
                cmp.median_difference.map_or("n/a".into(), |d| format!("{d:+.4}"))
            );
        }
        Command::Report { input, out } => {
            let report = load_report(&input)?;
            emit_report(&report, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    env_logger::Builder::new().filter_level(level).format_target(false).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
