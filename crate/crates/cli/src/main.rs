//! `fairrec`: run, aggregate and calibrate fairness-aware bandit experiments.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 degenerate data.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairrec_core::harness::{self, aggregate, calibrate, ExperimentConfig, Mode};
use fairrec_core::{EnvProfile, Error, Result};

#[derive(Parser)]
#[command(
    name = "fairrec",
    version,
    about = "Fairness-aware contextual bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PerFeatureSet,
    Nested,
    Calibrate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::PerFeatureSet => Mode::PerFeatureSet,
            ModeArg::Nested => Mode::Nested,
            ModeArg::Calibrate => Mode::Calibrate,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write logs, tables, figures and a manifest.
    Run {
        /// Experiment config (JSON). Without it, defaults for --mode are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `outputDir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads. Results do not depend on it.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Environment profile (JSON); defaults to the shipped calibrated profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Rebuild tables and figures from step logs.
    Aggregate {
        /// Directory with `runs/<cell>/` folders, or the `runs` folder itself.
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Declare a profile's optimal feature set and write the calibrated profile.
    Calibrate {
        #[arg(long)]
        profile: PathBuf,
        /// Path of the calibrated profile to write.
        #[arg(long)]
        out: PathBuf,
        /// Optional config for feature sets, alpha, criterion, runs and horizon.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

fn load_config(
    path: Option<&PathBuf>,
    mode: Option<ModeArg>,
    fallback: Mode,
) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(mode.map_or(fallback, Mode::from)),
    };
    if let Some(m) = mode {
        cfg.mode = m.into();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            mode,
            seed,
            out,
            parallelism,
            profile,
            runs,
            horizon,
        } => {
            if config.is_none() && mode.is_none() {
                return Err(Error::Config("give --config or --mode".into()));
            }
            let mut cfg = load_config(config.as_ref(), mode, Mode::PerFeatureSet)?;
            cfg.master_seed = seed.unwrap_or(cfg.master_seed);
            cfg.parallelism = parallelism.or(cfg.parallelism);
            cfg.runs = runs.unwrap_or(cfg.runs);
            cfg.horizon = horizon.unwrap_or(cfg.horizon);
            if profile.is_some() {
                cfg.profile_path = profile;
            }
            let out = out.or_else(|| cfg.output_dir.clone()).ok_or_else(|| {
                Error::Config("no output directory: give --out or set outputDir".into())
            })?;
            cfg.validate()?;
            let profile = harness::load_profile(&cfg)?;
            log::info!(
                "{:?}: profile '{}', {} runs x {} steps, seed {}",
                cfg.mode,
                profile.name,
                cfg.runs,
                cfg.horizon,
                cfg.master_seed
            );
            let outcome = harness::execute(&cfg, &profile, &out)?;
            if let Some(p) = &outcome.profile {
                println!("optimal feature set: {:?}", p.optimal_feature_set_index);
            }
            println!(
                "wrote {} files to {}",
                outcome.manifest.files.len() + 1,
                out.display()
            );
        }
        Command::Aggregate { logs, out } => {
            let (report, files) = aggregate::aggregate(&logs, &out)?;
            println!(
                "aggregated {} summary rows; wrote {} files to {}",
                report.summary.len(),
                files.len(),
                out.display()
            );
        }
        Command::Calibrate {
            profile,
            out,
            config,
            seed,
            runs,
            horizon,
            parallelism,
        } => {
            let mut cfg = load_config(config.as_ref(), None, Mode::Calibrate)?;
            cfg.mode = Mode::Calibrate;
            cfg.master_seed = seed.unwrap_or(cfg.master_seed);
            cfg.runs = runs.unwrap_or(cfg.runs);
            cfg.horizon = horizon.unwrap_or(cfg.horizon);
            cfg.parallelism = parallelism.or(cfg.parallelism);
            cfg.validate()?;
            let input = EnvProfile::load(&profile)?;
            let calibrated = calibrate(&cfg, &input)?;
            calibrated.save(&out)?;
            let rec = calibrated.calibration.as_ref().expect("calibration record");
            for row in &rec.sets {
                println!(
                    "{:>8}  criterion {:.4} [{:.4}, {:.4}]",
                    row.name, row.criterion_mean, row.ci_lo, row.ci_hi
                );
            }
            println!(
                "optimal feature set: {} -> {}",
                rec.optimal_set_id,
                out.display()
            );
            if let Some(w) = &rec.warning {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
