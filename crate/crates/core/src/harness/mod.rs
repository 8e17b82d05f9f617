//! Experiment orchestration: configs, seeded runs, step logs, aggregation,
//! calibration and manifests.

pub mod aggregate;
pub mod calibrate;
pub mod config;
pub mod experiment;
pub mod io;
pub mod manifest;
pub mod runlog;
pub mod seeds;

use std::path::{Path, PathBuf};

pub use aggregate::{aggregate, aggregate_cells, Hypothesis, Metric, Report};
pub use calibrate::calibrate;
pub use config::{ExperimentConfig, Mode};
pub use experiment::{run_experiment, CellInfo, CellKind, CellResult};
pub use manifest::RunManifest;

use crate::environment::{EnvProfile, Environment};
use crate::error::Result;

/// File name of the profile written by calibration.
pub const CALIBRATED_PROFILE_FILE: &str = "profile.json";

/// The profile named by `config.profilePath`, or the shipped calibrated profile.
pub fn load_profile(config: &ExperimentConfig) -> Result<EnvProfile> {
    match &config.profile_path {
        Some(path) => EnvProfile::load(path),
        None => Ok(crate::profiles::calibrated()),
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub cells: Vec<CellResult>,
    pub report: Option<Report>,
    /// Present in calibrate mode.
    pub profile: Option<EnvProfile>,
    pub manifest: RunManifest,
}

/// Run `config` against `profile` and write every output under `out`:
/// step logs, tables, figures (or the calibrated profile) and `manifest.json`.
pub fn execute(config: &ExperimentConfig, profile: &EnvProfile, out: &Path) -> Result<Outcome> {
    config.validate()?;
    let profile_json = profile.to_json()?;
    let env = Environment::new(profile.clone())?;
    let cells_info = CellInfo::from_config(config, profile.optimal_feature_set_index);
    let manifest = RunManifest::new(config, &profile.name, &profile_json, &cells_info);
    io::create_dir_all(out)?;

    if config.mode == Mode::Calibrate {
        let calibrated = calibrate(config, profile)?;
        let path = out.join(CALIBRATED_PROFILE_FILE);
        calibrated.save(&path)?;
        let manifest = manifest.finish(out, &[path])?;
        return Ok(Outcome {
            cells: Vec::new(),
            report: None,
            profile: Some(calibrated),
            manifest,
        });
    }

    let cells = run_experiment(config, &env, Some(out))?;
    let report = aggregate_cells(&cells)?;
    let mut files: Vec<PathBuf> = Vec::new();
    for c in &cells {
        files.push(experiment::cell_dir(out, &c.info.name).join("cell.json"));
        files.extend((0..c.info.runs).map(|r| experiment::run_log_path(out, &c.info.name, r)));
    }
    files.extend(report.write(out)?);
    let manifest = manifest.finish(out, &files)?;
    Ok(Outcome {
        cells,
        report: Some(report),
        profile: None,
        manifest,
    })
}
