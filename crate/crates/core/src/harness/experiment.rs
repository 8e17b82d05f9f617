//! Seeded multi-run experiments.
//!
//! An experiment is a list of cells (one per feature set, or a single
//! nested cell), each run `runs` times. Runs are independent and execute in
//! parallel; results are collected in (cell, run) order so every output is
//! identical for any degree of parallelism.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use super::runlog::RunLogWriter;
use super::seeds::{self, Purpose};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::metrics::{RunAccumulator, RunSummary, StepRecord};
use crate::nested::{project_context, FeatureSet, NestedState, PerformanceCriterion};
use crate::policies::{BetaPrior, LinUcb};

pub const CELL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    /// Plain LinUCB on a single feature set.
    Linucb,
    Nested,
}

/// Everything needed to reproduce, or aggregate, one cell. Persisted as `cell.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CellInfo {
    pub format_version: u32,
    pub name: String,
    pub kind: CellKind,
    /// Seed-stream cell code.
    pub code: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_set_id: Option<usize>,
    pub feature_sets: Vec<FeatureSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub priors: Vec<BetaPrior>,
    pub alpha: f64,
    pub criterion: PerformanceCriterion,
    pub horizon: u64,
    pub runs: u32,
    pub master_seed: u64,
    pub series_block: u64,
    pub optimal_feature_set_index: Option<usize>,
}

impl CellInfo {
    /// Cells implied by a config.
    pub fn from_config(config: &ExperimentConfig, optimal: Option<usize>) -> Vec<CellInfo> {
        let base = |name: String, kind, code, set_id, sets: Vec<FeatureSet>, priors| CellInfo {
            format_version: CELL_FORMAT_VERSION,
            name,
            kind,
            code,
            feature_set_id: set_id,
            feature_sets: sets,
            priors,
            alpha: config.alpha,
            criterion: config.criterion,
            horizon: config.horizon,
            runs: config.runs,
            master_seed: config.master_seed,
            series_block: config.series_block,
            optimal_feature_set_index: optimal,
        };
        match config.mode {
            Mode::PerFeatureSet | Mode::Calibrate => config
                .feature_sets
                .iter()
                .map(|s| {
                    base(
                        s.name.clone(),
                        CellKind::Linucb,
                        seeds::feature_set_cell(s.id),
                        Some(s.id),
                        vec![s.clone()],
                        Vec::new(),
                    )
                })
                .collect(),
            Mode::Nested => vec![base(
                "nested".into(),
                CellKind::Nested,
                seeds::NESTED_CELL,
                None,
                config.feature_sets.clone(),
                config.resolved_priors(),
            )],
        }
    }
}

/// Plain LinUCB on one feature set for `horizon` steps.
pub fn simulate_linucb<E: Rng + ?Sized>(
    env: &Environment,
    set: &FeatureSet,
    alpha: f64,
    horizon: u64,
    env_rng: &mut E,
    mut sink: impl FnMut(StepRecord) -> Result<()>,
) -> Result<()> {
    let mut policy = LinUcb::new(set.len(), alpha)?;
    for t in 1..=horizon {
        let interaction = env.sample_interaction(env_rng);
        let x = project_context(&interaction, set);
        let action = policy.select(&x)?.action;
        let reward = env.realize_reward(&interaction, action, env_rng);
        policy.update(action, &x, reward)?;
        sink(StepRecord {
            t,
            set_id: Some(set.id),
            action,
            reward,
            gender: interaction.gender,
            cluster: interaction.cluster,
            session: interaction.session,
            is_optimal_action: action == env.optimal_action(&interaction),
            is_optimal_set: None,
        })?;
    }
    Ok(())
}

/// Nested recommendation for `horizon` steps from a fresh state.
#[allow(clippy::too_many_arguments)]
pub fn simulate_nested<E: Rng + ?Sized, P: Rng + ?Sized>(
    env: &Environment,
    sets: &[FeatureSet],
    priors: &[BetaPrior],
    alpha: f64,
    criterion: PerformanceCriterion,
    horizon: u64,
    env_rng: &mut E,
    policy_rng: &mut P,
    mut sink: impl FnMut(StepRecord) -> Result<()>,
) -> Result<()> {
    let mut state = NestedState::new(sets.to_vec(), priors, alpha, criterion)?;
    for t in 1..=horizon {
        let interaction = env.sample_interaction(env_rng);
        sink(state.step(t, env, &interaction, env_rng, policy_rng)?)?;
    }
    Ok(())
}

/// Execute run `run` of a cell, optionally streaming its log to `log_path`.
pub fn run_cell(
    env: &Environment,
    cell: &CellInfo,
    run: u32,
    log_path: Option<&Path>,
) -> Result<RunSummary> {
    let mut env_rng = seeds::stream(cell.master_seed, cell.code, run, Purpose::Environment);
    let mut acc = RunAccumulator::new(cell.series_block)?;
    let mut writer = log_path.map(RunLogWriter::create).transpose()?;
    let sink = |r: StepRecord| {
        if let Some(w) = writer.as_mut() {
            w.append(&r)?;
        }
        acc.push(&r)
    };
    match cell.kind {
        CellKind::Linucb => simulate_linucb(
            env,
            &cell.feature_sets[0],
            cell.alpha,
            cell.horizon,
            &mut env_rng,
            sink,
        )?,
        CellKind::Nested => {
            let mut policy_rng = seeds::stream(cell.master_seed, cell.code, run, Purpose::Policy);
            simulate_nested(
                env,
                &cell.feature_sets,
                &cell.priors,
                cell.alpha,
                cell.criterion,
                cell.horizon,
                &mut env_rng,
                &mut policy_rng,
                sink,
            )?
        }
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    acc.finish()
}

/// Summaries of every run of a cell, in run order.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub info: CellInfo,
    pub summaries: Vec<RunSummary>,
}

pub fn cell_dir(root: &Path, cell: &str) -> PathBuf {
    root.join("runs").join(cell)
}

pub fn run_log_path(root: &Path, cell: &str, run: u32) -> PathBuf {
    cell_dir(root, cell).join(format!("{run}.csv"))
}

/// Run `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_parallelism<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Run every cell of `config` against `env`. With `out` set, step logs and
/// `cell.json` files are written under `out/runs/<cell>/`.
pub fn run_experiment(
    config: &ExperimentConfig,
    env: &Environment,
    out: Option<&Path>,
) -> Result<Vec<CellResult>> {
    config.validate()?;
    let optimal = env.profile().optimal_feature_set_index;
    if config.mode == Mode::Nested && optimal.is_none() {
        log::warn!(
            "profile '{}' declares no optimal feature set; set optimality is logged as unknown",
            env.profile().name
        );
    }
    let cells = CellInfo::from_config(config, optimal);
    if let Some(root) = out {
        for cell in &cells {
            let text = serde_json::to_string_pretty(cell)? + "\n";
            super::io::write_text(&cell_dir(root, &cell.name).join("cell.json"), &text)?;
        }
    }
    let jobs: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|c| (0..config.runs).map(move |r| (c, r)))
        .collect();
    let summaries: Vec<RunSummary> = with_parallelism(config.parallelism, || {
        jobs.par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                let path = out.map(|root| run_log_path(root, &cell.name, r));
                run_cell(env, cell, r, path.as_deref())
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut it = summaries.into_iter();
    Ok(cells
        .into_iter()
        .map(|info| CellResult {
            summaries: it.by_ref().take(info.runs as usize).collect(),
            info,
        })
        .collect())
}
