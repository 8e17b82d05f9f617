//! Offline calibration: declare a profile's optimal feature set.
//!
//! Each candidate set is evaluated with plain LinUCB for `runs` runs; the
//! run-level criterion `w_u * mean reward + w_f * (1 - gender gap)` is
//! averaged per set and the best set becomes the profile's declared optimum.

use super::aggregate::Spread;
use super::config::{ExperimentConfig, Mode, MIN_CALIBRATION_RUNS};
use super::experiment::{run_experiment, CellResult};
use crate::environment::{CalibrationRecord, EnvProfile, Environment, Gender, SetCriterionRow};
use crate::error::{Error, Result};
use crate::metrics::criterion_value;

fn criterion_row(cell: &CellResult) -> Result<SetCriterionRow> {
    let info = &cell.info;
    let values: Vec<f64> = cell
        .summaries
        .iter()
        .map(|s| criterion_value(s, &info.criterion))
        .collect::<Result<_>>()
        .map_err(|_| {
            Error::DegenerateData(format!("set '{}': some run saw only one gender", info.name))
        })?;
    let spread = Spread::of(&values).expect("at least one run");
    let gender_mean = |g: Gender| {
        cell.summaries
            .iter()
            .map(|s| s.gender(g).map_or(0.0, |x| x.mean_reward))
            .sum::<f64>()
            / cell.summaries.len() as f64
    };
    Ok(SetCriterionRow {
        set_id: info.feature_set_id.expect("per-set cell"),
        name: info.name.clone(),
        criterion_mean: spread.mean,
        criterion_std: spread.std.unwrap_or(0.0),
        ci_lo: spread.ci_lo.unwrap_or(spread.mean),
        ci_hi: spread.ci_hi.unwrap_or(spread.mean),
        mean_reward_man: gender_mean(Gender::Man),
        mean_reward_woman: gender_mean(Gender::Woman),
    })
}

/// Evaluate every feature set of `config` on `profile` and return a copy of
/// the profile with the optimal set and the criterion table recorded.
pub fn calibrate(config: &ExperimentConfig, profile: &EnvProfile) -> Result<EnvProfile> {
    let mut cfg = config.clone();
    cfg.mode = Mode::Calibrate;
    if cfg.runs < MIN_CALIBRATION_RUNS {
        return Err(Error::Config(format!(
            "calibration needs at least {MIN_CALIBRATION_RUNS} runs, got {}",
            cfg.runs
        )));
    }
    let env = Environment::new(profile.clone())?;
    let cells = run_experiment(&cfg, &env, None)?;
    let rows = cells
        .iter()
        .map(criterion_row)
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.criterion_mean > rows[best].criterion_mean {
            best = i;
        }
    }
    let top = &rows[best];
    let rivals: Vec<&str> = rows
        .iter()
        .enumerate()
        .filter(|(i, r)| *i != best && r.ci_hi >= top.ci_lo)
        .map(|(_, r)| r.name.as_str())
        .collect();
    let warning = (!rivals.is_empty()).then(|| {
        format!(
            "95% interval of {} overlaps {}; the optimal set is not clearly separated",
            top.name,
            rivals.join(", ")
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }

    let mut out = profile.clone();
    out.optimal_feature_set_index = Some(top.set_id);
    out.calibration = Some(CalibrationRecord {
        master_seed: cfg.master_seed,
        runs: cfg.runs as usize,
        horizon: cfg.horizon as usize,
        alpha: cfg.alpha,
        utility_weight: cfg.criterion.utility_weight,
        fairness_weight: cfg.criterion.fairness_weight,
        optimal_set_id: top.set_id,
        sets: rows,
        warning,
    });
    Ok(out)
}
