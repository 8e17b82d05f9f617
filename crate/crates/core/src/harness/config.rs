//! Experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nested::{FeatureSet, PerformanceCriterion};
use crate::policies::BetaPrior;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One plain LinUCB cell per feature set.
    PerFeatureSet,
    /// Thompson sampling over feature sets above per-set LinUCB.
    Nested,
    /// Per-feature-set evaluation that declares the optimal set of a profile.
    Calibrate,
}

/// Default number of steps per optimal-set series block.
pub const DEFAULT_SERIES_BLOCK: u64 = 100;

/// Calibration needs at least this many runs per set.
pub const MIN_CALIBRATION_RUNS: u32 = 20;

fn default_sets() -> Vec<FeatureSet> {
    FeatureSet::table1()
}
fn default_alpha() -> f64 {
    0.3
}
fn default_horizon() -> u64 {
    50_000
}
fn default_runs() -> u32 {
    100
}
fn default_block() -> u64 {
    DEFAULT_SERIES_BLOCK
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Profile JSON. Relative paths resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_path: Option<PathBuf>,
    #[serde(default = "default_sets")]
    pub feature_sets: Vec<FeatureSet>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// One prior per feature set; a single entry is broadcast. Defaults to Beta(1, 2).
    #[serde(default)]
    pub priors: Vec<BetaPrior>,
    #[serde(default)]
    pub criterion: PerformanceCriterion,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses every core. Never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default = "default_block")]
    pub series_block: u64,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        ExperimentConfig {
            mode,
            profile_path: None,
            feature_sets: default_sets(),
            alpha: default_alpha(),
            priors: Vec::new(),
            criterion: PerformanceCriterion::default(),
            horizon: default_horizon(),
            runs: default_runs(),
            master_seed: 0,
            output_dir: None,
            parallelism: None,
            series_block: default_block(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a config file, resolving a relative profile path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&super::io::read_text(path)?)?;
        if let (Some(p), Some(dir)) = (cfg.profile_path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if self.mode == Mode::Calibrate && self.runs < MIN_CALIBRATION_RUNS {
            return Err(Error::Config(format!(
                "calibration needs at least {MIN_CALIBRATION_RUNS} runs, got {}",
                self.runs
            )));
        }
        if self.runs > 1 << 24 {
            return Err(Error::Config("runs must be below 2^24".into()));
        }
        if self.series_block == 0 {
            return Err(Error::Config("seriesBlock must be >= 1".into()));
        }
        if self.parallelism == Some(0) {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        self.criterion.validate()?;
        if self.feature_sets.is_empty() {
            return Err(Error::Config("at least one feature set is required".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        let mut ids = std::collections::BTreeSet::new();
        for s in &self.feature_sets {
            // Re-run construction checks on deserialized sets.
            let checked = FeatureSet::new(s.id, s.name.clone(), &s.members)?;
            if checked.members != s.members {
                return Err(Error::Config(format!(
                    "feature set {} members must be in canonical order",
                    s.name
                )));
            }
            let valid_name = !s.name.is_empty()
                && s.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
                && s.name != "nested";
            if !valid_name {
                return Err(Error::Config(format!(
                    "feature set name {:?} is not a valid cell name",
                    s.name
                )));
            }
            if !names.insert(&s.name) || !ids.insert(s.id) {
                return Err(Error::Config(format!("duplicate feature set {}", s.name)));
            }
            if s.id >= 1 << 23 {
                return Err(Error::Config(format!("feature set id {} too large", s.id)));
            }
        }
        if !(self.priors.is_empty()
            || self.priors.len() == 1
            || self.priors.len() == self.feature_sets.len())
        {
            return Err(Error::Config(format!(
                "{} priors given for {} feature sets",
                self.priors.len(),
                self.feature_sets.len()
            )));
        }
        for p in &self.priors {
            crate::policies::ThompsonSampling::new(&[*p])?;
        }
        Ok(())
    }

    /// Priors expanded to one per feature set.
    pub fn resolved_priors(&self) -> Vec<BetaPrior> {
        match self.priors.as_slice() {
            [] => vec![BetaPrior::default(); self.feature_sets.len()],
            [p] => vec![*p; self.feature_sets.len()],
            ps => ps.to_vec(),
        }
    }

    /// Hash of every setting that can change results. Output location and
    /// parallelism are excluded.
    pub fn result_hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = None;
        canon.parallelism = None;
        canon.profile_path = None;
        canon.priors = self.resolved_priors();
        let text = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(r#"{"mode": "nested"}"#).unwrap();
        assert_eq!(cfg.feature_sets.len(), 6);
        assert_eq!(cfg.alpha, 0.3);
        assert_eq!(cfg.horizon, 50_000);
        assert_eq!(cfg.runs, 100);
        assert_eq!(cfg.resolved_priors(), vec![BetaPrior::new(1.0, 2.0); 6]);
        assert_eq!(cfg.criterion, PerformanceCriterion::default());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"mode": "nested", "horizon": 0}"#,
            r#"{"mode": "nested", "runs": 0}"#,
            r#"{"mode": "calibrate", "runs": 5}"#,
            r#"{"mode": "nested", "criterion": {"utilityWeight": 0.7, "fairnessWeight": 0.7}}"#,
            r#"{"mode": "nested", "priors": [{"alpha": 1, "beta": 2}, {"alpha": 1, "beta": 2}]}"#,
            r#"{"mode": "nested", "unknown": 1}"#,
            r#"{"mode": "sideways"}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::from_json(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn hash_ignores_parallelism() {
        let mut a = ExperimentConfig::new(Mode::PerFeatureSet);
        let h = a.result_hash();
        a.parallelism = Some(3);
        a.output_dir = Some("/tmp/x".into());
        assert_eq!(a.result_hash(), h);
        a.master_seed = 1;
        assert_ne!(a.result_hash(), h);
    }

    #[test]
    fn custom_sets_parse() {
        let cfg = ExperimentConfig::from_json(
            r#"{"mode": "per-feature-set", "featureSets": [
                {"id": 0, "name": "sleep", "members": ["sleep_quality", "sleep_duration", "session_number"]}
            ]}"#,
        )
        .unwrap();
        assert_eq!(cfg.feature_sets[0].len(), 3);
    }
}
