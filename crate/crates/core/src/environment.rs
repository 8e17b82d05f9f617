//! Synthetic pain-care environment.
//!
//! An [`EnvProfile`] is the full generative description of patient
//! interactions: gender mix, cluster and session distributions, per-cell
//! feature means and noise, and a linear reward model per action. An
//! [`Environment`] is a validated profile ready for sampling.
//!
//! All sampling goes through an explicit random stream; the environment
//! itself is immutable and can be shared between threads.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_FEATURES: usize = 8;
pub const NUM_ACTIONS: usize = 3;
pub const NUM_GENDERS: usize = 2;
pub const NUM_CLUSTERS: usize = 3;
pub const NUM_SESSIONS: usize = 10;

/// Version of the profile JSON document.
pub const PROFILE_SCHEMA_VERSION: u32 = 1;

const NORMALIZATION_TOL: f64 = 1e-9;

pub type FeatureVector = [f64; NUM_FEATURES];

/// Patient features observed at the start of an interaction, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureId {
    /// Fraction of days this week with the step goal met.
    StepsGoalPct,
    PainIntensityChange,
    CbtSkillPractice,
    SleepQuality,
    SleepDuration,
    PainInterfere1,
    PainInterfere2,
    /// Normalized session index, `(session - 1) / 9`.
    SessionNumber,
}

impl FeatureId {
    pub const ALL: [FeatureId; NUM_FEATURES] = [
        FeatureId::StepsGoalPct,
        FeatureId::PainIntensityChange,
        FeatureId::CbtSkillPractice,
        FeatureId::SleepQuality,
        FeatureId::SleepDuration,
        FeatureId::PainInterfere1,
        FeatureId::PainInterfere2,
        FeatureId::SessionNumber,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            FeatureId::StepsGoalPct => "steps_goal_pct",
            FeatureId::PainIntensityChange => "pain_intensity_change",
            FeatureId::CbtSkillPractice => "cbt_skill_practice",
            FeatureId::SleepQuality => "sleep_quality",
            FeatureId::SleepDuration => "sleep_duration",
            FeatureId::PainInterfere1 => "pain_interfere1",
            FeatureId::PainInterfere2 => "pain_interfere2",
            FeatureId::SessionNumber => "session_number",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.key() == key)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Man,
    Woman,
}

impl Gender {
    pub const ALL: [Gender; NUM_GENDERS] = [Gender::Man, Gender::Woman];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Gender::Man => "man",
            Gender::Woman => "woman",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.key() == key)
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Pain-care recommendation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionId {
    /// Interactive voice response call with a recorded therapist message.
    IvrCall,
    /// 15-minute telephone session with a therapist.
    Phone15,
    /// 45-minute telephone session with a therapist.
    Phone45,
}

impl ActionId {
    pub const ALL: [ActionId; NUM_ACTIONS] =
        [ActionId::IvrCall, ActionId::Phone15, ActionId::Phone45];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Additive reward adjustment for therapist time.
    pub fn discount(self) -> f64 {
        match self {
            ActionId::IvrCall => 0.0,
            ActionId::Phone15 => -0.02,
            ActionId::Phone45 => -0.06,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ActionId::IvrCall => "ivr_call",
            ActionId::Phone15 => "phone15",
            ActionId::Phone45 => "phone45",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.key() == key)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Normalized value of the session-number feature for a 1-based session.
pub fn session_feature(session: u8) -> f64 {
    f64::from(session.saturating_sub(1)) / (NUM_SESSIONS - 1) as f64
}

/// One patient interaction: who, where in the program, and what they reported.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    pub gender: Gender,
    /// 1-based cluster, `1..=3`.
    pub cluster: u8,
    /// 1-based session, `1..=10`.
    pub session: u8,
    pub features: FeatureVector,
}

impl Interaction {
    pub fn feature(&self, id: FeatureId) -> f64 {
        self.features[id.index()]
    }
}

/// Linear expected-reward model of a single action.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionModel {
    pub intercept: f64,
    pub weights: FeatureVector,
    /// Standard deviation of the Gaussian reward noise.
    pub noise_std: f64,
}

impl ActionModel {
    pub fn constant(intercept: f64) -> Self {
        ActionModel {
            intercept,
            weights: [0.0; NUM_FEATURES],
            noise_std: 0.0,
        }
    }

    /// Unclipped linear score `intercept + weights . features`.
    pub fn linear_score(&self, features: &FeatureVector) -> f64 {
        self.weights
            .iter()
            .zip(features)
            .fold(self.intercept, |acc, (w, x)| acc + w * x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardModel {
    pub actions: [ActionModel; NUM_ACTIONS],
}

impl RewardModel {
    pub fn action(&self, action: ActionId) -> &ActionModel {
        &self.actions[action.index()]
    }

    pub fn action_mut(&mut self, action: ActionId) -> &mut ActionModel {
        &mut self.actions[action.index()]
    }
}

/// Dense `(gender, cluster, session) -> feature vector` table.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    cells: Vec<FeatureVector>,
}

impl FeatureTable {
    /// Every entry set to `value`; suitable for std tables when `value == 0`.
    pub fn filled(value: f64) -> Self {
        FeatureTable {
            cells: vec![[value; NUM_FEATURES]; NUM_GENDERS * NUM_CLUSTERS * NUM_SESSIONS],
        }
    }

    /// Mean table with every sampled feature at `value` and the session
    /// column set to its deterministic value.
    pub fn uniform_means(value: f64) -> Self {
        let mut table = Self::filled(value);
        let session_idx = FeatureId::SessionNumber.index();
        table.for_each_mut(|_, _, s, cell| cell[session_idx] = session_feature(s));
        table
    }

    fn offset(gender: Gender, cluster: u8, session: u8) -> usize {
        debug_assert!((1..=NUM_CLUSTERS as u8).contains(&cluster));
        debug_assert!((1..=NUM_SESSIONS as u8).contains(&session));
        (gender.index() * NUM_CLUSTERS + usize::from(cluster - 1)) * NUM_SESSIONS
            + usize::from(session - 1)
    }

    /// Cell for a 1-based cluster and session.
    pub fn get(&self, gender: Gender, cluster: u8, session: u8) -> &FeatureVector {
        &self.cells[Self::offset(gender, cluster, session)]
    }

    pub fn get_mut(&mut self, gender: Gender, cluster: u8, session: u8) -> &mut FeatureVector {
        &mut self.cells[Self::offset(gender, cluster, session)]
    }

    /// Iterate all cells as `(gender, cluster, session, values)`.
    pub fn iter(&self) -> impl Iterator<Item = (Gender, u8, u8, &FeatureVector)> + '_ {
        Gender::ALL.into_iter().flat_map(move |g| {
            (1..=NUM_CLUSTERS as u8).flat_map(move |c| {
                (1..=NUM_SESSIONS as u8).map(move |s| (g, c, s, self.get(g, c, s)))
            })
        })
    }

    /// Apply `f` to every cell.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(Gender, u8, u8, &mut FeatureVector)) {
        for g in Gender::ALL {
            for c in 1..=NUM_CLUSTERS as u8 {
                for s in 1..=NUM_SESSIONS as u8 {
                    f(g, c, s, self.get_mut(g, c, s));
                }
            }
        }
    }
}

/// Outcome of the offline calibration run that established the optimal feature set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CalibrationRecord {
    pub master_seed: u64,
    pub runs: usize,
    pub horizon: usize,
    pub alpha: f64,
    pub utility_weight: f64,
    pub fairness_weight: f64,
    pub sets: Vec<SetCriterionRow>,
    pub optimal_set_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SetCriterionRow {
    pub set_id: usize,
    pub name: String,
    pub criterion_mean: f64,
    pub criterion_std: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_reward_man: f64,
    pub mean_reward_woman: f64,
}

/// Generative specification of synthetic interactions and rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvProfile {
    pub name: String,
    pub woman_proportion: f64,
    pub cluster_distribution: [f64; NUM_CLUSTERS],
    pub session_distribution: [f64; NUM_SESSIONS],
    pub feature_means: FeatureTable,
    pub feature_stds: FeatureTable,
    pub reward_model: RewardModel,
    /// Ground-truth optimal feature set id, established by calibration.
    pub optimal_feature_set_index: Option<usize>,
    pub calibration: Option<CalibrationRecord>,
}

impl EnvProfile {
    /// Uniform clusters and sessions, all feature means at 0.5 with no noise,
    /// constant reward 0.5 for every action.
    pub fn flat(name: impl Into<String>) -> Self {
        EnvProfile {
            name: name.into(),
            woman_proportion: 0.125,
            cluster_distribution: [1.0 / NUM_CLUSTERS as f64; NUM_CLUSTERS],
            session_distribution: [1.0 / NUM_SESSIONS as f64; NUM_SESSIONS],
            feature_means: FeatureTable::uniform_means(0.5),
            feature_stds: FeatureTable::filled(0.0),
            reward_model: RewardModel {
                actions: std::array::from_fn(|_| ActionModel::constant(0.5)),
            },
            optimal_feature_set_index: None,
            calibration: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(format!("profile '{}': {msg}", self.name)));
        if !(0.0..=1.0).contains(&self.woman_proportion) {
            return cfg(format!(
                "womanProportion {} outside [0,1]",
                self.woman_proportion
            ));
        }
        check_distribution("clusterDistribution", &self.cluster_distribution).or_else(cfg)?;
        check_distribution("sessionDistribution", &self.session_distribution).or_else(cfg)?;
        let session_idx = FeatureId::SessionNumber.index();
        for (g, c, s, means) in self.feature_means.iter() {
            for f in FeatureId::ALL {
                let m = means[f.index()];
                if !(0.0..=1.0).contains(&m) {
                    return cfg(format!("mean {g}.{c}.{s}.{f} = {m} outside [0,1]"));
                }
            }
            if (means[session_idx] - session_feature(s)).abs() > NORMALIZATION_TOL {
                return cfg(format!(
                    "mean {g}.{c}.{s}.session_number must equal (session-1)/9"
                ));
            }
        }
        for (g, c, s, stds) in self.feature_stds.iter() {
            for f in FeatureId::ALL {
                let sd = stds[f.index()];
                if !(sd >= 0.0 && sd.is_finite()) {
                    return cfg(format!(
                        "std {g}.{c}.{s}.{f} = {sd} must be finite and >= 0"
                    ));
                }
            }
        }
        for a in ActionId::ALL {
            let model = self.reward_model.action(a);
            if !model.intercept.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
                return cfg(format!("reward model for {a} has non-finite coefficients"));
            }
            if !(model.noise_std >= 0.0 && model.noise_std.is_finite()) {
                return cfg(format!("noise std for {a} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

fn check_distribution(name: &str, probs: &[f64]) -> std::result::Result<(), String> {
    if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(format!("{name} has a negative or non-finite entry"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(format!("{name} sums to {total}, expected 1"));
    }
    Ok(())
}

fn cumulative<const N: usize>(probs: &[f64; N]) -> [f64; N] {
    let mut acc = 0.0;
    probs.map(|p| {
        acc += p;
        acc
    })
}

fn draw_category<const N: usize>(cdf: &[f64; N], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(N - 1)
}

/// A validated profile with precomputed sampling tables.
#[derive(Clone, Debug)]
pub struct Environment {
    profile: EnvProfile,
    cluster_cdf: [f64; NUM_CLUSTERS],
    session_cdf: [f64; NUM_SESSIONS],
}

impl Environment {
    pub fn new(profile: EnvProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Environment {
            cluster_cdf: cumulative(&profile.cluster_distribution),
            session_cdf: cumulative(&profile.session_distribution),
            profile,
        })
    }

    pub fn profile(&self) -> &EnvProfile {
        &self.profile
    }

    pub fn into_profile(self) -> EnvProfile {
        self.profile
    }

    /// Draw one interaction: gender, cluster, session, then each feature as
    /// `clip(mean + N(0, std), 0, 1)`. The session feature is set from the session.
    pub fn sample_interaction<R: Rng + ?Sized>(&self, rng: &mut R) -> Interaction {
        let p = &self.profile;
        let gender = if rng.random::<f64>() < p.woman_proportion {
            Gender::Woman
        } else {
            Gender::Man
        };
        let cluster = draw_category(&self.cluster_cdf, rng.random::<f64>()) as u8 + 1;
        let session = draw_category(&self.session_cdf, rng.random::<f64>()) as u8 + 1;
        let means = p.feature_means.get(gender, cluster, session);
        let stds = p.feature_stds.get(gender, cluster, session);
        let mut features = [0.0; NUM_FEATURES];
        for f in FeatureId::ALL {
            let i = f.index();
            features[i] = if f == FeatureId::SessionNumber {
                session_feature(session)
            } else {
                let z: f64 = rng.sample(StandardNormal);
                (means[i] + stds[i] * z).clamp(0.0, 1.0)
            };
        }
        Interaction {
            gender,
            cluster,
            session,
            features,
        }
    }

    /// Undiscounted expected reward, clipped to `[0, 1]`.
    pub fn base_reward(&self, interaction: &Interaction, action: ActionId) -> f64 {
        self.profile
            .reward_model
            .action(action)
            .linear_score(&interaction.features)
            .clamp(0.0, 1.0)
    }

    /// Expected reward including the action's discount.
    pub fn expected_reward(&self, interaction: &Interaction, action: ActionId) -> f64 {
        self.base_reward(interaction, action) + action.discount()
    }

    /// Noisy reward: `clip(base + N(0, sigma_a), 0, 1) + discount`, in `[-0.06, 1]`.
    pub fn realize_reward<R: Rng + ?Sized>(
        &self,
        interaction: &Interaction,
        action: ActionId,
        rng: &mut R,
    ) -> f64 {
        let sigma = self.profile.reward_model.action(action).noise_std;
        let z: f64 = rng.sample(StandardNormal);
        (self.base_reward(interaction, action) + sigma * z).clamp(0.0, 1.0) + action.discount()
    }

    /// Action with the highest expected (discounted) reward; ties go to the lowest index.
    pub fn optimal_action(&self, interaction: &Interaction) -> ActionId {
        let mut best = ActionId::IvrCall;
        let mut best_value = self.expected_reward(interaction, best);
        for a in &ActionId::ALL[1..] {
            let v = self.expected_reward(interaction, *a);
            if v > best_value {
                best = *a;
                best_value = v;
            }
        }
        best
    }
}

// ── JSON document ──────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ProfileDoc {
    schema_version: u32,
    name: String,
    woman_proportion: f64,
    cluster_distribution: Vec<f64>,
    session_distribution: Vec<f64>,
    feature_means: BTreeMap<String, f64>,
    feature_stds: BTreeMap<String, f64>,
    reward_model: BTreeMap<String, ActionModelDoc>,
    optimal_feature_set_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    calibration: Option<CalibrationRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ActionModelDoc {
    intercept: f64,
    noise_std: f64,
    weights: BTreeMap<String, f64>,
}

fn cell_key(g: Gender, c: u8, s: u8, f: FeatureId) -> String {
    format!("{g}.{c}.{s}.{f}")
}

fn table_to_doc(table: &FeatureTable) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (g, c, s, cell) in table.iter() {
        for f in FeatureId::ALL {
            out.insert(cell_key(g, c, s, f), cell[f.index()]);
        }
    }
    out
}

fn table_from_doc(field: &str, doc: &BTreeMap<String, f64>) -> Result<FeatureTable> {
    let expected = NUM_GENDERS * NUM_CLUSTERS * NUM_SESSIONS * NUM_FEATURES;
    if doc.len() != expected {
        return Err(Error::Config(format!(
            "{field} has {} entries, expected {expected}",
            doc.len()
        )));
    }
    let mut table = FeatureTable::filled(0.0);
    for (key, value) in doc {
        let parts: Vec<&str> = key.split('.').collect();
        let parsed = match parts.as_slice() {
            [g, c, s, f] => Gender::from_key(g)
                .zip(FeatureId::from_key(f))
                .and_then(|(g, f)| {
                    let c: u8 = c
                        .parse()
                        .ok()
                        .filter(|c| (1..=NUM_CLUSTERS as u8).contains(c))?;
                    let s: u8 = s
                        .parse()
                        .ok()
                        .filter(|s| (1..=NUM_SESSIONS as u8).contains(s))?;
                    Some((g, c, s, f))
                }),
            _ => None,
        };
        let (g, c, s, f) =
            parsed.ok_or_else(|| Error::Config(format!("{field}: malformed key '{key}'")))?;
        table.get_mut(g, c, s)[f.index()] = *value;
    }
    Ok(table)
}

fn fixed<const N: usize>(field: &str, v: &[f64]) -> Result<[f64; N]> {
    v.try_into()
        .map_err(|_| Error::Config(format!("{field} must have {N} entries, got {}", v.len())))
}

impl EnvProfile {
    pub fn to_json(&self) -> Result<String> {
        let reward_model = ActionId::ALL
            .into_iter()
            .map(|a| {
                let m = self.reward_model.action(a);
                let weights = FeatureId::ALL
                    .into_iter()
                    .map(|f| (f.key().to_string(), m.weights[f.index()]))
                    .collect();
                (
                    a.key().to_string(),
                    ActionModelDoc {
                        intercept: m.intercept,
                        noise_std: m.noise_std,
                        weights,
                    },
                )
            })
            .collect();
        let doc = ProfileDoc {
            schema_version: PROFILE_SCHEMA_VERSION,
            name: self.name.clone(),
            woman_proportion: self.woman_proportion,
            cluster_distribution: self.cluster_distribution.to_vec(),
            session_distribution: self.session_distribution.to_vec(),
            feature_means: table_to_doc(&self.feature_means),
            feature_stds: table_to_doc(&self.feature_stds),
            reward_model,
            optimal_feature_set_index: self.optimal_feature_set_index,
            calibration: self.calibration.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }

    /// Parse and validate a profile document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileDoc = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("profile document: {e}")))?;
        if doc.schema_version != PROFILE_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported profile schemaVersion {}, expected {PROFILE_SCHEMA_VERSION}",
                doc.schema_version
            )));
        }
        let mut actions = Vec::with_capacity(NUM_ACTIONS);
        for a in ActionId::ALL {
            let m = doc
                .reward_model
                .get(a.key())
                .ok_or_else(|| Error::Config(format!("rewardModel is missing action '{a}'")))?;
            let mut weights = [0.0; NUM_FEATURES];
            for (key, w) in &m.weights {
                let f = FeatureId::from_key(key).ok_or_else(|| {
                    Error::Config(format!("rewardModel.{a}: unknown feature '{key}'"))
                })?;
                weights[f.index()] = *w;
            }
            actions.push(ActionModel {
                intercept: m.intercept,
                weights,
                noise_std: m.noise_std,
            });
        }
        if doc.reward_model.len() != NUM_ACTIONS {
            return Err(Error::Config("rewardModel has unknown actions".into()));
        }
        let profile = EnvProfile {
            name: doc.name,
            woman_proportion: doc.woman_proportion,
            cluster_distribution: fixed("clusterDistribution", &doc.cluster_distribution)?,
            session_distribution: fixed("sessionDistribution", &doc.session_distribution)?,
            feature_means: table_from_doc("featureMeans", &doc.feature_means)?,
            feature_stds: table_from_doc("featureStds", &doc.feature_stds)?,
            reward_model: RewardModel {
                actions: actions.try_into().expect("three actions"),
            },
            optimal_feature_set_index: doc.optimal_feature_set_index,
            calibration: doc.calibration,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::harness::io::write_text(path, &self.to_json()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn interaction_with(features: FeatureVector) -> Interaction {
        Interaction {
            gender: Gender::Man,
            cluster: 1,
            session: 1,
            features,
        }
    }

    #[test]
    fn discounts_match_action_costs() {
        assert_eq!(ActionId::IvrCall.discount(), 0.0);
        assert_eq!(ActionId::Phone15.discount(), -0.02);
        assert_eq!(ActionId::Phone45.discount(), -0.06);
    }

    #[test]
    fn enums_round_trip_keys() {
        for f in FeatureId::ALL {
            assert_eq!(FeatureId::from_key(f.key()), Some(f));
        }
        for (i, f) in FeatureId::ALL.iter().enumerate() {
            assert_eq!(f.index(), i);
        }
        for a in ActionId::ALL {
            assert_eq!(ActionId::from_key(a.key()), Some(a));
            assert_eq!(ActionId::from_index(a.index()), Some(a));
        }
        assert_eq!(Gender::from_key("woman"), Some(Gender::Woman));
        assert_eq!(Gender::from_key("other"), None);
    }

    #[test]
    fn unnormalized_distribution_is_a_config_error() {
        let mut p = EnvProfile::flat("bad");
        p.cluster_distribution = [0.5, 0.3, 0.3];
        assert!(matches!(Environment::new(p), Err(Error::Config(_))));

        let mut p = EnvProfile::flat("bad");
        p.woman_proportion = 1.5;
        assert!(matches!(Environment::new(p), Err(Error::Config(_))));
    }

    #[test]
    fn zero_noise_features_equal_means() {
        let env = Environment::new(EnvProfile::flat("flat")).unwrap();
        let mut r = rng(1);
        for _ in 0..100 {
            let it = env.sample_interaction(&mut r);
            let means = env
                .profile()
                .feature_means
                .get(it.gender, it.cluster, it.session);
            assert_eq!(&it.features, means);
            assert_eq!(
                it.feature(FeatureId::SessionNumber),
                session_feature(it.session)
            );
        }
    }

    #[test]
    fn woman_fraction_matches_profile() {
        let env = Environment::new(EnvProfile::flat("flat")).unwrap();
        let mut r = rng(7);
        let n = 1_000_000;
        let women = (0..n)
            .filter(|_| env.sample_interaction(&mut r).gender == Gender::Woman)
            .count();
        let frac = women as f64 / n as f64;
        assert!((frac - 0.125).abs() < 0.002, "woman fraction {frac}");
    }

    #[test]
    fn clipped_gaussian_piles_mass_at_one() {
        let mut p = EnvProfile::flat("clip");
        let i = FeatureId::PainInterfere1.index();
        p.feature_means.for_each_mut(|_, _, _, cell| cell[i] = 0.98);
        p.feature_stds.for_each_mut(|_, _, _, cell| cell[i] = 0.5);
        let env = Environment::new(p).unwrap();
        let mut r = rng(3);
        let n = 100_000;
        let mut at_one = 0usize;
        for _ in 0..n {
            let v = env.sample_interaction(&mut r).features[i];
            assert!((0.0..=1.0).contains(&v));
            if v == 1.0 {
                at_one += 1;
            }
        }
        // P(mean + sd*Z >= 1) = P(Z >= 0.04) = 1 - Phi(0.04) ~= 0.48405
        let p_one = 1.0 - standard_normal_cdf(0.04);
        let frac = at_one as f64 / n as f64;
        let se = (p_one * (1.0 - p_one) / n as f64).sqrt();
        assert!(at_one > 0);
        assert!((frac - p_one).abs() < 4.0 * se, "{frac} vs {p_one}");
    }

    // Abramowitz-Stegun 7.1.26 erf; accurate to ~1e-7, plenty for a 4-sigma check.
    fn standard_normal_cdf(x: f64) -> f64 {
        let z = x / std::f64::consts::SQRT_2;
        let t = 1.0 / (1.0 + 0.3275911 * z.abs());
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        let erf = 1.0 - poly * (-z * z).exp();
        0.5 * (1.0 + erf.copysign(z))
    }

    #[test]
    fn constant_model_rewards() {
        let env = Environment::new(EnvProfile::flat("flat")).unwrap();
        let it = interaction_with([0.5; NUM_FEATURES]);
        assert_eq!(env.expected_reward(&it, ActionId::IvrCall), 0.5);
        assert!((env.expected_reward(&it, ActionId::Phone45) - 0.44).abs() < 1e-15);
        assert_eq!(env.optimal_action(&it), ActionId::IvrCall);
        let mut r = rng(5);
        for a in ActionId::ALL {
            assert_eq!(
                env.realize_reward(&it, a, &mut r),
                env.expected_reward(&it, a)
            );
        }
    }

    #[test]
    fn large_base_advantage_beats_discount() {
        let mut p = EnvProfile::flat("phone45");
        p.reward_model.action_mut(ActionId::Phone45).intercept = 0.57;
        let env = Environment::new(p).unwrap();
        let it = interaction_with([0.5; NUM_FEATURES]);
        assert_eq!(env.optimal_action(&it), ActionId::Phone45);
    }

    #[test]
    fn noisy_reward_mean_matches_clipped_gaussian() {
        let mut p = EnvProfile::flat("noisy");
        for a in ActionId::ALL {
            p.reward_model.action_mut(a).noise_std = 0.1;
        }
        let env = Environment::new(p).unwrap();
        let it = interaction_with([0.5; NUM_FEATURES]);
        let mut r = rng(11);
        let n = 100_000;
        let sum: f64 = (0..n)
            .map(|_| env.realize_reward(&it, ActionId::Phone15, &mut r))
            .sum();
        let mean = sum / n as f64;
        // base 0.5 sits 5 sigma from both clip boundaries, so the clip bias is negligible
        let se = 0.1 / (n as f64).sqrt();
        assert!((mean - env.expected_reward(&it, ActionId::Phone15)).abs() < 3.0 * se);
    }

    #[test]
    fn realized_rewards_stay_in_range() {
        let mut p = EnvProfile::flat("wide");
        for a in ActionId::ALL {
            p.reward_model.action_mut(a).noise_std = 2.0;
        }
        let env = Environment::new(p).unwrap();
        let it = interaction_with([0.5; NUM_FEATURES]);
        let mut r = rng(2);
        for _ in 0..10_000 {
            for a in ActionId::ALL {
                let v = env.realize_reward(&it, a, &mut r);
                assert!((-0.06..=1.0).contains(&v));
                assert!((0.0..=1.0).contains(&(v - a.discount())));
            }
        }
    }

    #[test]
    fn profile_json_round_trips() {
        let mut p = EnvProfile::flat("round");
        p.reward_model.action_mut(ActionId::Phone15).weights[2] = 0.125;
        p.optimal_feature_set_index = Some(3);
        let text = p.to_json().unwrap();
        let back = EnvProfile::from_json(&text).unwrap();
        assert_eq!(back, p);
        assert!(text.contains("\"woman.3.10.session_number\""));
    }

    #[test]
    fn profile_json_rejects_bad_schema_version() {
        let text = EnvProfile::flat("v").to_json().unwrap();
        let bumped = text.replace("\"schemaVersion\": 1", "\"schemaVersion\": 9");
        assert!(matches!(
            EnvProfile::from_json(&bumped),
            Err(Error::Config(_))
        ));
    }
}
