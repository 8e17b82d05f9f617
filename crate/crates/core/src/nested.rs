//! Two-level recommendation: Thompson sampling picks a feature set, and
//! that set's own LinUCB picks the care action.
//!
//! Level-1 feedback blends utility with fairness. After the chosen set's
//! running per-gender means are updated, the Bernoulli success probability
//! passed to Thompson sampling is
//!
//! ```text
//!   clip(w_u * clip(r, 0, 1) + w_f * (1 - gap(set)), 0, 1)
//! ```
//!
//! so `w_u = 1` recovers the plain "feed the reward" update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{Environment, FeatureId, Gender, Interaction, NUM_GENDERS};
use crate::error::{Error, Result};
use crate::metrics::StepRecord;
use crate::policies::{BetaPrior, ContextVector, LinUcb, ThompsonSampling};

/// Smallest number of features a candidate set may hold.
pub const MIN_SET_SIZE: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureSet {
    pub id: usize,
    pub name: String,
    pub members: Vec<FeatureId>,
}

impl FeatureSet {
    /// Members are stored in canonical feature order regardless of input order.
    pub fn new(id: usize, name: impl Into<String>, members: &[FeatureId]) -> Result<Self> {
        let mut sorted = members.to_vec();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!(
                "feature set {id} lists a feature twice"
            )));
        }
        if sorted.len() < MIN_SET_SIZE {
            return Err(Error::Config(format!(
                "feature set {id} has {} features, need at least {MIN_SET_SIZE}",
                sorted.len()
            )));
        }
        Ok(FeatureSet {
            id,
            name: name.into(),
            members: sorted,
        })
    }

    /// All features except `omitted`.
    pub fn without(id: usize, name: impl Into<String>, omitted: &[FeatureId]) -> Result<Self> {
        let members: Vec<FeatureId> = FeatureId::ALL
            .into_iter()
            .filter(|f| !omitted.contains(f))
            .collect();
        FeatureSet::new(id, name, &members)
    }

    /// The six candidate sets compared in the experiments, ids `0..6`.
    pub fn table1() -> Vec<FeatureSet> {
        use FeatureId::*;
        let omit: [&[FeatureId]; 6] = [
            &[],
            &[PainInterfere1, PainInterfere2],
            &[PainInterfere1],
            &[PainInterfere2],
            &[SleepQuality, SleepDuration],
            &[StepsGoalPct],
        ];
        omit.iter()
            .enumerate()
            .map(|(i, o)| {
                FeatureSet::without(i, format!("set{}", i + 1), o).expect("static sets are valid")
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, feature: FeatureId) -> bool {
        self.members.contains(&feature)
    }
}

/// Extract the set's features from a full interaction, in canonical order.
pub fn project_context(interaction: &Interaction, set: &FeatureSet) -> ContextVector {
    let values = set
        .members
        .iter()
        .map(|f| interaction.feature(*f))
        .collect();
    // Sampled features are clipped to [0, 1], so this cannot fail.
    ContextVector::new(values).expect("interaction features lie in [0, 1]")
}

/// Weights of utility and fairness in the set-level criterion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PerformanceCriterion {
    pub utility_weight: f64,
    pub fairness_weight: f64,
}

impl PerformanceCriterion {
    pub fn new(utility_weight: f64, fairness_weight: f64) -> Result<Self> {
        let c = PerformanceCriterion {
            utility_weight,
            fairness_weight,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let (u, f) = (self.utility_weight, self.fairness_weight);
        if !(u.is_finite() && f.is_finite() && u >= 0.0 && f >= 0.0) || (u + f - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "criterion weights must be non-negative and sum to 1, got {u} and {f}"
            )));
        }
        Ok(())
    }

    /// `w_u * utility + w_f * (1 - gap)`.
    pub fn combine(&self, utility: f64, gap: f64) -> f64 {
        self.utility_weight * utility + self.fairness_weight * (1.0 - gap)
    }
}

impl Default for PerformanceCriterion {
    fn default() -> Self {
        PerformanceCriterion {
            utility_weight: 0.5,
            fairness_weight: 0.5,
        }
    }
}

/// Running per-set, per-gender reward means.
#[derive(Clone, Debug, PartialEq)]
pub struct FairnessTracker {
    counts: Vec<[u64; NUM_GENDERS]>,
    means: Vec<[f64; NUM_GENDERS]>,
}

impl FairnessTracker {
    pub fn new(num_sets: usize) -> Self {
        FairnessTracker {
            counts: vec![[0; NUM_GENDERS]; num_sets],
            means: vec![[0.0; NUM_GENDERS]; num_sets],
        }
    }

    pub fn record(&mut self, set: usize, gender: Gender, reward: f64) {
        let g = gender.index();
        self.counts[set][g] += 1;
        let n = self.counts[set][g] as f64;
        self.means[set][g] += (reward - self.means[set][g]) / n;
    }

    pub fn count(&self, set: usize, gender: Gender) -> u64 {
        self.counts[set][gender.index()]
    }

    pub fn mean(&self, set: usize, gender: Gender) -> Option<f64> {
        (self.count(set, gender) > 0).then(|| self.means[set][gender.index()])
    }

    /// `|m_man - m_woman|`, or 0 until both genders have been seen.
    pub fn gap(&self, set: usize) -> f64 {
        match (self.mean(set, Gender::Man), self.mean(set, Gender::Woman)) {
            (Some(m), Some(w)) => (m - w).abs(),
            _ => 0.0,
        }
    }
}

/// Success probability handed to the level-1 Thompson update.
/// Call after the tracker has seen this step's reward.
pub fn policy1_feedback(
    criterion: &PerformanceCriterion,
    reward: f64,
    tracker: &FairnessTracker,
    set: usize,
) -> f64 {
    criterion
        .combine(reward.clamp(0.0, 1.0), tracker.gap(set))
        .clamp(0.0, 1.0)
}

#[derive(Clone, Debug)]
pub struct NestedState {
    sets: Vec<FeatureSet>,
    level1: ThompsonSampling,
    level2: Vec<LinUcb>,
    tracker: FairnessTracker,
    criterion: PerformanceCriterion,
}

impl NestedState {
    pub fn new(
        sets: Vec<FeatureSet>,
        priors: &[BetaPrior],
        alpha: f64,
        criterion: PerformanceCriterion,
    ) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Config(
                "nested recommendation needs at least one feature set".into(),
            ));
        }
        if priors.len() != sets.len() {
            return Err(Error::Config(format!(
                "{} priors given for {} feature sets",
                priors.len(),
                sets.len()
            )));
        }
        criterion.validate()?;
        let level2 = sets
            .iter()
            .map(|s| LinUcb::new(s.len(), alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(NestedState {
            level1: ThompsonSampling::new(priors)?,
            tracker: FairnessTracker::new(sets.len()),
            level2,
            sets,
            criterion,
        })
    }

    pub fn feature_sets(&self) -> &[FeatureSet] {
        &self.sets
    }

    pub fn level1(&self) -> &ThompsonSampling {
        &self.level1
    }

    pub fn level2(&self) -> &[LinUcb] {
        &self.level2
    }

    pub fn tracker(&self) -> &FairnessTracker {
        &self.tracker
    }

    pub fn criterion(&self) -> &PerformanceCriterion {
        &self.criterion
    }

    /// One round of the two-level policy.
    ///
    /// Reward noise is drawn from `env_rng`; both Thompson draws come from
    /// `policy_rng`. Keeping the streams apart means a one-set instance
    /// consumes `env_rng` exactly like plain LinUCB.
    pub fn step<E: Rng + ?Sized, P: Rng + ?Sized>(
        &mut self,
        t: u64,
        env: &Environment,
        interaction: &Interaction,
        env_rng: &mut E,
        policy_rng: &mut P,
    ) -> Result<StepRecord> {
        let s = self.level1.select(policy_rng);
        let x = project_context(interaction, &self.sets[s]);
        let action = self.level2[s].select(&x)?.action;
        let reward = env.realize_reward(interaction, action, env_rng);
        self.level2[s].update(action, &x, reward)?;
        self.tracker.record(s, interaction.gender, reward);
        let feedback = policy1_feedback(&self.criterion, reward, &self.tracker, s);
        self.level1.update(s, feedback, policy_rng)?;

        let set_id = self.sets[s].id;
        Ok(StepRecord {
            t,
            set_id: Some(set_id),
            action,
            reward,
            gender: interaction.gender,
            cluster: interaction.cluster,
            session: interaction.session,
            is_optimal_action: action == env.optimal_action(interaction),
            is_optimal_set: env.profile().optimal_feature_set_index.map(|o| o == set_id),
        })
    }
}
