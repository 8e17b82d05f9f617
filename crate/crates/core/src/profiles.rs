//! Shipped environment profiles and the compact spec they are built from.
//!
//! A [`ProfileSpec`] describes feature means additively:
//!
//! ```text
//!   mean(g, c, s, f) = clip(base_f + cluster_f[g][c] + slope_f * (s - 1) + woman_f * [g = woman], 0, 1)
//! ```
//!
//! with per-gender noise levels, plus a linear reward model per action.
//! [`ProfileSpec::build`] expands it into the dense tables of an
//! [`EnvProfile`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::environment::{
    session_feature, ActionId, ActionModel, EnvProfile, FeatureId, FeatureTable, Gender,
    RewardModel, NUM_CLUSTERS, NUM_SESSIONS,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FeatureSpec {
    pub base: f64,
    #[serde(default)]
    pub cluster_offsets: [f64; NUM_CLUSTERS],
    /// Cluster offsets for women when they differ from the men's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub woman_cluster_offsets: Option<[f64; NUM_CLUSTERS]>,
    /// Change in mean per session.
    #[serde(default)]
    pub session_slope: f64,
    #[serde(default)]
    pub woman_offset: f64,
    pub std_man: f64,
    pub std_woman: f64,
}

impl FeatureSpec {
    pub fn flat(base: f64, std: f64) -> Self {
        FeatureSpec {
            base,
            cluster_offsets: [0.0; NUM_CLUSTERS],
            woman_cluster_offsets: None,
            session_slope: 0.0,
            woman_offset: 0.0,
            std_man: std,
            std_woman: std,
        }
    }

    fn mean(&self, g: Gender, cluster: u8, session: u8) -> f64 {
        let (offsets, w) = match g {
            Gender::Man => (&self.cluster_offsets, 0.0),
            Gender::Woman => (
                self.woman_cluster_offsets
                    .as_ref()
                    .unwrap_or(&self.cluster_offsets),
                self.woman_offset,
            ),
        };
        (self.base
            + offsets[cluster as usize - 1]
            + self.session_slope * f64::from(session - 1)
            + w)
            .clamp(0.0, 1.0)
    }

    fn std(&self, g: Gender) -> f64 {
        match g {
            Gender::Man => self.std_man,
            Gender::Woman => self.std_woman,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ActionSpec {
    pub intercept: f64,
    #[serde(default)]
    pub weights: BTreeMap<FeatureId, f64>,
    pub noise_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProfileSpec {
    pub name: String,
    pub woman_proportion: f64,
    pub cluster_distribution: [f64; NUM_CLUSTERS],
    pub session_distribution: [f64; NUM_SESSIONS],
    /// Every feature except the session number, which is fixed by the session.
    pub features: BTreeMap<FeatureId, FeatureSpec>,
    pub actions: BTreeMap<ActionId, ActionSpec>,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<EnvProfile> {
        let mut means = FeatureTable::filled(0.0);
        let mut stds = FeatureTable::filled(0.0);
        for f in FeatureId::ALL
            .into_iter()
            .filter(|f| *f != FeatureId::SessionNumber)
        {
            let spec = self.features.get(&f).ok_or_else(|| {
                Error::Config(format!("profile spec '{}' lacks feature {f}", self.name))
            })?;
            means.for_each_mut(|g, c, s, v| v[f.index()] = spec.mean(g, c, s));
            stds.for_each_mut(|g, _, _, v| v[f.index()] = spec.std(g));
        }
        if self.features.contains_key(&FeatureId::SessionNumber) {
            return Err(Error::Config(
                "the session feature is derived from the session".into(),
            ));
        }
        means.for_each_mut(|_, _, s, v| v[FeatureId::SessionNumber.index()] = session_feature(s));

        let mut actions = Vec::new();
        for a in ActionId::ALL {
            let spec = self.actions.get(&a).ok_or_else(|| {
                Error::Config(format!("profile spec '{}' lacks action {a}", self.name))
            })?;
            let mut weights = [0.0; crate::environment::NUM_FEATURES];
            for (f, w) in &spec.weights {
                weights[f.index()] = *w;
            }
            actions.push(ActionModel {
                intercept: spec.intercept,
                weights,
                noise_std: spec.noise_std,
            });
        }
        let profile = EnvProfile {
            name: self.name.clone(),
            woman_proportion: self.woman_proportion,
            cluster_distribution: self.cluster_distribution,
            session_distribution: self.session_distribution,
            feature_means: means,
            feature_stds: stds,
            reward_model: RewardModel {
                actions: actions.try_into().expect("three actions"),
            },
            optimal_feature_set_index: None,
            calibration: None,
        };
        profile.validate()?;
        Ok(profile)
    }
}

fn flat_features(std: f64) -> BTreeMap<FeatureId, FeatureSpec> {
    FeatureId::ALL
        .into_iter()
        .filter(|f| *f != FeatureId::SessionNumber)
        .map(|f| (f, FeatureSpec::flat(0.5, std)))
        .collect()
}

/// Spec of the `neutral` profile: identical feature distributions for both
/// genders, so no reward difference can depend on gender.
pub fn neutral_spec() -> ProfileSpec {
    use FeatureId::*;
    let action = |intercept: f64, weights: &[(FeatureId, f64)]| ActionSpec {
        intercept,
        weights: weights.iter().copied().collect(),
        noise_std: 0.1,
    };
    ProfileSpec {
        name: "neutral".into(),
        woman_proportion: 0.125,
        cluster_distribution: [1.0 / 3.0; NUM_CLUSTERS],
        session_distribution: [0.1; NUM_SESSIONS],
        features: flat_features(0.15),
        actions: [
            (ActionId::IvrCall, action(0.35, &[(CbtSkillPractice, 0.2)])),
            (
                ActionId::Phone15,
                action(0.37, &[(CbtSkillPractice, 0.2), (SleepQuality, -0.1)]),
            ),
            (
                ActionId::Phone45,
                action(0.3, &[(CbtSkillPractice, 0.2), (PainInterfere1, 0.15)]),
            ),
        ]
        .into_iter()
        .collect(),
    }
}

pub fn neutral() -> EnvProfile {
    neutral_spec().build().expect("neutral spec is valid")
}

/// Spec of the `calibrated` profile.
///
/// Every feature centers on 0.5. The cluster structure of the pain
/// interference and steps features is reversed for women, with a wider
/// spread, so a feature set that omits them proxies them badly for women.
/// Sleep matters only to the 15 minute call and is more dispersed for women,
/// which makes dropping it roughly gender-neutral.
pub fn calibrated_spec() -> ProfileSpec {
    use FeatureId::*;
    let (e, ew) = (0.35, 0.35 * 1.2848);
    let feature =
        |cluster: [f64; 3], woman: Option<[f64; 3]>, std_man: f64, std_woman: f64| FeatureSpec {
            base: 0.5,
            cluster_offsets: cluster,
            woman_cluster_offsets: woman,
            session_slope: 0.0,
            woman_offset: 0.0,
            std_man,
            std_woman,
        };
    // u = (1, 0, -1) and v = (-0.5, 1, -0.5) scaled.
    let u = |s: f64| [s, 0.0, -s];
    let v = |s: f64| [-0.5 * s, s, -0.5 * s];
    let rho = 0.1638;
    let features = [
        (
            StepsGoalPct,
            feature(u(-rho), Some(u(-rho * 1.1421)), e, ew),
        ),
        (
            PainIntensityChange,
            FeatureSpec {
                woman_offset: -0.0155,
                ..feature(v(0.15), None, 0.7596, 0.7596)
            },
        ),
        (CbtSkillPractice, feature(u(0.15), None, 0.1, 0.1)),
        (SleepQuality, feature([0.0; 3], None, 0.5, 0.6936)),
        (SleepDuration, feature([0.0; 3], None, 0.5, 0.6936)),
        (
            PainInterfere1,
            feature(u(rho), Some(u(-rho * 0.9346)), e, ew),
        ),
        (
            PainInterfere2,
            feature(v(rho), Some(v(-rho * 1.4356)), e, ew),
        ),
    ];
    let action = |intercept: f64, extra: &[(FeatureId, f64)]| {
        let mut weights: BTreeMap<FeatureId, f64> =
            [(PainIntensityChange, 0.9793), (CbtSkillPractice, 0.2)].into();
        weights.extend(extra.iter().copied());
        ActionSpec {
            intercept,
            weights,
            noise_std: 0.05,
        }
    };
    ProfileSpec {
        name: "calibrated".into(),
        woman_proportion: 0.125,
        cluster_distribution: [1.0 / 3.0; NUM_CLUSTERS],
        session_distribution: [0.1; NUM_SESSIONS],
        features: features.into_iter().collect(),
        actions: [
            (ActionId::IvrCall, action(-0.4732, &[])),
            (
                ActionId::Phone15,
                action(
                    -0.248,
                    &[
                        (PainInterfere2, 0.8),
                        (SleepQuality, -0.5),
                        (SleepDuration, -0.5),
                    ],
                ),
            ),
            (
                ActionId::Phone45,
                action(-0.3366, &[(PainInterfere1, 0.8), (StepsGoalPct, -0.8)]),
            ),
        ]
        .into_iter()
        .collect(),
    }
}

const CALIBRATED_JSON: &str = include_str!("../profiles/calibrated.json");

/// The shipped calibrated profile: the tables of [`calibrated_spec`] plus the
/// calibration record that declares feature set 1 optimal.
pub fn calibrated() -> EnvProfile {
    EnvProfile::from_json(CALIBRATED_JSON).expect("shipped calibrated profile is valid")
}
