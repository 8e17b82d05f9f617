#![allow(clippy::needless_range_loop)]

use fairrec_core::environment::{ActionModel, FeatureTable, NUM_FEATURES};
use fairrec_core::harness::seeds::{self, Purpose};
use fairrec_core::{profiles, ActionId, EnvProfile, Environment, FeatureId, Gender};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn woman_fraction_of_a_million_draws() {
    let env = Environment::new(EnvProfile::flat("flat")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 1_000_000;
    let women = (0..n)
        .filter(|_| env.sample_interaction(&mut rng).gender == Gender::Woman)
        .count();
    assert!((women as f64 / n as f64 - 0.125).abs() < 0.002);
}

#[test]
fn clipped_feature_mass_at_one_matches_cdf() {
    let mut profile = EnvProfile::flat("clip");
    profile.feature_means = FeatureTable::uniform_means(0.98);
    profile.feature_stds = FeatureTable::filled(0.5);
    let env = Environment::new(profile).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 100_000;
    let i = FeatureId::PainInterfere1.index();
    let mut at_one = 0;
    for _ in 0..n {
        let v = env.sample_interaction(&mut rng).features[i];
        assert!((0.0..=1.0).contains(&v));
        at_one += usize::from(v == 1.0);
    }
    // P(0.98 + 0.5 Z >= 1) = 1 - Phi(0.04).
    let p = 1.0 - Normal::new(0.0, 1.0).unwrap().cdf(0.04);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let observed = at_one as f64 / n as f64;
    assert!(observed > 0.0);
    assert!((observed - p).abs() < 4.0 * se, "{observed} vs {p}");
}

#[test]
fn constant_models_and_discounts() {
    let env = Environment::new(EnvProfile::flat("flat")).unwrap();
    let it = env.sample_interaction(&mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(env.expected_reward(&it, ActionId::IvrCall), 0.5);
    assert!((env.expected_reward(&it, ActionId::Phone45) - 0.44).abs() < 1e-15);
    assert_eq!(env.optimal_action(&it), ActionId::IvrCall);

    let mut profile = EnvProfile::flat("p45");
    *profile.reward_model.action_mut(ActionId::Phone45) = ActionModel::constant(0.57);
    let env = Environment::new(profile).unwrap();
    assert_eq!(env.optimal_action(&it), ActionId::Phone45);
}

#[test]
fn noiseless_rewards_equal_expectation() {
    let mut profile = profiles::calibrated();
    for a in ActionId::ALL {
        profile.reward_model.action_mut(a).noise_std = 0.0;
    }
    let env = Environment::new(profile).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let it = env.sample_interaction(&mut rng);
        for a in ActionId::ALL {
            assert_eq!(
                env.realize_reward(&it, a, &mut rng),
                env.expected_reward(&it, a)
            );
        }
    }
}

#[test]
fn noisy_reward_mean_matches_clipped_gaussian() {
    let mut profile = EnvProfile::flat("noisy");
    profile.reward_model.action_mut(ActionId::Phone15).noise_std = 0.1;
    let env = Environment::new(profile).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let it = env.sample_interaction(&mut rng);
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| env.realize_reward(&it, ActionId::Phone15, &mut rng))
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let want = env.expected_reward(&it, ActionId::Phone15);
    assert!(
        (mean - want).abs() < 3.0 * (var / n as f64).sqrt(),
        "{mean} vs {want}"
    );
}

/// Brute-force evaluation of the expected reward straight from the profile tables.
fn independent_expected(profile: &EnvProfile, features: &[f64; NUM_FEATURES], a: ActionId) -> f64 {
    let m = profile.reward_model.action(a);
    let mut s = m.intercept;
    for k in 0..NUM_FEATURES {
        s += m.weights[k] * features[k];
    }
    let discount = match a {
        ActionId::IvrCall => 0.0,
        ActionId::Phone15 => -0.02,
        ActionId::Phone45 => -0.06,
    };
    s.clamp(0.0, 1.0) + discount
}

#[test]
fn optimal_action_agrees_with_brute_force() {
    let profile = profiles::calibrated();
    let env = Environment::new(profile.clone()).unwrap();
    let mut rng = seeds::stream(1, 99, 0, Purpose::Environment);
    for _ in 0..10_000 {
        let it = env.sample_interaction(&mut rng);
        let values = ActionId::ALL.map(|a| independent_expected(&profile, &it.features, a));
        let mut best = 0;
        for k in 1..3 {
            if values[k] > values[best] {
                best = k;
            }
        }
        assert_eq!(env.optimal_action(&it), ActionId::ALL[best]);
    }
}

#[test]
fn uniform_action_base_reward_of_calibrated_profile() {
    let env = Environment::new(profiles::calibrated()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut sum = [0.0; 2];
    let mut n = [0.0; 2];
    for _ in 0..100_000 {
        let it = env.sample_interaction(&mut rng);
        let g = it.gender.index();
        sum[g] += ActionId::ALL
            .iter()
            .map(|a| env.base_reward(&it, *a))
            .sum::<f64>()
            / 3.0;
        n[g] += 1.0;
    }
    let men = sum[Gender::Man.index()] / n[Gender::Man.index()];
    let women = sum[Gender::Woman.index()] / n[Gender::Woman.index()];
    println!("uniform-action base reward: men {men:.4}, women {women:.4}");
    assert!((men - 0.446).abs() <= 0.02, "men {men:.4}");
    assert!((women - 0.457).abs() <= 0.02, "women {women:.4}");
}

#[test]
fn shipped_profiles_validate() {
    for p in [profiles::neutral(), profiles::calibrated()] {
        p.validate().unwrap();
        assert_eq!(EnvProfile::from_json(&p.to_json().unwrap()).unwrap(), p);
    }
    assert_eq!(profiles::calibrated().optimal_feature_set_index, Some(0));
}

#[test]
fn shipped_files_match_their_specs() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("profiles");
    let neutral = EnvProfile::load(&dir.join("neutral.json")).unwrap();
    assert_eq!(neutral, profiles::neutral());

    let shipped = EnvProfile::load(&dir.join("calibrated.json")).unwrap();
    assert_eq!(shipped, profiles::calibrated());
    let mut built = profiles::calibrated_spec().build().unwrap();
    built.optimal_feature_set_index = shipped.optimal_feature_set_index;
    built.calibration = shipped.calibration.clone();
    assert_eq!(built, shipped);
}

#[test]
fn neutral_profile_treats_genders_alike() {
    let p = profiles::neutral();
    for (g, c, s, means) in p.feature_means.iter() {
        if g == Gender::Woman {
            assert_eq!(means, p.feature_means.get(Gender::Man, c, s));
            assert_eq!(
                p.feature_stds.get(g, c, s),
                p.feature_stds.get(Gender::Man, c, s)
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rewards_stay_in_range(seed in any::<u64>(), a in 0usize..3) {
        let env = Environment::new(profiles::calibrated()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let it = env.sample_interaction(&mut rng);
            prop_assert!(it.features.iter().all(|v| (0.0..=1.0).contains(v)));
            let r = env.realize_reward(&it, ActionId::ALL[a], &mut rng);
            prop_assert!((-0.06..=1.0).contains(&r));
        }
    }

    #[test]
    fn optimal_action_is_a_maximum(seed in any::<u64>()) {
        let env = Environment::new(profiles::calibrated()).unwrap();
        let it = env.sample_interaction(&mut ChaCha8Rng::seed_from_u64(seed));
        let best = env.expected_reward(&it, env.optimal_action(&it));
        for a in ActionId::ALL {
            prop_assert!(env.expected_reward(&it, a) <= best);
        }
    }
}
