use fairrec_core::environment::ActionId;
use fairrec_core::harness::experiment::{simulate_linucb, simulate_nested};
use fairrec_core::harness::seeds::{self, Purpose};
use fairrec_core::harness::{run_experiment, ExperimentConfig, Mode};
use fairrec_core::nested::{policy1_feedback, project_context, FairnessTracker};
use fairrec_core::{
    profiles, BetaPrior, Environment, FeatureId, FeatureSet, Gender, PerformanceCriterion,
    StepRecord,
};
use proptest::prelude::*;

fn calibrated_env() -> Environment {
    Environment::new(profiles::calibrated()).unwrap()
}

fn linucb_trace(env: &Environment, set: &FeatureSet, horizon: u64, seed: u64) -> Vec<StepRecord> {
    let mut rng = seeds::stream(seed, 0, 0, Purpose::Environment);
    let mut out = Vec::new();
    simulate_linucb(env, set, 0.3, horizon, &mut rng, |r| {
        out.push(r);
        Ok(())
    })
    .unwrap();
    out
}

fn nested_trace(
    env: &Environment,
    sets: &[FeatureSet],
    prior: BetaPrior,
    horizon: u64,
    seed: u64,
) -> Vec<StepRecord> {
    let mut env_rng = seeds::stream(seed, 0, 0, Purpose::Environment);
    let mut policy_rng = seeds::stream(seed, 0, 0, Purpose::Policy);
    let mut out = Vec::new();
    simulate_nested(
        env,
        sets,
        &vec![prior; sets.len()],
        0.3,
        PerformanceCriterion::default(),
        horizon,
        &mut env_rng,
        &mut policy_rng,
        |r| {
            out.push(r);
            Ok(())
        },
    )
    .unwrap();
    out
}

/// Plain LinUCB has no notion of a chosen set being optimal.
fn without_set_optimality(trace: Vec<StepRecord>) -> Vec<StepRecord> {
    trace
        .into_iter()
        .map(|r| StepRecord {
            is_optimal_set: None,
            ..r
        })
        .collect()
}

#[test]
fn one_set_nested_is_plain_linucb() {
    let env = calibrated_env();
    for set in FeatureSet::table1() {
        let plain = linucb_trace(&env, &set, 10_000, 77);
        let nested = nested_trace(
            &env,
            std::slice::from_ref(&set),
            BetaPrior::default(),
            10_000,
            77,
        );
        assert_eq!(plain.len(), nested.len());
        for (p, n) in plain.iter().zip(&nested) {
            assert_eq!(
                (p.t, p.action, p.gender, p.cluster, p.session),
                (n.t, n.action, n.gender, n.cluster, n.session)
            );
            assert_eq!(p.reward.to_bits(), n.reward.to_bits(), "t={}", p.t);
            assert_eq!(n.set_id, Some(set.id));
        }
    }
}

#[test]
fn single_step_nested_run() {
    let env = calibrated_env();
    let mut cfg = ExperimentConfig::new(Mode::Nested);
    cfg.runs = 1;
    cfg.horizon = 1;
    let cells = run_experiment(&cfg, &env, None).unwrap();
    assert_eq!(cells.len(), 1);
    let trace = nested_trace(&env, &FeatureSet::table1(), BetaPrior::default(), 1, 0);
    assert_eq!(trace.len(), 1);
    assert!(matches!(trace[0].set_id, Some(0..=5)));
    assert!(trace[0].is_optimal_set.is_some());
}

#[test]
fn projection_of_table1_sets() {
    let env = calibrated_env();
    let mut rng = seeds::stream(5, 9, 0, Purpose::Environment);
    let it = env.sample_interaction(&mut rng);
    let sets = FeatureSet::table1();
    assert_eq!(project_context(&it, &sets[0]).values(), &it.features[..]);
    let set2 = project_context(&it, &sets[1]);
    let want: Vec<f64> = FeatureId::ALL
        .into_iter()
        .filter(|f| !matches!(f, FeatureId::PainInterfere1 | FeatureId::PainInterfere2))
        .map(|f| it.feature(f))
        .collect();
    assert_eq!(set2.values(), &want[..]);
    let dims: Vec<usize> = sets.iter().map(FeatureSet::len).collect();
    assert_eq!(dims, [8, 6, 7, 7, 6, 7]);
}

#[test]
fn feedback_matches_hand_arithmetic() {
    let mut tracker = FairnessTracker::new(1);
    tracker.record(0, Gender::Man, 0.44);
    tracker.record(0, Gender::Woman, 0.47);
    let got = policy1_feedback(&PerformanceCriterion::default(), 0.44, &tracker, 0);
    let gap: f64 = 0.47 - 0.44;
    assert!((got - (0.5 * 0.44 + 0.5 * (1.0 - gap))).abs() < 1e-12);
    assert!((got - 0.705).abs() < 1e-12);
    let literal = PerformanceCriterion::new(1.0, 0.0).unwrap();
    assert_eq!(policy1_feedback(&literal, 0.44, &tracker, 0), 0.44);
    assert_eq!(policy1_feedback(&literal, -0.06, &tracker, 0), 0.0);
}

#[test]
fn level1_mass_grows_by_one_per_step() {
    let env = calibrated_env();
    let sets = FeatureSet::table1();
    let mut state = fairrec_core::NestedState::new(
        sets.clone(),
        &[BetaPrior::default(); 6],
        0.3,
        PerformanceCriterion::default(),
    )
    .unwrap();
    let mut env_rng = seeds::stream(3, 0, 0, Purpose::Environment);
    let mut policy_rng = seeds::stream(3, 0, 0, Purpose::Policy);
    let start = state.level1().total_mass();
    for t in 1..=2000 {
        let it = env.sample_interaction(&mut env_rng);
        let rec = state
            .step(t, &env, &it, &mut env_rng, &mut policy_rng)
            .unwrap();
        assert!(rec.reward >= -0.06 && rec.reward <= 1.0);
        assert!(ActionId::ALL.contains(&rec.action));
    }
    assert_eq!(state.level1().total_mass(), start + 2000.0);
    let counts: u64 = (0..6)
        .flat_map(|s| Gender::ALL.map(|g| state.tracker().count(s, g)))
        .sum();
    assert_eq!(counts, 2000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduction_holds_for_any_seed(seed in any::<u64>(), set in 0usize..6, horizon in 1u64..400) {
        let env = calibrated_env();
        let s = FeatureSet::table1()[set].clone();
        let plain = linucb_trace(&env, &s, horizon, seed);
        let nested = nested_trace(&env, std::slice::from_ref(&s), BetaPrior::new(1.0, 5.0), horizon, seed);
        prop_assert_eq!(plain, without_set_optimality(nested));
    }
}
