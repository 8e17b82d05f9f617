//! Beta-Bernoulli Thompson sampling over feature sets.
//!
//! Rewards in `[0, 1]` are turned into Bernoulli successes by comparing them
//! with a fresh uniform draw, so the posterior stays conjugate.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const THOMPSON_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        BetaPrior { alpha, beta }
    }

    fn check(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.alpha) && ok(self.beta) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "Beta prior parameters must be finite and > 0, got ({}, {})",
                self.alpha, self.beta
            )))
        }
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        BetaPrior::new(1.0, 2.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThompsonSampling {
    params: Vec<BetaPrior>,
}

impl ThompsonSampling {
    pub fn new(priors: &[BetaPrior]) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::Config(
                "Thompson sampling needs at least one arm".into(),
            ));
        }
        for p in priors {
            p.check()?;
        }
        Ok(ThompsonSampling {
            params: priors.to_vec(),
        })
    }

    pub fn num_arms(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[BetaPrior] {
        &self.params
    }

    /// Sum of all alpha and beta parameters.
    pub fn total_mass(&self) -> f64 {
        self.params.iter().map(|p| p.alpha + p.beta).sum()
    }

    /// Draw one posterior sample per arm and return the argmax, lowest index on ties.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut best = 0;
        let mut best_draw = f64::NEG_INFINITY;
        for (i, p) in self.params.iter().enumerate() {
            // Parameters were validated and only ever grow, so construction cannot fail.
            let draw = Beta::new(p.alpha, p.beta)
                .expect("valid Beta parameters")
                .sample(rng);
            if draw > best_draw {
                best = i;
                best_draw = draw;
            }
        }
        best
    }

    /// Bernoulli update of `arm` with a reward in `[0, 1]`.
    /// Returns whether the trial counted as a success.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        arm: usize,
        reward: f64,
        rng: &mut R,
    ) -> Result<bool> {
        if arm >= self.params.len() {
            return Err(Error::Contract(format!(
                "arm {arm} out of range for {} arms",
                self.params.len()
            )));
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::Contract(format!(
                "Thompson reward must be in [0, 1], got {reward}"
            )));
        }
        let u: f64 = rng.random();
        let success = u < reward;
        let p = &mut self.params[arm];
        if success {
            p.alpha += 1.0;
        } else {
            p.beta += 1.0;
        }
        Ok(success)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ThompsonDoc {
    format_version: u32,
    arms: Vec<BetaPrior>,
}

impl Serialize for ThompsonSampling {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ThompsonDoc {
            format_version: THOMPSON_FORMAT_VERSION,
            arms: self.params.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ThompsonSampling {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ThompsonDoc::deserialize(deserializer)?;
        if doc.format_version != THOMPSON_FORMAT_VERSION {
            return Err(D::Error::custom(format!(
                "unsupported Thompson formatVersion {}",
                doc.format_version
            )));
        }
        ThompsonSampling::new(&doc.arms).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_priors() {
        assert!(matches!(ThompsonSampling::new(&[]), Err(Error::Config(_))));
        assert!(matches!(
            ThompsonSampling::new(&[BetaPrior::new(0.0, 1.0)]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn certain_rewards() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ts = ThompsonSampling::new(&[BetaPrior::default(); 2]).unwrap();
        assert!(ts.update(0, 1.0, &mut rng).unwrap());
        assert!(!ts.update(1, 0.0, &mut rng).unwrap());
        assert_eq!(ts.params()[0], BetaPrior::new(2.0, 2.0));
        assert_eq!(ts.params()[1], BetaPrior::new(1.0, 3.0));
    }

    #[test]
    fn out_of_range_reward_is_contract_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ts = ThompsonSampling::new(&[BetaPrior::default()]).unwrap();
        assert!(matches!(
            ts.update(0, 1.2, &mut rng),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            ts.update(0, -0.1, &mut rng),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            ts.update(1, 0.5, &mut rng),
            Err(Error::Contract(_))
        ));
        assert_eq!(ts.params()[0], BetaPrior::default());
    }

    #[test]
    fn success_rate_tracks_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ts = ThompsonSampling::new(&[BetaPrior::new(1.0, 1.0)]).unwrap();
        let n = 100_000;
        for _ in 0..n {
            ts.update(0, 0.3, &mut rng).unwrap();
        }
        let rate = (ts.params()[0].alpha - 1.0) / n as f64;
        let se = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((rate - 0.3).abs() < 4.0 * se, "{rate}");
    }

    #[test]
    fn prefers_strong_arm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ts =
            ThompsonSampling::new(&[BetaPrior::new(2.0, 50.0), BetaPrior::new(50.0, 2.0)]).unwrap();
        let picks = (0..1000).filter(|_| ts.select(&mut rng) == 1).count();
        assert!(picks > 990);
    }

    #[test]
    fn round_trips() {
        let ts =
            ThompsonSampling::new(&[BetaPrior::new(1.5, 2.0), BetaPrior::new(3.0, 4.0)]).unwrap();
        let text = serde_json::to_string(&ts).unwrap();
        assert_eq!(serde_json::from_str::<ThompsonSampling>(&text).unwrap(), ts);
    }

    proptest! {
        #[test]
        fn mass_grows_by_exactly_one(rewards in prop::collection::vec((0usize..4, 0.0f64..=1.0), 0..200), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ts = ThompsonSampling::new(&[BetaPrior::default(); 4]).unwrap();
            let start = ts.total_mass();
            for (k, (arm, r)) in rewards.iter().enumerate() {
                let before = ts.params()[*arm];
                ts.update(*arm, *r, &mut rng).unwrap();
                let after = ts.params()[*arm];
                prop_assert!(after.alpha >= before.alpha && after.beta >= before.beta);
                prop_assert_eq!(ts.total_mass(), start + (k + 1) as f64);
            }
        }
    }
}
