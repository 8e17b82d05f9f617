//! Fairness-aware contextual bandits for pain-care recommendation.
//!
//! The crate is organised bottom-up:
//!
//! * [`environment`] generates synthetic patient interactions and rewards.
//! * [`policies`] holds LinUCB and Beta-Bernoulli Thompson sampling.
//! * [`nested`] stacks Thompson sampling over feature sets on top of one
//!   LinUCB per set.
//! * [`metrics`] and [`stats`] turn step logs into per-gender summaries,
//!   hypothesis tests and effect sizes.
//! * [`harness`] runs seeded multi-run experiments and writes tables and
//!   figure series.

pub mod environment;
pub mod error;
pub mod harness;
mod linalg;
pub mod metrics;
pub mod nested;
pub mod policies;
pub mod profiles;
pub mod stats;

pub use environment::{ActionId, EnvProfile, Environment, FeatureId, Gender, Interaction};
pub use error::{Error, Result};
pub use metrics::{RunSummary, StepRecord};
pub use nested::{FeatureSet, NestedState, PerformanceCriterion};
pub use policies::{BetaPrior, ContextVector, LinUcb, ThompsonSampling};
