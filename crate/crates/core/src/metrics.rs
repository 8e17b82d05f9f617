//! Step records and the per-run quantities derived from them.
//!
//! Every summary can be rebuilt from a persisted log: the in-run
//! [`RunAccumulator`] and [`RunSummary::from_log`] fold records in the same
//! order with the same arithmetic, so the two agree bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::environment::{ActionId, Gender, NUM_GENDERS};
use crate::error::{Error, Result};
use crate::nested::PerformanceCriterion;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRecord {
    /// 1-based step index.
    pub t: u64,
    pub set_id: Option<usize>,
    pub action: ActionId,
    pub reward: f64,
    pub gender: Gender,
    pub cluster: u8,
    pub session: u8,
    pub is_optimal_action: bool,
    /// `None` when the profile declares no optimal feature set.
    pub is_optimal_set: Option<bool>,
}

pub fn per_gender_average_reward(log: &[StepRecord]) -> BTreeMap<Gender, f64> {
    let mut sums = [(0.0, 0u64); NUM_GENDERS];
    for r in log {
        let s = &mut sums[r.gender.index()];
        s.0 += r.reward;
        s.1 += 1;
    }
    Gender::ALL
        .into_iter()
        .filter(|g| sums[g.index()].1 > 0)
        .map(|g| (g, sums[g.index()].0 / sums[g.index()].1 as f64))
        .collect()
}

pub fn suboptimal_fraction(log: &[StepRecord]) -> BTreeMap<Gender, f64> {
    let mut counts = [(0u64, 0u64); NUM_GENDERS];
    for r in log {
        let c = &mut counts[r.gender.index()];
        c.0 += u64::from(!r.is_optimal_action);
        c.1 += 1;
    }
    Gender::ALL
        .into_iter()
        .filter(|g| counts[g.index()].1 > 0)
        .map(|g| (g, counts[g.index()].0 as f64 / counts[g.index()].1 as f64))
        .collect()
}

fn optimal_set_fraction(log: &[StepRecord], lo: u64, hi: u64) -> Result<f64> {
    let mut hits = 0u64;
    let mut n = 0u64;
    for r in log.iter().filter(|r| (lo..=hi).contains(&r.t)) {
        let flag = r.is_optimal_set.ok_or_else(|| {
            Error::Metric("log has no optimal-set flags; the profile is not calibrated".into())
        })?;
        hits += u64::from(flag);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Metric(format!("no records with {lo} <= t <= {hi}")));
    }
    Ok(hits as f64 / n as f64)
}

/// Share of steps `t <= up_to` that picked the optimal feature set.
pub fn cumulative_optimal_set_fraction(log: &[StepRecord], up_to: u64) -> Result<f64> {
    optimal_set_fraction(log, 1, up_to)
}

/// Share of steps `lo <= t <= hi` that picked the optimal feature set.
pub fn interval_optimal_set_fraction(log: &[StepRecord], lo: u64, hi: u64) -> Result<f64> {
    if lo > hi {
        return Err(Error::Metric(format!("empty interval {lo}..={hi}")));
    }
    optimal_set_fraction(log, lo, hi)
}

/// Per-gender statistics of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenderSummary {
    pub count: u64,
    pub mean_reward: f64,
    /// Sample standard deviation of the rewards (0 for a single record).
    pub reward_std: f64,
    pub suboptimal_fraction: f64,
}

/// Optimal-set hits counted in consecutive blocks of `block` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimalSetSeries {
    pub block: u64,
    pub steps: u64,
    pub hits: Vec<u64>,
}

impl OptimalSetSeries {
    fn block_len(&self, i: usize) -> u64 {
        let start = i as u64 * self.block;
        self.block.min(self.steps - start)
    }

    /// Fraction over steps `lo..=hi`; both ends must fall on block edges.
    pub fn fraction(&self, lo: u64, hi: u64) -> Result<f64> {
        if lo == 0 || lo > hi || hi > self.steps {
            return Err(Error::Metric(format!(
                "interval {lo}..={hi} outside 1..={}",
                self.steps
            )));
        }
        if (lo - 1) % self.block != 0 || (hi % self.block != 0 && hi != self.steps) {
            return Err(Error::Metric(format!(
                "interval {lo}..={hi} is not aligned to blocks of {}",
                self.block
            )));
        }
        let first = ((lo - 1) / self.block) as usize;
        let last = hi.div_ceil(self.block) as usize;
        let hits: u64 = self.hits[first..last].iter().sum();
        let n: u64 = (first..last).map(|i| self.block_len(i)).sum();
        Ok(hits as f64 / n as f64)
    }

    pub fn cumulative(&self, up_to: u64) -> Result<f64> {
        self.fraction(1, up_to)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub steps: u64,
    pub man: Option<GenderSummary>,
    pub woman: Option<GenderSummary>,
    pub overall_mean_reward: f64,
    /// `None` when the profile declares no optimal set.
    pub optimal_set: Option<OptimalSetSeries>,
}

impl RunSummary {
    pub fn gender(&self, g: Gender) -> Option<&GenderSummary> {
        match g {
            Gender::Man => self.man.as_ref(),
            Gender::Woman => self.woman.as_ref(),
        }
    }

    /// `|mean_man - mean_woman|` of run-level means.
    pub fn fairness_gap(&self) -> Option<f64> {
        Some((self.man?.mean_reward - self.woman?.mean_reward).abs())
    }

    pub fn from_log(log: &[StepRecord], block: u64) -> Result<Self> {
        let mut acc = RunAccumulator::new(block)?;
        for r in log {
            acc.push(r)?;
        }
        acc.finish()
    }
}

/// `w_u * overall mean + w_f * (1 - gap)` for one run.
pub fn criterion_value(summary: &RunSummary, criterion: &PerformanceCriterion) -> Result<f64> {
    let gap = summary
        .fairness_gap()
        .ok_or_else(|| Error::Metric("criterion needs rewards from both genders".into()))?;
    Ok(criterion.combine(summary.overall_mean_reward, gap))
}

#[derive(Clone, Copy, Debug, Default)]
struct GenderAcc {
    count: u64,
    sum: f64,
    sum_sq: f64,
    suboptimal: u64,
}

/// Streaming fold of step records into a [`RunSummary`].
#[derive(Clone, Debug)]
pub struct RunAccumulator {
    block: u64,
    last_t: u64,
    sum: f64,
    genders: [GenderAcc; NUM_GENDERS],
    hits: Vec<u64>,
    set_flags: Option<bool>,
}

impl RunAccumulator {
    pub fn new(block: u64) -> Result<Self> {
        if block == 0 {
            return Err(Error::Config("series block size must be >= 1".into()));
        }
        Ok(RunAccumulator {
            block,
            last_t: 0,
            sum: 0.0,
            genders: Default::default(),
            hits: Vec::new(),
            set_flags: None,
        })
    }

    /// Records must arrive with `t = 1, 2, 3, ...`.
    pub fn push(&mut self, r: &StepRecord) -> Result<()> {
        if r.t != self.last_t + 1 {
            return Err(Error::Metric(format!(
                "expected step {}, got {}",
                self.last_t + 1,
                r.t
            )));
        }
        self.last_t = r.t;
        self.sum += r.reward;
        let g = &mut self.genders[r.gender.index()];
        g.count += 1;
        g.sum += r.reward;
        g.sum_sq += r.reward * r.reward;
        g.suboptimal += u64::from(!r.is_optimal_action);

        let known = r.is_optimal_set.is_some();
        match self.set_flags {
            None => self.set_flags = Some(known),
            Some(k) if k != known => {
                return Err(Error::Metric(format!(
                    "step {} mixes known and unknown optimal-set flags",
                    r.t
                )))
            }
            _ => {}
        }
        if known {
            let b = ((r.t - 1) / self.block) as usize;
            if b == self.hits.len() {
                self.hits.push(0);
            }
            self.hits[b] += u64::from(r.is_optimal_set == Some(true));
        }
        Ok(())
    }

    pub fn finish(self) -> Result<RunSummary> {
        if self.last_t == 0 {
            return Err(Error::Metric("empty run log".into()));
        }
        let gender = |a: &GenderAcc| {
            (a.count > 0).then(|| {
                let n = a.count as f64;
                let mean = a.sum / n;
                let var = if a.count > 1 {
                    ((a.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                GenderSummary {
                    count: a.count,
                    mean_reward: mean,
                    reward_std: var.sqrt(),
                    suboptimal_fraction: a.suboptimal as f64 / n,
                }
            })
        };
        Ok(RunSummary {
            steps: self.last_t,
            man: gender(&self.genders[Gender::Man.index()]),
            woman: gender(&self.genders[Gender::Woman.index()]),
            overall_mean_reward: self.sum / self.last_t as f64,
            optimal_set: (self.set_flags == Some(true)).then_some(OptimalSetSeries {
                block: self.block,
                steps: self.last_t,
                hits: self.hits,
            }),
        })
    }
}
