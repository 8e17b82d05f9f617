//! Tables and figure series from per-run summaries.
//!
//! The unit of analysis is the run: each run contributes one mean reward and
//! one suboptimal fraction per gender, and groups are compared with Welch's
//! test over those run-level values (women as the first sample).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{CellInfo, CellResult, CELL_FORMAT_VERSION};
use super::runlog;
use crate::environment::Gender;
use crate::error::{Error, Result};
use crate::metrics::{criterion_value, RunSummary};
use crate::stats::{self, Alternative, TestResult};

/// Significance level for the directional hypotheses.
pub const SIGNIFICANCE: f64 = 0.05;

/// Number of equal-width intervals in the interval optimal-set figure.
pub const NUM_INTERVALS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    AverageReward,
    SuboptimalFraction,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::AverageReward, Metric::SuboptimalFraction];

    pub fn key(self) -> &'static str {
        match self {
            Metric::AverageReward => "average-reward",
            Metric::SuboptimalFraction => "suboptimal-fraction",
        }
    }

    /// Alternative under which women fare better.
    fn women_better(self) -> Alternative {
        match self {
            Metric::AverageReward => Alternative::Greater,
            Metric::SuboptimalFraction => Alternative::Less,
        }
    }

    fn value(self, run: &RunSummary, g: Gender) -> Option<f64> {
        run.gender(g).map(|s| match self {
            Metric::AverageReward => s.mean_reward,
            Metric::SuboptimalFraction => s.suboptimal_fraction,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Women fare better.
    H1,
    /// Women fare worse.
    H2,
    /// No detectable difference.
    H3,
}

/// Outcome of comparing women (sample A) with men (sample B) on one metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub hypothesis: Hypothesis,
    /// Welch test behind the reported hypothesis.
    pub welch: TestResult,
    /// Pooled-variance test with the same alternative.
    pub pooled_p_value: f64,
    /// Cohen's d of women minus men.
    pub cohens_d: f64,
}

/// Report H1 or H2 when the matching one-sided test rejects at 5%,
/// otherwise H3 with the two-sided p-value.
pub fn compare(women: &[f64], men: &[f64], metric: Metric) -> Result<Comparison> {
    let better = metric.women_better();
    let worse = match better {
        Alternative::Greater => Alternative::Less,
        _ => Alternative::Greater,
    };
    let p_better = stats::welch_test(women, men, better)?;
    let p_worse = stats::welch_test(women, men, worse)?;
    let (hypothesis, welch) = if p_better.p_value < SIGNIFICANCE {
        (Hypothesis::H1, p_better)
    } else if p_worse.p_value < SIGNIFICANCE {
        (Hypothesis::H2, p_worse)
    } else {
        (
            Hypothesis::H3,
            stats::welch_test(women, men, Alternative::TwoSided)?,
        )
    };
    Ok(Comparison {
        hypothesis,
        welch,
        pooled_p_value: stats::pooled_t_test(women, men, welch.alternative)?.p_value,
        cohens_d: stats::cohens_d_samples(women, men)?,
    })
}

/// Mean, standard deviation and 95% interval of run-level values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Spread {
    pub n: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let (std, ci) = match (stats::mean_std(values), stats::ci95(values)) {
            (Ok((_, s)), Ok(ci)) => (Some(s), Some(ci)),
            _ => (None, None),
        };
        Some(Spread {
            n: values.len(),
            mean,
            std,
            ci_lo: ci.map(|c| c.0),
            ci_hi: ci.map(|c| c.1),
        })
    }
}

/// One row of `tables/summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub cell: String,
    pub feature_set_id: Option<usize>,
    pub metric: Metric,
    pub gender: Gender,
    pub spread: Option<Spread>,
    /// `None` when the test is undefined (too few runs, zero variance).
    pub comparison: Option<Comparison>,
}

/// One row of `tables/criterion.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionRow {
    pub cell: String,
    pub feature_set_id: Option<usize>,
    pub criterion: Option<Spread>,
    pub mean_reward_man: Option<f64>,
    pub mean_reward_woman: Option<f64>,
    pub mean_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenderPoint {
    pub gender: Gender,
    #[serde(flatten)]
    pub spread: Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BarCell {
    pub cell: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_set_id: Option<usize>,
    pub points: Vec<GenderPoint>,
}

/// Per-gender bars (average reward or suboptimal fraction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BarFigure {
    pub figure: String,
    pub metric: Metric,
    pub unit_of_analysis: String,
    pub interval: String,
    pub cells: Vec<BarCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesCell {
    pub cell: String,
    pub runs: usize,
    /// Interval start (1-based, inclusive); only for interval series.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub x_lo: Vec<u64>,
    /// Last step covered by each point.
    pub x: Vec<u64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Optimal-set fraction over time with a min-max envelope across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesFigure {
    pub figure: String,
    pub quantity: String,
    pub cells: Vec<SeriesCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub summary: Vec<SummaryRow>,
    pub criterion: Vec<CriterionRow>,
    pub fig1: BarFigure,
    pub fig2: BarFigure,
    pub fig3: SeriesFigure,
    pub fig4: SeriesFigure,
}

impl Report {
    /// Row for (cell, metric, gender).
    pub fn row(&self, cell: &str, metric: Metric, gender: Gender) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.cell == cell && r.metric == metric && r.gender == gender)
    }
}

fn gender_values(runs: &[RunSummary], metric: Metric, g: Gender) -> Vec<f64> {
    runs.iter().filter_map(|r| metric.value(r, g)).collect()
}

/// Interval boundaries `(lo, hi)` of the interval figure: ten equal spans
/// rounded up to whole series blocks.
pub fn interval_bounds(horizon: u64, block: u64) -> Vec<(u64, u64)> {
    let width = horizon.div_ceil(NUM_INTERVALS).div_ceil(block) * block;
    let mut out = Vec::new();
    let mut lo = 1;
    while lo <= horizon {
        let hi = (lo - 1 + width).min(horizon);
        out.push((lo, hi));
        lo = hi + 1;
    }
    out
}

fn envelope(per_run: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let len = per_run[0].len();
    let mut mean = vec![0.0; len];
    let mut min = vec![f64::INFINITY; len];
    let mut max = vec![f64::NEG_INFINITY; len];
    for run in per_run {
        for (i, v) in run.iter().enumerate() {
            mean[i] += v;
            min[i] = min[i].min(*v);
            max[i] = max[i].max(*v);
        }
    }
    let n = per_run.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    (mean, min, max)
}

fn series_cells(cell: &CellResult) -> Result<Option<(SeriesCell, SeriesCell)>> {
    let series: Option<Vec<_>> = cell
        .summaries
        .iter()
        .map(|s| s.optimal_set.as_ref())
        .collect();
    let Some(series) = series.filter(|s| !s.is_empty()) else {
        return Ok(None);
    };
    let steps = series[0].steps;
    let block = series[0].block;
    let cum_x: Vec<u64> = (1..=steps.div_ceil(block))
        .map(|k| (k * block).min(steps))
        .collect();
    let bounds = interval_bounds(steps, block);
    let mut cum = Vec::new();
    let mut bars = Vec::new();
    for s in &series {
        cum.push(
            cum_x
                .iter()
                .map(|x| s.cumulative(*x))
                .collect::<Result<Vec<_>>>()?,
        );
        bars.push(
            bounds
                .iter()
                .map(|(lo, hi)| s.fraction(*lo, *hi))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let (m1, lo1, hi1) = envelope(&cum);
    let (m2, lo2, hi2) = envelope(&bars);
    Ok(Some((
        SeriesCell {
            cell: cell.info.name.clone(),
            runs: series.len(),
            x_lo: Vec::new(),
            x: cum_x,
            mean: m1,
            min: lo1,
            max: hi1,
        },
        SeriesCell {
            cell: cell.info.name.clone(),
            runs: series.len(),
            x_lo: bounds.iter().map(|b| b.0).collect(),
            x: bounds.iter().map(|b| b.1).collect(),
            mean: m2,
            min: lo2,
            max: hi2,
        },
    )))
}

/// Build every table and figure from per-run summaries.
pub fn aggregate_cells(cells: &[CellResult]) -> Result<Report> {
    let mut summary = Vec::new();
    let mut criterion = Vec::new();
    let mut bars = [Vec::new(), Vec::new()];
    let mut fig3 = Vec::new();
    let mut fig4 = Vec::new();
    for cell in cells {
        let name = &cell.info.name;
        if cell.summaries.is_empty() {
            return Err(Error::Aggregation(format!("cell '{name}' has no runs")));
        }
        for (mi, metric) in Metric::ALL.into_iter().enumerate() {
            let women = gender_values(&cell.summaries, metric, Gender::Woman);
            let men = gender_values(&cell.summaries, metric, Gender::Man);
            let comparison = match compare(&women, &men, metric) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("cell '{name}', {}: no test ({e})", metric.key());
                    None
                }
            };
            let mut points = Vec::new();
            for (g, values) in [(Gender::Man, &men), (Gender::Woman, &women)] {
                let spread = Spread::of(values);
                if let Some(s) = spread {
                    points.push(GenderPoint {
                        gender: g,
                        spread: s,
                    });
                }
                summary.push(SummaryRow {
                    cell: name.clone(),
                    feature_set_id: cell.info.feature_set_id,
                    metric,
                    gender: g,
                    spread,
                    comparison,
                });
            }
            bars[mi].push(BarCell {
                cell: name.clone(),
                feature_set_id: cell.info.feature_set_id,
                points,
            });
        }

        let crit: Vec<f64> = cell
            .summaries
            .iter()
            .filter_map(|s| criterion_value(s, &cell.info.criterion).ok())
            .collect();
        let mean_of = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        criterion.push(CriterionRow {
            cell: name.clone(),
            feature_set_id: cell.info.feature_set_id,
            criterion: Spread::of(&crit),
            mean_reward_man: mean_of(gender_values(
                &cell.summaries,
                Metric::AverageReward,
                Gender::Man,
            )),
            mean_reward_woman: mean_of(gender_values(
                &cell.summaries,
                Metric::AverageReward,
                Gender::Woman,
            )),
            mean_gap: mean_of(
                cell.summaries
                    .iter()
                    .filter_map(RunSummary::fairness_gap)
                    .collect(),
            ),
        });

        if let Some((cum, bars)) = series_cells(cell)? {
            fig3.push(cum);
            fig4.push(bars);
        }
    }
    let [b1, b2] = bars;
    let bar = |figure: &str, metric, cells| BarFigure {
        figure: figure.into(),
        metric,
        unit_of_analysis: "run-level means".into(),
        interval: "normal approximation: mean +- 1.96 * std / sqrt(runs)".into(),
        cells,
    };
    Ok(Report {
        summary,
        criterion,
        fig1: bar("fig1", Metric::AverageReward, b1),
        fig2: bar("fig2", Metric::SuboptimalFraction, b2),
        fig3: SeriesFigure {
            figure: "fig3".into(),
            quantity: "cumulative optimal feature set fraction".into(),
            cells: fig3,
        },
        fig4: SeriesFigure {
            figure: "fig4".into(),
            quantity: "interval optimal feature set fraction".into(),
            cells: fig4,
        },
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "cell,featureSetId,metric,gender,runs,mean,std,ciLo,ciHi,hypothesis,pValue,cohensD,cohensDSigned,tStatistic,degreesOfFreedom,pooledPValue\n",
    );
    for r in rows {
        let s = r.spread;
        let c = r.comparison;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.feature_set_id.map(|i| i.to_string()).unwrap_or_default(),
            r.metric.key(),
            r.gender,
            s.map(|s| s.n).unwrap_or(0),
            opt(s.map(|s| s.mean)),
            opt(s.and_then(|s| s.std)),
            opt(s.and_then(|s| s.ci_lo)),
            opt(s.and_then(|s| s.ci_hi)),
            c.map(|c| format!("{:?}", c.hypothesis))
                .unwrap_or_else(|| "n/a".into()),
            opt(c.map(|c| c.welch.p_value)),
            opt(c.map(|c| c.cohens_d.abs())),
            opt(c.map(|c| c.cohens_d)),
            opt(c.map(|c| c.welch.t_statistic)),
            opt(c.map(|c| c.welch.degrees_of_freedom)),
            opt(c.map(|c| c.pooled_p_value)),
        );
    }
    out
}

fn criterion_csv(rows: &[CriterionRow]) -> String {
    let mut out =
        String::from("cell,featureSetId,runs,criterionMean,criterionStd,ciLo,ciHi,meanRewardMan,meanRewardWoman,meanGap\n");
    for r in rows {
        let s = r.criterion;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.feature_set_id.map(|i| i.to_string()).unwrap_or_default(),
            s.map(|s| s.n).unwrap_or(0),
            opt(s.map(|s| s.mean)),
            opt(s.and_then(|s| s.std)),
            opt(s.and_then(|s| s.ci_lo)),
            opt(s.and_then(|s| s.ci_hi)),
            opt(r.mean_reward_man),
            opt(r.mean_reward_woman),
            opt(r.mean_gap),
        );
    }
    out
}

impl Report {
    /// Write tables and figures under `out`; returns the files written.
    pub fn write(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let files = [
            ("tables/summary.csv", summary_csv(&self.summary)),
            ("tables/criterion.csv", criterion_csv(&self.criterion)),
            ("figures/fig1.json", json(&self.fig1)?),
            ("figures/fig2.json", json(&self.fig2)?),
            ("figures/fig3.json", json(&self.fig3)?),
            ("figures/fig4.json", json(&self.fig4)?),
        ];
        let mut written = Vec::new();
        for (rel, text) in files {
            let path = out.join(rel);
            super::io::write_text(&path, &text)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Directory holding the per-cell run folders: `dir/runs` if present, else `dir`.
pub fn runs_root(dir: &Path) -> PathBuf {
    let nested = dir.join("runs");
    if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    }
}

/// Rebuild per-run summaries from the step logs under `dir`.
pub fn load_cells(dir: &Path) -> Result<Vec<CellResult>> {
    let root = runs_root(dir);
    let entries = std::fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&root, e))?;
        if entry.path().join("cell.json").is_file() {
            dirs.push(entry.path());
        }
    }
    if dirs.is_empty() {
        return Err(Error::Aggregation(format!(
            "no cells found under {}",
            root.display()
        )));
    }
    let mut cells = Vec::new();
    for dir in dirs {
        let info: CellInfo = serde_json::from_str(&super::io::read_text(&dir.join("cell.json"))?)?;
        if info.format_version != CELL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported cell formatVersion {}",
                dir.display(),
                info.format_version
            )));
        }
        let mut summaries = Vec::new();
        for run in 0..info.runs {
            let path = dir.join(format!("{run}.csv"));
            if !path.is_file() {
                break;
            }
            let log = runlog::read_log(&path)?;
            if log.is_empty() {
                return Err(Error::Aggregation(format!(
                    "cell '{}': {} is empty",
                    info.name,
                    path.display()
                )));
            }
            summaries.push(RunSummary::from_log(&log, info.series_block)?);
        }
        if summaries.is_empty() {
            return Err(Error::Aggregation(format!(
                "cell '{}' has no run logs",
                info.name
            )));
        }
        if summaries.len() != info.runs as usize {
            log::warn!(
                "cell '{}': found {} of {} run logs",
                info.name,
                summaries.len(),
                info.runs
            );
        }
        cells.push(CellResult { info, summaries });
    }
    cells.sort_by(|a, b| (a.info.code, &a.info.name).cmp(&(b.info.code, &b.info.name)));
    Ok(cells)
}

/// Read logs from `logs` and write tables and figures to `out`.
pub fn aggregate(logs: &Path, out: &Path) -> Result<(Report, Vec<PathBuf>)> {
    let report = aggregate_cells(&load_cells(logs)?)?;
    let files = report.write(out)?;
    Ok((report, files))
}
