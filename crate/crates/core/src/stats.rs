//! Two-sample tests, effect sizes and normal-approximation intervals.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Direction of the alternative hypothesis for sample A relative to sample B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// mean(A) > mean(B)
    Greater,
    /// mean(A) < mean(B)
    Less,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub alternative: Alternative,
}

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn t_upper_tail(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, x);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

fn p_value(t: f64, df: f64, alternative: Alternative) -> f64 {
    let upper = t_upper_tail(t, df);
    match alternative {
        Alternative::Greater => upper,
        Alternative::Less => 1.0 - upper,
        Alternative::TwoSided => 2.0 * upper.min(1.0 - upper),
    }
}

/// Mean and sample variance (divisor `n - 1`).
fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Contract(format!(
            "each sample needs at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Contract("samples must be finite".into()));
    }
    Ok(())
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
pub fn welch_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    check_samples(a, b)?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateData(
            "both samples have zero variance".into(),
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p_value(t, df, alternative),
        alternative,
    })
}

/// Student's t-test with pooled variance, for sensitivity checks.
pub fn pooled_t_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    check_samples(a, b)?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    if pooled == 0.0 {
        return Err(Error::DegenerateData(
            "both samples have zero variance".into(),
        ));
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p_value(t, df, alternative),
        alternative,
    })
}

/// Cohen's d with the classic pooled standard deviation. Signed: positive when A > B.
pub fn cohens_d(
    mean_a: f64,
    std_a: f64,
    n_a: usize,
    mean_b: f64,
    std_b: f64,
    n_b: usize,
) -> Result<f64> {
    if n_a < 2 || n_b < 2 {
        return Err(Error::Contract(format!(
            "Cohen's d needs n >= 2, got {n_a} and {n_b}"
        )));
    }
    if !(std_a >= 0.0 && std_b >= 0.0) {
        return Err(Error::Contract(
            "standard deviations must be non-negative".into(),
        ));
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let pooled =
        (((na - 1.0) * std_a * std_a + (nb - 1.0) * std_b * std_b) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(Error::DegenerateData(
            "pooled standard deviation is zero".into(),
        ));
    }
    Ok((mean_a - mean_b) / pooled)
}

/// Cohen's d computed from raw samples.
pub fn cohens_d_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    cohens_d(ma, va.sqrt(), a.len(), mb, vb.sqrt(), b.len())
}

/// Sample mean and standard deviation (divisor `n - 1`).
pub fn mean_std(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Contract(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let (m, v) = mean_var(samples);
    Ok((m, v.sqrt()))
}

/// Normal-approximation 95% interval `mean +- 1.96 s / sqrt(n)`.
pub fn ci95(samples: &[f64]) -> Result<(f64, f64)> {
    let (m, s) = mean_std(samples)?;
    let half = 1.96 * s / (samples.len() as f64).sqrt();
    Ok((m - half, m + half))
}
