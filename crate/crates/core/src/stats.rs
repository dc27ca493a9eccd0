//! The four test statistics and their raw/corrected one-sided p-values.
//!
//! Everything is one-sided: p-values are P(T > t*) under the nominal null,
//! matching the tail the constants correct. Sample variances use the n-1
//! divisor throughout.

use crate::error::{Error, Result};
use crate::kg::{KgResult, TestSpec};
use crate::tails::t_tail;

pub(crate) fn mean_and_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// A computed statistic, ready for p-value evaluation.
#[derive(Debug, Clone, Copy)]
pub struct StatisticValue {
    pub t_star: f64,
    pub spec: TestSpec,
    /// Welch-Satterthwaite degrees of freedom (Welch statistic only).
    pub welch_df: Option<f64>,
}

/// Raw and corrected one-sided p-values.
///
/// `p_corrected = K_g * p_raw` exactly; it is a tail approximation and may
/// exceed 1 for large K_g at moderate t*, in which case it is outside the
/// approximation regime rather than a probability.
#[derive(Debug, Clone, Copy)]
pub struct PValuePair {
    pub p_raw: f64,
    pub p_corrected: f64,
    pub p_welch: Option<f64>,
}

impl PValuePair {
    pub fn outside_approximation_regime(&self) -> bool {
        self.p_corrected > 1.0
    }
}

/// One-sample t: `T = sqrt(n) (mean / sample std)`.
pub fn ost_statistic(x: &[f64]) -> Result<StatisticValue> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter("one-sample t needs n >= 2".into()));
    }
    let (mean, var) = mean_and_var(x);
    if var <= 0.0 {
        return Err(Error::DegenerateSample("zero sample variance".into()));
    }
    Ok(StatisticValue {
        t_star: (n as f64).sqrt() * mean / var.sqrt(),
        spec: TestSpec::OneSampleT { n },
        welch_df: None,
    })
}

/// Two-sample numerator/denominator with explicit variance weights:
/// `T = (mean(x) - mean(y)) / sqrt(alpha S1^2 + beta S2^2)`.
pub fn tst_statistic(x: &[f64], y: &[f64], alpha: f64, beta: f64) -> Result<f64> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InvalidParameter("two-sample t needs n1, n2 >= 2".into()));
    }
    let (mx, vx) = mean_and_var(x);
    let (my, vy) = mean_and_var(y);
    let denom = alpha * vx + beta * vy;
    if denom <= 0.0 {
        return Err(Error::DegenerateSample("zero weighted variance".into()));
    }
    Ok((mx - my) / denom.sqrt())
}

/// Welch-Satterthwaite degrees of freedom estimated from the data.
pub fn welch_df(s1sq: f64, s2sq: f64, n1: usize, n2: usize) -> Result<f64> {
    if s1sq + s2sq <= 0.0 {
        return Err(Error::DegenerateSample("both sample variances zero".into()));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let a = s1sq / n1f;
    let b = s2sq / n2f;
    Ok((a + b) * (a + b) / (a * a / (n1f - 1.0) + b * b / (n2f - 1.0)))
}

/// Variance-ratio statistic `T = S1^2 / S2^2`.
pub fn f_statistic(x: &[f64], y: &[f64]) -> Result<StatisticValue> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InvalidParameter("F-test needs n1, n2 >= 2".into()));
    }
    let (_, vx) = mean_and_var(x);
    let (_, vy) = mean_and_var(y);
    if vy <= 0.0 {
        return Err(Error::DegenerateSample("zero denominator sample variance".into()));
    }
    Ok(StatisticValue {
        t_star: vx / vy,
        spec: TestSpec::FTest { n1: x.len(), n2: y.len() },
        welch_df: None,
    })
}

/// Compute the statistic for `spec` from one data vector laid out as the
/// spec expects (the second sample, if any, in the trailing coordinates).
pub fn compute_statistic(spec: &TestSpec, data: &[f64]) -> Result<StatisticValue> {
    spec.validate()?;
    if data.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: data.len() });
    }
    match *spec {
        TestSpec::OneSampleT { .. } => ost_statistic(data),
        TestSpec::TwoSampleT { n1, .. } => {
            let (alpha, beta) = spec.weights().expect("two-sample weights");
            let t = tst_statistic(&data[..n1], &data[n1..], alpha, beta)?;
            Ok(StatisticValue { t_star: t, spec: *spec, welch_df: None })
        }
        TestSpec::Welch { n1, n2 } => {
            let (alpha, beta) = spec.weights().expect("welch weights");
            let x = &data[..n1];
            let y = &data[n1..];
            let t = tst_statistic(x, y, alpha, beta)?;
            let (_, vx) = mean_and_var(x);
            let (_, vy) = mean_and_var(y);
            Ok(StatisticValue { t_star: t, spec: *spec, welch_df: Some(welch_df(vx, vy, n1, n2)?) })
        }
        TestSpec::FTest { n1, .. } => f_statistic(&data[..n1], &data[n1..]),
    }
}

/// Raw, corrected, and (for Welch) nominal-approximation p-values.
pub fn pvalues(stat: &StatisticValue, kg: &KgResult) -> Result<PValuePair> {
    if !stat.t_star.is_finite() {
        return Err(Error::DegenerateSample("non-finite statistic".into()));
    }
    let p_raw = stat.spec.reference_tail().survival(stat.t_star)?;
    let p_welch = match (stat.spec, stat.welch_df) {
        (TestSpec::Welch { .. }, Some(df)) => Some(t_tail(df.max(1.0), stat.t_star)),
        _ => None,
    };
    Ok(PValuePair { p_raw, p_corrected: kg.value * p_raw, p_welch })
}
