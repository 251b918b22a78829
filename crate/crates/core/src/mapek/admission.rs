//! Statistical admission of a constrained option: the observed environment
//! must sit inside the option's operational domain with high confidence.

use serde::{Deserialize, Serialize};

use crate::model::{EnvironmentSample, OperationalDomain};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissionPolicy {
    /// Observation window, s.
    pub window: f64,
    pub min_samples: usize,
    /// One-sided normal quantile.
    pub confidence_z: f64,
}

impl Default for AdmissionPolicy {
    fn default() -> Self {
        Self {
            window: 300.0,
            min_samples: 300,
            confidence_z: 2.326,
        }
    }
}

impl AdmissionPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_samples < 2 {
            return Err("min_samples must be at least 2".into());
        }
        if !(self.confidence_z > 0.0) {
            return Err("confidence_z must be positive".into());
        }
        if !(self.window >= 0.0) {
            return Err("window must be non-negative".into());
        }
        Ok(())
    }
}

/// Mean, sample standard deviation and range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SampleStats<T = f64> {
    pub n: usize,
    pub mean: T,
    pub std_dev: T,
    pub min: T,
    pub max: T,
}

/// Two-pass statistics; `None` for fewer than two values.
pub fn sample_stats<T: Scalar>(values: &[T]) -> Option<SampleStats<T>> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let count = T::from_usize(n)?;
    let mean = values.iter().fold(T::zero(), |a, v| a + *v) / count;
    let ss = values.iter().fold(T::zero(), |a, v| a + (*v - mean) * (*v - mean));
    let std_dev = (ss / (count - T::one())).sqrt();
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    Some(SampleStats {
        n,
        mean,
        std_dev,
        min,
        max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VariableReport<T = f64> {
    pub variable: String,
    pub stats: SampleStats<T>,
    pub low: Option<T>,
    pub high: Option<T>,
    /// mean - z s / sqrt(n)
    pub lower_confidence: T,
    /// mean + z s / sqrt(n)
    pub upper_confidence: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdmissionReport<T = f64> {
    pub admit: bool,
    pub n: usize,
    pub window_start: T,
    pub window_end: T,
    pub variables: Vec<VariableReport<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case", bound = "T: Scalar")]
pub enum AdmissionOutcome<T = f64> {
    /// Not enough data yet; distinct from a rejection.
    NotReady { samples: usize, span: T },
    Evaluated(AdmissionReport<T>),
}

impl<T: Scalar> AdmissionOutcome<T> {
    pub fn admitted(&self) -> bool {
        matches!(self, AdmissionOutcome::Evaluated(r) if r.admit)
    }
}

/// Tests a window of samples against `domain`.
///
/// For every bounded side of every axis both the confidence bound on the
/// mean and the observed extreme must lie inside the bound.
pub fn admission_test<T: Scalar>(
    samples: &[EnvironmentSample<T>],
    domain: &OperationalDomain<T>,
    policy: &AdmissionPolicy,
) -> AdmissionOutcome<T> {
    let n = samples.len();
    let span = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => b.time - a.time,
        _ => T::zero(),
    };
    let window = T::lit(policy.window);
    let slack = T::lit(1e-9) * window.max(T::one());
    if n < policy.min_samples.max(2) || span + slack < window {
        return AdmissionOutcome::NotReady { samples: n, span };
    }
    let z = T::lit(policy.confidence_z);
    let root_n = T::from_usize(n).unwrap_or_else(T::one).sqrt();
    let mut variables = Vec::new();
    for (name, iv) in &domain.bounds {
        if iv.is_unbounded() {
            continue;
        }
        let values: Vec<T> = samples.iter().filter_map(|s| s.variable(name)).collect();
        let Some(stats) = sample_stats(&values).filter(|_| values.len() == n) else {
            variables.push(VariableReport {
                variable: name.clone(),
                stats: SampleStats {
                    n: values.len(),
                    mean: T::nan(),
                    std_dev: T::nan(),
                    min: T::nan(),
                    max: T::nan(),
                },
                low: iv.low,
                high: iv.high,
                lower_confidence: T::nan(),
                upper_confidence: T::nan(),
                pass: false,
            });
            continue;
        };
        let margin = z * stats.std_dev / root_n;
        let upper_confidence = stats.mean + margin;
        let lower_confidence = stats.mean - margin;
        let high_ok = iv.high.is_none_or(|h| upper_confidence <= h && stats.max <= h);
        let low_ok = iv.low.is_none_or(|l| lower_confidence >= l && stats.min >= l);
        variables.push(VariableReport {
            variable: name.clone(),
            stats,
            low: iv.low,
            high: iv.high,
            lower_confidence,
            upper_confidence,
            pass: high_ok && low_ok,
        });
    }
    AdmissionOutcome::Evaluated(AdmissionReport {
        admit: variables.iter().all(|v| v.pass),
        n,
        window_start: samples[0].time,
        window_end: samples[n - 1].time,
        variables,
    })
}
