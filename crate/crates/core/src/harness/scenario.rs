//! Scenario files: setpoint schedules, inflow traces, noise and injected
//! managing-system events.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::harness::HarnessError;
use crate::mapek::Trigger;
use crate::model::EnvironmentSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    Constant,
    Linear,
}

/// Time series given by `(time, value)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    #[serde(default)]
    pub interpolation: Interpolation,
    pub points: Vec<(f64, f64)>,
}

impl Trace {
    pub fn constant(value: f64) -> Self {
        Self {
            interpolation: Interpolation::Constant,
            points: vec![(0.0, value)],
        }
    }

    pub fn steps(points: &[(f64, f64)]) -> Self {
        Self {
            interpolation: Interpolation::Constant,
            points: points.to_vec(),
        }
    }

    pub fn linear(points: &[(f64, f64)]) -> Self {
        Self {
            interpolation: Interpolation::Linear,
            points: points.to_vec(),
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.points.partition_point(|(pt, _)| *pt <= t);
        if idx == 0 {
            return self.points.first().map_or(0.0, |p| p.1);
        }
        let (t0, v0) = self.points[idx - 1];
        match (self.interpolation, self.points.get(idx)) {
            (Interpolation::Linear, Some(&(t1, v1))) if t1 > t0 => v0 + (v1 - v0) * (t - t0) / (t1 - t0),
            _ => v0,
        }
    }

    fn validate(&self, field: &str) -> Result<(), HarnessError> {
        if self.points.is_empty() {
            return Err(HarnessError::validation(field, "needs at least one point"));
        }
        if self.points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(HarnessError::validation(field, "points must be finite"));
        }
        if self.points.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(HarnessError::validation(field, "points must be sorted by time"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Noise {
    #[serde(default)]
    pub inflow_temp_sd: f64,
    #[serde(default)]
    pub inflow_rate_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedTrigger {
    pub time: f64,
    pub trigger: Trigger,
}

/// An operator asking the managing system for a specific option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedRequest {
    pub time: f64,
    pub option_id: String,
}

fn default_tick() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

fn default_initial_temp() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(default = "default_tick")]
    pub tick: f64,
    pub duration: f64,
    pub setpoint_schedule: Vec<(f64, f64)>,
    pub inflow_temp_trace: Trace,
    pub inflow_rate_trace: Trace,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub guard_enabled: bool,
    #[serde(default = "default_initial_temp")]
    pub initial_tank_temp: f64,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub triggers: Vec<InjectedTrigger>,
    #[serde(default)]
    pub requests: Vec<InjectedRequest>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let scenario: Scenario = serde_json::from_str(text)
            .map_err(|e| HarnessError::validation("scenario", &e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.tick.is_finite() && self.tick > 0.0 && self.tick <= 0.5) {
            return Err(HarnessError::validation("scenario.tick", "must be in (0, 0.5]"));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(HarnessError::validation("scenario.duration", "must be finite and non-negative"));
        }
        if !self.initial_tank_temp.is_finite() {
            return Err(HarnessError::validation("scenario.initial_tank_temp", "must be finite"));
        }
        Trace::steps(&self.setpoint_schedule).validate("scenario.setpoint_schedule")?;
        self.inflow_temp_trace.validate("scenario.inflow_temp_trace")?;
        self.inflow_rate_trace.validate("scenario.inflow_rate_trace")?;
        if self.inflow_rate_trace.points.iter().any(|(_, v)| *v < 0.0) {
            return Err(HarnessError::validation("scenario.inflow_rate_trace", "inflow rate must be non-negative"));
        }
        if self.noise.inflow_temp_sd < 0.0 || self.noise.inflow_rate_sd < 0.0 {
            return Err(HarnessError::validation("scenario.noise", "standard deviations must be non-negative"));
        }
        if self.triggers.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(HarnessError::validation("scenario.triggers", "must be sorted by time"));
        }
        if self.requests.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(HarnessError::validation("scenario.requests", "must be sorted by time"));
        }
        Ok(())
    }

    pub fn setpoint_at(&self, t: f64) -> f64 {
        Trace::steps(&self.setpoint_schedule).value_at(t)
    }

    pub fn ticks(&self) -> u64 {
        crate::scalar::ticks_in(self.duration, self.tick)
    }
}

/// Deterministic per-tick environment, noise drawn from the scenario seed.
pub struct EnvironmentSource<'a> {
    scenario: &'a Scenario,
    setpoints: Trace,
    rng: ChaCha8Rng,
    temp_noise: Option<Normal<f64>>,
    rate_noise: Option<Normal<f64>>,
}

impl<'a> EnvironmentSource<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let noise = |sd: f64| (sd > 0.0).then(|| Normal::new(0.0, sd).expect("validated sd"));
        Self {
            scenario,
            setpoints: Trace::steps(&scenario.setpoint_schedule),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            temp_noise: noise(scenario.noise.inflow_temp_sd),
            rate_noise: noise(scenario.noise.inflow_rate_sd),
        }
    }

    /// Environment at `t` with the measured outflow filled in.
    pub fn sample(&mut self, t: f64, outflow_temp: f64) -> EnvironmentSample {
        let mut inflow_temp = self.scenario.inflow_temp_trace.value_at(t);
        let mut inflow_rate = self.scenario.inflow_rate_trace.value_at(t);
        if let Some(n) = &self.temp_noise {
            inflow_temp += n.sample(&mut self.rng);
        }
        if let Some(n) = &self.rate_noise {
            inflow_rate = (inflow_rate + n.sample(&mut self.rng)).max(0.0);
        }
        EnvironmentSample {
            time: t,
            inflow_temp,
            inflow_rate,
            setpoint: self.setpoints.value_at(t),
            outflow_temp,
        }
    }
}
