//! Shared domain vocabulary: configurations, adaptation models/options/actions,
//! operational domains, environment samples and the knowledge repository.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::assurance::SafetyCase;
use crate::controller::{NetControllerSpec, PidConfig};
use crate::plant::GuardState;
use crate::scalar::{ticks_in, Scalar};
use crate::spi::SpiWindow;
use crate::taxonomy::AdaptationDescriptor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("malformed interval for `{variable}`: low {low} > high {high}")]
    MalformedInterval {
        variable: String,
        low: f64,
        high: f64,
    },
    #[error("parameter `{0}` is not finite")]
    NonFinite(String),
    #[error("unknown parameter(s) in assignment: {}", .0.join(", "))]
    UnknownParameters(Vec<String>),
    #[error("option `{option}` belongs to model `{found}`, expected `{expected}`")]
    ModelMismatch {
        option: String,
        found: String,
        expected: String,
    },
    #[error("option `{option}` does not satisfy model `{model}`")]
    OptionViolatesModel { option: String, model: String },
    #[error("constraint on `{0}` targets a parameter the model does not list")]
    ConstraintTarget(String),
    #[error("conditional constraint on `{0}` has no condition")]
    MissingCondition(String),
    #[error("model `{0}` declares design-time options but lists none")]
    MissingOptions(String),
    #[error("unknown environment variable `{0}`")]
    UnknownVariable(String),
    #[error("missing controller parameter `{0}`")]
    MissingParameter(String),
    #[error("controller kind `parametric-net` requires a network")]
    MissingNetwork,
    #[error("sample stream is not strictly increasing in time at t={0}")]
    NonMonotoneTime(f64),
    #[error("inflow_rate must be non-negative, got {0}")]
    NegativeInflow(f64),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Pid,
    ParametricNet,
}

/// Active configuration of the managed system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfiguration {
    pub controller_kind: ControllerKind,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Network weights and topology, present for `parametric-net`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetControllerSpec>,
}

impl SystemConfiguration {
    pub fn pid(kp: f64, ki: f64, kd: f64) -> Self {
        let parameters = [("kp", kp), ("ki", ki), ("kd", kd)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        Self {
            controller_kind: ControllerKind::Pid,
            parameters,
            network: None,
        }
    }

    pub fn net(spec: NetControllerSpec) -> Self {
        Self {
            controller_kind: ControllerKind::ParametricNet,
            parameters: BTreeMap::new(),
            network: Some(spec),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in &self.parameters {
            if !value.is_finite() {
                return Err(ModelError::NonFinite(name.clone()));
            }
        }
        match self.controller_kind {
            ControllerKind::Pid => {
                self.pid_config()?;
            }
            ControllerKind::ParametricNet => {
                if self.network.is_none() {
                    return Err(ModelError::MissingNetwork);
                }
            }
        }
        Ok(())
    }

    /// PID gains from the `kp`, `ki`, `kd` parameters.
    pub fn pid_config(&self) -> Result<PidConfig<f64>, ModelError> {
        let get = |name: &str| {
            self.parameters
                .get(name)
                .copied()
                .ok_or_else(|| ModelError::MissingParameter(name.to_string()))
        };
        Ok(PidConfig {
            kp: get("kp")?,
            ki: get("ki")?,
            kd: get("kd")?,
        })
    }
}

// ---------------------------------------------------------------------------
// Intervals and operational domains
// ---------------------------------------------------------------------------

/// Closed interval with optionally unbounded ends.
///
/// Serialized as a two element array, `null` meaning unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T = f64> {
    pub low: Option<T>,
    pub high: Option<T>,
}

impl<T: Scalar> Interval<T> {
    pub fn closed(low: T, high: T) -> Self {
        Self {
            low: Some(low),
            high: Some(high),
        }
    }

    pub fn unbounded() -> Self {
        Self {
            low: None,
            high: None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }

    pub fn is_well_formed(&self) -> bool {
        let finite = self.low.is_none_or(|v| !v.is_nan()) && self.high.is_none_or(|v| !v.is_nan());
        finite
            && match (self.low, self.high) {
                (Some(l), Some(h)) => l <= h,
                _ => true,
            }
    }

    pub fn contains(&self, value: T) -> bool {
        self.low.is_none_or(|l| value >= l) && self.high.is_none_or(|h| value <= h)
    }

    /// `self ⊆ outer`.
    pub fn within(&self, outer: &Interval<T>) -> bool {
        let low_ok = match (self.low, outer.low) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a >= b,
        };
        let high_ok = match (self.high, outer.high) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a <= b,
        };
        low_ok && high_ok
    }
}

impl<T: Scalar> Serialize for Interval<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.low, self.high).serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Interval<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (low, high) = <(Option<T>, Option<T>)>::deserialize(d)?;
        Ok(Self { low, high })
    }
}

/// Environment variables an operational domain may constrain.
pub const ENV_VARIABLES: [&str; 4] = ["inflow_temp", "inflow_rate", "setpoint", "outflow_temp"];

/// Axis-aligned box over named environment variables; a missing axis is
/// unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OperationalDomain<T = f64> {
    #[serde(default)]
    pub bounds: BTreeMap<String, Interval<T>>,
}

impl<T: Scalar> Default for OperationalDomain<T> {
    fn default() -> Self {
        Self {
            bounds: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> OperationalDomain<T> {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn with(mut self, variable: &str, low: T, high: T) -> Self {
        self.bounds
            .insert(variable.to_string(), Interval::closed(low, high));
        self
    }

    pub fn interval(&self, variable: &str) -> Interval<T> {
        self.bounds
            .get(variable)
            .copied()
            .unwrap_or_else(Interval::unbounded)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, iv) in &self.bounds {
            if !iv.is_well_formed() {
                return Err(ModelError::MalformedInterval {
                    variable: name.clone(),
                    low: iv.low.map_or(f64::NEG_INFINITY, Scalar::to_f64_lossy),
                    high: iv.high.map_or(f64::INFINITY, Scalar::to_f64_lossy),
                });
            }
        }
        Ok(())
    }

    /// Rejects axes that do not name a known environment variable.
    pub fn validate_variables(&self) -> Result<(), ModelError> {
        self.validate()?;
        match self
            .bounds
            .keys()
            .find(|k| !ENV_VARIABLES.contains(&k.as_str()))
        {
            Some(k) => Err(ModelError::UnknownVariable(k.clone())),
            None => Ok(()),
        }
    }

    /// Drops axes that carry no bound.
    pub fn normalized(&self) -> Self {
        Self {
            bounds: self
                .bounds
                .iter()
                .filter(|(_, iv)| !iv.is_unbounded())
                .map(|(k, iv)| (k.clone(), *iv))
                .collect(),
        }
    }

    /// Whether the sample lies inside every bounded axis. Unknown axes fail.
    pub fn contains_sample(&self, sample: &EnvironmentSample<T>) -> bool {
        self.bounds
            .iter()
            .all(|(name, iv)| sample.variable(name).is_some_and(|v| iv.contains(v)))
    }
}

/// Containment of operational domains, axis by axis.
pub fn domain_subset<T: Scalar>(
    inner: &OperationalDomain<T>,
    outer: &OperationalDomain<T>,
) -> Result<bool, ModelError> {
    inner.validate()?;
    outer.validate()?;
    Ok(outer
        .bounds
        .iter()
        .all(|(name, outer_iv)| inner.interval(name).within(outer_iv)))
}

// ---------------------------------------------------------------------------
// Adaptation model / option / action
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Interval,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardCondition {
    pub parameter: String,
    pub threshold: f64,
}

/// Bound on one parameter.
///
/// `interval` constraints are closed. `conditional` constraints follow the
/// "P1 > a if P2 > b" form: when the guard parameter strictly exceeds its
/// threshold, the target must lie strictly inside `(low, high)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterConstraint {
    pub kind: ConstraintKind,
    pub target: String,
    #[serde(default)]
    pub low: Option<f64>,
    #[serde(default)]
    pub high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<GuardCondition>,
}

impl ParameterConstraint {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let (Some(l), Some(h)) = (self.low, self.high) {
            if l > h {
                return Err(ModelError::MalformedInterval {
                    variable: self.target.clone(),
                    low: l,
                    high: h,
                });
            }
        }
        if self.kind == ConstraintKind::Conditional && self.condition.is_none() {
            return Err(ModelError::MissingCondition(self.target.clone()));
        }
        Ok(())
    }

    /// Evaluates against a total assignment; missing names count as violated.
    pub fn holds(&self, assignment: &BTreeMap<String, f64>) -> bool {
        let Some(&value) = assignment.get(&self.target) else {
            return false;
        };
        match self.kind {
            ConstraintKind::Interval => {
                self.low.is_none_or(|l| value >= l) && self.high.is_none_or(|h| value <= h)
            }
            ConstraintKind::Conditional => {
                let Some(cond) = &self.condition else {
                    return false;
                };
                let Some(&guard) = assignment.get(&cond.parameter) else {
                    return false;
                };
                if guard > cond.threshold {
                    self.low.is_none_or(|l| value > l) && self.high.is_none_or(|h| value < h)
                } else {
                    true
                }
            }
        }
    }
}

/// A concrete parameter assignment the managing system may apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationOption {
    pub id: String,
    pub model_id: String,
    pub assignment: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<OperationalDomain>,
    #[serde(default)]
    pub design_time_evidence: Vec<String>,
    /// Rise time measured for this option at design time; drives selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_rise_time: Option<f64>,
}

impl AdaptationOption {
    pub fn configuration(&self) -> SystemConfiguration {
        SystemConfiguration {
            controller_kind: ControllerKind::Pid,
            parameters: self.assignment.clone(),
            network: None,
        }
    }
}

/// Parameterized change template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationModel {
    pub id: String,
    pub parameters: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<ParameterConstraint>,
    pub descriptor: AdaptationDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<AdaptationOption>>,
}

impl AdaptationModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        for c in &self.constraints {
            c.validate()?;
            if !self.parameters.contains(&c.target) {
                return Err(ModelError::ConstraintTarget(c.target.clone()));
            }
            if let Some(cond) = &c.condition {
                if !self.parameters.contains(&cond.parameter) {
                    return Err(ModelError::ConstraintTarget(cond.parameter.clone()));
                }
            }
        }
        if self.descriptor.options_enumerated_at_design_time
            && self.options.as_ref().is_none_or(Vec::is_empty)
        {
            return Err(ModelError::MissingOptions(self.id.clone()));
        }
        for option in self.options.iter().flatten() {
            if let Some(domain) = &option.domain {
                domain.validate_variables()?;
            }
            if !option_satisfies_model(option, self)? {
                return Err(ModelError::OptionViolatesModel {
                    option: option.id.clone(),
                    model: self.id.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn option(&self, id: &str) -> Option<&AdaptationOption> {
        self.options.iter().flatten().find(|o| o.id == id)
    }
}

/// Whether `option` is a legal instance of `model`.
pub fn option_satisfies_model(
    option: &AdaptationOption,
    model: &AdaptationModel,
) -> Result<bool, ModelError> {
    if option.model_id != model.id {
        return Err(ModelError::ModelMismatch {
            option: option.id.clone(),
            found: option.model_id.clone(),
            expected: model.id.clone(),
        });
    }
    let unknown: Vec<String> = option
        .assignment
        .keys()
        .filter(|k| !model.parameters.contains(k))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(ModelError::UnknownParameters(unknown));
    }
    if let Some((name, _)) = option.assignment.iter().find(|(_, v)| !v.is_finite()) {
        return Err(ModelError::NonFinite(name.clone()));
    }
    let covers = model
        .parameters
        .iter()
        .all(|p| option.assignment.contains_key(p));
    Ok(covers && model.constraints.iter().all(|c| c.holds(&option.assignment)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostStep {
    UpdateCaseConstraints,
    AttachAssessmentEvidence,
    ResetSpi,
}

/// Executable change plan: ordered parameter writes plus bookkeeping steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationAction {
    pub option_id: String,
    pub steps: Vec<(String, f64)>,
    /// Replacement network for `parametric-net` configurations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetControllerSpec>,
    pub post_steps: Vec<PostStep>,
}

impl AdaptationAction {
    pub fn for_option(option: &AdaptationOption, post_steps: Vec<PostStep>) -> Self {
        Self {
            option_id: option.id.clone(),
            steps: option
                .assignment
                .iter()
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            network: None,
            post_steps,
        }
    }

    pub fn for_network(option_id: &str, spec: NetControllerSpec, post_steps: Vec<PostStep>) -> Self {
        Self {
            option_id: option_id.to_string(),
            steps: Vec::new(),
            network: Some(spec),
            post_steps,
        }
    }

    /// Builds the successor configuration without touching `current`.
    pub fn apply(&self, current: &SystemConfiguration) -> SystemConfiguration {
        let mut next = current.clone();
        for (name, value) in &self.steps {
            next.parameters.insert(name.clone(), *value);
        }
        if let Some(net) = &self.network {
            next.controller_kind = ControllerKind::ParametricNet;
            next.network = Some(net.clone());
        }
        next
    }
}

// ---------------------------------------------------------------------------
// Environment samples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EnvironmentSample<T = f64> {
    pub time: T,
    pub inflow_temp: T,
    pub inflow_rate: T,
    pub setpoint: T,
    pub outflow_temp: T,
}

impl<T: Scalar> EnvironmentSample<T> {
    pub fn variable(&self, name: &str) -> Option<T> {
        match name {
            "inflow_temp" => Some(self.inflow_temp),
            "inflow_rate" => Some(self.inflow_rate),
            "setpoint" => Some(self.setpoint),
            "outflow_temp" => Some(self.outflow_temp),
            _ => None,
        }
    }
}

/// Checks time ordering and non-negative inflow across a stream.
pub fn validate_stream<T: Scalar>(samples: &[EnvironmentSample<T>]) -> Result<(), ModelError> {
    let mut last: Option<T> = None;
    for s in samples {
        if s.time < T::zero() || last.is_some_and(|t| s.time <= t) {
            return Err(ModelError::NonMonotoneTime(s.time.to_f64_lossy()));
        }
        if s.inflow_rate < T::zero() {
            return Err(ModelError::NegativeInflow(s.inflow_rate.to_f64_lossy()));
        }
        last = Some(s.time);
    }
    Ok(())
}

/// Bounded history of samples, oldest evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRing {
    capacity: usize,
    samples: VecDeque<EnvironmentSample>,
}

impl SampleRing {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            samples: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    /// Ring sized for one hour at `tick`.
    pub fn one_hour(tick: f64) -> Self {
        Self::new(ticks_in(3600.0, tick) as usize + 1)
    }

    pub fn push(&mut self, sample: EnvironmentSample) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest(&self) -> Option<&EnvironmentSample> {
        self.samples.back()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &EnvironmentSample> + ExactSizeIterator {
        self.samples.iter()
    }

    /// Samples with `time >= from`, oldest first.
    pub fn since(&self, from: f64) -> Vec<EnvironmentSample> {
        let start = self.samples.partition_point(|s| s.time < from);
        self.samples.range(start..).copied().collect()
    }
}

// ---------------------------------------------------------------------------
// Knowledge repository
// ---------------------------------------------------------------------------

/// Shared state of the managing system. Single writer: the simulation loop.
#[derive(Debug, Clone)]
pub struct KnowledgeRepository {
    pub current_config: SystemConfiguration,
    pub sample_history: SampleRing,
    pub safety_case: SafetyCase,
    pub spi_windows: Vec<SpiWindow>,
    pub active_option_id: String,
    /// Configuration restored by the fail-safe action.
    pub baseline_config: SystemConfiguration,
    pub baseline_option_id: String,
    /// Last observed safety monitor state.
    pub guard: GuardState,
    /// Bumped whenever the configuration changes; controllers reset on change.
    pub config_epoch: u64,
}

impl KnowledgeRepository {
    pub fn new(
        config: SystemConfiguration,
        option_id: &str,
        safety_case: SafetyCase,
        spi_windows: Vec<SpiWindow>,
        tick: f64,
    ) -> Self {
        Self {
            baseline_config: config.clone(),
            baseline_option_id: option_id.to_string(),
            current_config: config,
            sample_history: SampleRing::one_hour(tick),
            safety_case,
            spi_windows,
            active_option_id: option_id.to_string(),
            guard: GuardState::default(),
            config_epoch: 0,
        }
    }

    pub fn latest_sample(&self) -> Option<&EnvironmentSample> {
        self.sample_history.latest()
    }

    pub fn spi_breached(&self) -> bool {
        self.spi_windows.iter().any(SpiWindow::breached)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControllerKind::Pid => f.write_str("pid"),
            ControllerKind::ParametricNet => f.write_str("parametric-net"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{AdaptationDescriptor, DesignTimeSafety};
    use proptest::prelude::*;

    fn cond_model() -> AdaptationModel {
        AdaptationModel {
            id: "A1".into(),
            parameters: vec!["P1".into(), "P2".into()],
            constraints: vec![ParameterConstraint {
                kind: ConstraintKind::Conditional,
                target: "P1".into(),
                low: Some(1.0),
                high: None,
                condition: Some(GuardCondition {
                    parameter: "P2".into(),
                    threshold: 0.0,
                }),
            }],
            descriptor: AdaptationDescriptor {
                affects_safety_critical: true,
                independence_argued: false,
                options_enumerated_at_design_time: false,
                design_time_safety: DesignTimeSafety::None,
                domain_constraints_declared: false,
                runtime_assessment_declared: true,
                case_in_knowledge_repo: true,
            },
            options: None,
        }
    }

    fn option(p1: f64, p2: f64) -> AdaptationOption {
        AdaptationOption {
            id: "o".into(),
            model_id: "A1".into(),
            assignment: [("P1".to_string(), p1), ("P2".to_string(), p2)].into(),
            domain: None,
            design_time_evidence: vec![],
            design_rise_time: None,
        }
    }

    #[test]
    fn conditional_constraint_examples() {
        let m = cond_model();
        assert!(option_satisfies_model(&option(2.0, 1.0), &m).unwrap());
        assert!(!option_satisfies_model(&option(0.5, 1.0), &m).unwrap());
        assert!(option_satisfies_model(&option(0.5, -1.0), &m).unwrap());
    }

    #[test]
    fn unknown_parameter_is_named() {
        let m = cond_model();
        let mut o = option(2.0, 1.0);
        o.assignment.insert("P9".into(), 0.0);
        assert_eq!(
            option_satisfies_model(&o, &m),
            Err(ModelError::UnknownParameters(vec!["P9".into()]))
        );
    }

    #[test]
    fn partial_assignment_is_rejected() {
        let m = cond_model();
        let mut o = option(2.0, 1.0);
        o.assignment.remove("P2");
        assert!(!option_satisfies_model(&o, &m).unwrap());
    }

    #[test]
    fn domain_subset_examples() {
        let inner = OperationalDomain::unbounded()
            .with("inflow_temp", -10.0, 2.0)
            .with("inflow_rate", 0.2, 1.0);
        let outer = OperationalDomain::unbounded()
            .with("inflow_temp", -10.0, 40.0)
            .with("inflow_rate", 0.01, 1.0);
        assert!(domain_subset(&inner, &outer).unwrap());
        assert!(domain_subset(&outer, &outer).unwrap());
        let wide = OperationalDomain::unbounded().with("inflow_temp", -10.0, 40.0);
        let narrow = OperationalDomain::unbounded().with("inflow_temp", -10.0, 2.0);
        assert!(!domain_subset(&wide, &narrow).unwrap());
    }

    #[test]
    fn unbounded_axes() {
        let free = OperationalDomain::<f64>::unbounded();
        let box_ = OperationalDomain::unbounded().with("inflow_temp", 0.0, 1.0);
        assert!(domain_subset(&box_, &free).unwrap());
        assert!(!domain_subset(&free, &box_).unwrap());
    }

    #[test]
    fn malformed_interval_is_an_error() {
        let bad = OperationalDomain::unbounded().with("inflow_temp", 3.0, 1.0);
        let ok = OperationalDomain::unbounded();
        assert!(matches!(
            domain_subset(&bad, &ok),
            Err(ModelError::MalformedInterval { .. })
        ));
    }

    #[test]
    fn interval_json_uses_null_for_unbounded() {
        let d = OperationalDomain {
            bounds: [(
                "inflow_temp".to_string(),
                Interval {
                    low: None,
                    high: Some(2.0),
                },
            )]
            .into(),
        };
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"bounds":{"inflow_temp":[null,2.0]}}"#);
        let back: OperationalDomain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn action_steps_reproduce_assignment() {
        let o = option(2.0, 1.0);
        let action = AdaptationAction::for_option(&o, vec![]);
        let cfg = SystemConfiguration::pid(1.0, 0.0, 0.0);
        let next = action.apply(&cfg);
        for (k, v) in &o.assignment {
            assert_eq!(next.parameters[k], *v);
        }
        assert_eq!(cfg.parameters["kp"], 1.0);
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut ring = SampleRing::new(3);
        for i in 0..5 {
            ring.push(EnvironmentSample {
                time: i as f64,
                inflow_temp: 0.0,
                inflow_rate: 0.0,
                setpoint: 0.0,
                outflow_temp: 0.0,
            });
        }
        assert_eq!(ring.len(), 3);
        assert_eq!(ring.iter().next().unwrap().time, 2.0);
        assert_eq!(ring.since(3.0).len(), 2);
        assert!(SampleRing::one_hour(0.1).capacity() >= 36_000);
    }

    fn arb_interval() -> impl Strategy<Value = Interval<f64>> {
        (
            prop::option::of(-50i32..50),
            prop::option::of(-50i32..50),
        )
            .prop_map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Interval::closed(a.min(b) as f64, a.max(b) as f64),
                (a, b) => Interval {
                    low: a.map(f64::from),
                    high: b.map(f64::from),
                },
            })
    }

    fn arb_domain() -> impl Strategy<Value = OperationalDomain<f64>> {
        prop::collection::btree_map(
            prop::sample::select(vec!["inflow_temp".to_string(), "inflow_rate".to_string()]),
            arb_interval(),
            0..=2,
        )
        .prop_map(|bounds| OperationalDomain { bounds })
    }

    proptest! {
        #[test]
        fn subset_is_reflexive(d in arb_domain()) {
            prop_assert!(domain_subset(&d, &d).unwrap());
        }

        #[test]
        fn subset_is_antisymmetric(a in arb_domain(), b in arb_domain()) {
            if domain_subset(&a, &b).unwrap() && domain_subset(&b, &a).unwrap() {
                prop_assert_eq!(a.normalized(), b.normalized());
            }
        }

        #[test]
        fn subset_is_transitive(a in arb_domain(), b in arb_domain(), c in arb_domain()) {
            if domain_subset(&a, &b).unwrap() && domain_subset(&b, &c).unwrap() {
                prop_assert!(domain_subset(&a, &c).unwrap());
            }
        }

        #[test]
        fn domain_round_trips(d in arb_domain()) {
            let json = serde_json::to_string(&d).unwrap();
            let back: OperationalDomain = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
