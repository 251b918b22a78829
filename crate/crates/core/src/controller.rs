//! Managed-system control laws: a positional PID with clamped anti-windup and
//! a small feed-forward network whose output is squashed into `[0, max_power]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("network expects {expected} weights for layers {layers:?}, got {found}")]
    WeightCount {
        layers: Vec<usize>,
        expected: usize,
        found: usize,
    },
    #[error("layer sizes must be positive, got {0:?}")]
    EmptyLayer(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PidConfig<T = f64> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PidState<T = f64> {
    /// Accumulated error, °C·s.
    pub integral: T,
    pub prev_error: T,
}

impl<T: Scalar> PidState<T> {
    pub fn reset() -> Self {
        Self {
            integral: T::zero(),
            prev_error: T::zero(),
        }
    }
}

/// Integrator behaviour while the output is saturated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Windup {
    /// Freeze the integral whenever the clamp is active.
    Clamped,
    /// Always integrate. Only useful to demonstrate windup.
    Unprotected,
}

pub fn pid_compute<T: Scalar>(
    cfg: &PidConfig<T>,
    st: &PidState<T>,
    setpoint: T,
    measured: T,
    tick: T,
    max_power: T,
) -> (T, PidState<T>) {
    pid_compute_with(cfg, st, setpoint, measured, tick, max_power, Windup::Clamped)
}

pub fn pid_compute_with<T: Scalar>(
    cfg: &PidConfig<T>,
    st: &PidState<T>,
    setpoint: T,
    measured: T,
    tick: T,
    max_power: T,
    windup: Windup,
) -> (T, PidState<T>) {
    let error = setpoint - measured;
    let integral = st.integral + error * tick;
    let derivative = (error - st.prev_error) / tick;
    let raw = cfg.kp * error + cfg.ki * integral + cfg.kd * derivative;
    let power = if raw.is_nan() {
        T::zero()
    } else {
        raw.max(T::zero()).min(max_power)
    };
    let saturated = raw.is_nan() || raw < T::zero() || raw > max_power;
    let integral = match windup {
        Windup::Clamped if saturated => st.integral,
        _ => integral,
    };
    (
        power,
        PidState {
            integral,
            prev_error: error,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetHyper {
    /// Hidden layer sizes, input side first.
    pub layers: Vec<usize>,
    pub activation: Activation,
}

/// Number of network inputs.
pub const NET_INPUTS: usize = 5;

/// Topology plus flat weights. Each layer stores, per output unit, its input
/// weights followed by its bias; the final layer has one logistic unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetControllerSpec<T = f64> {
    pub hyper: NetHyper,
    pub weights: Vec<T>,
}

/// Weights required by a topology with [`NET_INPUTS`] inputs and one output.
pub fn weight_count(layers: &[usize]) -> usize {
    let mut fan_in = NET_INPUTS;
    let mut total = 0;
    for &size in layers.iter().chain(std::iter::once(&1)) {
        total += (fan_in + 1) * size;
        fan_in = size;
    }
    total
}

impl<T: Scalar> NetControllerSpec<T> {
    pub fn zeros(layers: Vec<usize>) -> Self {
        Self::zeros_with(NetHyper {
            layers,
            activation: Activation::Tanh,
        })
    }

    pub fn zeros_with(hyper: NetHyper) -> Self {
        let n = weight_count(&hyper.layers);
        Self {
            hyper,
            weights: vec![T::zero(); n],
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.hyper.layers.contains(&0) {
            return Err(ControllerError::EmptyLayer(self.hyper.layers.clone()));
        }
        let expected = weight_count(&self.hyper.layers);
        if expected != self.weights.len() {
            return Err(ControllerError::WeightCount {
                layers: self.hyper.layers.clone(),
                expected,
                found: self.weights.len(),
            });
        }
        Ok(())
    }
}

/// Network input vector from plant signals.
///
/// Temperatures are divided by 100 °C so that typical values stay inside the
/// responsive range of `tanh`; flow (L/s) and the temperature slope (K/s) are
/// passed through.
pub fn net_inputs<T: Scalar>(
    setpoint: T,
    outflow_temp: T,
    inflow_temp: T,
    inflow_rate: T,
    outflow_slope: T,
) -> [T; NET_INPUTS] {
    let scale = T::lit(100.0);
    [
        setpoint / scale,
        outflow_temp / scale,
        inflow_temp / scale,
        inflow_rate,
        outflow_slope,
    ]
}

fn logistic<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Feed-forward evaluation: tanh hidden units, logistic output scaled by
/// `max_power`.
pub fn net_compute<T: Scalar>(
    spec: &NetControllerSpec<T>,
    inputs: &[T; NET_INPUTS],
    max_power: T,
) -> Result<T, ControllerError> {
    spec.validate()?;
    let mut activations: Vec<T> = inputs.to_vec();
    let mut offset = 0;
    let depth = spec.hyper.layers.len();
    for (layer, &size) in spec.hyper.layers.iter().chain(std::iter::once(&1)).enumerate() {
        let fan_in = activations.len();
        let mut next = Vec::with_capacity(size);
        for _ in 0..size {
            let w = &spec.weights[offset..offset + fan_in + 1];
            let pre = activations
                .iter()
                .zip(w)
                .fold(w[fan_in], |acc, (a, wi)| acc + *a * *wi);
            next.push(if layer == depth {
                logistic(pre)
            } else {
                match spec.hyper.activation {
                    Activation::Tanh => pre.tanh(),
                }
            });
            offset += fan_in + 1;
        }
        activations = next;
    }
    Ok(activations[0] * max_power)
}
