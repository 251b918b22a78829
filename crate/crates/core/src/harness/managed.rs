//! The managed system on its own: plant, safety monitor and active controller
//! advanced together one tick at a time.

use serde::{Deserialize, Serialize};

use crate::controller::{net_compute, net_inputs, pid_compute, PidState};
use crate::harness::scenario::{EnvironmentSource, Scenario};
use crate::harness::HarnessError;
use crate::mapek::{AdaptationGoal, GoalMonitor, RiseRecord};
use crate::model::{ControllerKind, EnvironmentSample, SystemConfiguration};
use crate::plant::{guard_step, hazard_update, plant_step, GuardState, PlantParams, PlantState};

/// Transient controller state; reset whenever the configuration epoch moves.
#[derive(Debug, Clone, Default)]
pub struct ControllerRuntime {
    pid: PidState,
    last_outflow: Option<f64>,
    epoch: u64,
}

impl ControllerRuntime {
    pub fn power(
        &mut self,
        config: &SystemConfiguration,
        epoch: u64,
        sample: &EnvironmentSample,
        tick: f64,
        max_power: f64,
    ) -> Result<f64, HarnessError> {
        if epoch != self.epoch {
            self.pid = PidState::reset();
            self.epoch = epoch;
        }
        let slope = self
            .last_outflow
            .map_or(0.0, |prev| (sample.outflow_temp - prev) / tick);
        self.last_outflow = Some(sample.outflow_temp);
        let power = match config.controller_kind {
            ControllerKind::Pid => {
                let cfg = config.pid_config()?;
                let (p, st) = pid_compute(&cfg, &self.pid, sample.setpoint, sample.outflow_temp, tick, max_power);
                self.pid = st;
                p
            }
            ControllerKind::ParametricNet => {
                let spec = config.network.as_ref().ok_or(crate::model::ModelError::MissingNetwork)?;
                let x = net_inputs(
                    sample.setpoint,
                    sample.outflow_temp,
                    sample.inflow_temp,
                    sample.inflow_rate,
                    slope,
                );
                net_compute(spec, &x, max_power)?
            }
        };
        if !power.is_finite() {
            return Err(HarnessError::Fault(format!(
                "controller produced non-finite power at t={}",
                sample.time
            )));
        }
        Ok(power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub power: f64,
    pub valve_open: bool,
    pub guard_tripped: bool,
    pub guard_tripped_now: bool,
}

#[derive(Debug, Clone)]
pub struct ManagedSystem {
    pub params: PlantParams,
    pub state: PlantState,
    pub guard: GuardState,
    pub controller: ControllerRuntime,
}

impl ManagedSystem {
    pub fn new(params: PlantParams, initial_temp: f64, guard_enabled: bool) -> Self {
        Self {
            params,
            state: PlantState::new(initial_temp),
            guard: GuardState::new(guard_enabled),
            controller: ControllerRuntime::default(),
        }
    }

    /// guard -> control -> plant -> hazard for one tick.
    pub fn step(
        &mut self,
        sample: &EnvironmentSample,
        config: &SystemConfiguration,
        epoch: u64,
    ) -> Result<TickRecord, HarnessError> {
        let was_tripped = self.guard.tripped;
        let (guard, overrides) = guard_step(&self.guard, &self.state, sample.time);
        self.guard = guard;
        let commanded = self
            .controller
            .power(config, epoch, sample, self.params.tick, self.params.max_power)?;
        let (power, valve_open) = overrides.apply(commanded, true);
        self.state.valve_open = valve_open;
        self.state = plant_step(&self.state, &self.params, sample, power)?;
        self.state = hazard_update(&self.state, &self.params);
        Ok(TickRecord {
            power: self.state.power_cmd,
            valve_open,
            guard_tripped: self.guard.tripped,
            guard_tripped_now: self.guard.tripped && !was_tripped,
        })
    }
}

/// Outcome of running one scenario with a fixed configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManagedRun {
    pub scenario_id: String,
    pub hazard_count: u64,
    pub rises: Vec<RiseRecord>,
    pub goal_met: bool,
    pub max_outflow: f64,
    pub fault: Option<String>,
}

/// Runs `scenario` open-loop with respect to the managing system.
///
/// `guard_enabled` overrides the scenario's own flag. With `stop_on_hazard`
/// the run ends at the first completed hazard episode.
pub fn run_managed(
    scenario: &Scenario,
    params: &PlantParams,
    config: &SystemConfiguration,
    goal: &AdaptationGoal,
    guard_enabled: bool,
    stop_on_hazard: bool,
) -> ManagedRun {
    let params = PlantParams {
        tick: scenario.tick,
        ..*params
    };
    let mut sys = ManagedSystem::new(params, scenario.initial_tank_temp, guard_enabled);
    let mut env = EnvironmentSource::new(scenario);
    let mut goal_monitor = GoalMonitor::new(*goal);
    let mut max_outflow = f64::NEG_INFINITY;
    let mut fault = None;
    for k in 0..scenario.ticks() {
        let t = k as f64 * scenario.tick;
        let sample = env.sample(t, sys.state.outflow_temp());
        max_outflow = max_outflow.max(sample.outflow_temp);
        goal_monitor.observe(&sample);
        if let Err(e) = sys.step(&sample, config, 0) {
            fault = Some(e.to_string());
            break;
        }
        if stop_on_hazard && sys.state.hazard_count > 0 {
            break;
        }
    }
    let end = scenario.ticks() as f64 * scenario.tick;
    let rises = goal_monitor.finish(end);
    let goal_met = fault.is_none() && rises.iter().all(|r| !r.violation);
    ManagedRun {
        scenario_id: scenario.id.clone(),
        hazard_count: sys.state.hazard_count,
        rises,
        goal_met,
        max_outflow,
        fault,
    }
}
