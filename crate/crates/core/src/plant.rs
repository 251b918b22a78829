//! Well-mixed water-heater tank, hazard accounting and the independent
//! safety monitor that closes the valve and cuts power.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::EnvironmentSample;
use crate::scalar::{ticks_exceed, Scalar};

/// Outflow temperature above which water is hazardous.
pub const HAZARD_TEMP: f64 = 90.0;
/// Duration the hazardous temperature must be exceeded to count as a hazard.
pub const HAZARD_DURATION: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("plant parameter `{0}` must be strictly positive and finite")]
    NonPositive(&'static str),
    #[error("tick {0} s exceeds 0.5 s; the hazard window must span at least four ticks")]
    TickTooLong(f64),
    #[error("simulation fault: non-finite {0}")]
    SimulationFault(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlantParams<T = f64> {
    /// L
    pub volume: T,
    /// kg/L
    pub density: T,
    /// J/(kg K)
    pub specific_heat: T,
    /// W
    pub max_power: T,
    /// s
    pub tick: T,
}

impl<T: Scalar> Default for PlantParams<T> {
    fn default() -> Self {
        Self {
            volume: T::lit(50.0),
            density: T::lit(1.0),
            specific_heat: T::lit(4186.0),
            max_power: T::lit(10_000.0),
            tick: T::lit(0.1),
        }
    }
}

impl<T: Scalar> PlantParams<T> {
    pub fn validate(&self) -> Result<(), PlantError> {
        let fields = [
            ("volume", self.volume),
            ("density", self.density),
            ("specific_heat", self.specific_heat),
            ("max_power", self.max_power),
            ("tick", self.tick),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > T::zero()) {
                return Err(PlantError::NonPositive(name));
            }
        }
        if self.tick > T::lit(0.5) {
            return Err(PlantError::TickTooLong(self.tick.to_f64_lossy()));
        }
        Ok(())
    }

    /// Heat capacity of the tank contents, J/K.
    pub fn heat_capacity(&self) -> T {
        self.density * self.specific_heat * self.volume
    }

    pub fn clamp_power(&self, power: T) -> T {
        power.max(T::zero()).min(self.max_power)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlantState<T = f64> {
    pub tank_temp: T,
    pub valve_open: bool,
    pub power_cmd: T,
    /// Contiguous time the outflow has been hazardous, s.
    pub hazard_accum: T,
    pub hazard_count: u64,
    /// Ticks in the current hazardous episode; `hazard_accum` is derived.
    #[serde(default)]
    pub hazard_ticks: u64,
}

impl<T: Scalar> PlantState<T> {
    pub fn new(tank_temp: T) -> Self {
        Self {
            tank_temp,
            valve_open: true,
            power_cmd: T::zero(),
            hazard_accum: T::zero(),
            hazard_count: 0,
            hazard_ticks: 0,
        }
    }

    /// The tank is well mixed, so the outflow leaves at tank temperature.
    pub fn outflow_temp(&self) -> T {
        self.tank_temp
    }
}

/// Time derivative of tank temperature, K/s.
pub fn tank_derivative<T: Scalar>(
    tank_temp: T,
    valve_open: bool,
    params: &PlantParams<T>,
    inflow_temp: T,
    inflow_rate: T,
    power: T,
) -> T {
    let flow = if valve_open { inflow_rate } else { T::zero() };
    flow / params.volume * (inflow_temp - tank_temp) + power / params.heat_capacity()
}

/// Advances the tank one explicit-Euler tick.
pub fn plant_step<T: Scalar>(
    state: &PlantState<T>,
    params: &PlantParams<T>,
    env: &EnvironmentSample<T>,
    power_in: T,
) -> Result<PlantState<T>, PlantError> {
    if !state.tank_temp.is_finite() {
        return Err(PlantError::SimulationFault("tank temperature"));
    }
    if !env.inflow_temp.is_finite() || !env.inflow_rate.is_finite() {
        return Err(PlantError::SimulationFault("environment input"));
    }
    if !power_in.is_finite() {
        return Err(PlantError::SimulationFault("power command"));
    }
    let power = params.clamp_power(power_in);
    let rate = env.inflow_rate.max(T::zero());
    let dtdt = tank_derivative(
        state.tank_temp,
        state.valve_open,
        params,
        env.inflow_temp,
        rate,
        power,
    );
    let tank_temp = state.tank_temp + dtdt * params.tick;
    if !tank_temp.is_finite() {
        return Err(PlantError::SimulationFault("tank temperature"));
    }
    Ok(PlantState {
        tank_temp,
        power_cmd: power,
        ..*state
    })
}

/// Hazard bookkeeping, called once per tick after [`plant_step`].
pub fn hazard_update<T: Scalar>(state: &PlantState<T>, params: &PlantParams<T>) -> PlantState<T> {
    let mut next = *state;
    if state.outflow_temp() > T::lit(HAZARD_TEMP) && state.valve_open {
        next.hazard_ticks += 1;
        let limit = T::lit(HAZARD_DURATION);
        if ticks_exceed(next.hazard_ticks, params.tick, limit)
            && !ticks_exceed(next.hazard_ticks - 1, params.tick, limit)
        {
            next.hazard_count += 1;
        }
    } else {
        next.hazard_ticks = 0;
    }
    next.hazard_accum = T::from_u64(next.hazard_ticks).unwrap_or_else(T::zero) * params.tick;
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GuardState<T = f64> {
    pub enabled: bool,
    /// Latched until [`GuardState::manual_reset`].
    pub tripped: bool,
    pub trip_time: Option<T>,
    /// Over-limit outflow seen on the previous evaluation; actuation follows
    /// one tick later.
    #[serde(default)]
    pub detected: bool,
}

impl<T: Scalar> Default for GuardState<T> {
    fn default() -> Self {
        Self::new(true)
    }
}

impl<T: Scalar> GuardState<T> {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            tripped: false,
            trip_time: None,
            detected: false,
        }
    }

    pub fn manual_reset(&mut self) {
        self.tripped = false;
        self.trip_time = None;
        self.detected = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GuardOverrides {
    pub power_zeroed: bool,
    pub valve_closed: bool,
}

impl GuardOverrides {
    /// Applies the overrides to a commanded power and valve position.
    pub fn apply<T: Scalar>(&self, power: T, valve_open: bool) -> (T, bool) {
        (
            if self.power_zeroed { T::zero() } else { power },
            valve_open && !self.valve_closed,
        )
    }
}

/// One evaluation of the safety monitor at time `now`.
///
/// Detection of an over-limit outflow arms the monitor; it trips on the next
/// evaluation and then latches.
pub fn guard_step<T: Scalar>(
    guard: &GuardState<T>,
    state: &PlantState<T>,
    now: T,
) -> (GuardState<T>, GuardOverrides) {
    let mut next = *guard;
    if next.enabled && !next.tripped {
        if next.detected {
            next.tripped = true;
            next.trip_time = Some(now);
        } else if state.outflow_temp() > T::lit(HAZARD_TEMP) {
            next.detected = true;
        }
    }
    let overrides = if next.tripped {
        GuardOverrides {
            power_zeroed: true,
            valve_closed: true,
        }
    } else {
        GuardOverrides::default()
    };
    (next, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn env(t_in: f64, q: f64) -> EnvironmentSample {
        EnvironmentSample {
            time: 0.0,
            inflow_temp: t_in,
            inflow_rate: q,
            setpoint: 0.0,
            outflow_temp: 0.0,
        }
    }

    /// Same ODE integrated with 100 sub-steps per tick.
    fn fine_oracle(t0: f64, t_in: f64, q: f64, power: f64, p: &PlantParams) -> f64 {
        let h = p.tick / 100.0;
        let mut t = t0;
        for _ in 0..100 {
            t += h * (q / p.volume * (t_in - t) + power / (p.density * p.specific_heat * p.volume));
        }
        t
    }

    #[test]
    fn steady_state_hand_example() {
        let p = PlantParams::default();
        let s = PlantState::new(20.0);
        let next = plant_step(&s, &p, &env(10.0, 0.1), 4186.0).unwrap();
        assert_abs_diff_eq!(next.tank_temp, 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fine_oracle(20.0, 10.0, 0.1, 4186.0, &p), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn net_heating_hand_example() {
        let p = PlantParams::default();
        let s = PlantState::new(20.0);
        let next = plant_step(&s, &p, &env(10.0, 0.1), 8372.0).unwrap();
        assert_abs_diff_eq!(next.tank_temp, 20.002, epsilon = 1e-9);
        assert_abs_diff_eq!(
            fine_oracle(20.0, 10.0, 0.1, 8372.0, &p),
            20.002,
            epsilon = 1e-6
        );
    }

    #[test]
    fn equilibrium_holds_in_f32() {
        let p = PlantParams::<f32>::default();
        let mut s = PlantState::new(20.0_f32);
        let e = EnvironmentSample {
            time: 0.0_f32,
            inflow_temp: 20.0,
            inflow_rate: 0.1,
            setpoint: 0.0,
            outflow_temp: 0.0,
        };
        for _ in 0..1000 {
            s = plant_step(&s, &p, &e, 0.0).unwrap();
        }
        assert_eq!(s.tank_temp, 20.0);
    }

    #[test]
    fn closed_valve_stops_inflow_exchange() {
        let p = PlantParams::default();
        let mut s = PlantState::new(50.0);
        s.valve_open = false;
        let next = plant_step(&s, &p, &env(10.0, 1.0), 0.0).unwrap();
        assert_eq!(next.tank_temp, 50.0);
    }

    #[test]
    fn power_is_clamped() {
        let p = PlantParams::default();
        let s = PlantState::new(20.0);
        let next = plant_step(&s, &p, &env(20.0, 0.0), 1e9).unwrap();
        assert_eq!(next.power_cmd, 10_000.0);
        let next = plant_step(&s, &p, &env(20.0, 0.0), -5.0).unwrap();
        assert_eq!(next.power_cmd, 0.0);
    }

    #[test]
    fn non_finite_input_is_a_fault() {
        let p = PlantParams::default();
        let s = PlantState::new(20.0);
        assert!(plant_step(&s, &p, &env(f64::NAN, 0.1), 0.0).is_err());
        assert!(plant_step(&s, &p, &env(10.0, 0.1), f64::INFINITY).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(PlantParams::<f64>::default().validate().is_ok());
        let p = PlantParams {
            tick: 0.6,
            ..PlantParams::default()
        };
        assert_eq!(p.validate(), Err(PlantError::TickTooLong(0.6)));
        let p = PlantParams {
            volume: 0.0,
            ..PlantParams::default()
        };
        assert_eq!(p.validate(), Err(PlantError::NonPositive("volume")));
    }

    fn run_hazard(temps: &[f64]) -> PlantState {
        let p = PlantParams::default();
        let mut s = PlantState::new(0.0);
        for &t in temps {
            s.tank_temp = t;
            s = hazard_update(&s, &p);
        }
        s
    }

    #[test]
    fn hazard_after_twenty_one_ticks() {
        let s = run_hazard(&[91.0; 21]);
        assert_eq!(s.hazard_count, 1);
        assert_abs_diff_eq!(s.hazard_accum, 2.1, epsilon = 1e-9);
    }

    #[test]
    fn no_hazard_for_short_episode() {
        let mut temps = vec![91.0; 19];
        temps.push(85.0);
        let s = run_hazard(&temps);
        assert_eq!(s.hazard_count, 0);
        assert_eq!(s.hazard_accum, 0.0);
    }

    #[test]
    fn exactly_two_seconds_is_not_a_hazard() {
        assert_eq!(run_hazard(&[91.0; 20]).hazard_count, 0);
    }

    #[test]
    fn boundary_temperature_is_not_hazardous() {
        assert_eq!(run_hazard(&[90.0; 500]).hazard_count, 0);
    }

    #[test]
    fn one_count_per_episode() {
        let mut temps = vec![91.0; 100];
        temps.push(50.0);
        temps.extend([91.0; 30]);
        assert_eq!(run_hazard(&temps).hazard_count, 2);
    }

    #[test]
    fn closed_valve_is_not_hazardous() {
        let p = PlantParams::default();
        let mut s = PlantState::new(95.0);
        s.valve_open = false;
        for _ in 0..100 {
            s = hazard_update(&s, &p);
        }
        assert_eq!(s.hazard_count, 0);
    }

    #[test]
    fn guard_trips_one_tick_after_detection() {
        let g = GuardState::new(true);
        let s = PlantState::new(90.5);
        let (g, o) = guard_step(&g, &s, 100.0);
        assert!(!g.tripped && g.detected);
        assert_eq!(o, GuardOverrides::default());
        let (g, o) = guard_step(&g, &s, 100.1);
        assert!(g.tripped);
        assert_eq!(g.trip_time, Some(100.1));
        assert!(o.power_zeroed && o.valve_closed);
    }

    #[test]
    fn guard_latches_until_reset() {
        let mut g = GuardState::new(true);
        let hot = PlantState::new(95.0);
        let cold = PlantState::new(50.0);
        for t in [0.0, 0.1] {
            g = guard_step(&g, &hot, t).0;
        }
        for i in 0..100 {
            let (next, o) = guard_step(&g, &cold, 0.2 + i as f64 * 0.1);
            assert!(next.tripped && o.valve_closed && o.power_zeroed);
            g = next;
        }
        g.manual_reset();
        let (g, o) = guard_step(&g, &cold, 20.0);
        assert!(!g.tripped);
        assert_eq!(o, GuardOverrides::default());
    }

    #[test]
    fn guard_state_machine_enumeration() {
        // Every (enabled, tripped, detected) x (hot, cold) transition.
        for enabled in [false, true] {
            for tripped in [false, true] {
                for detected in [false, true] {
                    for hot in [false, true] {
                        let g = GuardState {
                            enabled,
                            tripped,
                            trip_time: tripped.then_some(0.0),
                            detected,
                        };
                        let s = PlantState::new(if hot { 95.0 } else { 50.0 });
                        let (n, o) = guard_step(&g, &s, 1.0);
                        if tripped {
                            assert!(n.tripped, "latched state must persist");
                        }
                        if !enabled {
                            assert_eq!(n.tripped, tripped);
                        }
                        if enabled && !tripped {
                            assert_eq!(n.tripped, detected);
                        }
                        assert_eq!(o.valve_closed, n.tripped);
                        assert_eq!(o.power_zeroed, n.tripped);
                    }
                }
            }
        }
    }

    #[test]
    fn disabled_guard_never_trips() {
        let mut g = GuardState::new(false);
        let s = PlantState::new(99.0);
        for i in 0..50 {
            g = guard_step(&g, &s, i as f64).0;
        }
        assert!(!g.tripped);
    }

    proptest! {
        #[test]
        fn unpowered_tank_converges_monotonically(t0 in -10.0f64..100.0, t_in in -10.0f64..40.0, q in 0.01f64..1.0) {
            let p = PlantParams::default();
            let e = env(t_in, q);
            let mut s = PlantState::new(t0);
            let mut gap = (t0 - t_in).abs();
            for _ in 0..2000 {
                s = plant_step(&s, &p, &e, 0.0).unwrap();
                let g = (s.tank_temp - t_in).abs();
                prop_assert!(g <= gap + 1e-12);
                gap = g;
            }
        }

        #[test]
        fn heating_never_cools_below_inputs(t0 in 0.0f64..80.0, t_in in 0.0f64..40.0, powers in prop::collection::vec(0.0f64..10_000.0, 50)) {
            let p = PlantParams::default();
            let e = env(t_in, 0.5);
            let floor = t0.min(t_in);
            let mut s = PlantState::new(t0);
            for power in powers {
                for _ in 0..20 {
                    s = plant_step(&s, &p, &e, power).unwrap();
                    prop_assert!(s.tank_temp >= floor - 1e-9);
                }
            }
        }
    }
}
