use serde::{Deserialize, Serialize};

use crate::model::EnvironmentSample;

/// Rise-time adaptation goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationGoal {
    /// s
    pub rise_time_limit: f64,
    /// ± °C around the setpoint that counts as reached.
    pub settle_band: f64,
}

impl Default for AdaptationGoal {
    fn default() -> Self {
        Self {
            rise_time_limit: 60.0,
            settle_band: 1.0,
        }
    }
}

impl AdaptationGoal {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rise_time_limit > 0.0 && self.settle_band > 0.0) {
            return Err("rise_time_limit and settle_band must be positive".into());
        }
        Ok(())
    }

    fn in_band(&self, s: &EnvironmentSample) -> bool {
        (s.outflow_temp - s.setpoint).abs() <= self.settle_band
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalAnalysis {
    pub violation: bool,
    pub rise_time: Option<f64>,
}

/// Evaluates the most recent setpoint increase in `history`.
///
/// The rise time is measured to the first sample inside the settle band. A
/// violation is a rise time above the limit, or no entry at all once more
/// than the limit has elapsed.
pub fn analyze_goal(history: &[EnvironmentSample], goal: &AdaptationGoal) -> GoalAnalysis {
    let Some(event) = history
        .windows(2)
        .rposition(|w| w[1].setpoint > w[0].setpoint)
        .map(|i| i + 1)
    else {
        return GoalAnalysis {
            violation: false,
            rise_time: None,
        };
    };
    let start = history[event].time;
    let rise_time = history[event..]
        .iter()
        .find(|s| goal.in_band(s))
        .map(|s| s.time - start);
    let horizon = history.last().map_or(0.0, |s| s.time) - start;
    let violation = match rise_time {
        Some(r) => r > goal.rise_time_limit,
        None => horizon > goal.rise_time_limit,
    };
    GoalAnalysis {
        violation,
        rise_time,
    }
}

/// One setpoint increase and how long the outflow took to reach it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiseRecord {
    pub step_time: f64,
    pub from: f64,
    pub to: f64,
    pub rise_time: Option<f64>,
    pub violation: bool,
}

/// Incremental form of [`analyze_goal`] for the live loop.
#[derive(Debug, Clone)]
pub struct GoalMonitor {
    goal: AdaptationGoal,
    last_setpoint: Option<f64>,
    open: Option<RiseRecord>,
    reported: bool,
    done: Vec<RiseRecord>,
}

impl GoalMonitor {
    pub fn new(goal: AdaptationGoal) -> Self {
        Self {
            goal,
            last_setpoint: None,
            open: None,
            reported: false,
            done: Vec::new(),
        }
    }

    /// Feeds one sample; returns true once per setpoint step whose rise-time
    /// goal has just been violated.
    pub fn observe(&mut self, s: &EnvironmentSample) -> bool {
        if let Some(prev) = self.last_setpoint {
            if s.setpoint != prev {
                if let Some(rec) = self.open.take() {
                    self.done.push(rec);
                }
                if s.setpoint > prev {
                    self.open = Some(RiseRecord {
                        step_time: s.time,
                        from: prev,
                        to: s.setpoint,
                        rise_time: None,
                        violation: false,
                    });
                    self.reported = false;
                }
            }
        }
        self.last_setpoint = Some(s.setpoint);
        let Some(rec) = self.open.as_mut() else {
            return false;
        };
        let elapsed = s.time - rec.step_time;
        if rec.rise_time.is_none() && self.goal.in_band(s) {
            rec.rise_time = Some(elapsed);
            if elapsed > self.goal.rise_time_limit {
                rec.violation = true;
            }
        } else if rec.rise_time.is_none() && elapsed > self.goal.rise_time_limit {
            rec.violation = true;
        }
        if rec.violation && !self.reported {
            self.reported = true;
            return true;
        }
        false
    }

    /// Closes the record that is still open at `end` and returns all records.
    pub fn finish(mut self, _end: f64) -> Vec<RiseRecord> {
        if let Some(rec) = self.open.take() {
            self.done.push(rec);
        }
        self.done
    }

    pub fn records(&self) -> impl Iterator<Item = &RiseRecord> {
        self.done.iter().chain(self.open.iter())
    }
}
