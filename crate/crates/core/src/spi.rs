//! Sliding-window safety performance indicators.
//!
//! A window records one boolean per tick (did the predicate hold?) over the
//! last `window` seconds and breaches when the accumulated true-time strictly
//! exceeds `threshold`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::EnvironmentSample;
use crate::plant::HAZARD_TEMP;
use crate::scalar::{ticks_exceed, ticks_in};

/// State test evaluated per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpiPredicate {
    /// Outflow at or above `(1 - fraction) * limit` °C.
    NearLimit { limit: f64, fraction: f64 },
}

impl Default for SpiPredicate {
    fn default() -> Self {
        SpiPredicate::NearLimit {
            limit: HAZARD_TEMP,
            fraction: 0.05,
        }
    }
}

impl SpiPredicate {
    pub fn holds(&self, sample: &EnvironmentSample) -> bool {
        match *self {
            SpiPredicate::NearLimit { limit, fraction } => {
                sample.outflow_temp >= limit * (1.0 - fraction)
            }
        }
    }
}

/// Configuration of one SPI; the ring is built from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiSpec {
    pub id: String,
    #[serde(default)]
    pub predicate: SpiPredicate,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_window() -> f64 {
    3600.0
}

fn default_threshold() -> f64 {
    60.0
}

impl Default for SpiSpec {
    fn default() -> Self {
        Self {
            id: "near-limit".into(),
            predicate: SpiPredicate::default(),
            window: default_window(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiWindow {
    pub spec: SpiSpec,
    tick: f64,
    capacity: usize,
    ring: VecDeque<bool>,
    true_ticks: u64,
    /// Breach already reported to the managing system; cleared by reset or
    /// when the window drops back under threshold.
    reported: bool,
    /// Push/evict operations performed, for the constant-work check.
    work: u64,
}

impl SpiWindow {
    pub fn new(spec: SpiSpec, tick: f64) -> Self {
        assert!(spec.threshold <= spec.window, "threshold must not exceed window");
        let capacity = ticks_in(spec.window, tick).max(1) as usize;
        Self {
            spec,
            tick,
            capacity,
            ring: VecDeque::with_capacity(capacity),
            true_ticks: 0,
            reported: false,
            work: 0,
        }
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Accumulated predicate-true duration inside the window, s.
    pub fn accumulated(&self) -> f64 {
        self.true_ticks as f64 * self.tick
    }

    pub fn true_ticks(&self) -> u64 {
        self.true_ticks
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn breached(&self) -> bool {
        ticks_exceed(self.true_ticks, self.tick, self.spec.threshold)
    }

    /// Returns true exactly once per breach episode.
    pub fn take_new_breach(&mut self) -> bool {
        let breached = self.breached();
        if !breached {
            self.reported = false;
            return false;
        }
        let fresh = !self.reported;
        self.reported = true;
        fresh
    }

    pub fn reset(&mut self) {
        self.ring.clear();
        self.true_ticks = 0;
        self.reported = false;
    }

    /// Raw per-tick results, oldest first.
    pub fn retained(&self) -> impl Iterator<Item = bool> + '_ {
        self.ring.iter().copied()
    }
}

/// Pushes this tick's predicate result and evicts what fell out of the window.
pub fn spi_update(w: &mut SpiWindow, sample: &EnvironmentSample) {
    let hit = w.spec.predicate.holds(sample);
    if w.ring.len() == w.capacity {
        if w.ring.pop_front() == Some(true) {
            w.true_ticks -= 1;
        }
        w.work += 1;
    }
    w.ring.push_back(hit);
    w.true_ticks += u64::from(hit);
    w.work += 1;
}

pub fn spi_breached(w: &SpiWindow) -> bool {
    w.breached()
}
