//! Scalar abstraction shared by the numeric kernels.
//!
//! Plant physics, the control laws, interval domains and the admission
//! statistics are written against [`Scalar`] so they run in `f32` or `f64`.
//! Everything that touches files or the safety case is pinned to `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable by the simulation kernels.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative slack used when a duration built from `count * tick` is compared
/// against a strict limit, so that 20 ticks of 0.1 s do not "exceed" 2 s.
const TICK_SLACK: f64 = 1e-9;

/// `count * tick > limit`, robust to the rounding of `tick`.
pub fn ticks_exceed<T: Scalar>(count: u64, tick: T, limit: T) -> bool {
    let total = T::from_u64(count).unwrap_or_else(T::infinity) * tick;
    total > limit + limit.abs() * T::lit(TICK_SLACK)
}

/// Number of whole ticks in `span`, rounded to nearest.
pub fn ticks_in<T: Scalar>(span: T, tick: T) -> u64 {
    (span / tick).round().to_u64().unwrap_or(0)
}
