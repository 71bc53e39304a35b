//! Simulated time.
//!
//! The engine keeps an integer clock so that runs are bit-reproducible. The
//! resolution is one picosecond: several calibrated service times are a few
//! nanoseconds (e.g. 3.53 ns per contended volatile read on the Tesla-like
//! profile), and whole-nanosecond rounding would distort them by more than 10%.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

const PS_PER_NS: u64 = 1_000;

/// An instant on the simulated clock, in picoseconds since the start of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimTime(u64);

/// A non-negative span of simulated time, in picoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimDuration(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ps(ps: u64) -> Self {
        SimTime(ps)
    }

    pub fn from_ns(ns: f64) -> Self {
        SimTime(SimDuration::from_ns(ns).0)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_ns(self) -> f64 {
        self.0 as f64 / PS_PER_NS as f64
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-12
    }

    /// Time elapsed since `earlier`, saturating at zero.
    pub fn since(self, earlier: SimTime) -> SimDuration {
        SimDuration(self.0.saturating_sub(earlier.0))
    }
}

impl SimDuration {
    pub const ZERO: SimDuration = SimDuration(0);

    pub const fn from_ps(ps: u64) -> Self {
        SimDuration(ps)
    }

    /// Converts a nanosecond quantity, rounding to the nearest picosecond.
    /// Negative and NaN inputs clamp to zero.
    pub fn from_ns(ns: f64) -> Self {
        if ns.is_nan() || ns <= 0.0 {
            return SimDuration(0);
        }
        SimDuration((ns * PS_PER_NS as f64).round() as u64)
    }

    pub fn from_ms(ms: f64) -> Self {
        Self::from_ns(ms * 1e6)
    }

    pub fn from_secs(secs: f64) -> Self {
        Self::from_ns(secs * 1e9)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_ns(self) -> f64 {
        self.0 as f64 / PS_PER_NS as f64
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-12
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add<SimDuration> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimDuration) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign<SimDuration> for SimTime {
    fn add_assign(&mut self, rhs: SimDuration) {
        self.0 = self.0.saturating_add(rhs.0);
    }
}

impl Sub for SimTime {
    type Output = SimDuration;
    fn sub(self, rhs: SimTime) -> SimDuration {
        self.since(rhs)
    }
}

impl Add for SimDuration {
    type Output = SimDuration;
    fn add(self, rhs: SimDuration) -> SimDuration {
        SimDuration(self.0.saturating_add(rhs.0))
    }
}

impl Mul<u64> for SimDuration {
    type Output = SimDuration;
    fn mul(self, rhs: u64) -> SimDuration {
        SimDuration(self.0.saturating_mul(rhs))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}ns", self.as_ns())
    }
}

impl fmt::Display for SimDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}ns", self.as_ns())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ns_round_trip_keeps_picoseconds() {
        let d = SimDuration::from_ns(3.533);
        assert_eq!(d.as_ps(), 3_533);
        assert!((d.as_ns() - 3.533).abs() < 1e-12);
    }

    #[test]
    fn negative_and_nan_clamp_to_zero() {
        assert_eq!(SimDuration::from_ns(-1.0), SimDuration::ZERO);
        assert_eq!(SimDuration::from_ns(f64::NAN), SimDuration::ZERO);
    }

    #[test]
    fn unit_conversions() {
        let t = SimTime::ZERO + SimDuration::from_ms(0.590);
        assert!((t.as_ms() - 0.590).abs() < 1e-12);
        assert!((t.as_secs() - 0.590e-3).abs() < 1e-15);
        assert_eq!(t - SimTime::from_ns(90.0), SimDuration::from_ns(589_910.0));
        assert_eq!(SimTime::from_ns(1.0) - SimTime::from_ns(2.0), SimDuration::ZERO);
    }
}
