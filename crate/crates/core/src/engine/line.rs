//! Per-line contention state.
//!
//! Each memory line owns two FIFO servers: one serializing volatile accesses
//! and the line's atomic unit. An access completes at
//! `max(issue + latency, server_free_at + service)`, so an idle line answers
//! with the uncontended latency and a contended one is throughput-bound by its
//! service time. Different lines never interact.

use std::collections::VecDeque;

use serde::Serialize;

use crate::machine::TimingParams;
use crate::time::{SimDuration, SimTime};

/// Which server handled an access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Server {
    Volatile,
    Atomic,
}

/// Whether an access is an atomic read-modify-write or a plain access.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccessClass {
    Volatile,
    Atomic,
}

/// Timing parameters converted to integer picoseconds.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LineTiming {
    pub lat_volatile_read: SimDuration,
    pub lat_volatile_write: SimDuration,
    pub lat_atomic_read: SimDuration,
    pub lat_atomic_write: SimDuration,
    pub svc_volatile_read: SimDuration,
    pub svc_volatile_write: SimDuration,
    pub svc_atomic_read: SimDuration,
    pub svc_atomic_write: SimDuration,
}

impl LineTiming {
    pub fn new(t: &TimingParams) -> Self {
        let d = SimDuration::from_ns;
        LineTiming {
            lat_volatile_read: d(t.lat_volatile_read),
            lat_volatile_write: d(t.lat_volatile_write),
            lat_atomic_read: d(t.lat_atomic_read),
            lat_atomic_write: d(t.lat_atomic_write),
            svc_volatile_read: d(t.svc_volatile_read),
            svc_volatile_write: d(t.svc_volatile_write),
            svc_atomic_read: d(t.svc_atomic_read),
            svc_atomic_write: d(t.svc_atomic_write),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct MemoryLineState {
    pub volatile_server_free_at: SimTime,
    pub atomic_server_free_at: SimTime,
    /// Completion times of atomic-serviced transactions not yet finished, in
    /// service order.
    pub atomic_queue: VecDeque<SimTime>,
}

impl MemoryLineState {
    /// Whether the atomic unit has queued or in-service work at `now`.
    pub fn atomic_busy(&mut self, now: SimTime) -> bool {
        while self.atomic_queue.front().is_some_and(|&done| done <= now) {
            self.atomic_queue.pop_front();
        }
        !self.atomic_queue.is_empty()
    }

    /// Admits one access issued at `issue` and returns its completion time and
    /// the server that handled it.
    ///
    /// With `line_hostage`, a volatile access issued while the atomic unit is
    /// busy is serviced by the atomic unit with atomic timing, exactly as an
    /// atomic read (`add 0`) or exchange issued at the same instant would be.
    pub(crate) fn admit(
        &mut self,
        timing: &LineTiming,
        line_hostage: bool,
        class: AccessClass,
        read: bool,
        issue: SimTime,
    ) -> (SimTime, Server) {
        let server = match class {
            AccessClass::Atomic => Server::Atomic,
            AccessClass::Volatile if line_hostage && self.atomic_busy(issue) => Server::Atomic,
            AccessClass::Volatile => Server::Volatile,
        };
        match server {
            Server::Volatile => {
                let (lat, svc) = if read {
                    (timing.lat_volatile_read, timing.svc_volatile_read)
                } else {
                    (timing.lat_volatile_write, timing.svc_volatile_write)
                };
                let done = (issue + lat).max(self.volatile_server_free_at + svc);
                self.volatile_server_free_at = done;
                (done, server)
            }
            Server::Atomic => {
                let (lat, svc) = if read {
                    (timing.lat_atomic_read, timing.svc_atomic_read)
                } else {
                    (timing.lat_atomic_write, timing.svc_atomic_write)
                };
                let done = (issue + lat).max(self.atomic_server_free_at + svc);
                self.atomic_server_free_at = done;
                self.atomic_busy(issue);
                self.atomic_queue.push_back(done);
                (done, server)
            }
        }
    }
}
