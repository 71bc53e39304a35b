//! Deterministic discrete-event simulation of GPU inter-block
//! synchronization.
//!
//! The [`machine`] module describes a GPU memory system by per-line latency
//! and service times plus whether a busy atomic unit holds its line hostage.
//! The [`engine`] runs block programs against that model; [`primitives`]
//! implements barriers, mutexes and semaphores as such programs; [`bench`]
//! and [`experiments`] reproduce memory benchmarks and primitive throughput
//! studies; [`invariants`] checks every run's event log.

pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod invariants;
pub mod machine;
pub mod primitives;
pub mod reference;
pub mod time;

pub use error::{Error, Result};
pub use machine::{make_fermi_profile, make_tesla_profile, MachineProfile, TimingParams, WordAddress};
pub use time::{SimDuration, SimTime};
