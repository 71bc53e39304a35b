//! Published reference measurements for the two GPU classes the built-in
//! profiles model: a GT200 (Tesla-class, GTX295) and a GF100 (Fermi-class,
//! GTX580). Each memory benchmark issues one thousand accesses per block on a
//! fully saturated GPU (240 and 128 blocks respectively).
//!
//! The same numbers ship as CSV fixtures under `fixtures/` for the CLI.

/// One column of the memory-benchmark table, in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MemoryTimings {
    pub contentious_volatile: f64,
    pub noncontentious_volatile: f64,
    pub contentious_atomic: f64,
    pub noncontentious_atomic: f64,
    pub contentious_volatile_after_atomic: f64,
    pub noncontentious_volatile_after_atomic: f64,
}

pub const TESLA_BLOCKS: u32 = 240;
pub const FERMI_BLOCKS: u32 = 128;
pub const ACCESSES_PER_BLOCK: u32 = 1000;

pub const TESLA_READS: MemoryTimings = MemoryTimings {
    contentious_volatile: 0.848,
    noncontentious_volatile: 0.590,
    contentious_atomic: 78.407,
    noncontentious_atomic: 0.845,
    contentious_volatile_after_atomic: 0.923,
    noncontentious_volatile_after_atomic: 0.601,
};

pub const TESLA_WRITES: MemoryTimings = MemoryTimings {
    contentious_volatile: 0.829,
    noncontentious_volatile: 0.226,
    contentious_atomic: 78.404,
    noncontentious_atomic: 0.991,
    contentious_volatile_after_atomic: 0.915,
    noncontentious_volatile_after_atomic: 0.228,
};

pub const FERMI_READS: MemoryTimings = MemoryTimings {
    contentious_volatile: 0.494,
    noncontentious_volatile: 0.043,
    contentious_atomic: 1.479,
    noncontentious_atomic: 0.437,
    contentious_volatile_after_atomic: 1.473,
    noncontentious_volatile_after_atomic: 0.125,
};

pub const FERMI_WRITES: MemoryTimings = MemoryTimings {
    contentious_volatile: 0.175,
    noncontentious_volatile: 0.029,
    contentious_atomic: 1.470,
    noncontentious_atomic: 0.312,
    contentious_volatile_after_atomic: 0.824,
    noncontentious_volatile_after_atomic: 0.050,
};

/// Published ratios in column order Tesla reads, Tesla writes, Fermi reads,
/// Fermi writes.
pub type RatioRow = [f64; 4];

/// Contentious over noncontentious time, per access class.
pub mod contention_ratios {
    use super::RatioRow;
    pub const VOLATILE: RatioRow = [1.44, 3.67, 11.49, 6.03];
    pub const ATOMIC: RatioRow = [92.79, 79.12, 3.38, 4.71];
    pub const VOLATILE_AFTER_ATOMIC: RatioRow = [1.54, 4.01, 11.78, 16.48];
}

/// Each row over the volatile row with the same contention.
pub mod volatile_ratios {
    use super::RatioRow;
    pub const CONTENTIOUS_ATOMIC: RatioRow = [92.46, 94.57, 2.99, 8.40];
    pub const NONCONTENTIOUS_ATOMIC: RatioRow = [1.43, 4.38, 10.16, 10.76];
    pub const CONTENTIOUS_VOLATILE_AFTER_ATOMIC: RatioRow = [1.08, 1.10, 2.98, 4.71];
    pub const NONCONTENTIOUS_VOLATILE_AFTER_ATOMIC: RatioRow = [1.02, 1.01, 2.91, 1.72];
}

/// Best implementation at full scale per primitive category, as primitive
/// names: (barrier, mutex, semaphore at low capacity, semaphore at high
/// capacity).
pub const BEST_TESLA: [&str; 4] = ["xf_barrier", "fa_mutex", "sleep_sem", "sleep_sem"];
pub const BEST_FERMI: [&str; 4] = ["xf_barrier", "spin_mutex_backoff", "spin_sem_backoff", "sleep_sem"];
