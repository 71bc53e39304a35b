//! Synchronization primitives written as guest programs for the engine.
//!
//! Each primitive is a small state machine implementing [`Primitive`]: it is
//! driven through one acquire (lock, wait or barrier) and one release (unlock
//! or post) per operation by a [`Workload`], which also emits the marks the
//! invariant checkers rely on.

mod barrier;
mod mutex;
mod semaphore;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use barrier::{AtomicBarrier, XfBarrier};
pub use mutex::{FaMutex, RingMutex, SpinMutex, SpinRelease};
pub use semaphore::{SleepSemaphore, SpinSemaphore};

use crate::engine::{Action, BlockProgram, Mark, MemoryImage, StepInput};
use crate::error::{Error, Result};
use crate::machine::{MachineProfile, WordAddress};
use crate::time::SimDuration;

/// Blocks per SM the XF barrier can keep resident (register pressure).
pub const XF_BLOCKS_PER_SM: u32 = 6;

pub const DEFAULT_OPS_PER_BLOCK: u32 = 1000;

/// A synchronization primitive seen from one block's master thread.
///
/// `acquire` and `release` are called repeatedly with the result of the
/// previously returned action (`Resumed` on the first call of each phase) and
/// return `None` once the phase is complete.
pub trait Primitive {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action>;

    fn release(&mut self, _input: StepInput<'_>) -> Option<Action> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    SpinLock,
    SpinMutex,
    SpinMutexBackoff,
    FaMutex,
    RingMutex,
    SpinSem,
    SpinSemBackoff,
    SleepSem,
    XfBarrier,
    AtomicBarrier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Barrier,
    Mutex,
    Semaphore,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 10] = [
        PrimitiveKind::SpinLock,
        PrimitiveKind::SpinMutex,
        PrimitiveKind::SpinMutexBackoff,
        PrimitiveKind::FaMutex,
        PrimitiveKind::RingMutex,
        PrimitiveKind::SpinSem,
        PrimitiveKind::SpinSemBackoff,
        PrimitiveKind::SleepSem,
        PrimitiveKind::XfBarrier,
        PrimitiveKind::AtomicBarrier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::SpinLock => "spin_lock",
            PrimitiveKind::SpinMutex => "spin_mutex",
            PrimitiveKind::SpinMutexBackoff => "spin_mutex_backoff",
            PrimitiveKind::FaMutex => "fa_mutex",
            PrimitiveKind::RingMutex => "ring_mutex",
            PrimitiveKind::SpinSem => "spin_sem",
            PrimitiveKind::SpinSemBackoff => "spin_sem_backoff",
            PrimitiveKind::SleepSem => "sleep_sem",
            PrimitiveKind::XfBarrier => "xf_barrier",
            PrimitiveKind::AtomicBarrier => "atomic_barrier",
        }
    }

    pub fn category(self) -> Category {
        match self {
            PrimitiveKind::XfBarrier | PrimitiveKind::AtomicBarrier => Category::Barrier,
            PrimitiveKind::SpinSem | PrimitiveKind::SpinSemBackoff | PrimitiveKind::SleepSem => Category::Semaphore,
            _ => Category::Mutex,
        }
    }

    pub fn is_semaphore(self) -> bool {
        self.category() == Category::Semaphore
    }

    pub fn is_barrier(self) -> bool {
        self.category() == Category::Barrier
    }

    /// Whether grants must follow ticket order.
    pub fn is_fair(self) -> bool {
        matches!(self, PrimitiveKind::FaMutex | PrimitiveKind::RingMutex | PrimitiveKind::SleepSem)
    }

    /// Largest block count the primitive can run with on `profile`.
    pub fn max_blocks(self, profile: &MachineProfile) -> u32 {
        match self {
            PrimitiveKind::XfBarrier => profile.num_sms * XF_BLOCKS_PER_SM.min(profile.max_blocks_per_sm),
            _ => profile.max_blocks(),
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrimitiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::UnknownPrimitive(s.to_string()))
    }
}

/// Bounds and unit of the linear backoff counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BackoffConfig {
    pub i_min: u32,
    pub i_max: u32,
    /// Length of one sleep unit.
    pub unit: SimDuration,
}

impl BackoffConfig {
    pub const DEFAULT_I_MIN: u32 = 1;
    pub const DEFAULT_I_MAX: u32 = 16;

    pub fn new(i_min: u32, i_max: u32, unit: SimDuration) -> Result<Self> {
        if i_min == 0 || i_min > i_max {
            return Err(Error::InvalidConfig(format!("backoff needs 1 <= i_min <= i_max, got {i_min} and {i_max}")));
        }
        Ok(BackoffConfig { i_min, i_max, unit })
    }

    /// Default bounds with the unit set to one noncontentious volatile read.
    pub fn for_profile(profile: &MachineProfile) -> Self {
        BackoffConfig {
            i_min: Self::DEFAULT_I_MIN,
            i_max: Self::DEFAULT_I_MAX,
            unit: SimDuration::from_ns(profile.timing.lat_volatile_read),
        }
    }
}

/// One backoff: how long to sleep with counter `i`, and the next counter.
pub fn backoff_step(i: u32, cfg: &BackoffConfig) -> (SimDuration, u32) {
    let next = if i + 1 > cfg.i_max { cfg.i_min } else { i + 1 };
    (cfg.unit * i as u64, next)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Backoff {
    cfg: BackoffConfig,
    i: u32,
}

impl Backoff {
    pub fn new(cfg: BackoffConfig) -> Self {
        Backoff { cfg, i: cfg.i_min }
    }

    pub fn reset(&mut self) {
        self.i = self.cfg.i_min;
    }

    pub fn sleep(&mut self) -> Action {
        let (d, next) = backoff_step(self.i, &self.cfg);
        self.i = next;
        Action::Sleep(d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Begin,
    Acquire,
    Entered,
    Payload,
    Release,
}

/// Runs `ops` acquire/release pairs (or barrier episodes) of a primitive and
/// brackets each with marks: `Begin`, `Enter`, and for mutexes and
/// semaphores `Exit` and `End`.
pub struct Workload<P> {
    primitive: P,
    ops: u32,
    completed: u32,
    payload: SimDuration,
    barrier: bool,
    stage: Stage,
}

impl<P: Primitive> Workload<P> {
    pub fn new(primitive: P, ops: u32, barrier: bool) -> Self {
        Workload { primitive, ops, completed: 0, payload: SimDuration::ZERO, barrier, stage: Stage::Begin }
    }

    /// Time spent inside the critical section.
    pub fn with_payload(mut self, payload: SimDuration) -> Self {
        self.payload = payload;
        self
    }
}

impl<P: Primitive> BlockProgram for Workload<P> {
    fn step(&mut self, mut input: StepInput<'_>) -> Action {
        loop {
            match self.stage {
                Stage::Begin => {
                    if self.completed == self.ops {
                        return Action::Done;
                    }
                    self.stage = Stage::Acquire;
                    return Action::Mark(Mark::Begin);
                }
                Stage::Acquire => match self.primitive.acquire(input) {
                    Some(action) => return action,
                    None => {
                        self.stage = Stage::Entered;
                        return Action::Mark(Mark::Enter);
                    }
                },
                Stage::Entered => {
                    if self.barrier {
                        self.completed += 1;
                        self.stage = Stage::Begin;
                        input = StepInput::Resumed;
                        continue;
                    }
                    if !self.payload.is_zero() {
                        self.stage = Stage::Payload;
                        return Action::Sleep(self.payload);
                    }
                    self.stage = Stage::Release;
                    return Action::Mark(Mark::Exit);
                }
                Stage::Payload => {
                    self.stage = Stage::Release;
                    return Action::Mark(Mark::Exit);
                }
                Stage::Release => match self.primitive.release(input) {
                    Some(action) => return action,
                    None => {
                        self.completed += 1;
                        self.stage = Stage::Begin;
                        return Action::Mark(Mark::End);
                    }
                },
            }
        }
    }
}

/// Everything needed to instantiate a primitive experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveConfig {
    pub kind: PrimitiveKind,
    /// Semaphore capacity; ignored by other primitives.
    pub capacity: u32,
    pub backoff: BackoffConfig,
    pub ops_per_block: u32,
    /// Simulated work inside each critical section.
    pub payload: SimDuration,
    /// How the spin mutexes release the lock.
    pub spin_release: SpinRelease,
    /// Back off between failed attempts in the spin semaphore's post.
    pub post_backoff: bool,
}

impl PrimitiveConfig {
    pub fn new(kind: PrimitiveKind, profile: &MachineProfile) -> Self {
        PrimitiveConfig {
            kind,
            capacity: 1,
            backoff: BackoffConfig::for_profile(profile),
            ops_per_block: DEFAULT_OPS_PER_BLOCK,
            payload: SimDuration::ZERO,
            spin_release: SpinRelease::Atomic,
            post_backoff: false,
        }
    }

    pub fn with_capacity(mut self, capacity: u32) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn with_ops(mut self, ops_per_block: u32) -> Self {
        self.ops_per_block = ops_per_block;
        self
    }

    /// The semaphore capacity if the primitive is a semaphore.
    pub fn capacity(&self) -> Option<u32> {
        self.kind.is_semaphore().then_some(self.capacity)
    }
}

/// Block programs and initial memory for one run.
pub struct Instance {
    pub programs: Vec<Box<dyn BlockProgram>>,
    pub memory: MemoryImage,
    /// Counter whose value admits every ticket below it, for primitives
    /// that admit ticket holders that way.
    pub admission_counter: Option<WordAddress>,
}

/// Builds `blocks` programs running the configured primitive.
///
/// Shared state starts at word 0. Words that the algorithms keep together in
/// one structure (ticket and turn, count/ticket/turn, the barrier counters)
/// share a line; arrays start on their own lines.
pub fn build(profile: &MachineProfile, cfg: &PrimitiveConfig, blocks: u32) -> Result<Instance> {
    let max = cfg.kind.max_blocks(profile);
    if blocks == 0 || blocks > max {
        return Err(Error::InvalidConfig(format!("{} supports 1..={max} blocks on {}, got {blocks}", cfg.kind, profile.name)));
    }
    if cfg.kind.is_semaphore() && cfg.capacity == 0 {
        return Err(Error::InvalidConfig("semaphore capacity must be at least 1".into()));
    }
    if cfg.capacity == u32::MAX {
        return Err(Error::InvalidConfig("semaphore capacity is too large".into()));
    }
    BackoffConfig::new(cfg.backoff.i_min, cfg.backoff.i_max, cfg.backoff.unit)?;

    let wpl = profile.words_per_line();
    let line = |n: u32| WordAddress(n * wpl);
    let backoff = cfg.backoff;
    let barrier = cfg.kind.is_barrier();
    let mut memory = MemoryImage::new();
    let make: Box<dyn Fn(u32) -> Box<dyn Primitive>> = match cfg.kind {
        PrimitiveKind::SpinLock => Box::new(|_| Box::new(SpinMutex::new(line(0), None, SpinRelease::Atomic))),
        PrimitiveKind::SpinMutex => {
            let release = cfg.spin_release;
            Box::new(move |_| Box::new(SpinMutex::new(line(0), None, release)))
        }
        PrimitiveKind::SpinMutexBackoff => {
            let release = cfg.spin_release;
            Box::new(move |_| Box::new(SpinMutex::new(line(0), Some(backoff), release)))
        }
        PrimitiveKind::FaMutex => Box::new(move |_| Box::new(FaMutex::new(line(0), line(0).offset(1), Some(backoff)))),
        PrimitiveKind::RingMutex => {
            let capacity = profile.max_blocks();
            Box::new(move |b| Box::new(RingMutex::new(line(0), line(0).offset(1), line(1), capacity, b, Some(backoff))))
        }
        PrimitiveKind::SpinSem | PrimitiveKind::SpinSemBackoff => {
            memory.set(line(0), cfg.capacity + 1);
            let wait = (cfg.kind == PrimitiveKind::SpinSemBackoff).then_some(backoff);
            let post = if cfg.post_backoff { wait } else { None };
            Box::new(move |_| Box::new(SpinSemaphore::new(line(0), wait, post)))
        }
        PrimitiveKind::SleepSem => {
            let capacity = cfg.capacity;
            Box::new(move |_| {
                Box::new(SleepSemaphore::new(line(0), line(0).offset(1), line(0).offset(2), capacity))
            })
        }
        PrimitiveKind::XfBarrier => {
            let arrive = line(0);
            let release = line(blocks.div_ceil(wpl));
            Box::new(move |b| Box::new(XfBarrier::new(arrive, release, blocks, b)))
        }
        PrimitiveKind::AtomicBarrier => {
            Box::new(move |_| Box::new(AtomicBarrier::new(line(0), line(0).offset(1), blocks)))
        }
    };
    let programs = (0..blocks)
        .map(|b| {
            Box::new(Workload::new(make(b), cfg.ops_per_block, barrier).with_payload(cfg.payload))
                as Box<dyn BlockProgram>
        })
        .collect();
    let admission_counter = (cfg.kind == PrimitiveKind::SleepSem).then(|| line(0).offset(2));
    Ok(Instance { programs, memory, admission_counter })
}

impl<P: Primitive + ?Sized> Primitive for Box<P> {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        (**self).acquire(input)
    }

    fn release(&mut self, input: StepInput<'_>) -> Option<Action> {
        (**self).release(input)
    }
}
