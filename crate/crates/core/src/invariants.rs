//! Streaming checkers over the event log.
//!
//! Each checker is a [`LogSink`], so it can watch a run of hundreds of
//! millions of events without the log being stored. [`InvariantSuite`] bundles
//! the checkers that apply to a primitive.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use crate::engine::{BlockId, LogRecord, LogSink, Mark, MemoryImage, OpKind, RecordKind, RunSummary};
use crate::error::{Error, Result};
use crate::machine::WordAddress;
use crate::primitives::{Instance, PrimitiveConfig, PrimitiveKind};
use crate::time::SimTime;

/// Violations kept verbatim; further ones are only counted.
const KEPT_VIOLATIONS: usize = 8;
const TAIL_LEN: usize = 12;

#[derive(Clone, Debug, Default)]
struct Violations {
    messages: Vec<String>,
    count: u64,
}

impl Violations {
    fn push(&mut self, message: String) {
        self.count += 1;
        if self.messages.len() < KEPT_VIOLATIONS {
            self.messages.push(message);
        }
    }
}

/// Critical-section occupancy: at most `capacity` blocks between their
/// `Enter` and `Exit` marks at any time. Capacity 1 is mutual exclusion.
#[derive(Clone, Debug)]
pub struct OccupancyChecker {
    capacity: u32,
    inside: u32,
    holding: Vec<bool>,
    pub grants: u64,
    pub max_occupancy: u32,
    violations: Violations,
}

impl OccupancyChecker {
    pub fn new(capacity: u32) -> Self {
        OccupancyChecker {
            capacity,
            inside: 0,
            holding: Vec::new(),
            grants: 0,
            max_occupancy: 0,
            violations: Violations::default(),
        }
    }

    fn slot(&mut self, block: BlockId) -> &mut bool {
        let i = block as usize;
        if i >= self.holding.len() {
            self.holding.resize(i + 1, false);
        }
        &mut self.holding[i]
    }
}

impl LogSink for OccupancyChecker {
    fn record(&mut self, rec: &LogRecord) {
        match rec.kind {
            RecordKind::Mark(Mark::Enter) => {
                if std::mem::replace(self.slot(rec.block), true) {
                    self.violations.push(format!("block {} entered twice at {}", rec.block, rec.time));
                }
                self.inside += 1;
                self.grants += 1;
                self.max_occupancy = self.max_occupancy.max(self.inside);
                if self.inside > self.capacity {
                    self.violations.push(format!(
                        "{} blocks inside a capacity-{} section at {} (block {} entered)",
                        self.inside, self.capacity, rec.time, rec.block
                    ));
                }
            }
            RecordKind::Mark(Mark::Exit) => {
                if !std::mem::replace(self.slot(rec.block), false) {
                    self.violations.push(format!("block {} released at {} without holding", rec.block, rec.time));
                } else {
                    self.inside -= 1;
                }
            }
            _ => {}
        }
    }
}

/// Ticket fairness.
///
/// In strict mode ticketed grants must happen in ticket order 0, 1, 2, ...
/// With an admission counter (a word that admits every ticket below its
/// value) a ticket may only be granted once the counter, as replayed from
/// the log, has passed it. The counter advances one step at a time, so
/// admissions follow ticket order even when several admitted blocks then
/// enter in the order they happen to notice.
#[derive(Clone, Debug, Default)]
pub struct FairnessChecker {
    tickets: Vec<Option<u32>>,
    next: u32,
    strict: bool,
    counter: Option<(WordAddress, u32)>,
    violations: Violations,
}

impl FairnessChecker {
    pub fn new() -> Self {
        FairnessChecker { strict: true, ..Self::default() }
    }

    /// Checks admissions against the counter at `addr`, which starts at
    /// `initial`. `strict` additionally requires grants in ticket order.
    pub fn with_admission_counter(addr: WordAddress, initial: u32, strict: bool) -> Self {
        FairnessChecker { strict, counter: Some((addr, initial)), ..Self::default() }
    }
}

impl LogSink for FairnessChecker {
    fn record(&mut self, rec: &LogRecord) {
        let i = rec.block as usize;
        if i >= self.tickets.len() {
            self.tickets.resize(i + 1, None);
        }
        match rec.kind {
            RecordKind::Op(kind) => {
                if let Some((addr, value)) = &mut self.counter {
                    if rec.addr == *addr {
                        *value = kind.apply(rec.value, rec.operand);
                    }
                }
            }
            RecordKind::Mark(Mark::Ticket(t)) => self.tickets[i] = Some(t),
            RecordKind::Mark(Mark::Enter) => {
                if let Some(t) = self.tickets[i].take() {
                    if self.strict && t != self.next {
                        self.violations.push(format!(
                            "block {} with ticket {t} granted at {} while ticket {} was due",
                            rec.block, rec.time, self.next
                        ));
                    }
                    if let Some((_, admitted)) = self.counter {
                        if admitted <= t {
                            self.violations.push(format!(
                                "block {} with ticket {t} granted at {} but only tickets below {admitted} were admitted",
                                rec.block, rec.time
                            ));
                        }
                    }
                    self.next = t.wrapping_add(1);
                }
            }
            _ => {}
        }
    }
}

/// Grant order as a block-id sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GrantRecorder {
    pub grants: Vec<BlockId>,
    pub tickets: Vec<BlockId>,
}

impl LogSink for GrantRecorder {
    fn record(&mut self, rec: &LogRecord) {
        match rec.kind {
            RecordKind::Mark(Mark::Enter) => self.grants.push(rec.block),
            RecordKind::Mark(Mark::Ticket(_)) => self.tickets.push(rec.block),
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    Acquiring,
    Held,
    Releasing,
}

/// Atomic operations per acquire (`Begin`..`Enter`) and per release
/// (`Exit`..`End`), with optional upper bounds.
#[derive(Clone, Debug)]
pub struct AtomicBudget {
    pub acquire_bound: Option<u32>,
    pub release_bound: Option<u32>,
    phases: Vec<(Phase, u32)>,
    pub max_acquire: u32,
    pub max_release: u32,
    violations: Violations,
}

impl AtomicBudget {
    pub fn new(acquire_bound: Option<u32>, release_bound: Option<u32>) -> Self {
        AtomicBudget {
            acquire_bound,
            release_bound,
            phases: Vec::new(),
            max_acquire: 0,
            max_release: 0,
            violations: Violations::default(),
        }
    }
}

impl LogSink for AtomicBudget {
    fn record(&mut self, rec: &LogRecord) {
        let i = rec.block as usize;
        if i >= self.phases.len() {
            self.phases.resize(i + 1, (Phase::Idle, 0));
        }
        let (phase, count) = &mut self.phases[i];
        match rec.kind {
            RecordKind::Mark(Mark::Begin) => *phase = Phase::Acquiring,
            RecordKind::Mark(Mark::Exit) => *phase = Phase::Releasing,
            RecordKind::Mark(Mark::Enter) | RecordKind::Mark(Mark::End) => {
                let (bound, max, what) = if *phase == Phase::Acquiring {
                    (self.acquire_bound, &mut self.max_acquire, "acquire")
                } else {
                    (self.release_bound, &mut self.max_release, "release")
                };
                *max = (*max).max(*count);
                if bound.is_some_and(|b| *count > b) {
                    self.violations.push(format!(
                        "block {} used {} atomics in one {what}, bound {} (at {})",
                        rec.block,
                        count,
                        bound.unwrap_or(0),
                        rec.time
                    ));
                }
                *count = 0;
                *phase = if *phase == Phase::Acquiring { Phase::Held } else { Phase::Idle };
            }
            kind if kind.is_atomic() => *count += 1,
            _ => {}
        }
    }
}

/// Barrier safety: a block leaves episode `e` only after every block's
/// arrival at `e` has completed.
#[derive(Clone, Debug)]
pub struct BarrierChecker {
    blocks: u32,
    arrivals: Vec<(u32, SimTime)>,
    left: Vec<u32>,
    pub episodes: u32,
    violations: Violations,
}

impl BarrierChecker {
    pub fn new(blocks: u32) -> Self {
        BarrierChecker {
            blocks,
            arrivals: Vec::new(),
            left: vec![0; blocks as usize],
            episodes: 0,
            violations: Violations::default(),
        }
    }
}

impl LogSink for BarrierChecker {
    fn record(&mut self, rec: &LogRecord) {
        match rec.kind {
            RecordKind::Mark(Mark::Arrived(e)) => {
                let e = e as usize;
                if e >= self.arrivals.len() {
                    self.arrivals.resize(e + 1, (0, SimTime::ZERO));
                }
                let (count, latest) = &mut self.arrivals[e];
                *count += 1;
                *latest = (*latest).max(rec.time);
            }
            RecordKind::Mark(Mark::Enter) => {
                let Some(left) = self.left.get_mut(rec.block as usize) else {
                    self.violations.push(format!("unexpected block {} in a {}-block barrier", rec.block, self.blocks));
                    return;
                };
                *left += 1;
                let e = *left as usize;
                self.episodes = self.episodes.max(*left);
                let (count, latest) = self.arrivals.get(e).copied().unwrap_or((0, SimTime::ZERO));
                if count < self.blocks || rec.time < latest {
                    self.violations.push(format!(
                        "block {} left episode {e} at {} after only {count} of {} arrivals",
                        rec.block, rec.time, self.blocks
                    ));
                }
            }
            _ => {}
        }
    }
}

/// Replays completed memory records in order on a flat memory image and
/// checks every returned value. At the end the replayed image must equal the
/// engine's final memory.
#[derive(Clone, Debug)]
pub struct ReplayOracle {
    memory: MemoryImage,
    pub replayed: u64,
    violations: Violations,
}

impl ReplayOracle {
    pub fn new(initial: MemoryImage) -> Self {
        ReplayOracle { memory: initial, replayed: 0, violations: Violations::default() }
    }

    pub fn memory(&self) -> &MemoryImage {
        &self.memory
    }
}

impl LogSink for ReplayOracle {
    fn record(&mut self, rec: &LogRecord) {
        let old = self.memory.get(rec.addr);
        let (expected, new) = match rec.kind {
            RecordKind::Mark(_) => return,
            RecordKind::Op(OpKind::VolatileWrite) => (rec.operand, rec.operand),
            RecordKind::Op(kind) => (old, kind.apply(old, rec.operand)),
            RecordKind::CoalescedRead => (old, old),
            RecordKind::CoalescedWrite => (rec.value, rec.value),
        };
        self.replayed += 1;
        if rec.value != expected {
            self.violations.push(format!(
                "{} by block {} at {} on {} returned {} but replay gives {expected}",
                rec.kind.name(),
                rec.block,
                rec.time,
                rec.addr,
                rec.value
            ));
        }
        self.memory.set(rec.addr, new);
    }
}

/// Log-wide facts: monotone time, atomic and transaction counts, and the
/// last few records for diagnostics.
#[derive(Clone, Debug, Default)]
pub struct LogStats {
    pub records: u64,
    pub memory_records: u64,
    pub single_ops: u64,
    pub atomics: u64,
    pub transactions: u64,
    last_time: SimTime,
    tail: VecDeque<LogRecord>,
    violations: Violations,
}

impl LogSink for LogStats {
    fn record(&mut self, rec: &LogRecord) {
        self.records += 1;
        if rec.time < self.last_time {
            self.violations.push(format!("log time went backwards from {} to {}", self.last_time, rec.time));
        }
        self.last_time = rec.time;
        if rec.kind.is_memory() {
            self.memory_records += 1;
            self.transactions += rec.txn_start as u64;
        }
        if let RecordKind::Op(kind) = rec.kind {
            self.single_ops += 1;
            self.atomics += kind.is_atomic() as u64;
        }
        if self.tail.len() == TAIL_LEN {
            self.tail.pop_front();
        }
        self.tail.push_back(*rec);
    }
}

/// Outcome of the checks on one run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct InvariantReport {
    pub grants: u64,
    pub max_occupancy: u32,
    pub max_acquire_atomics: u32,
    pub max_release_atomics: u32,
    pub barrier_episodes: u32,
    pub atomics: u64,
    pub transactions: u64,
    pub violation_count: u64,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return write!(f, "all invariants hold");
        }
        write!(f, "{} violation(s)", self.violation_count)?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

/// Every checker that applies to a primitive run.
pub struct InvariantSuite {
    occupancy: Option<OccupancyChecker>,
    fairness: Option<FairnessChecker>,
    budget: AtomicBudget,
    barrier: Option<BarrierChecker>,
    zero_atomics: bool,
    replay: ReplayOracle,
    stats: LogStats,
}

impl InvariantSuite {
    /// `capacity` is the semaphore capacity (1 for mutexes).
    pub fn for_primitive(kind: PrimitiveKind, blocks: u32, capacity: u32, initial: MemoryImage) -> Self {
        let barrier = kind.is_barrier();
        let (acquire_bound, release_bound) = match kind {
            PrimitiveKind::SleepSem => (Some(2), Some(2)),
            PrimitiveKind::FaMutex => (Some(1), Some(0)),
            PrimitiveKind::XfBarrier => (Some(0), Some(0)),
            _ => (None, None),
        };
        InvariantSuite {
            occupancy: (!barrier).then(|| OccupancyChecker::new(if kind.is_semaphore() { capacity } else { 1 })),
            fairness: kind.is_fair().then(FairnessChecker::new),
            budget: AtomicBudget::new(acquire_bound, release_bound),
            barrier: barrier.then(|| BarrierChecker::new(blocks)),
            zero_atomics: kind == PrimitiveKind::XfBarrier,
            replay: ReplayOracle::new(initial),
            stats: LogStats::default(),
        }
    }

    /// The suite for a built instance, using its layout where a checker
    /// needs one.
    pub fn for_instance(cfg: &PrimitiveConfig, blocks: u32, instance: &Instance) -> Self {
        let mut suite = Self::for_primitive(cfg.kind, blocks, cfg.capacity, instance.memory.clone());
        if let Some(addr) = instance.admission_counter {
            suite.fairness = Some(FairnessChecker::with_admission_counter(
                addr,
                instance.memory.get(addr),
                cfg.capacity == 1,
            ));
        }
        suite
    }

    /// Only the primitive-independent checks: monotone time and replay.
    pub fn generic(initial: MemoryImage) -> Self {
        InvariantSuite {
            occupancy: None,
            fairness: None,
            budget: AtomicBudget::new(None, None),
            barrier: None,
            zero_atomics: false,
            replay: ReplayOracle::new(initial),
            stats: LogStats::default(),
        }
    }

    /// Final checks against the run's summary, plus everything collected
    /// while streaming.
    pub fn finish(self, summary: &RunSummary) -> InvariantReport {
        let mut v = Violations::default();
        let mut merge = |other: Violations| {
            v.count += other.count;
            for m in other.messages {
                if v.messages.len() < KEPT_VIOLATIONS {
                    v.messages.push(m);
                }
            }
        };
        let mut report = InvariantReport::default();
        if let Some(o) = self.occupancy {
            report.grants = o.grants;
            report.max_occupancy = o.max_occupancy;
            if o.inside != 0 {
                merge(Violations { messages: vec![format!("{} block(s) still inside at the end", o.inside)], count: 1 });
            }
            merge(o.violations);
        }
        if let Some(f) = self.fairness {
            merge(f.violations);
        }
        report.max_acquire_atomics = self.budget.max_acquire;
        report.max_release_atomics = self.budget.max_release;
        merge(self.budget.violations);
        if let Some(b) = self.barrier {
            report.barrier_episodes = b.episodes;
            merge(b.violations);
        }
        let stats = self.stats;
        report.atomics = stats.atomics;
        report.transactions = stats.transactions;
        if self.zero_atomics && stats.atomics != 0 {
            merge(Violations { messages: vec![format!("{} atomic operation(s) in an atomic-free run", stats.atomics)], count: 1 });
        }
        if stats.single_ops != summary.stats.ops_yielded || stats.single_ops != summary.stats.ops_completed {
            merge(Violations {
                messages: vec![format!(
                    "{} ops logged but {} yielded and {} completed",
                    stats.single_ops, summary.stats.ops_yielded, summary.stats.ops_completed
                )],
                count: 1,
            });
        }
        if stats.memory_records - stats.single_ops != summary.stats.coalesced_words_yielded {
            merge(Violations {
                messages: vec![format!(
                    "{} coalesced words logged but {} yielded",
                    stats.memory_records - stats.single_ops,
                    summary.stats.coalesced_words_yielded
                )],
                count: 1,
            });
        }
        if !self.replay.memory.same_contents(&summary.memory) {
            merge(Violations { messages: vec!["replayed memory differs from the final memory image".into()], count: 1 });
        }
        merge(self.replay.violations);
        merge(stats.violations);
        report.violation_count = v.count;
        report.violations = v.messages;
        if !report.is_clean() {
            let tail: Vec<String> = stats
                .tail
                .iter()
                .map(|r| format!("{} block {} {} {} -> {}", r.time, r.block, r.kind.name(), r.addr, r.value))
                .collect();
            report.violations.push(format!("last log records:\n    {}", tail.join("\n    ")));
        }
        report
    }

    /// Like [`finish`](Self::finish) but turns violations into an error.
    pub fn ensure(self, summary: &RunSummary) -> Result<InvariantReport> {
        let report = self.finish(summary);
        if report.is_clean() {
            Ok(report)
        } else {
            Err(Error::Invariant(report.to_string()))
        }
    }
}

impl LogSink for InvariantSuite {
    fn record(&mut self, rec: &LogRecord) {
        if let Some(o) = &mut self.occupancy {
            o.record(rec);
        }
        if let Some(f) = &mut self.fairness {
            f.record(rec);
        }
        self.budget.record(rec);
        if let Some(b) = &mut self.barrier {
            b.record(rec);
        }
        self.replay.record(rec);
        self.stats.record(rec);
    }
}
