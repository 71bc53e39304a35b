//! Deterministic discrete-event simulation of block programs against the
//! line-contention memory model.
//!
//! Every block has exactly one outstanding action. Issuing a memory op
//! computes its completion time from the target line's server state at the
//! issue instant; the op's effect on memory (and the value it returns) is
//! applied when its completion event is processed. Events are ordered by
//! `(time, tie key, insertion order)`, where the tie key is the block id or,
//! in seeded mode, a pseudo-random draw.

mod line;
mod log;
mod program;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use line::{AccessClass, MemoryLineState, Server};
pub use log::{EventLog, LogRecord, LogSink, RecordKind};
pub use program::{Action, BlockId, BlockProgram, Mark, MemoryOp, OpKind, Script, StepInput};

use line::LineTiming;

use crate::error::{Error, Result};
use crate::machine::{MachineProfile, WordAddress};
use crate::time::{SimDuration, SimTime};

/// How ties between simultaneous events are ordered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Ascending block id.
    #[default]
    BlockId,
    /// Pseudo-random permutation drawn from the seed; deterministic per seed.
    Seeded(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub tiebreak: TieBreak,
    /// Runs exceeding this much simulated time fail with [`Error::TimeLimit`].
    pub max_sim_time: SimTime,
    /// A run in which no memory word changes value and no program marks
    /// progress or finishes for this long is reported as deadlocked.
    pub stall_window: SimDuration,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            tiebreak: TieBreak::BlockId,
            max_sim_time: SimTime::ZERO + SimDuration::from_secs(10.0),
            stall_window: SimDuration::from_ms(10.0),
        }
    }
}

impl EngineConfig {
    /// Seed 0 selects block-id tie-breaking, any other seed the seeded mode.
    pub fn with_seed(seed: u64) -> Self {
        EngineConfig { tiebreak: if seed == 0 { TieBreak::BlockId } else { TieBreak::Seeded(seed) }, ..Self::default() }
    }
}

/// Dense word-addressed memory, zero-initialised.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemoryImage {
    words: Vec<u32>,
}

impl MemoryImage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, addr: WordAddress) -> u32 {
        self.words.get(addr.0 as usize).copied().unwrap_or(0)
    }

    pub fn set(&mut self, addr: WordAddress, value: u32) {
        let i = addr.0 as usize;
        if i >= self.words.len() {
            if value == 0 {
                return;
            }
            self.words.resize(i + 1, 0);
        }
        self.words[i] = value;
    }

    /// Non-zero words in address order.
    pub fn nonzero(&self) -> impl Iterator<Item = (WordAddress, u32)> + '_ {
        self.words.iter().enumerate().filter(|(_, &v)| v != 0).map(|(i, &v)| (WordAddress(i as u32), v))
    }

    /// Semantic equality: both images hold the same value at every address.
    pub fn same_contents(&self, other: &MemoryImage) -> bool {
        self.nonzero().eq(other.nonzero())
    }
}

impl FromIterator<(WordAddress, u32)> for MemoryImage {
    fn from_iter<I: IntoIterator<Item = (WordAddress, u32)>>(iter: I) -> Self {
        let mut image = MemoryImage::new();
        for (addr, value) in iter {
            image.set(addr, value);
        }
        image
    }
}

/// A block that had not finished when a run was aborted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockedBlock {
    pub block: BlockId,
    /// Last address the block accessed, typically the word it is polling.
    pub last_addr: Option<WordAddress>,
}

impl fmt::Display for BlockedBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.last_addr {
            Some(addr) => write!(f, "block {} polling {}", self.block, addr),
            None => write!(f, "block {} (no memory access)", self.block),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events: u64,
    /// Single memory ops yielded by programs.
    pub ops_yielded: u64,
    /// Single memory ops completed (and logged).
    pub ops_completed: u64,
    /// Words touched by coalesced actions, yielded and completed.
    pub coalesced_words_yielded: u64,
    pub coalesced_words_completed: u64,
    /// Memory transactions: single ops plus one per line of each coalesced
    /// action.
    pub transactions: u64,
    pub atomic_ops: u64,
    /// Volatile accesses serviced by a hostage atomic unit.
    pub hostage_accesses: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// Completion time of the last block (zero when there are no blocks).
    pub end_time: SimTime,
    pub finish_times: Vec<SimTime>,
    pub memory: MemoryImage,
    pub stats: RunStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub log: EventLog,
    pub initial_memory: MemoryImage,
    pub summary: RunSummary,
}

/// Runs `programs` (block `i` is `programs[i]`) and returns the full log.
pub fn run_logged(
    profile: &MachineProfile,
    programs: Vec<Box<dyn BlockProgram>>,
    initial_memory: MemoryImage,
    config: &EngineConfig,
) -> Result<RunOutput> {
    let mut log = EventLog::default();
    let summary = run(profile, programs, initial_memory.clone(), config, &mut log)?;
    Ok(RunOutput { log, initial_memory, summary })
}

/// Runs `programs` streaming every record into `sink`.
pub fn run(
    profile: &MachineProfile,
    programs: Vec<Box<dyn BlockProgram>>,
    initial_memory: MemoryImage,
    config: &EngineConfig,
    sink: &mut dyn LogSink,
) -> Result<RunSummary> {
    if programs.len() > profile.max_blocks() as usize {
        return Err(Error::TooManyBlocks { programs: programs.len(), max_blocks: profile.max_blocks() });
    }
    profile.validate()?;
    Engine::new(profile, programs, initial_memory, config, sink).run()
}

const RESUME: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: SimTime,
    key: u64,
    seq: u64,
    block: BlockId,
    /// Coalesced line part index, or `RESUME` for the block's single pending
    /// action.
    part: u32,
}

#[derive(Debug)]
enum Pending {
    Nothing,
    Op { op: MemoryOp, server: Server },
    Coalesced(Coalesced),
}

#[derive(Debug)]
struct Coalesced {
    write: bool,
    base: WordAddress,
    values: Vec<u32>,
    /// `(first word offset, word count, server)` per line.
    parts: Vec<(u32, u32, Server)>,
    outstanding: u32,
}

struct Slot {
    program: Box<dyn BlockProgram>,
    pending: Pending,
    done: bool,
    finish: SimTime,
    last_addr: Option<WordAddress>,
    scratch: Vec<u32>,
    straight_line: bool,
}

struct Engine<'a> {
    hostage: bool,
    words_per_line: u32,
    timing: LineTiming,
    sync_cost: SimDuration,
    config: &'a EngineConfig,
    sink: &'a mut dyn LogSink,
    slots: Vec<Slot>,
    lines: Vec<MemoryLineState>,
    memory: MemoryImage,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    rng: Option<ChaCha8Rng>,
    now: SimTime,
    last_progress: SimTime,
    running: usize,
    stats: RunStats,
}

impl<'a> Engine<'a> {
    fn new(
        profile: &MachineProfile,
        programs: Vec<Box<dyn BlockProgram>>,
        memory: MemoryImage,
        config: &'a EngineConfig,
        sink: &'a mut dyn LogSink,
    ) -> Self {
        let rng = match config.tiebreak {
            TieBreak::BlockId => None,
            TieBreak::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        let running = programs.len();
        let slots = programs
            .into_iter()
            .map(|program| Slot {
                straight_line: program.is_straight_line(),
                program,
                pending: Pending::Nothing,
                done: false,
                finish: SimTime::ZERO,
                last_addr: None,
                scratch: Vec::new(),
            })
            .collect();
        Engine {
            hostage: profile.line_hostage,
            words_per_line: profile.words_per_line(),
            timing: LineTiming::new(&profile.timing),
            sync_cost: SimDuration::from_ns(profile.timing.sync_threads_cost),
            config,
            sink,
            slots,
            lines: Vec::new(),
            memory,
            queue: BinaryHeap::new(),
            seq: 0,
            rng,
            now: SimTime::ZERO,
            last_progress: SimTime::ZERO,
            running,
            stats: RunStats::default(),
        }
    }

    fn schedule(&mut self, time: SimTime, block: BlockId, part: u32) {
        let key = match &mut self.rng {
            Some(rng) => rng.next_u64(),
            None => block as u64,
        };
        self.seq += 1;
        self.queue.push(Reverse(Event { time, key, seq: self.seq, block, part }));
    }

    fn line_mut(&mut self, addr: WordAddress) -> &mut MemoryLineState {
        let line = (addr.0 / self.words_per_line) as usize;
        if line >= self.lines.len() {
            self.lines.resize_with(line + 1, MemoryLineState::default);
        }
        &mut self.lines[line]
    }

    fn blocked(&self) -> Vec<BlockedBlock> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.done)
            .map(|(i, s)| BlockedBlock { block: i as BlockId, last_addr: s.last_addr })
            .collect()
    }

    fn run(mut self) -> Result<RunSummary> {
        // Blocks all start at time zero; their arrival order is a tie too.
        let mut order: Vec<BlockId> = (0..self.slots.len() as BlockId).collect();
        if let Some(rng) = &mut self.rng {
            order.shuffle(rng);
        }
        for block in order {
            self.drive(block, StepInputOwned::Start);
        }
        while let Some(Reverse(event)) = self.queue.pop() {
            self.stats.events += 1;
            self.now = event.time;
            if event.time > self.config.max_sim_time {
                return Err(Error::TimeLimit { limit: self.config.max_sim_time, blocked: self.blocked() });
            }
            if event.time.since(self.last_progress) > self.config.stall_window {
                return Err(Error::Deadlock { time: event.time, blocked: self.blocked() });
            }
            if event.part == RESUME {
                let input = self.complete_single(event.block);
                self.drive(event.block, input);
            } else if self.complete_part(event.block, event.part) {
                self.drive(event.block, StepInputOwned::Scratch);
            }
        }
        if self.running > 0 {
            return Err(Error::Deadlock { time: self.now, blocked: self.blocked() });
        }
        let finish_times: Vec<SimTime> = self.slots.iter().map(|s| s.finish).collect();
        Ok(RunSummary {
            end_time: finish_times.iter().copied().max().unwrap_or(SimTime::ZERO),
            finish_times,
            memory: self.memory,
            stats: self.stats,
        })
    }

    fn emit(&mut self, rec: LogRecord) {
        self.sink.record(&rec);
    }

    /// Applies a completed single op and returns the program's input.
    fn complete_single(&mut self, block: BlockId) -> StepInputOwned {
        let slot = &mut self.slots[block as usize];
        match std::mem::replace(&mut slot.pending, Pending::Nothing) {
            Pending::Nothing => StepInputOwned::Resumed,
            Pending::Op { op, server } => {
                let old = self.memory.get(op.addr);
                let new = op.kind.apply(old, op.operand);
                if new != old {
                    self.memory.set(op.addr, new);
                    self.last_progress = self.now;
                }
                if slot.straight_line {
                    self.last_progress = self.now;
                }
                let value = if op.kind == OpKind::VolatileWrite { op.operand } else { old };
                self.stats.ops_completed += 1;
                self.emit(LogRecord {
                    time: self.now,
                    block,
                    kind: RecordKind::Op(op.kind),
                    addr: op.addr,
                    operand: op.operand,
                    value,
                    server: Some(server),
                    txn_start: true,
                });
                StepInputOwned::Value(value)
            }
            Pending::Coalesced(_) => unreachable!("coalesced actions complete through part events"),
        }
    }

    /// Applies one line of a coalesced action. Returns true when it was the
    /// last outstanding line.
    fn complete_part(&mut self, block: BlockId, part: u32) -> bool {
        let slot = &mut self.slots[block as usize];
        let Pending::Coalesced(c) = &mut slot.pending else {
            unreachable!("part event without a coalesced action");
        };
        let (offset, len, server) = c.parts[part as usize];
        let mut records = Vec::with_capacity(len as usize);
        for i in offset..offset + len {
            let addr = c.base.offset(i);
            let value = if c.write {
                let value = c.values[i as usize];
                if self.memory.get(addr) != value {
                    self.memory.set(addr, value);
                    self.last_progress = self.now;
                }
                value
            } else {
                let value = self.memory.get(addr);
                slot.scratch[i as usize] = value;
                value
            };
            records.push(LogRecord {
                time: self.now,
                block,
                kind: if c.write { RecordKind::CoalescedWrite } else { RecordKind::CoalescedRead },
                addr,
                operand: 0,
                value,
                server: Some(server),
                txn_start: i == offset,
            });
        }
        if slot.straight_line {
            self.last_progress = self.now;
        }
        c.outstanding -= 1;
        let finished = c.outstanding == 0;
        if finished {
            if c.write {
                slot.scratch.clear();
            }
            slot.pending = Pending::Nothing;
        }
        self.stats.coalesced_words_completed += len as u64;
        for rec in &records {
            self.emit(*rec);
        }
        finished
    }

    /// Feeds `input` to the block's program until it yields an action that
    /// takes time (or finishes).
    fn drive(&mut self, block: BlockId, mut input: StepInputOwned) {
        let now = self.now;
        loop {
            let slot = &mut self.slots[block as usize];
            let action = {
                let Slot { program, scratch, .. } = slot;
                let step_input = match input {
                    StepInputOwned::Start => StepInput::Start,
                    StepInputOwned::Value(v) => StepInput::Value(v),
                    StepInputOwned::Scratch => StepInput::Values(scratch),
                    StepInputOwned::Resumed => StepInput::Resumed,
                };
                program.step(step_input)
            };
            match action {
                Action::Mark(mark) => {
                    self.last_progress = now;
                    self.emit(LogRecord {
                        time: now,
                        block,
                        kind: RecordKind::Mark(mark),
                        addr: WordAddress(0),
                        operand: 0,
                        value: mark.payload(),
                        server: None,
                        txn_start: false,
                    });
                    input = StepInputOwned::Resumed;
                }
                Action::Mem(op) => {
                    self.issue_single(block, op);
                    return;
                }
                Action::Sleep(d) => {
                    self.schedule(now + d, block, RESUME);
                    return;
                }
                Action::SyncThreads => {
                    self.schedule(now + self.sync_cost, block, RESUME);
                    return;
                }
                Action::CoalescedRead { base, len } => {
                    if len == 0 {
                        input = StepInputOwned::Scratch;
                        self.slots[block as usize].scratch.clear();
                        continue;
                    }
                    self.issue_coalesced(block, false, base, vec![0; len as usize]);
                    return;
                }
                Action::CoalescedWrite { base, values } => {
                    if values.is_empty() {
                        input = StepInputOwned::Scratch;
                        self.slots[block as usize].scratch.clear();
                        continue;
                    }
                    self.issue_coalesced(block, true, base, values);
                    return;
                }
                Action::Done => {
                    let slot = &mut self.slots[block as usize];
                    if !slot.done {
                        slot.done = true;
                        slot.finish = now;
                        self.running -= 1;
                        self.last_progress = now;
                    }
                    return;
                }
            }
        }
    }

    fn issue_single(&mut self, block: BlockId, op: MemoryOp) {
        let now = self.now;
        let class = if op.kind.is_atomic() { AccessClass::Atomic } else { AccessClass::Volatile };
        let (hostage, timing) = (self.hostage, self.timing);
        let (done, server) = self.line_mut(op.addr).admit(&timing, hostage, class, op.kind.timed_as_read(), now);
        self.stats.ops_yielded += 1;
        self.stats.transactions += 1;
        match (class, server) {
            (AccessClass::Atomic, _) => self.stats.atomic_ops += 1,
            (AccessClass::Volatile, Server::Atomic) => self.stats.hostage_accesses += 1,
            _ => {}
        }
        let slot = &mut self.slots[block as usize];
        slot.last_addr = Some(op.addr);
        slot.pending = Pending::Op { op, server };
        self.schedule(done, block, RESUME);
    }

    fn issue_coalesced(&mut self, block: BlockId, write: bool, base: WordAddress, values: Vec<u32>) {
        let now = self.now;
        let len = values.len() as u32;
        let (hostage, timing, wpl) = (self.hostage, self.timing, self.words_per_line);
        let mut parts = Vec::new();
        let mut completions = Vec::new();
        let mut offset = 0;
        while offset < len {
            let addr = base.offset(offset);
            let in_line = (wpl - addr.0 % wpl).min(len - offset);
            let (done, server) = self.line_mut(addr).admit(&timing, hostage, AccessClass::Volatile, !write, now);
            if server == Server::Atomic {
                self.stats.hostage_accesses += 1;
            }
            parts.push((offset, in_line, server));
            completions.push(done);
            offset += in_line;
        }
        self.stats.transactions += parts.len() as u64;
        self.stats.coalesced_words_yielded += len as u64;
        let slot = &mut self.slots[block as usize];
        slot.last_addr = Some(base);
        if !write {
            slot.scratch.clear();
            slot.scratch.resize(len as usize, 0);
        }
        slot.pending = Pending::Coalesced(Coalesced {
            write,
            base,
            values: if write { values } else { Vec::new() },
            outstanding: parts.len() as u32,
            parts,
        });
        for (i, done) in completions.into_iter().enumerate() {
            self.schedule(done, block, i as u32);
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum StepInputOwned {
    Start,
    Value(u32),
    Scratch,
    Resumed,
}
