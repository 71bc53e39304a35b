//! The guest-program interface: what a block can ask the memory system to do.

use std::fmt;

use serde::Serialize;

use crate::machine::WordAddress;
use crate::time::SimDuration;

pub type BlockId = u32;

/// Word-sized memory operations issued by a block's master thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum OpKind {
    VolatileRead,
    VolatileWrite,
    /// Stores the operand, returns the previous value. Canonical atomic write.
    AtomicExch,
    /// Adds the operand, returns the previous value. With operand 0 this is
    /// the canonical atomic read.
    AtomicAdd,
    /// `old >= operand ? 0 : old + 1`, returns `old`.
    AtomicInc,
    /// `(old == 0 || old > operand) ? operand : old - 1`, returns `old`.
    AtomicDec,
}

impl OpKind {
    pub fn is_atomic(self) -> bool {
        !matches!(self, OpKind::VolatileRead | OpKind::VolatileWrite)
    }

    /// Whether the op is timed with read parameters. Exchanges and volatile
    /// stores use write timing; every other read-modify-write is timed like
    /// the canonical atomic read.
    pub fn timed_as_read(self) -> bool {
        !matches!(self, OpKind::VolatileWrite | OpKind::AtomicExch)
    }

    pub fn modifies(self) -> bool {
        self != OpKind::VolatileRead
    }

    pub fn name(self) -> &'static str {
        match self {
            OpKind::VolatileRead => "volatile_read",
            OpKind::VolatileWrite => "volatile_write",
            OpKind::AtomicExch => "atomic_exch",
            OpKind::AtomicAdd => "atomic_add",
            OpKind::AtomicInc => "atomic_inc",
            OpKind::AtomicDec => "atomic_dec",
        }
    }

    /// New word value after applying this op with `operand` to `old`.
    pub fn apply(self, old: u32, operand: u32) -> u32 {
        match self {
            OpKind::VolatileRead => old,
            OpKind::VolatileWrite | OpKind::AtomicExch => operand,
            OpKind::AtomicAdd => old.wrapping_add(operand),
            OpKind::AtomicInc => {
                if old >= operand {
                    0
                } else {
                    old + 1
                }
            }
            OpKind::AtomicDec => {
                if old == 0 || old > operand {
                    operand
                } else {
                    old - 1
                }
            }
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MemoryOp {
    pub kind: OpKind,
    pub addr: WordAddress,
    /// Value stored, added, or the wrap limit for inc/dec. Ignored by reads.
    pub operand: u32,
}

impl MemoryOp {
    pub fn volatile_read(addr: WordAddress) -> Self {
        MemoryOp { kind: OpKind::VolatileRead, addr, operand: 0 }
    }

    pub fn volatile_write(addr: WordAddress, value: u32) -> Self {
        MemoryOp { kind: OpKind::VolatileWrite, addr, operand: value }
    }

    pub fn atomic_exch(addr: WordAddress, value: u32) -> Self {
        MemoryOp { kind: OpKind::AtomicExch, addr, operand: value }
    }

    pub fn atomic_add(addr: WordAddress, value: u32) -> Self {
        MemoryOp { kind: OpKind::AtomicAdd, addr, operand: value }
    }

    /// Atomic read expressed the way the hardware benchmark does it.
    pub fn atomic_read(addr: WordAddress) -> Self {
        Self::atomic_add(addr, 0)
    }

    /// Wrapping increment: the counter returns to 0 after reaching `limit`.
    pub fn atomic_inc(addr: WordAddress, limit: u32) -> Self {
        MemoryOp { kind: OpKind::AtomicInc, addr, operand: limit }
    }

    /// Plain increment (wraps only at `u32::MAX`).
    pub fn fetch_inc(addr: WordAddress) -> Self {
        Self::atomic_inc(addr, u32::MAX)
    }

    pub fn atomic_dec(addr: WordAddress, limit: u32) -> Self {
        MemoryOp { kind: OpKind::AtomicDec, addr, operand: limit }
    }

    /// Plain decrement; 0 wraps to `u32::MAX`.
    pub fn fetch_dec(addr: WordAddress) -> Self {
        Self::atomic_dec(addr, u32::MAX)
    }
}

/// Zero-cost annotations a program can emit into the event log. They carry no
/// memory traffic and take no simulated time; the invariant checkers use them
/// to delimit operations and critical sections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Mark {
    /// Start of an acquire (lock, wait, barrier).
    Begin,
    /// Acquire finished: the block is inside the critical section, or has
    /// left the barrier.
    Enter,
    /// The block leaves the critical section and starts its release.
    Exit,
    /// Release finished.
    End,
    /// The block drew this ticket / queue slot.
    Ticket(u32),
    /// The block's arrival at barrier episode `n` is visible in memory.
    Arrived(u32),
}

impl Mark {
    pub fn name(self) -> &'static str {
        match self {
            Mark::Begin => "mark_begin",
            Mark::Enter => "mark_enter",
            Mark::Exit => "mark_exit",
            Mark::End => "mark_end",
            Mark::Ticket(_) => "mark_ticket",
            Mark::Arrived(_) => "mark_arrived",
        }
    }

    pub fn payload(self) -> u32 {
        match self {
            Mark::Ticket(n) | Mark::Arrived(n) => n,
            _ => 0,
        }
    }
}

/// What a block does next.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Mem(MemoryOp),
    /// Wait without generating memory traffic.
    Sleep(SimDuration),
    /// Intra-block barrier.
    SyncThreads,
    /// Every thread of the block reads one word of `[base, base + len)`;
    /// costs one transaction per memory line touched.
    CoalescedRead { base: WordAddress, len: u32 },
    /// Every thread writes one word starting at `base`.
    CoalescedWrite { base: WordAddress, values: Vec<u32> },
    Mark(Mark),
    Done,
}

/// Result of the previous action, handed to [`BlockProgram::step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepInput<'a> {
    /// First call.
    Start,
    /// Value returned by a single memory op: the word read, or the old value
    /// for atomics. Volatile writes return the value written.
    Value(u32),
    /// Words returned by a coalesced read (empty after a coalesced write).
    Values(&'a [u32]),
    /// A sleep, intra-block barrier or mark completed.
    Resumed,
}

impl StepInput<'_> {
    /// The value of a completed single op.
    ///
    /// Panics if the previous action was not a memory op; a program asking for
    /// a value it never requested is a bug in the program.
    pub fn value(&self) -> u32 {
        match self {
            StepInput::Value(v) => *v,
            other => panic!("expected a memory op result, got {other:?}"),
        }
    }

    pub fn values(&self) -> &[u32] {
        match self {
            StepInput::Values(v) => v,
            other => panic!("expected a coalesced result, got {other:?}"),
        }
    }
}

/// A resumable guest program run by one block's master thread.
pub trait BlockProgram {
    fn step(&mut self, input: StepInput<'_>) -> Action;

    /// True for programs that run a fixed number of steps whatever they read.
    /// Every completed step of such a program counts as progress for the
    /// stall detector; other programs progress only by changing memory,
    /// marking, or finishing.
    fn is_straight_line(&self) -> bool {
        false
    }
}

/// A fixed sequence of actions, ignoring results. Handy for tests and
/// open-loop traffic.
#[derive(Clone, Debug, Default)]
pub struct Script {
    actions: Vec<Action>,
    next: usize,
}

impl Script {
    pub fn new(actions: Vec<Action>) -> Self {
        Script { actions, next: 0 }
    }
}

impl BlockProgram for Script {
    fn step(&mut self, _input: StepInput<'_>) -> Action {
        let action = self.actions.get(self.next).cloned().unwrap_or(Action::Done);
        self.next += 1;
        action
    }

    fn is_straight_line(&self) -> bool {
        true
    }
}

impl<F> BlockProgram for F
where
    F: FnMut(StepInput<'_>) -> Action,
{
    fn step(&mut self, input: StepInput<'_>) -> Action {
        self(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_inc_wraps_at_limit() {
        assert_eq!(OpKind::AtomicInc.apply(0, 2), 1);
        assert_eq!(OpKind::AtomicInc.apply(1, 2), 2);
        assert_eq!(OpKind::AtomicInc.apply(2, 2), 0);
        assert_eq!(OpKind::AtomicInc.apply(0, 0), 0);
        assert_eq!(OpKind::AtomicInc.apply(7, u32::MAX), 8);
    }

    #[test]
    fn atomic_dec_wraps_at_zero() {
        assert_eq!(OpKind::AtomicDec.apply(3, u32::MAX), 2);
        assert_eq!(OpKind::AtomicDec.apply(0, u32::MAX), u32::MAX);
        assert_eq!(OpKind::AtomicDec.apply(0, 5), 5);
        assert_eq!(OpKind::AtomicDec.apply(9, 5), 5);
    }

    #[test]
    fn canonical_read_and_write_forms() {
        let r = MemoryOp::atomic_read(WordAddress(3));
        assert_eq!((r.kind, r.operand), (OpKind::AtomicAdd, 0));
        assert!(r.kind.timed_as_read());
        assert_eq!(OpKind::AtomicAdd.apply(41, 0), 41);
        assert!(!OpKind::AtomicExch.timed_as_read());
        assert!(OpKind::AtomicInc.timed_as_read());
    }

    #[test]
    fn script_ends_with_done() {
        let mut s = Script::new(vec![Action::SyncThreads]);
        assert_eq!(s.step(StepInput::Start), Action::SyncThreads);
        assert_eq!(s.step(StepInput::Resumed), Action::Done);
        assert_eq!(s.step(StepInput::Resumed), Action::Done);
    }
}
