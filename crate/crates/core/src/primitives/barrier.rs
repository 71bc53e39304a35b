use crate::engine::{Action, Mark, MemoryOp, StepInput};
use crate::machine::WordAddress;

use super::Primitive;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum XfState {
    Idle,
    Arriving,
    Arrived,
    Polling,
    Checking,
    MasterSync,
    Releasing,
    Sync,
}

/// Atomic-free global barrier with per-block arrive and release flags.
///
/// Flags hold the barrier episode number, so they never need resetting. Every
/// block stores its episode into its arrive flag. Block 0 is the master: its
/// threads read the arrive array with coalesced loads until every flag is
/// current, pass an intra-block barrier, and store the episode into the whole
/// release array at once. The other blocks poll their own release flag.
pub struct XfBarrier {
    arrive: WordAddress,
    release: WordAddress,
    blocks: u32,
    block: u32,
    episode: u32,
    /// Span of arrive flags not yet seen current by the master.
    pending: (u32, u32),
    state: XfState,
}

impl XfBarrier {
    pub fn new(arrive: WordAddress, release: WordAddress, blocks: u32, block: u32) -> Self {
        XfBarrier { arrive, release, blocks, block, episode: 0, pending: (0, 0), state: XfState::Idle }
    }

    fn check(&mut self) -> Option<Action> {
        self.state = XfState::Checking;
        let (lo, hi) = self.pending;
        Some(Action::CoalescedRead { base: self.arrive.offset(lo), len: hi - lo })
    }
}

impl Primitive for XfBarrier {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            XfState::Idle => {
                self.episode += 1;
                self.state = XfState::Arriving;
                Some(Action::Mem(MemoryOp::volatile_write(self.arrive.offset(self.block), self.episode)))
            }
            XfState::Arriving => {
                self.state = XfState::Arrived;
                Some(Action::Mark(Mark::Arrived(self.episode)))
            }
            XfState::Arrived if self.block == 0 => {
                self.pending = (0, self.blocks);
                self.check()
            }
            XfState::Arrived => {
                self.state = XfState::Polling;
                Some(Action::Mem(MemoryOp::volatile_read(self.release.offset(self.block))))
            }
            XfState::Polling => {
                if input.value() == self.episode {
                    self.state = XfState::Sync;
                    return Some(Action::SyncThreads);
                }
                Some(Action::Mem(MemoryOp::volatile_read(self.release.offset(self.block))))
            }
            XfState::Checking => {
                let values = input.values();
                let lo = self.pending.0;
                let stale = |v: &u32| *v != self.episode;
                match values.iter().position(stale) {
                    None => {
                        self.state = XfState::MasterSync;
                        Some(Action::SyncThreads)
                    }
                    Some(first) => {
                        let last = values.iter().rposition(stale).expect("a stale flag exists");
                        self.pending = (lo + first as u32, lo + last as u32 + 1);
                        self.check()
                    }
                }
            }
            XfState::MasterSync => {
                self.state = XfState::Releasing;
                Some(Action::CoalescedWrite { base: self.release, values: vec![self.episode; self.blocks as usize] })
            }
            XfState::Releasing | XfState::Sync => {
                self.state = XfState::Idle;
                None
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AtomicBarrierState {
    Idle,
    Incrementing(usize),
    /// Stage-1 arrival marked; `true` if this block completed the stage.
    Arrived { last: bool },
    Polling(usize),
}

/// Centralized two-stage barrier over two counters.
///
/// In each stage a block increments the stage counter with a wrapping
/// `atomicInc(counter, blocks - 1)`, so the last arriver returns it to 0, and
/// then polls the counter with volatile reads until it reads 0. A block can
/// only re-enter stage 1 after every block has left stage 1, which keeps the
/// counters from being reused too early.
pub struct AtomicBarrier {
    counters: [WordAddress; 2],
    blocks: u32,
    episode: u32,
    state: AtomicBarrierState,
}

impl AtomicBarrier {
    pub fn new(first: WordAddress, second: WordAddress, blocks: u32) -> Self {
        AtomicBarrier { counters: [first, second], blocks, episode: 0, state: AtomicBarrierState::Idle }
    }

    fn increment(&mut self, stage: usize) -> Option<Action> {
        self.state = AtomicBarrierState::Incrementing(stage);
        Some(Action::Mem(MemoryOp::atomic_inc(self.counters[stage], self.blocks - 1)))
    }

    fn poll(&mut self, stage: usize) -> Option<Action> {
        self.state = AtomicBarrierState::Polling(stage);
        Some(Action::Mem(MemoryOp::volatile_read(self.counters[stage])))
    }

    /// Leaves stage `stage`: on to the next stage, or out of the barrier.
    fn pass(&mut self, stage: usize) -> Option<Action> {
        if stage == 0 {
            self.increment(1)
        } else {
            self.state = AtomicBarrierState::Idle;
            None
        }
    }
}

impl Primitive for AtomicBarrier {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            AtomicBarrierState::Idle => {
                self.episode += 1;
                self.increment(0)
            }
            AtomicBarrierState::Incrementing(stage) => {
                let last = input.value() == self.blocks - 1;
                if stage == 0 {
                    self.state = AtomicBarrierState::Arrived { last };
                    return Some(Action::Mark(Mark::Arrived(self.episode)));
                }
                if last {
                    self.pass(stage)
                } else {
                    self.poll(stage)
                }
            }
            AtomicBarrierState::Arrived { last: true } => self.pass(0),
            AtomicBarrierState::Arrived { last: false } => self.poll(0),
            AtomicBarrierState::Polling(stage) => {
                if input.value() == 0 {
                    self.pass(stage)
                } else {
                    self.poll(stage)
                }
            }
        }
    }
}
