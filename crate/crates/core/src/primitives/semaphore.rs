use crate::engine::{Action, Mark, MemoryOp, StepInput};
use crate::machine::WordAddress;

use super::{Backoff, BackoffConfig, Primitive};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SpinSemState {
    Idle,
    WaitSwap,
    WaitRestore,
    WaitSleeping,
    WaitCommit,
    PostSwap,
    PostSleeping,
    PostCommit,
}

/// Spin-lock semaphore over one word `S` initialised to capacity + 1.
///
/// Both wait and post grab `S` with `atomicExch(S, 0)`; a returned 0 means
/// another block holds it. Wait takes a slot when the value is above 1 and
/// writes back value - 1; at value 1 the semaphore is full and 1 is written
/// back. Post writes back value + 1.
pub struct SpinSemaphore {
    word: WordAddress,
    wait_backoff: Option<Backoff>,
    post_backoff: Option<Backoff>,
    state: SpinSemState,
}

impl SpinSemaphore {
    pub fn new(word: WordAddress, wait_backoff: Option<BackoffConfig>, post_backoff: Option<BackoffConfig>) -> Self {
        SpinSemaphore {
            word,
            wait_backoff: wait_backoff.map(Backoff::new),
            post_backoff: post_backoff.map(Backoff::new),
            state: SpinSemState::Idle,
        }
    }

    fn swap(&mut self, state: SpinSemState) -> Option<Action> {
        self.state = state;
        Some(Action::Mem(MemoryOp::atomic_exch(self.word, 0)))
    }

    fn wait_retry(&mut self) -> Option<Action> {
        match &mut self.wait_backoff {
            Some(b) => {
                self.state = SpinSemState::WaitSleeping;
                Some(b.sleep())
            }
            None => self.swap(SpinSemState::WaitSwap),
        }
    }
}

impl Primitive for SpinSemaphore {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            SpinSemState::Idle => {
                if let Some(b) = &mut self.wait_backoff {
                    b.reset();
                }
                self.swap(SpinSemState::WaitSwap)
            }
            SpinSemState::WaitSwap => match input.value() {
                0 => self.wait_retry(),
                1 => {
                    self.state = SpinSemState::WaitRestore;
                    Some(Action::Mem(MemoryOp::atomic_exch(self.word, 1)))
                }
                v => {
                    self.state = SpinSemState::WaitCommit;
                    Some(Action::Mem(MemoryOp::atomic_exch(self.word, v - 1)))
                }
            },
            SpinSemState::WaitRestore => self.wait_retry(),
            SpinSemState::WaitSleeping => self.swap(SpinSemState::WaitSwap),
            SpinSemState::WaitCommit => {
                self.state = SpinSemState::Idle;
                None
            }
            _ => unreachable!("wait while posting"),
        }
    }

    fn release(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            SpinSemState::Idle => {
                if let Some(b) = &mut self.post_backoff {
                    b.reset();
                }
                self.swap(SpinSemState::PostSwap)
            }
            SpinSemState::PostSwap => match input.value() {
                0 => match &mut self.post_backoff {
                    Some(b) => {
                        self.state = SpinSemState::PostSleeping;
                        Some(b.sleep())
                    }
                    None => self.swap(SpinSemState::PostSwap),
                },
                v => {
                    self.state = SpinSemState::PostCommit;
                    Some(Action::Mem(MemoryOp::atomic_exch(self.word, v.wrapping_add(1))))
                }
            },
            SpinSemState::PostSleeping => self.swap(SpinSemState::PostSwap),
            SpinSemState::PostCommit => {
                self.state = SpinSemState::Idle;
                None
            }
            _ => unreachable!("post while waiting"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SleepSemState {
    Idle,
    Counting,
    Drawing,
    Marked,
    Polling,
    Decrementing,
    Releasing,
}

/// Sleeping (ticket) semaphore.
///
/// Wait increments `count`; a previous value below the capacity enters
/// immediately. Otherwise the block draws a ticket and polls `turn` with
/// volatile reads until `turn > ticket`. Post decrements `count` and, when
/// the previous value exceeded the capacity, increments `turn`.
pub struct SleepSemaphore {
    count: WordAddress,
    ticket: WordAddress,
    turn: WordAddress,
    capacity: u32,
    my_ticket: u32,
    state: SleepSemState,
}

impl SleepSemaphore {
    pub fn new(count: WordAddress, ticket: WordAddress, turn: WordAddress, capacity: u32) -> Self {
        SleepSemaphore { count, ticket, turn, capacity, my_ticket: 0, state: SleepSemState::Idle }
    }

    fn poll(&mut self) -> Option<Action> {
        self.state = SleepSemState::Polling;
        Some(Action::Mem(MemoryOp::volatile_read(self.turn)))
    }
}

impl Primitive for SleepSemaphore {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            SleepSemState::Idle => {
                self.state = SleepSemState::Counting;
                Some(Action::Mem(MemoryOp::fetch_inc(self.count)))
            }
            SleepSemState::Counting => {
                if input.value() < self.capacity {
                    self.state = SleepSemState::Idle;
                    return None;
                }
                self.state = SleepSemState::Drawing;
                Some(Action::Mem(MemoryOp::fetch_inc(self.ticket)))
            }
            SleepSemState::Drawing => {
                self.my_ticket = input.value();
                self.state = SleepSemState::Marked;
                Some(Action::Mark(Mark::Ticket(self.my_ticket)))
            }
            SleepSemState::Marked => self.poll(),
            SleepSemState::Polling => {
                if input.value() > self.my_ticket {
                    self.state = SleepSemState::Idle;
                    return None;
                }
                self.poll()
            }
            _ => unreachable!("wait while posting"),
        }
    }

    fn release(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            SleepSemState::Idle => {
                self.state = SleepSemState::Decrementing;
                Some(Action::Mem(MemoryOp::fetch_dec(self.count)))
            }
            SleepSemState::Decrementing if input.value() > self.capacity => {
                self.state = SleepSemState::Releasing;
                Some(Action::Mem(MemoryOp::fetch_inc(self.turn)))
            }
            _ => {
                self.state = SleepSemState::Idle;
                None
            }
        }
    }
}
