use crate::engine::{Action, Mark, MemoryOp, StepInput};
use crate::machine::WordAddress;

use super::{Backoff, BackoffConfig, Primitive};

/// How a spin mutex gives the lock back.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpinRelease {
    /// `atomicExch(lock, 0)`: the release joins the atomic queue.
    #[default]
    Atomic,
    /// A plain volatile store of 0.
    Volatile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SpinState {
    Idle,
    Trying,
    Sleeping,
    Releasing,
}

/// Spin lock: loop on `atomicExch(lock, 1)` until it returns 0, optionally
/// backing off after each failed attempt.
pub struct SpinMutex {
    lock: WordAddress,
    backoff: Option<Backoff>,
    release: SpinRelease,
    state: SpinState,
}

impl SpinMutex {
    pub fn new(lock: WordAddress, backoff: Option<BackoffConfig>, release: SpinRelease) -> Self {
        SpinMutex { lock, backoff: backoff.map(Backoff::new), release, state: SpinState::Idle }
    }

    fn attempt(&mut self) -> Option<Action> {
        self.state = SpinState::Trying;
        Some(Action::Mem(MemoryOp::atomic_exch(self.lock, 1)))
    }
}

impl Primitive for SpinMutex {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            SpinState::Idle => {
                if let Some(b) = &mut self.backoff {
                    b.reset();
                }
                self.attempt()
            }
            SpinState::Trying => {
                if input.value() == 0 {
                    self.state = SpinState::Idle;
                    return None;
                }
                match &mut self.backoff {
                    Some(b) => {
                        self.state = SpinState::Sleeping;
                        Some(b.sleep())
                    }
                    None => self.attempt(),
                }
            }
            SpinState::Sleeping => self.attempt(),
            SpinState::Releasing => unreachable!("acquire while releasing"),
        }
    }

    fn release(&mut self, _input: StepInput<'_>) -> Option<Action> {
        match self.state {
            SpinState::Idle => {
                self.state = SpinState::Releasing;
                Some(Action::Mem(match self.release {
                    SpinRelease::Atomic => MemoryOp::atomic_exch(self.lock, 0),
                    SpinRelease::Volatile => MemoryOp::volatile_write(self.lock, 0),
                }))
            }
            _ => {
                self.state = SpinState::Idle;
                None
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TicketState {
    Idle,
    Drawing,
    Marked,
    Polling,
    Sleeping,
    ReadingTurn,
    WritingTurn,
}

/// Fetch-and-add (ticket) mutex: one atomic increment of `ticket`, then
/// volatile polling of `turn` with backoff. Unlock is a volatile read and
/// write of `turn` by the holder.
pub struct FaMutex {
    ticket: WordAddress,
    turn: WordAddress,
    backoff: Option<Backoff>,
    my_ticket: u32,
    state: TicketState,
}

impl FaMutex {
    pub fn new(ticket: WordAddress, turn: WordAddress, backoff: Option<BackoffConfig>) -> Self {
        FaMutex { ticket, turn, backoff: backoff.map(Backoff::new), my_ticket: 0, state: TicketState::Idle }
    }

    fn poll(&mut self) -> Option<Action> {
        self.state = TicketState::Polling;
        Some(Action::Mem(MemoryOp::volatile_read(self.turn)))
    }
}

impl Primitive for FaMutex {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            TicketState::Idle => {
                self.state = TicketState::Drawing;
                Some(Action::Mem(MemoryOp::fetch_inc(self.ticket)))
            }
            TicketState::Drawing => {
                self.my_ticket = input.value();
                self.state = TicketState::Marked;
                Some(Action::Mark(Mark::Ticket(self.my_ticket)))
            }
            TicketState::Marked => {
                if let Some(b) = &mut self.backoff {
                    b.reset();
                }
                self.poll()
            }
            TicketState::Polling => {
                if input.value() == self.my_ticket {
                    self.state = TicketState::Idle;
                    return None;
                }
                match &mut self.backoff {
                    Some(b) => {
                        self.state = TicketState::Sleeping;
                        Some(b.sleep())
                    }
                    None => self.poll(),
                }
            }
            TicketState::Sleeping => self.poll(),
            TicketState::ReadingTurn | TicketState::WritingTurn => unreachable!("acquire while releasing"),
        }
    }

    fn release(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            TicketState::Idle => {
                self.state = TicketState::ReadingTurn;
                Some(Action::Mem(MemoryOp::volatile_read(self.turn)))
            }
            TicketState::ReadingTurn => {
                self.state = TicketState::WritingTurn;
                Some(Action::Mem(MemoryOp::volatile_write(self.turn, input.value().wrapping_add(1))))
            }
            _ => {
                self.state = TicketState::Idle;
                None
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RingState {
    Idle,
    Drawing,
    Marked,
    Enqueued,
    ReadingHead,
    ReadingSlot,
    Sleeping,
    Clearing,
    ReleaseReadHead,
    ReleaseWriteHead,
}

/// Ring-buffer queue mutex. A block takes a slot with an atomic increment of
/// `tail`, writes its id there, and polls until the slot at `head` holds its
/// id (two volatile reads per poll). Unlock clears the slot and advances
/// `head`.
pub struct RingMutex {
    head: WordAddress,
    tail: WordAddress,
    buffer: WordAddress,
    capacity: u32,
    tag: u32,
    slot: u32,
    backoff: Option<Backoff>,
    state: RingState,
}

impl RingMutex {
    /// `capacity` slots starting at `buffer`; it must be at least the number
    /// of participating blocks.
    pub fn new(
        head: WordAddress,
        tail: WordAddress,
        buffer: WordAddress,
        capacity: u32,
        block: u32,
        backoff: Option<BackoffConfig>,
    ) -> Self {
        RingMutex {
            head,
            tail,
            buffer,
            capacity,
            tag: block + 1,
            slot: 0,
            backoff: backoff.map(Backoff::new),
            state: RingState::Idle,
        }
    }

    fn read_head(&mut self) -> Option<Action> {
        self.state = RingState::ReadingHead;
        Some(Action::Mem(MemoryOp::volatile_read(self.head)))
    }
}

impl Primitive for RingMutex {
    fn acquire(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            RingState::Idle => {
                self.state = RingState::Drawing;
                Some(Action::Mem(MemoryOp::fetch_inc(self.tail)))
            }
            RingState::Drawing => {
                let position = input.value();
                self.slot = position % self.capacity;
                self.state = RingState::Marked;
                Some(Action::Mark(Mark::Ticket(position)))
            }
            RingState::Marked => {
                self.state = RingState::Enqueued;
                Some(Action::Mem(MemoryOp::volatile_write(self.buffer.offset(self.slot), self.tag)))
            }
            RingState::Enqueued => {
                if let Some(b) = &mut self.backoff {
                    b.reset();
                }
                self.read_head()
            }
            RingState::ReadingHead => {
                self.state = RingState::ReadingSlot;
                let front = input.value() % self.capacity;
                Some(Action::Mem(MemoryOp::volatile_read(self.buffer.offset(front))))
            }
            RingState::ReadingSlot => {
                if input.value() == self.tag {
                    self.state = RingState::Idle;
                    return None;
                }
                match &mut self.backoff {
                    Some(b) => {
                        self.state = RingState::Sleeping;
                        Some(b.sleep())
                    }
                    None => self.read_head(),
                }
            }
            RingState::Sleeping => self.read_head(),
            _ => unreachable!("acquire while releasing"),
        }
    }

    fn release(&mut self, input: StepInput<'_>) -> Option<Action> {
        match self.state {
            RingState::Idle => {
                self.state = RingState::Clearing;
                Some(Action::Mem(MemoryOp::volatile_write(self.buffer.offset(self.slot), 0)))
            }
            RingState::Clearing => {
                self.state = RingState::ReleaseReadHead;
                Some(Action::Mem(MemoryOp::volatile_read(self.head)))
            }
            RingState::ReleaseReadHead => {
                self.state = RingState::ReleaseWriteHead;
                Some(Action::Mem(MemoryOp::volatile_write(self.head, input.value().wrapping_add(1))))
            }
            _ => {
                self.state = RingState::Idle;
                None
            }
        }
    }
}
