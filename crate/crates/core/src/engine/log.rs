use std::io::Write;

use serde::Serialize;

use super::line::Server;
use super::program::{BlockId, Mark, OpKind};
use crate::error::Result;
use crate::machine::WordAddress;
use crate::time::SimTime;

/// What a log record describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RecordKind {
    Op(OpKind),
    /// One word of a coalesced read.
    CoalescedRead,
    /// One word of a coalesced write.
    CoalescedWrite,
    Mark(Mark),
}

impl RecordKind {
    pub fn name(self) -> &'static str {
        match self {
            RecordKind::Op(kind) => kind.name(),
            RecordKind::CoalescedRead => "coalesced_read",
            RecordKind::CoalescedWrite => "coalesced_write",
            RecordKind::Mark(mark) => mark.name(),
        }
    }

    pub fn is_atomic(self) -> bool {
        matches!(self, RecordKind::Op(kind) if kind.is_atomic())
    }

    pub fn is_memory(self) -> bool {
        !matches!(self, RecordKind::Mark(_))
    }
}

/// One completed memory access (or mark), logged at its completion time.
///
/// `value` is the word returned for reads and atomics, the word stored for
/// volatile writes, and the payload for marks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LogRecord {
    pub time: SimTime,
    pub block: BlockId,
    pub kind: RecordKind,
    pub addr: WordAddress,
    pub operand: u32,
    pub value: u32,
    pub server: Option<Server>,
    /// First word of a memory transaction. Single ops always start one; a
    /// coalesced access starts one per line.
    pub txn_start: bool,
}

/// Receives records in completion order.
pub trait LogSink {
    fn record(&mut self, rec: &LogRecord);
}

impl LogSink for () {
    fn record(&mut self, _rec: &LogRecord) {}
}

impl<S: LogSink + ?Sized> LogSink for &mut S {
    fn record(&mut self, rec: &LogRecord) {
        (**self).record(rec)
    }
}

impl<A: LogSink, B: LogSink> LogSink for (A, B) {
    fn record(&mut self, rec: &LogRecord) {
        self.0.record(rec);
        self.1.record(rec);
    }
}

/// The full event log of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventLog {
    pub records: Vec<LogRecord>,
}

impl LogSink for EventLog {
    fn record(&mut self, rec: &LogRecord) {
        self.records.push(*rec);
    }
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LogRecord> {
        self.records.iter()
    }

    /// Memory records only (marks filtered out).
    pub fn memory_records(&self) -> impl Iterator<Item = &LogRecord> {
        self.records.iter().filter(|r| r.kind.is_memory())
    }

    pub fn transactions(&self) -> usize {
        self.memory_records().filter(|r| r.txn_start).count()
    }

    pub fn atomic_count(&self) -> usize {
        self.records.iter().filter(|r| r.kind.is_atomic()).count()
    }

    /// Writes `time_ns,block_id,op_kind,addr,value`, one row per record.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_ns", "block_id", "op_kind", "addr", "value"])?;
        for r in &self.records {
            w.write_record([
                format!("{:.3}", r.time.as_ns()),
                r.block.to_string(),
                r.kind.name().to_string(),
                r.addr.0.to_string(),
                r.value.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}
