use std::path::PathBuf;

use thiserror::Error;

use crate::engine::BlockedBlock;
use crate::time::SimTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown profile `{0}` (expected tesla, fermi or a path to a profile config)")]
    UnknownProfile(String),

    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{programs} programs exceed the machine limit of {max_blocks} resident blocks")]
    TooManyBlocks { programs: usize, max_blocks: u32 },

    #[error("deadlock at {time}: {} block(s) cannot make progress: {}", blocked.len(), format_blocked(blocked))]
    Deadlock { time: SimTime, blocked: Vec<BlockedBlock> },

    #[error("simulated time limit {limit} exceeded with {} unfinished block(s): {}", blocked.len(), format_blocked(blocked))]
    TimeLimit { limit: SimTime, blocked: Vec<BlockedBlock> },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("benchmark table is missing row `{0}`")]
    MissingRow(String),

    #[error("non-positive target time {value} ms for `{row}`")]
    NonPositiveTarget { row: String, value: f64 },

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

fn format_blocked(blocked: &[BlockedBlock]) -> String {
    const SHOWN: usize = 8;
    let mut parts: Vec<String> = blocked.iter().take(SHOWN).map(|b| b.to_string()).collect();
    if blocked.len() > SHOWN {
        parts.push(format!("... {} more", blocked.len() - SHOWN));
    }
    parts.join(", ")
}
