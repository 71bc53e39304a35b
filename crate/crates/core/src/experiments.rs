//! Primitive throughput experiments: single points, block-count sweeps, and
//! the best implementation per category at full scale.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::engine::{self, EngineConfig, RunStats};
use crate::error::{Error, Result};
use crate::invariants::{InvariantReport, InvariantSuite};
use crate::machine::MachineProfile;
use crate::primitives::{self, Category, PrimitiveConfig, PrimitiveKind};
use crate::time::{SimDuration, SimTime};

/// Semaphore capacities the sweeps use by default.
pub const SEMAPHORE_CAPACITIES: [u32; 4] = [1, 2, 10, 120];
/// Capacity standing for "low initial value" when picking the best semaphore.
pub const LOW_CAPACITY: u32 = 1;
/// Capacity standing for "high initial value".
pub const HIGH_CAPACITY: u32 = 120;

/// Engine settings for throughput runs. The slowest configurations (spin
/// locks at full scale on a machine with slow atomics) need tens of
/// simulated seconds, so the time limit is far above the engine default.
pub fn experiment_engine_config(seed: u64) -> EngineConfig {
    EngineConfig { max_sim_time: SimTime::ZERO + SimDuration::from_secs(600.0), ..EngineConfig::with_seed(seed) }
}

/// One measured (or skipped) configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThroughputPoint {
    pub profile: String,
    pub primitive: PrimitiveKind,
    pub blocks: u32,
    pub capacity: Option<u32>,
    /// `None` when the point lies beyond the primitive's sweep cap.
    pub ops_per_sec: Option<f64>,
    pub sim_time_ns: Option<f64>,
}

impl ThroughputPoint {
    pub fn is_measured(&self) -> bool {
        self.ops_per_sec.is_some()
    }
}

/// A measured point together with what the checkers saw.
#[derive(Clone, Debug)]
pub struct ThroughputRun {
    pub point: ThroughputPoint,
    pub report: InvariantReport,
    pub stats: RunStats,
}

/// Operations per second: every block's operations for mutexes and
/// semaphores, one per episode for barriers.
pub fn ops_per_second(kind: PrimitiveKind, blocks: u32, ops_per_block: u32, sim_secs: f64) -> f64 {
    let ops = if kind.is_barrier() { ops_per_block as f64 } else { blocks as f64 * ops_per_block as f64 };
    ops / sim_secs
}

/// Runs `cfg` with `blocks` blocks under the full invariant suite.
pub fn run_throughput(
    profile: &MachineProfile,
    cfg: &PrimitiveConfig,
    blocks: u32,
    engine_cfg: &EngineConfig,
) -> Result<ThroughputRun> {
    let instance = primitives::build(profile, cfg, blocks)?;
    let mut suite = InvariantSuite::for_instance(cfg, blocks, &instance);
    let summary = engine::run(profile, instance.programs, instance.memory, engine_cfg, &mut suite)?;
    let report = suite.ensure(&summary)?;
    let secs = summary.end_time.as_secs();
    if secs <= 0.0 {
        return Err(Error::InvalidConfig(format!("{} finished in zero simulated time", cfg.kind)));
    }
    let point = ThroughputPoint {
        profile: profile.name.clone(),
        primitive: cfg.kind,
        blocks,
        capacity: cfg.capacity(),
        ops_per_sec: Some(ops_per_second(cfg.kind, blocks, cfg.ops_per_block, secs)),
        sim_time_ns: Some(summary.end_time.as_ns()),
    };
    Ok(ThroughputRun { point, report, stats: summary.stats })
}

/// Block counts 1..=16, then every 8th, always ending at `max`.
pub fn default_block_counts(max: u32) -> Vec<u32> {
    let mut counts: Vec<u32> = (1..=max.min(16)).collect();
    counts.extend((24..max).step_by(8));
    if counts.last() != Some(&max) {
        counts.push(max);
    }
    counts
}

/// Block counts beyond which a primitive is not measured on a built-in
/// profile, mirroring where the reference hardware became too slow or
/// erratic to time.
pub fn sweep_cap(profile: &MachineProfile, kind: PrimitiveKind) -> Option<u32> {
    match (profile.name.as_str(), kind) {
        ("tesla", PrimitiveKind::SpinLock | PrimitiveKind::SpinMutex) => Some(130),
        ("tesla", PrimitiveKind::SpinSem) => Some(120),
        ("tesla", PrimitiveKind::AtomicBarrier) => Some(60),
        _ => None,
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Explicit block counts; defaults to [`default_block_counts`].
    pub blocks: Option<Vec<u32>>,
    /// Skip points above [`sweep_cap`].
    pub apply_caps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub profile: String,
    pub primitive: PrimitiveKind,
    pub capacity: Option<u32>,
    pub points: Vec<ThroughputPoint>,
}

impl SweepResult {
    pub fn measured(&self) -> impl Iterator<Item = &ThroughputPoint> {
        self.points.iter().filter(|p| p.is_measured())
    }

    pub fn at(&self, blocks: u32) -> Option<&ThroughputPoint> {
        self.points.iter().find(|p| p.blocks == blocks)
    }

    /// Largest relative change in ops/sec between consecutive measured
    /// points.
    pub fn max_relative_step(&self) -> f64 {
        let values: Vec<f64> = self.measured().filter_map(|p| p.ops_per_sec).collect();
        values.windows(2).map(|w| ((w[1] - w[0]) / w[0]).abs()).fold(0.0, f64::max)
    }
}

pub fn sweep(
    profile: &MachineProfile,
    cfg: &PrimitiveConfig,
    options: &SweepOptions,
    engine_cfg: &EngineConfig,
) -> Result<SweepResult> {
    let max = cfg.kind.max_blocks(profile);
    let mut counts = options.blocks.clone().unwrap_or_else(|| default_block_counts(max));
    counts.sort_unstable();
    counts.dedup();
    let cap = if options.apply_caps { sweep_cap(profile, cfg.kind) } else { None };
    let mut points = Vec::with_capacity(counts.len());
    for blocks in counts {
        if cap.is_some_and(|c| blocks > c) {
            points.push(ThroughputPoint {
                profile: profile.name.clone(),
                primitive: cfg.kind,
                blocks,
                capacity: cfg.capacity(),
                ops_per_sec: None,
                sim_time_ns: None,
            });
            continue;
        }
        points.push(run_throughput(profile, cfg, blocks, engine_cfg)?.point);
    }
    Ok(SweepResult { profile: profile.name.clone(), primitive: cfg.kind, capacity: cfg.capacity(), points })
}

/// Writes `profile,primitive,blocks,capacity,ops_per_sec,sim_time_ns` rows;
/// unmeasured points leave the last two cells empty.
pub fn write_sweeps_csv<W: Write>(sweeps: &[SweepResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["profile", "primitive", "blocks", "capacity", "ops_per_sec", "sim_time_ns"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for p in sweeps.iter().flat_map(|s| &s.points) {
        w.write_record([
            p.profile.clone(),
            p.primitive.to_string(),
            p.blocks.to_string(),
            p.capacity.map(|c| c.to_string()).unwrap_or_default(),
            opt(p.ops_per_sec),
            opt(p.sim_time_ns),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// The same rows as [`write_sweeps_csv`], as a JSON array of objects.
pub fn sweeps_to_json(sweeps: &[SweepResult]) -> Result<String> {
    let points: Vec<&ThroughputPoint> = sweeps.iter().flat_map(|s| &s.points).collect();
    Ok(serde_json::to_string_pretty(&points)?)
}

/// Writes CSV or JSON depending on the file extension.
pub fn save_sweeps(sweeps: &[SweepResult], path: &Path) -> Result<()> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let data = if is_json {
        let mut s = sweeps_to_json(sweeps)?;
        s.push('\n');
        s.into_bytes()
    } else {
        let mut buf = Vec::new();
        write_sweeps_csv(sweeps, &mut buf)?;
        buf
    };
    std::fs::write(path, data).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Choice {
    pub primitive: PrimitiveKind,
    pub blocks: u32,
    pub ops_per_sec: f64,
}

/// Best primitive per category, judged at each candidate's full scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestReport {
    pub profile: String,
    pub barrier: Option<Choice>,
    pub mutex: Option<Choice>,
    pub semaphore_low: Option<Choice>,
    pub semaphore_high: Option<Choice>,
    /// Candidates left out because their full-scale point was not measured.
    pub unmeasured: Vec<String>,
}

impl BestReport {
    pub fn cells(&self) -> [(&'static str, Option<&Choice>); 4] {
        [
            ("barrier", self.barrier.as_ref()),
            ("mutex", self.mutex.as_ref()),
            ("semaphore (low capacity)", self.semaphore_low.as_ref()),
            ("semaphore (high capacity)", self.semaphore_high.as_ref()),
        ]
    }

    /// Winning primitive names in cell order.
    pub fn names(&self) -> [Option<&'static str>; 4] {
        self.cells().map(|(_, c)| c.map(|c| c.primitive.name()))
    }
}

impl fmt::Display for BestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "best implementation at scale on {}", self.profile)?;
        for (label, choice) in self.cells() {
            match choice {
                Some(c) => writeln!(
                    f,
                    "  {label:<26} {:<20} {:>14.1} ops/s at {} blocks",
                    c.primitive.name(),
                    c.ops_per_sec,
                    c.blocks
                )?,
                None => writeln!(f, "  {label:<26} (no candidate measured)")?,
            }
        }
        if !self.unmeasured.is_empty() {
            writeln!(f, "  not measured at full scale: {}", self.unmeasured.join(", "))?;
        }
        Ok(())
    }
}

pub fn best_at_scale(profile: &MachineProfile, sweeps: &[SweepResult]) -> BestReport {
    let mut unmeasured = Vec::new();
    let mut pick = |category: Category, capacity: Option<u32>| -> Option<Choice> {
        let mut best: Option<Choice> = None;
        for s in sweeps.iter().filter(|s| s.primitive.category() == category && s.capacity == capacity) {
            let full = s.primitive.max_blocks(profile);
            match s.at(full).and_then(|p| p.ops_per_sec) {
                Some(ops) => {
                    if best.as_ref().is_none_or(|b| ops > b.ops_per_sec) {
                        best = Some(Choice { primitive: s.primitive, blocks: full, ops_per_sec: ops });
                    }
                }
                None => unmeasured.push(match capacity {
                    Some(c) => format!("{} (capacity {c})", s.primitive),
                    None => s.primitive.to_string(),
                }),
            }
        }
        best
    };
    let barrier = pick(Category::Barrier, None);
    let mutex = pick(Category::Mutex, None);
    let semaphore_low = pick(Category::Semaphore, Some(LOW_CAPACITY));
    let semaphore_high = pick(Category::Semaphore, Some(HIGH_CAPACITY));
    BestReport { profile: profile.name.clone(), barrier, mutex, semaphore_low, semaphore_high, unmeasured }
}

/// Operations per block used for a full-scale point. Spin semaphores with
/// capacity 10 or less convoy on the atomic unit at full scale and need
/// billions of events for 1000 operations per block, so they run
/// [`CONVOY_OPS_PER_BLOCK`] instead; throughput is per operation, so the
/// points stay comparable.
pub fn full_scale_ops(kind: PrimitiveKind, capacity: Option<u32>, ops: u32) -> u32 {
    match (kind, capacity) {
        (PrimitiveKind::SpinSem | PrimitiveKind::SpinSemBackoff, Some(c)) if c <= CONVOY_MAX_CAPACITY => ops.min(CONVOY_OPS_PER_BLOCK),
        _ => ops,
    }
}

pub const CONVOY_OPS_PER_BLOCK: u32 = 10;
pub const CONVOY_MAX_CAPACITY: u32 = 10;

/// Runs every primitive once at its full scale (semaphores at the low and
/// high capacities) and returns single-point sweeps suitable for
/// [`best_at_scale`]. Operations per block follow [`full_scale_ops`].
pub fn full_scale_points(profile: &MachineProfile, engine_cfg: &EngineConfig) -> Result<Vec<SweepResult>> {
    full_scale_points_with(profile, primitives::DEFAULT_OPS_PER_BLOCK, engine_cfg)
}

/// [`full_scale_points`] with `ops` operations per block.
pub fn full_scale_points_with(profile: &MachineProfile, ops: u32, engine_cfg: &EngineConfig) -> Result<Vec<SweepResult>> {
    let mut sweeps = Vec::new();
    for kind in PrimitiveKind::ALL {
        let capacities: Vec<Option<u32>> =
            if kind.is_semaphore() { vec![Some(LOW_CAPACITY), Some(HIGH_CAPACITY)] } else { vec![None] };
        for capacity in capacities {
            let mut cfg = PrimitiveConfig::new(kind, profile).with_ops(full_scale_ops(kind, capacity, ops));
            if let Some(c) = capacity {
                cfg.capacity = c;
            }
            let options = SweepOptions { blocks: Some(vec![kind.max_blocks(profile)]), apply_caps: false };
            sweeps.push(sweep(profile, &cfg, &options, engine_cfg)?);
        }
    }
    Ok(sweeps)
}
