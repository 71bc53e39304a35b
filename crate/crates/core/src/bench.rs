//! The memory benchmark suite run inside the simulator, the derived ratio
//! tables, and closed-form calibration of timing parameters from a table of
//! measured times.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{self, Action, BlockProgram, EngineConfig, MemoryImage, MemoryOp, StepInput};
use crate::error::{Error, Result};
use crate::invariants::InvariantSuite;
use crate::machine::{MachineProfile, TimingParams, WordAddress, DEFAULT_SYNC_THREADS_NS};
use crate::reference::{self, MemoryTimings, ACCESSES_PER_BLOCK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Access {
    Atomic,
    Volatile,
    /// Volatile accesses preceded by one atomic instruction per block.
    VolatileAfterAtomic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contention {
    /// Every block accesses the same word.
    Contentious,
    /// Every block accesses its own word on its own line.
    Noncontentious,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Read,
    Write,
}

impl Access {
    pub fn name(self) -> &'static str {
        match self {
            Access::Atomic => "atomic",
            Access::Volatile => "volatile",
            Access::VolatileAfterAtomic => "volatile_after_atomic",
        }
    }
}

impl Contention {
    pub fn name(self) -> &'static str {
        match self {
            Contention::Contentious => "contentious",
            Contention::Noncontentious => "noncontentious",
        }
    }
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Read => "read",
            Direction::Write => "write",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BenchmarkKind {
    pub access: Access,
    pub contention: Contention,
    pub direction: Direction,
}

impl BenchmarkKind {
    pub const fn new(access: Access, contention: Contention, direction: Direction) -> Self {
        BenchmarkKind { access, contention, direction }
    }

    /// All twelve benchmarks: the eight base ones followed by the four
    /// volatile-after-atomic variants.
    pub fn all() -> Vec<BenchmarkKind> {
        let mut kinds = Self::base();
        kinds.extend(Self::after_atomic());
        kinds
    }

    /// Atomic and volatile accesses in both contention modes and directions.
    pub fn base() -> Vec<BenchmarkKind> {
        Self::for_access(&[Access::Atomic, Access::Volatile])
    }

    pub fn after_atomic() -> Vec<BenchmarkKind> {
        Self::for_access(&[Access::VolatileAfterAtomic])
    }

    fn for_access(accesses: &[Access]) -> Vec<BenchmarkKind> {
        let mut kinds = Vec::new();
        for &access in accesses {
            for contention in [Contention::Contentious, Contention::Noncontentious] {
                for direction in [Direction::Read, Direction::Write] {
                    kinds.push(BenchmarkKind::new(access, contention, direction));
                }
            }
        }
        kinds
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.contention.name(), self.access.name(), self.direction.name())
    }
}

/// Benchmark times in milliseconds for one machine.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub profile: String,
    pub blocks: u32,
    pub accesses_per_block: u32,
    #[serde(serialize_with = "rows_as_list")]
    pub rows: BTreeMap<BenchmarkKind, f64>,
}

#[derive(Serialize)]
struct JsonRow {
    access: Access,
    contention: Contention,
    direction: Direction,
    time_ms: f64,
}

fn rows_as_list<S: serde::Serializer>(rows: &BTreeMap<BenchmarkKind, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(rows.iter().map(|(k, &time_ms)| JsonRow {
        access: k.access,
        contention: k.contention,
        direction: k.direction,
        time_ms,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    profile: String,
    blocks: u32,
    accesses_per_block: u32,
    access: Access,
    contention: Contention,
    direction: Direction,
    time_ms: f64,
}

impl BenchmarkTable {
    pub fn new(profile: &str, blocks: u32, accesses_per_block: u32) -> Self {
        BenchmarkTable { profile: profile.to_string(), blocks, accesses_per_block, rows: BTreeMap::new() }
    }

    pub fn from_timings(profile: &str, blocks: u32, reads: &MemoryTimings, writes: &MemoryTimings) -> Self {
        let mut table = Self::new(profile, blocks, ACCESSES_PER_BLOCK);
        for (direction, t) in [(Direction::Read, reads), (Direction::Write, writes)] {
            let cells = [
                (Access::Volatile, Contention::Contentious, t.contentious_volatile),
                (Access::Volatile, Contention::Noncontentious, t.noncontentious_volatile),
                (Access::Atomic, Contention::Contentious, t.contentious_atomic),
                (Access::Atomic, Contention::Noncontentious, t.noncontentious_atomic),
                (Access::VolatileAfterAtomic, Contention::Contentious, t.contentious_volatile_after_atomic),
                (Access::VolatileAfterAtomic, Contention::Noncontentious, t.noncontentious_volatile_after_atomic),
            ];
            for (access, contention, ms) in cells {
                table.insert(BenchmarkKind::new(access, contention, direction), ms);
            }
        }
        table
    }

    /// Published measurements of the Tesla-class GPU.
    pub fn reference_tesla() -> Self {
        Self::from_timings("tesla", reference::TESLA_BLOCKS, &reference::TESLA_READS, &reference::TESLA_WRITES)
    }

    /// Published measurements of the Fermi-class GPU.
    pub fn reference_fermi() -> Self {
        Self::from_timings("fermi", reference::FERMI_BLOCKS, &reference::FERMI_READS, &reference::FERMI_WRITES)
    }

    /// Every row set to `ms`.
    pub fn uniform(profile: &str, ms: f64, blocks: u32) -> Self {
        let mut table = Self::new(profile, blocks, ACCESSES_PER_BLOCK);
        for kind in BenchmarkKind::all() {
            table.insert(kind, ms);
        }
        table
    }

    pub fn insert(&mut self, kind: BenchmarkKind, ms: f64) {
        self.rows.insert(kind, ms);
    }

    pub fn remove(&mut self, kind: BenchmarkKind) -> Option<f64> {
        self.rows.remove(&kind)
    }

    pub fn get(&self, kind: BenchmarkKind) -> Option<f64> {
        self.rows.get(&kind).copied()
    }

    pub fn require(&self, kind: BenchmarkKind) -> Result<f64> {
        self.get(kind).ok_or_else(|| Error::MissingRow(kind.to_string()))
    }

    pub fn has_after_atomic_rows(&self) -> bool {
        BenchmarkKind::after_atomic().into_iter().all(|k| self.rows.contains_key(&k))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (&kind, &time_ms) in &self.rows {
            w.serialize(CsvRow {
                profile: self.profile.clone(),
                blocks: self.blocks,
                accesses_per_block: self.accesses_per_block,
                access: kind.access,
                contention: kind.contention,
                direction: kind.direction,
                time_ms,
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a table. Lines starting with `#` are comments. All rows must
    /// agree on profile, block count and accesses per block.
    pub fn read_csv<R: Read>(input: R, path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let parse_error = |line: u64, message: String| Error::Parse { path: path.to_path_buf(), line, message };
        let mut table: Option<BenchmarkTable> = None;
        for result in reader.deserialize::<CsvRow>() {
            let row = result.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                let message = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                };
                parse_error(line, message)
            })?;
            let table = table.get_or_insert_with(|| Self::new(&row.profile, row.blocks, row.accesses_per_block));
            if (row.profile.as_str(), row.blocks, row.accesses_per_block)
                != (table.profile.as_str(), table.blocks, table.accesses_per_block)
            {
                return Err(parse_error(
                    reader.position().line(),
                    "profile, blocks and accesses_per_block must be the same on every row".into(),
                ));
            }
            let kind = BenchmarkKind::new(row.access, row.contention, row.direction);
            if table.rows.insert(kind, row.time_ms).is_some() {
                return Err(parse_error(reader.position().line(), format!("duplicate row `{kind}`")));
            }
        }
        table.ok_or_else(|| parse_error(reader.position().line().max(1), "no benchmark rows".into()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

/// One block's benchmark loop: an optional leading atomic, then a dependent
/// sequence of identical accesses.
struct AccessLoop {
    lead: Option<MemoryOp>,
    op: MemoryOp,
    remaining: u32,
}

impl BlockProgram for AccessLoop {
    fn step(&mut self, _input: StepInput<'_>) -> Action {
        if let Some(op) = self.lead.take() {
            return Action::Mem(op);
        }
        if self.remaining == 0 {
            return Action::Done;
        }
        self.remaining -= 1;
        Action::Mem(self.op)
    }

    fn is_straight_line(&self) -> bool {
        true
    }
}

fn benchmark_programs(
    profile: &MachineProfile,
    kind: BenchmarkKind,
    blocks: u32,
    accesses: u32,
) -> Vec<Box<dyn BlockProgram>> {
    (0..blocks)
        .map(|b| {
            let addr = match kind.contention {
                Contention::Contentious => WordAddress(0),
                Contention::Noncontentious => WordAddress(b * profile.words_per_line()),
            };
            let op = match (kind.access, kind.direction) {
                (Access::Atomic, Direction::Read) => MemoryOp::atomic_read(addr),
                (Access::Atomic, Direction::Write) => MemoryOp::atomic_exch(addr, b),
                (_, Direction::Read) => MemoryOp::volatile_read(addr),
                (_, Direction::Write) => MemoryOp::volatile_write(addr, b),
            };
            let lead = (kind.access == Access::VolatileAfterAtomic).then(|| MemoryOp::atomic_exch(addr, b));
            Box::new(AccessLoop { lead, op, remaining: accesses }) as Box<dyn BlockProgram>
        })
        .collect()
}

/// Simulated time in ms for `blocks` blocks each issuing `accesses`
/// dependent accesses of `kind`. The log is replayed against the final
/// memory image.
pub fn run_benchmark_with(profile: &MachineProfile, kind: BenchmarkKind, blocks: u32, accesses: u32) -> Result<f64> {
    let programs = benchmark_programs(profile, kind, blocks, accesses);
    let mut suite = InvariantSuite::generic(MemoryImage::new());
    let summary = engine::run(profile, programs, MemoryImage::new(), &EngineConfig::default(), &mut suite)?;
    suite.ensure(&summary)?;
    Ok(summary.end_time.as_ms())
}

/// Simulated time in ms on a fully saturated machine with 1000 accesses per
/// block.
pub fn run_benchmark(profile: &MachineProfile, kind: BenchmarkKind) -> Result<f64> {
    run_benchmark_with(profile, kind, profile.max_blocks(), ACCESSES_PER_BLOCK)
}

pub fn run_all(profile: &MachineProfile) -> Result<BenchmarkTable> {
    let mut table = BenchmarkTable::new(&profile.name, profile.max_blocks(), ACCESSES_PER_BLOCK);
    for kind in BenchmarkKind::all() {
        table.insert(kind, run_benchmark(profile, kind)?);
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioPair {
    pub read: f64,
    pub write: f64,
}

/// Ratios derived from a benchmark table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioTables {
    pub profile: String,
    /// Contentious over noncontentious time.
    pub contention_volatile: RatioPair,
    pub contention_atomic: RatioPair,
    pub contention_volatile_after_atomic: RatioPair,
    /// Each row over the pure volatile row with the same contention.
    pub contentious_atomic: RatioPair,
    pub noncontentious_atomic: RatioPair,
    pub contentious_volatile_after_atomic: RatioPair,
    pub noncontentious_volatile_after_atomic: RatioPair,
}

pub fn ratio_tables(table: &BenchmarkTable) -> Result<RatioTables> {
    use Access::*;
    use Contention::*;
    let pair = |num: (Access, Contention), den: (Access, Contention)| -> Result<RatioPair> {
        let r = |d| -> Result<f64> {
            Ok(table.require(BenchmarkKind::new(num.0, num.1, d))?
                / table.require(BenchmarkKind::new(den.0, den.1, d))?)
        };
        Ok(RatioPair { read: r(Direction::Read)?, write: r(Direction::Write)? })
    };
    Ok(RatioTables {
        profile: table.profile.clone(),
        contention_volatile: pair((Volatile, Contentious), (Volatile, Noncontentious))?,
        contention_atomic: pair((Atomic, Contentious), (Atomic, Noncontentious))?,
        contention_volatile_after_atomic: pair(
            (VolatileAfterAtomic, Contentious),
            (VolatileAfterAtomic, Noncontentious),
        )?,
        contentious_atomic: pair((Atomic, Contentious), (Volatile, Contentious))?,
        noncontentious_atomic: pair((Atomic, Noncontentious), (Volatile, Noncontentious))?,
        contentious_volatile_after_atomic: pair((VolatileAfterAtomic, Contentious), (Volatile, Contentious))?,
        noncontentious_volatile_after_atomic: pair(
            (VolatileAfterAtomic, Noncontentious),
            (Volatile, Noncontentious),
        )?,
    })
}

impl RatioTables {
    /// `(label, ratio)` rows in display order.
    pub fn rows(&self) -> [(&'static str, RatioPair); 7] {
        [
            ("contentious:noncontentious volatile", self.contention_volatile),
            ("contentious:noncontentious atomic", self.contention_atomic),
            ("contentious:noncontentious volatile after atomic", self.contention_volatile_after_atomic),
            ("contentious atomic:volatile", self.contentious_atomic),
            ("noncontentious atomic:volatile", self.noncontentious_atomic),
            ("contentious volatile after atomic:volatile", self.contentious_volatile_after_atomic),
            ("noncontentious volatile after atomic:volatile", self.noncontentious_volatile_after_atomic),
        ]
    }
}

impl fmt::Display for RatioTables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ratios for {}", self.profile)?;
        for (label, r) in self.rows() {
            writeln!(f, "  {label:<48} reads {:>8.2}x  writes {:>8.2}x", r.read, r.write)?;
        }
        Ok(())
    }
}

/// Fits timing parameters to a table's eight base rows.
///
/// Latencies come from the noncontentious rows (one block's dependent
/// sequence), service times from the contentious rows (every access of every
/// block serialized at one line).
pub fn calibrate(targets: &BenchmarkTable) -> Result<TimingParams> {
    for kind in BenchmarkKind::base() {
        let value = targets.require(kind)?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveTarget { row: kind.to_string(), value });
        }
    }
    if targets.blocks == 0 || targets.accesses_per_block == 0 {
        return Err(Error::InvalidConfig("benchmark table needs positive blocks and accesses_per_block".into()));
    }
    let accesses = targets.accesses_per_block as f64;
    let serialized = accesses * targets.blocks as f64;
    let ns = |access, contention, direction| {
        targets.get(BenchmarkKind::new(access, contention, direction)).expect("checked above") * 1e6
    };
    use Access::*;
    use Contention::*;
    use Direction::*;
    let timing = TimingParams {
        lat_volatile_read: ns(Volatile, Noncontentious, Read) / accesses,
        lat_volatile_write: ns(Volatile, Noncontentious, Write) / accesses,
        lat_atomic_read: ns(Atomic, Noncontentious, Read) / accesses,
        lat_atomic_write: ns(Atomic, Noncontentious, Write) / accesses,
        svc_volatile_read: ns(Volatile, Contentious, Read) / serialized,
        svc_volatile_write: ns(Volatile, Contentious, Write) / serialized,
        svc_atomic_read: ns(Atomic, Contentious, Read) / serialized,
        svc_atomic_write: ns(Atomic, Contentious, Write) / serialized,
        sync_threads_cost: DEFAULT_SYNC_THREADS_NS,
    };
    timing.validate()?;
    Ok(timing)
}

/// Tolerance applied to one row when comparing a simulated table against
/// published measurements, or `None` for rows the model is known not to
/// reproduce.
pub fn row_tolerance(kind: BenchmarkKind, line_hostage: bool) -> Option<f64> {
    match (kind.access, kind.contention) {
        (Access::VolatileAfterAtomic, Contention::Noncontentious) if line_hostage => None,
        (Access::VolatileAfterAtomic, _) => Some(0.15),
        _ => Some(0.10),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowComparison {
    pub kind: BenchmarkKind,
    pub simulated_ms: f64,
    pub reference_ms: f64,
    /// `(simulated - reference) / reference`.
    pub rel_error: f64,
    pub tolerance: Option<f64>,
}

impl RowComparison {
    pub fn within_tolerance(&self) -> bool {
        self.tolerance.is_none_or(|t| self.rel_error.abs() <= t)
    }

    pub fn known_deviation(&self) -> bool {
        self.tolerance.is_none()
    }
}

impl fmt::Display for RowComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.tolerance {
            None => "known deviation".to_string(),
            Some(t) if self.rel_error.abs() <= t => format!("ok (±{:.0}%)", t * 100.0),
            Some(t) => format!("OUT OF TOLERANCE (±{:.0}%)", t * 100.0),
        };
        write!(
            f,
            "{:<44} sim {:>9.3} ms  ref {:>9.3} ms  {:>+8.1}%  {}",
            self.kind.to_string(),
            self.simulated_ms,
            self.reference_ms,
            self.rel_error * 100.0,
            verdict
        )
    }
}

/// Row-by-row comparison of `simulated` against `reference`, over the rows
/// present in both.
pub fn compare_tables(simulated: &BenchmarkTable, reference: &BenchmarkTable, line_hostage: bool) -> Vec<RowComparison> {
    BenchmarkKind::all()
        .into_iter()
        .filter_map(|kind| {
            let simulated_ms = simulated.get(kind)?;
            let reference_ms = reference.get(kind)?;
            Some(RowComparison {
                kind,
                simulated_ms,
                reference_ms,
                rel_error: (simulated_ms - reference_ms) / reference_ms,
                tolerance: row_tolerance(kind, line_hostage),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{make_fermi_profile, make_tesla_profile};

    #[test]
    fn twelve_distinct_kinds() {
        let all = BenchmarkKind::all();
        assert_eq!(all.len(), 12);
        let set: std::collections::BTreeSet<_> = all.iter().collect();
        assert_eq!(set.len(), 12);
        assert_eq!(BenchmarkKind::base().len(), 8);
    }

    #[test]
    fn calibration_closed_form() {
        let t = calibrate(&BenchmarkTable::reference_tesla()).unwrap();
        assert!((t.svc_atomic_write - 78.404e6 / 240_000.0).abs() < 1e-9);
        let f = calibrate(&BenchmarkTable::reference_fermi()).unwrap();
        assert!((f.lat_volatile_write - 29.0).abs() < 1e-9);
    }

    #[test]
    fn calibration_of_self_consistent_table_gives_equal_lat_and_svc() {
        let mut table = BenchmarkTable::new("synthetic", 4, 1000);
        for kind in BenchmarkKind::base() {
            let ms = match kind.contention {
                Contention::Noncontentious => 0.5,
                Contention::Contentious => 0.5 * 4.0,
            };
            table.insert(kind, ms);
        }
        let t = calibrate(&table).unwrap();
        assert!((t.lat_volatile_read - t.svc_volatile_read).abs() < 1e-9);
        assert!((t.lat_atomic_write - t.svc_atomic_write).abs() < 1e-9);
    }

    #[test]
    fn calibration_rejects_non_positive_targets() {
        let mut table = BenchmarkTable::reference_fermi();
        table.insert(BenchmarkKind::new(Access::Atomic, Contention::Contentious, Direction::Read), 0.0);
        assert!(matches!(calibrate(&table), Err(Error::NonPositiveTarget { .. })));
    }

    #[test]
    fn single_block_is_contention_free() {
        for profile in [make_tesla_profile(), make_fermi_profile()] {
            for access in [Access::Atomic, Access::Volatile] {
                for direction in [Direction::Read, Direction::Write] {
                    let c = run_benchmark_with(&profile, BenchmarkKind::new(access, Contention::Contentious, direction), 1, 1000);
                    let n =
                        run_benchmark_with(&profile, BenchmarkKind::new(access, Contention::Noncontentious, direction), 1, 1000);
                    assert_eq!(c.unwrap(), n.unwrap());
                }
            }
        }
    }

    #[test]
    fn tesla_contentious_atomic_read() {
        let ms = run_benchmark(
            &make_tesla_profile(),
            BenchmarkKind::new(Access::Atomic, Contention::Contentious, Direction::Read),
        )
        .unwrap();
        assert!((ms - 78.407).abs() / 78.407 < 0.01, "{ms}");
    }

    #[test]
    fn uniform_table_ratios_are_one() {
        let r = ratio_tables(&BenchmarkTable::uniform("flat", 2.0, 8)).unwrap();
        for (_, pair) in r.rows() {
            assert_eq!((pair.read, pair.write), (1.0, 1.0));
        }
    }

    #[test]
    fn reference_ratios_match_published_ratios() {
        let t = ratio_tables(&BenchmarkTable::reference_tesla()).unwrap();
        assert!((t.contention_atomic.read - 92.79).abs() < 0.01);
        let f = ratio_tables(&BenchmarkTable::reference_fermi()).unwrap();
        assert!((f.contentious_atomic.read - 2.99).abs() < 0.01);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let table = BenchmarkTable::reference_fermi();
        let text = table.to_csv_string();
        assert!(text.starts_with("profile,blocks,accesses_per_block,access,contention,direction,time_ms\n"));
        let back = BenchmarkTable::read_csv(text.as_bytes(), Path::new("t.csv")).unwrap();
        assert_eq!(back, table);

        let commented = format!("# measured\n{text}");
        assert_eq!(BenchmarkTable::read_csv(commented.as_bytes(), Path::new("t.csv")).unwrap(), table);

        let bad = text.replacen("atomic,contentious", "atomic,sometimes", 1);
        match BenchmarkTable::read_csv(bad.as_bytes(), Path::new("t.csv")) {
            Err(Error::Parse { line, .. }) => assert!(line >= 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(BenchmarkTable::read_csv(&b""[..], Path::new("e.csv")), Err(Error::Parse { .. })));
    }
}
