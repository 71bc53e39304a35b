//! Command-line front end: `bench`, `calibrate`, `classify`, `run`, `sweep`
//! and `report`.
//!
//! Human-readable summaries go to stdout; `--out` files are CSV, or JSON
//! when the path ends in `.json`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, BenchmarkTable};
use crate::engine::EventLog;
use crate::error::{Error, Result};
use crate::experiments::{self, SweepOptions, SweepResult, SEMAPHORE_CAPACITIES};
use crate::invariants::InvariantSuite;
use crate::machine::{self, MachineProfile};
use crate::primitives::{self, BackoffConfig, PrimitiveConfig, PrimitiveKind};

#[derive(Debug, Parser)]
#[command(name = "syncsim", version, about = "Simulate GPU inter-block synchronization primitives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the memory benchmark suite on a profile.
    Bench {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a profile's timing parameters to a benchmark table.
    Calibrate {
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Profile supplying topology and the hostage flag. Defaults to the
        /// built-in profile named in the table.
        #[arg(long)]
        base: Option<String>,
    },
    /// Derive the machine characteristics from a benchmark table.
    Classify {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value_t = machine::DEFAULT_HOSTAGE_THRESHOLD)]
        threshold: f64,
    },
    /// Measure one primitive at one block count.
    Run {
        #[command(flatten)]
        common: PrimitiveArgs,
        #[arg(long)]
        blocks: u32,
        #[arg(long, default_value_t = 1)]
        capacity: u32,
        /// Write the full event log as CSV (keep runs small).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Measure one primitive over a range of block counts.
    Sweep {
        #[command(flatten)]
        common: PrimitiveArgs,
        /// Comma-separated block counts; defaults to 1..16 then every 8th.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<u32>>,
        /// Comma-separated semaphore capacities.
        #[arg(long, value_delimiter = ',')]
        capacities: Option<Vec<u32>>,
        /// Also measure beyond the built-in profiles' sweep caps.
        #[arg(long)]
        no_caps: bool,
    },
    /// Best implementation per category at full scale.
    Report {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = primitives::DEFAULT_OPS_PER_BLOCK)]
        ops: u32,
        /// Run complete capped sweeps instead of one full-scale point each.
        #[arg(long)]
        full_sweeps: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PrimitiveArgs {
    #[arg(long)]
    profile: String,
    #[arg(long)]
    primitive: String,
    /// Tie-break seed; 0 breaks ties by block id.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Operations (or barrier episodes) per block.
    #[arg(long, default_value_t = primitives::DEFAULT_OPS_PER_BLOCK)]
    ops: u32,
    #[arg(long)]
    i_min: Option<u32>,
    #[arg(long)]
    i_max: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl PrimitiveArgs {
    fn resolve(&self) -> Result<(MachineProfile, PrimitiveConfig)> {
        let kind: PrimitiveKind = self.primitive.parse()?;
        let profile = MachineProfile::resolve(&self.profile)?;
        let mut cfg = PrimitiveConfig::new(kind, &profile).with_ops(self.ops);
        let b = cfg.backoff;
        cfg.backoff = BackoffConfig::new(self.i_min.unwrap_or(b.i_min), self.i_max.unwrap_or(b.i_max), b.unit)?;
        Ok((profile, cfg))
    }
}

/// Process exit status for an error: 2 for bad input, 1 for failed runs.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownProfile(_)
        | Error::UnknownPrimitive(_)
        | Error::InvalidProfile(_)
        | Error::InvalidConfig(_)
        | Error::TooManyBlocks { .. }
        | Error::MissingRow(_)
        | Error::NonPositiveTarget { .. }
        | Error::Parse { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing the human-readable output to `stdout`. Returns the exit status.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn out_err(e: std::io::Error) -> Error {
    Error::io(Path::new("<stdout>"), e)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn reference_for(profile: &str) -> Option<BenchmarkTable> {
    match profile {
        "tesla" => Some(BenchmarkTable::reference_tesla()),
        "fermi" => Some(BenchmarkTable::reference_fermi()),
        _ => None,
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Bench { profile, out: path } => cmd_bench(profile, path.as_deref(), out),
        Command::Calibrate { targets, out: path, base } => cmd_calibrate(targets, path, base.as_deref(), out),
        Command::Classify { table, threshold } => {
            let table = BenchmarkTable::load(table)?;
            let report = machine::classification_vector_with(&table, *threshold)?;
            writeln!(out, "{report}").map_err(out_err)
        }
        Command::Run { common, blocks, capacity, log } => cmd_run(common, *blocks, *capacity, log.as_deref(), out),
        Command::Sweep { common, blocks, capacities, no_caps } => {
            cmd_sweep(common, blocks.clone(), capacities.clone(), *no_caps, out)
        }
        Command::Report { profile, seed, ops, full_sweeps, out: path } => {
            cmd_report(profile, *seed, *ops, *full_sweeps, path.as_deref(), out)
        }
    }
}

fn cmd_bench(profile: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let profile = MachineProfile::resolve(profile)?;
    let table = bench::run_all(&profile)?;
    writeln!(out, "benchmarks on {} ({} blocks x {} accesses)", profile.name, table.blocks, table.accesses_per_block)
        .map_err(out_err)?;
    match reference_for(&profile.name) {
        Some(reference) => {
            for row in bench::compare_tables(&table, &reference, profile.line_hostage) {
                writeln!(out, "  {row}").map_err(out_err)?;
            }
        }
        None => {
            for (kind, ms) in &table.rows {
                writeln!(out, "  {:<44} {ms:>9.3} ms", kind.to_string()).map_err(out_err)?;
            }
        }
    }
    write!(out, "{}", bench::ratio_tables(&table)?).map_err(out_err)?;
    if let Some(path) = path {
        if is_json(path) {
            let json = serde_json::to_string_pretty(&table)? + "\n";
            std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
        } else {
            table.save(path)?;
        }
    }
    Ok(())
}

fn cmd_calibrate(targets: &Path, path: &Path, base: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let table = BenchmarkTable::load(targets)?;
    let base = MachineProfile::resolve(base.unwrap_or(&table.profile)).map_err(|e| match e {
        Error::UnknownProfile(name) => Error::InvalidConfig(format!(
            "table profile {name:?} is not built in; pass --base with a profile name or config file"
        )),
        other => other,
    })?;
    if table.blocks != base.max_blocks() {
        return Err(Error::InvalidConfig(format!(
            "table was measured with {} blocks but {} runs {}",
            table.blocks,
            base.name,
            base.max_blocks()
        )));
    }
    let timing = bench::calibrate(&table)?;
    let profile = MachineProfile { name: table.profile.clone(), timing, ..base };
    profile.validate()?;
    profile.save(path)?;
    writeln!(out, "fitted parameters for {}", profile.name).map_err(out_err)?;
    for (name, value) in profile.timing.fields() {
        writeln!(out, "  {name:<20} {value:>12.4} ns").map_err(out_err)?;
    }
    writeln!(out, "round trip against the targets:").map_err(out_err)?;
    let rerun = bench::run_all(&profile)?;
    for row in bench::compare_tables(&rerun, &table, profile.line_hostage) {
        writeln!(out, "  {row}").map_err(out_err)?;
    }
    writeln!(out, "wrote {}", path.display()).map_err(out_err)
}

fn cmd_run(common: &PrimitiveArgs, blocks: u32, capacity: u32, log: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let (profile, mut cfg) = common.resolve()?;
    cfg.capacity = capacity;
    let engine_cfg = experiments::experiment_engine_config(common.seed);
    let run = experiments::run_throughput(&profile, &cfg, blocks, &engine_cfg)?;
    let p = &run.point;
    let capacity = p.capacity.map(|c| format!(" capacity {c}")).unwrap_or_default();
    writeln!(
        out,
        "{} on {}: {} blocks{capacity}, {} ops/block: {:.1} ops/s ({:.3} ms simulated)",
        p.primitive,
        p.profile,
        p.blocks,
        cfg.ops_per_block,
        p.ops_per_sec.unwrap_or(0.0),
        p.sim_time_ns.unwrap_or(0.0) / 1e6
    )
    .map_err(out_err)?;
    writeln!(out, "  {} atomics, {} transactions, {}", run.stats.atomic_ops, run.stats.transactions, run.report)
        .map_err(out_err)?;
    let sweep = SweepResult {
        profile: p.profile.clone(),
        primitive: p.primitive,
        capacity: p.capacity,
        points: vec![p.clone()],
    };
    if let Some(path) = &common.out {
        experiments::save_sweeps(&[sweep], path)?;
    }
    if let Some(path) = log {
        let instance = primitives::build(&profile, &cfg, blocks)?;
        let mut suite = InvariantSuite::for_instance(&cfg, blocks, &instance);
        let mut event_log = EventLog::default();
        let summary = crate::engine::run(
            &profile,
            instance.programs,
            instance.memory,
            &engine_cfg,
            &mut (&mut suite, &mut event_log),
        )?;
        suite.ensure(&summary)?;
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        event_log.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn cmd_sweep(
    common: &PrimitiveArgs,
    blocks: Option<Vec<u32>>,
    capacities: Option<Vec<u32>>,
    no_caps: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let (profile, cfg) = common.resolve()?;
    let capacities: Vec<Option<u32>> = if cfg.kind.is_semaphore() {
        capacities.unwrap_or_else(|| SEMAPHORE_CAPACITIES.to_vec()).into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let options = SweepOptions { blocks, apply_caps: !no_caps };
    let engine_cfg = experiments::experiment_engine_config(common.seed);
    let mut sweeps = Vec::new();
    for capacity in capacities {
        let mut cfg = cfg.clone();
        if let Some(c) = capacity {
            cfg.capacity = c;
        }
        let sweep = experiments::sweep(&profile, &cfg, &options, &engine_cfg)?;
        let label = capacity.map(|c| format!(" (capacity {c})")).unwrap_or_default();
        writeln!(out, "{} on {}{label}", sweep.primitive, sweep.profile).map_err(out_err)?;
        for p in &sweep.points {
            match p.ops_per_sec {
                Some(ops) => writeln!(out, "  {:>4} blocks {ops:>16.1} ops/s", p.blocks),
                None => writeln!(out, "  {:>4} blocks {:>16}", p.blocks, "not measured"),
            }
            .map_err(out_err)?;
        }
        sweeps.push(sweep);
    }
    if let Some(path) = &common.out {
        experiments::save_sweeps(&sweeps, path)?;
    }
    Ok(())
}

fn cmd_report(
    profile: &str,
    seed: u64,
    ops: u32,
    full_sweeps: bool,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let profile = MachineProfile::resolve(profile)?;
    let engine_cfg = experiments::experiment_engine_config(seed);
    let sweeps = if full_sweeps {
        let mut sweeps = Vec::new();
        for kind in PrimitiveKind::ALL {
            let capacities: Vec<Option<u32>> = if kind.is_semaphore() {
                SEMAPHORE_CAPACITIES.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for capacity in capacities {
                let mut cfg = PrimitiveConfig::new(kind, &profile).with_ops(experiments::full_scale_ops(kind, capacity, ops));
                if let Some(c) = capacity {
                    cfg.capacity = c;
                }
                let options = SweepOptions { blocks: None, apply_caps: true };
                sweeps.push(experiments::sweep(&profile, &cfg, &options, &engine_cfg)?);
            }
        }
        sweeps
    } else {
        experiments::full_scale_points_with(&profile, ops, &engine_cfg)?
    };
    if !full_sweeps {
        for p in sweeps.iter().flat_map(|s| s.measured()) {
            let capacity = p.capacity.map(|c| format!(" capacity {c}")).unwrap_or_default();
            writeln!(
                out,
                "  {:<20}{capacity:<14} {:>4} blocks {:>5} ops/block {:>16.1} ops/s",
                p.primitive.name(),
                p.blocks,
                experiments::full_scale_ops(p.primitive, p.capacity, ops),
                p.ops_per_sec.unwrap_or(0.0)
            )
            .map_err(out_err)?;
        }
    }
    let best = experiments::best_at_scale(&profile, &sweeps);
    write!(out, "{best}").map_err(out_err)?;
    if let Some(path) = path {
        if is_json(path) {
            let json = serde_json::to_string_pretty(&best)? + "\n";
            std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
        } else {
            experiments::save_sweeps(&sweeps, path)?;
        }
    }
    Ok(())
}
