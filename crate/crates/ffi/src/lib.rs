//! C ABI over the simulator.
//!
//! Profiles, primitive runs and benchmark tables are opaque handles created
//! and freed through this interface. Every fallible function returns a
//! [`SyncsimStatus`]; on failure the message is available from
//! [`syncsim_last_error`] on the same thread. Panics are caught and reported
//! as [`SyncsimStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use syncsim::bench::{self, BenchmarkTable};
use syncsim::experiments::{self, ThroughputRun};
use syncsim::primitives::{BackoffConfig, PrimitiveConfig, PrimitiveKind};
use syncsim::{Error, MachineProfile};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyncsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownProfile = 3,
    UnknownPrimitive = 4,
    InvalidConfig = 5,
    Deadlock = 6,
    TimeLimit = 7,
    Invariant = 8,
    Io = 9,
    Parse = 10,
    OutOfRange = 11,
    Internal = 12,
}

impl From<&Error> for SyncsimStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::UnknownProfile(_) => SyncsimStatus::UnknownProfile,
            Error::UnknownPrimitive(_) => SyncsimStatus::UnknownPrimitive,
            Error::InvalidProfile(_) | Error::InvalidConfig(_) | Error::TooManyBlocks { .. } => {
                SyncsimStatus::InvalidConfig
            }
            Error::Deadlock { .. } => SyncsimStatus::Deadlock,
            Error::TimeLimit { .. } => SyncsimStatus::TimeLimit,
            Error::Invariant(_) => SyncsimStatus::Invariant,
            Error::Io { .. } => SyncsimStatus::Io,
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) | Error::MissingRow(_) | Error::NonPositiveTarget { .. } => {
                SyncsimStatus::Parse
            }
        }
    }
}

/// A machine profile.
pub struct SyncsimProfile(MachineProfile);

/// Result of one primitive run.
pub struct SyncsimRun(ThroughputRun);

/// A table of benchmark timings in milliseconds.
pub struct SyncsimBenchTable {
    rows: Vec<(CString, f64)>,
}

/// Timing parameters in nanoseconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SyncsimTiming {
    pub lat_volatile_read: f64,
    pub lat_volatile_write: f64,
    pub lat_atomic_read: f64,
    pub lat_atomic_write: f64,
    pub svc_volatile_read: f64,
    pub svc_volatile_write: f64,
    pub svc_atomic_read: f64,
    pub svc_atomic_write: f64,
    pub sync_threads_cost: f64,
}

/// Parameters of a primitive run. Zero in `ops_per_block`, `i_min` or
/// `i_max` selects the default; `capacity` is ignored by non-semaphores.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SyncsimRunConfig {
    pub blocks: u32,
    pub capacity: u32,
    pub ops_per_block: u32,
    pub i_min: u32,
    pub i_max: u32,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (SyncsimStatus, String)>) -> SyncsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SyncsimStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SyncsimStatus::Internal
        }
    }
}

fn core_err(e: Error) -> (SyncsimStatus, String) {
    (SyncsimStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (SyncsimStatus, String) {
    (SyncsimStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SyncsimStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SyncsimStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SyncsimStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SyncsimStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn syncsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Short static description of a status code.
#[no_mangle]
pub extern "C" fn syncsim_status_name(status: SyncsimStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SyncsimStatus::Ok => c"ok",
        SyncsimStatus::NullPointer => c"null pointer",
        SyncsimStatus::InvalidUtf8 => c"invalid utf-8",
        SyncsimStatus::UnknownProfile => c"unknown profile",
        SyncsimStatus::UnknownPrimitive => c"unknown primitive",
        SyncsimStatus::InvalidConfig => c"invalid configuration",
        SyncsimStatus::Deadlock => c"deadlock",
        SyncsimStatus::TimeLimit => c"time limit exceeded",
        SyncsimStatus::Invariant => c"invariant violated",
        SyncsimStatus::Io => c"i/o error",
        SyncsimStatus::Parse => c"parse error",
        SyncsimStatus::OutOfRange => c"index out of range",
        SyncsimStatus::Internal => c"internal error",
    };
    s.as_ptr()
}

/// Loads a profile by built-in name (`tesla`, `fermi`) or config file path.
///
/// # Safety
/// `name_or_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn syncsim_profile_new(name_or_path: *const c_char, out: *mut *mut SyncsimProfile) -> SyncsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let name = str_arg(name_or_path, "name_or_path")?;
        let profile = MachineProfile::resolve(name).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SyncsimProfile(profile)));
        Ok(())
    })
}

/// # Safety
/// `profile` must come from [`syncsim_profile_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn syncsim_profile_free(profile: *mut SyncsimProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Resident block limit of the profile.
///
/// # Safety
/// `profile` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_profile_max_blocks(profile: *const SyncsimProfile, out: *mut u32) -> SyncsimStatus {
    guard(|| {
        let p = ref_arg(profile, "profile")?;
        *out_arg(out, "out")? = p.0.max_blocks();
        Ok(())
    })
}

/// Whether a busy atomic unit holds its line hostage.
///
/// # Safety
/// `profile` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_profile_line_hostage(profile: *const SyncsimProfile, out: *mut bool) -> SyncsimStatus {
    guard(|| {
        let p = ref_arg(profile, "profile")?;
        *out_arg(out, "out")? = p.0.line_hostage;
        Ok(())
    })
}

/// # Safety
/// `profile` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_profile_timing(profile: *const SyncsimProfile, out: *mut SyncsimTiming) -> SyncsimStatus {
    guard(|| {
        let t = &ref_arg(profile, "profile")?.0.timing;
        *out_arg(out, "out")? = SyncsimTiming {
            lat_volatile_read: t.lat_volatile_read,
            lat_volatile_write: t.lat_volatile_write,
            lat_atomic_read: t.lat_atomic_read,
            lat_atomic_write: t.lat_atomic_write,
            svc_volatile_read: t.svc_volatile_read,
            svc_volatile_write: t.svc_volatile_write,
            svc_atomic_read: t.svc_atomic_read,
            svc_atomic_write: t.svc_atomic_write,
            sync_threads_cost: t.sync_threads_cost,
        };
        Ok(())
    })
}

/// Defaults for [`syncsim_run_primitive`]: one block, capacity 1, default
/// operations and backoff, seed 0.
#[no_mangle]
pub extern "C" fn syncsim_run_config_default() -> SyncsimRunConfig {
    SyncsimRunConfig { blocks: 1, capacity: 1, ops_per_block: 0, i_min: 0, i_max: 0, seed: 0 }
}

/// Runs a primitive under the invariant checkers.
///
/// # Safety
/// `profile` must be a live handle, `primitive` a NUL-terminated string,
/// `config` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_run_primitive(
    profile: *const SyncsimProfile,
    primitive: *const c_char,
    config: *const SyncsimRunConfig,
    out: *mut *mut SyncsimRun,
) -> SyncsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let profile = &ref_arg(profile, "profile")?.0;
        let kind: PrimitiveKind = str_arg(primitive, "primitive")?.parse().map_err(core_err)?;
        let c = *ref_arg(config, "config")?;
        let mut cfg = PrimitiveConfig::new(kind, profile).with_capacity(c.capacity);
        if c.ops_per_block != 0 {
            cfg = cfg.with_ops(c.ops_per_block);
        }
        if c.i_min != 0 || c.i_max != 0 {
            let i_min = if c.i_min == 0 { cfg.backoff.i_min } else { c.i_min };
            let i_max = if c.i_max == 0 { cfg.backoff.i_max } else { c.i_max };
            cfg.backoff = BackoffConfig::new(i_min, i_max, cfg.backoff.unit).map_err(core_err)?;
        }
        let engine_cfg = experiments::experiment_engine_config(c.seed);
        let run = experiments::run_throughput(profile, &cfg, c.blocks, &engine_cfg).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SyncsimRun(run)));
        Ok(())
    })
}

/// # Safety
/// `run` must come from [`syncsim_run_primitive`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn syncsim_run_free(run: *mut SyncsimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Throughput in operations per simulated second.
///
/// # Safety
/// `run` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_run_ops_per_sec(run: *const SyncsimRun, out: *mut f64) -> SyncsimStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        *out_arg(out, "out")? = r.0.point.ops_per_sec.unwrap_or(0.0);
        Ok(())
    })
}

/// Simulated completion time in nanoseconds.
///
/// # Safety
/// `run` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_run_sim_time_ns(run: *const SyncsimRun, out: *mut f64) -> SyncsimStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        *out_arg(out, "out")? = r.0.point.sim_time_ns.unwrap_or(0.0);
        Ok(())
    })
}

/// Number of atomic operations the run issued.
///
/// # Safety
/// `run` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_run_atomic_ops(run: *const SyncsimRun, out: *mut u64) -> SyncsimStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        *out_arg(out, "out")? = r.0.stats.atomic_ops;
        Ok(())
    })
}

/// Runs the memory benchmark suite on a profile.
///
/// # Safety
/// `profile` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn syncsim_bench_run(profile: *const SyncsimProfile, out: *mut *mut SyncsimBenchTable) -> SyncsimStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let profile = &ref_arg(profile, "profile")?.0;
        let table = bench::run_all(profile).map_err(core_err)?;
        *out = Box::into_raw(Box::new(bench_table(&table)));
        Ok(())
    })
}

fn bench_table(table: &BenchmarkTable) -> SyncsimBenchTable {
    let rows = table
        .rows
        .iter()
        .map(|(kind, ms)| (CString::new(kind.to_string()).expect("row names have no NUL"), *ms))
        .collect();
    SyncsimBenchTable { rows }
}

/// # Safety
/// `table` must come from [`syncsim_bench_run`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn syncsim_bench_free(table: *mut SyncsimBenchTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of rows in a benchmark table.
///
/// # Safety
/// `table` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_bench_len(table: *const SyncsimBenchTable, out: *mut usize) -> SyncsimStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        *out_arg(out, "out")? = t.rows.len();
        Ok(())
    })
}

/// Row `index`: its name (owned by the table) and time in milliseconds.
///
/// # Safety
/// `table`, `name` and `ms` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn syncsim_bench_row(
    table: *const SyncsimBenchTable,
    index: usize,
    name: *mut *const c_char,
    ms: *mut f64,
) -> SyncsimStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        let (row_name, row_ms) = t
            .rows
            .get(index)
            .ok_or_else(|| (SyncsimStatus::OutOfRange, format!("row {index} of {}", t.rows.len())))?;
        *out_arg(name, "name")? = row_name.as_ptr();
        *out_arg(ms, "ms")? = *row_ms;
        Ok(())
    })
}
