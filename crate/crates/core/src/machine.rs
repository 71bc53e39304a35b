//! The machine abstraction: memory timing, line-hostage behaviour and block
//! topology, plus the two built-in calibrated profiles.
//!
//! A profile is characterised by three properties of its memory system:
//!
//! * the atomic:volatile access time ratio under contention,
//! * the contentious:noncontentious volatile access ratio,
//! * whether an atomic unit with pending work holds its line hostage, forcing
//!   plain volatile accesses on that line through the atomic queue.
//!
//! [`classification_vector`] recovers those three properties from a
//! benchmark table.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{Access, BenchmarkKind, BenchmarkTable, Contention, Direction};
use crate::error::{Error, Result};

/// Default cost of one intra-block barrier, in ns. The hardware intrinsic is
/// cheap and no measured value is available.
pub const DEFAULT_SYNC_THREADS_NS: f64 = 20.0;

/// Default ratio of contentious-volatile-after-atomic time to contentious
/// volatile time above which a profile is classified as line-hostage.
pub const DEFAULT_HOSTAGE_THRESHOLD: f64 = 2.0;

/// Per-access timing in nanoseconds.
///
/// `lat_*` is the uncontended end-to-end latency seen by a block's master
/// thread. `svc_*` is the serialization cost per access at a single contended
/// memory line (volatile server or atomic unit).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
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

impl TimingParams {
    /// Field names paired with values, in declaration order.
    pub fn fields(&self) -> [(&'static str, f64); 9] {
        [
            ("lat_volatile_read", self.lat_volatile_read),
            ("lat_volatile_write", self.lat_volatile_write),
            ("lat_atomic_read", self.lat_atomic_read),
            ("lat_atomic_write", self.lat_atomic_write),
            ("svc_volatile_read", self.svc_volatile_read),
            ("svc_volatile_write", self.svc_volatile_write),
            ("svc_atomic_read", self.svc_atomic_read),
            ("svc_atomic_write", self.svc_atomic_write),
            ("sync_threads_cost", self.sync_threads_cost),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidProfile(format!("{name} must be a positive duration, got {value}")));
            }
        }
        if self.svc_atomic_read < self.svc_volatile_read || self.svc_atomic_write < self.svc_volatile_write {
            return Err(Error::InvalidProfile(
                "atomic service times must not be smaller than the matching volatile service times".into(),
            ));
        }
        Ok(())
    }
}

/// A complete machine description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineProfile {
    pub name: String,
    #[serde(flatten)]
    pub timing: TimingParams,
    pub line_hostage: bool,
    pub num_sms: u32,
    pub max_blocks_per_sm: u32,
    pub threads_per_block: u32,
    pub warp_width: u32,
    /// Bytes per memory line.
    pub line_size: u32,
    /// Bytes per word.
    pub word_size: u32,
}

/// Index of a 32-bit word in simulated global memory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordAddress(pub u32);

/// Index of a memory line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineId(pub u32);

impl WordAddress {
    pub fn offset(self, words: u32) -> WordAddress {
        WordAddress(self.0 + words)
    }
}

impl fmt::Display for WordAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

impl MachineProfile {
    pub fn max_blocks(&self) -> u32 {
        self.num_sms * self.max_blocks_per_sm
    }

    pub fn words_per_line(&self) -> u32 {
        self.line_size / self.word_size
    }

    /// Number of warps in a block, i.e. how many line transactions a block
    /// can issue in one coalesced pass.
    pub fn warps_per_block(&self) -> u32 {
        (self.threads_per_block / self.warp_width).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        let counts = [
            ("num_sms", self.num_sms),
            ("max_blocks_per_sm", self.max_blocks_per_sm),
            ("threads_per_block", self.threads_per_block),
            ("warp_width", self.warp_width),
            ("line_size", self.line_size),
            ("word_size", self.word_size),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidProfile(format!("{name} must be positive")));
            }
        }
        if self.word_size != 4 {
            return Err(Error::InvalidProfile(format!("word_size must be 4 bytes, got {}", self.word_size)));
        }
        if !self.line_size.is_multiple_of(self.word_size * self.warp_width) {
            return Err(Error::InvalidProfile(format!(
                "line_size {} is not a multiple of word_size x warp_width = {}",
                self.line_size,
                self.word_size * self.warp_width
            )));
        }
        Ok(())
    }

    /// Reads a profile from a key-value config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_config_str(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse { path: path.to_path_buf(), line, message },
            other => other,
        })
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let profile: MachineProfile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1) as u64).unwrap_or(0);
            Error::Parse { path: "<config>".into(), line, message: e.message().to_string() }
        })?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# Machine profile. Durations are in nanoseconds, sizes in bytes.\n");
        out.push_str(&toml::to_string(self).expect("profile serializes"));
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_config_string()).map_err(|e| Error::io(path, e))
    }

    /// Resolves a built-in profile name or a config file path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "tesla" => Ok(make_tesla_profile()),
            "fermi" => Ok(make_fermi_profile()),
            other => {
                let path = Path::new(other);
                if path.is_file() {
                    Self::load(path)
                } else {
                    Err(Error::UnknownProfile(other.to_string()))
                }
            }
        }
    }
}

/// Maps a word to the line containing it.
pub fn line_of(profile: &MachineProfile, addr: WordAddress) -> LineId {
    LineId(((addr.0 as u64 * profile.word_size as u64) / profile.line_size as u64) as u32)
}

fn calibrated(name: &str, line_hostage: bool, num_sms: u32, table: BenchmarkTable) -> MachineProfile {
    let timing = crate::bench::calibrate(&table).expect("reference table is complete and positive");
    MachineProfile {
        name: name.to_string(),
        timing,
        line_hostage,
        num_sms,
        max_blocks_per_sm: 8,
        threads_per_block: 128,
        warp_width: 32,
        line_size: 128,
        word_size: 4,
    }
}

/// GT200-class profile: no line hostage, 30 SMs of 8 blocks.
pub fn make_tesla_profile() -> MachineProfile {
    calibrated("tesla", false, 30, BenchmarkTable::reference_tesla())
}

/// GF100-class profile: atomic units hold lines hostage, 16 SMs of 8 blocks.
pub fn make_fermi_profile() -> MachineProfile {
    calibrated("fermi", true, 16, BenchmarkTable::reference_fermi())
}

/// The three machine-abstraction characteristics recovered from a benchmark
/// table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbstractionReport {
    pub profile: String,
    /// Contentious atomic time over contentious volatile time.
    pub atomic_volatile_read: f64,
    pub atomic_volatile_write: f64,
    /// Contentious volatile time over noncontentious volatile time.
    pub contention_read: f64,
    pub contention_write: f64,
    /// Contentious volatile-after-atomic time over contentious volatile time.
    pub hostage_ratio_read: f64,
    pub hostage_ratio_write: f64,
    pub hostage_threshold: f64,
    pub line_hostage: bool,
}

impl fmt::Display for AbstractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "profile: {}", self.profile)?;
        writeln!(
            f,
            "atomic:volatile (contentious)          reads {:>8.2}x  writes {:>8.2}x",
            self.atomic_volatile_read, self.atomic_volatile_write
        )?;
        writeln!(
            f,
            "contentious:noncontentious (volatile)  reads {:>8.2}x  writes {:>8.2}x",
            self.contention_read, self.contention_write
        )?;
        writeln!(
            f,
            "after-atomic:volatile (contentious)    reads {:>8.2}x  writes {:>8.2}x",
            self.hostage_ratio_read, self.hostage_ratio_write
        )?;
        write!(
            f,
            "line hostage: {} (threshold {:.2}x)",
            if self.line_hostage { "yes" } else { "no" },
            self.hostage_threshold
        )
    }
}

/// Classifies a machine from its benchmark table with the default hostage
/// threshold.
pub fn classification_vector(results: &BenchmarkTable) -> Result<AbstractionReport> {
    classification_vector_with(results, DEFAULT_HOSTAGE_THRESHOLD)
}

pub fn classification_vector_with(results: &BenchmarkTable, hostage_threshold: f64) -> Result<AbstractionReport> {
    for kind in BenchmarkKind::all() {
        results.require(kind)?;
    }
    let get = |access, contention, direction| results.require(BenchmarkKind::new(access, contention, direction));
    let ratio = |access_num, contention_num, access_den, contention_den, direction| -> Result<f64> {
        Ok(get(access_num, contention_num, direction)? / get(access_den, contention_den, direction)?)
    };
    use Access::*;
    use Contention::*;
    use Direction::*;

    let hostage_ratio_read = ratio(VolatileAfterAtomic, Contentious, Volatile, Contentious, Read)?;
    let hostage_ratio_write = ratio(VolatileAfterAtomic, Contentious, Volatile, Contentious, Write)?;
    Ok(AbstractionReport {
        profile: results.profile.clone(),
        atomic_volatile_read: ratio(Atomic, Contentious, Volatile, Contentious, Read)?,
        atomic_volatile_write: ratio(Atomic, Contentious, Volatile, Contentious, Write)?,
        contention_read: ratio(Volatile, Contentious, Volatile, Noncontentious, Read)?,
        contention_write: ratio(Volatile, Contentious, Volatile, Noncontentious, Write)?,
        hostage_ratio_read,
        hostage_ratio_write,
        hostage_threshold,
        line_hostage: hostage_ratio_read >= hostage_threshold || hostage_ratio_write >= hostage_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        ((a - b) / b).abs() <= rel
    }

    #[test]
    fn tesla_topology_and_calibration() {
        let p = make_tesla_profile();
        assert_eq!(p.max_blocks(), 240);
        assert!(!p.line_hostage);
        // 78.407 ms over 240 blocks x 1000 accesses.
        assert!(close(p.timing.svc_atomic_read, 78.407e6 / 240_000.0, 1e-12));
        assert!(close(p.timing.svc_atomic_read, 326.7, 1e-3));
        // 0.590 ms over 1000 dependent accesses.
        assert!(close(p.timing.lat_volatile_read, 590.0, 1e-12));
    }

    #[test]
    fn fermi_topology_and_calibration() {
        let p = make_fermi_profile();
        assert_eq!(p.max_blocks(), 128);
        assert!(p.line_hostage);
        assert!(close(p.timing.svc_atomic_read, 1.479e6 / 128_000.0, 1e-12));
        assert!(close(p.timing.svc_atomic_read, 11.55, 1e-3));
        assert!(close(p.timing.lat_volatile_read, 43.0, 1e-12));
        assert!(close(p.timing.lat_volatile_write, 29.0, 1e-12));
    }

    #[test]
    fn builtin_profiles_are_valid_and_ordered() {
        let tesla = make_tesla_profile();
        let fermi = make_fermi_profile();
        tesla.validate().unwrap();
        fermi.validate().unwrap();
        let ratio = |p: &MachineProfile| p.timing.svc_atomic_read / p.timing.svc_volatile_read;
        assert!(ratio(&tesla) >= 1.0 && ratio(&fermi) >= 1.0);
        assert!(ratio(&tesla) > 10.0 * ratio(&fermi));
        assert_eq!(tesla.line_size % (tesla.word_size * tesla.warp_width), 0);
    }

    #[test]
    fn line_mapping_examples() {
        let p = make_tesla_profile();
        assert_eq!(p.line_size, 128);
        assert_eq!(line_of(&p, WordAddress(0)), LineId(0));
        assert_eq!(line_of(&p, WordAddress(31)), LineId(0));
        assert_eq!(line_of(&p, WordAddress(32)), LineId(1));
        assert_eq!(line_of(&p, WordAddress(64)), LineId(2));
    }

    #[test]
    fn config_round_trip_uses_flat_field_names() {
        let p = make_fermi_profile();
        let text = p.to_config_string();
        for key in ["lat_volatile_read", "svc_atomic_write", "sync_threads_cost", "line_hostage", "num_sms"] {
            assert!(text.lines().any(|l| l.starts_with(key)), "missing key {key} in\n{text}");
        }
        let back = MachineProfile::from_config_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn config_rejects_invalid_values() {
        let mut p = make_tesla_profile();
        p.timing.svc_volatile_read = 0.0;
        let err = MachineProfile::from_config_str(&p.to_config_string()).unwrap_err();
        assert!(matches!(err, Error::InvalidProfile(_)), "{err}");

        let mut p = make_tesla_profile();
        p.line_size = 96;
        assert!(MachineProfile::from_config_str(&p.to_config_string()).is_err());

        let err = MachineProfile::from_config_str("name = \"x\"\nnum_sms = \"lots\"\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn resolve_rejects_unknown_names() {
        assert!(matches!(MachineProfile::resolve("bogus"), Err(Error::UnknownProfile(_))));
        assert_eq!(MachineProfile::resolve("tesla").unwrap().name, "tesla");
    }

    #[test]
    fn classification_of_reference_tables() {
        let tesla = classification_vector(&BenchmarkTable::reference_tesla()).unwrap();
        assert!(close(tesla.atomic_volatile_read, 92.46, 0.005));
        assert!(!tesla.line_hostage);
        let fermi = classification_vector(&BenchmarkTable::reference_fermi()).unwrap();
        assert!(close(fermi.contention_read, 11.49, 0.005));
        assert!(close(fermi.atomic_volatile_read, 2.99, 0.005));
        assert!(fermi.line_hostage);
    }

    #[test]
    fn classification_of_uniform_table() {
        let table = BenchmarkTable::uniform("flat", 1.0, 128);
        let r = classification_vector(&table).unwrap();
        for v in [
            r.atomic_volatile_read,
            r.atomic_volatile_write,
            r.contention_read,
            r.contention_write,
            r.hostage_ratio_read,
            r.hostage_ratio_write,
        ] {
            assert_eq!(v, 1.0);
        }
        assert!(!r.line_hostage);
    }

    #[test]
    fn classification_names_missing_row() {
        let mut table = BenchmarkTable::reference_tesla();
        table.remove(BenchmarkKind::new(Access::VolatileAfterAtomic, Contention::Noncontentious, Direction::Write));
        match classification_vector(&table) {
            Err(Error::MissingRow(row)) => assert_eq!(row, "noncontentious volatile_after_atomic write"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
