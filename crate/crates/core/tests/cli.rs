use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use syncsim::bench::BenchmarkTable;
use syncsim::{make_fermi_profile, make_tesla_profile, MachineProfile};

fn syncsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncsim")).args(args).output().expect("spawn syncsim")
}

fn ok(args: &[&str]) -> String {
    let out = syncsim(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixtures_hold_the_reference_tables() {
    assert_eq!(BenchmarkTable::load(&fixture("tesla_reference.csv")).unwrap(), BenchmarkTable::reference_tesla());
    assert_eq!(BenchmarkTable::load(&fixture("fermi_reference.csv")).unwrap(), BenchmarkTable::reference_fermi());
}

#[test]
fn classify_fixtures() {
    let tesla = ok(&["classify", "--table", arg(&fixture("tesla_reference.csv"))]);
    let fermi = ok(&["classify", "--table", arg(&fixture("fermi_reference.csv"))]);
    assert!(tesla.contains("line hostage: no"), "{tesla}");
    assert!(fermi.contains("line hostage: yes"), "{fermi}");
}

#[test]
fn calibrate_writes_a_loadable_profile() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fermi.toml");
    let stdout = ok(&["calibrate", "--targets", arg(&fixture("fermi_reference.csv")), "--out", arg(&path)]);
    assert!(stdout.contains("round trip"));
    let fitted = MachineProfile::load(&path).unwrap();
    let builtin = make_fermi_profile();
    for ((name, got), (_, want)) in fitted.timing.fields().iter().zip(builtin.timing.fields()) {
        assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{name}: {got} vs {want}");
    }
    // the written profile is usable wherever a profile name is
    ok(&["run", "--profile", arg(&path), "--primitive", "fa_mutex", "--blocks", "4", "--ops", "5"]);
}

#[test]
fn calibrate_rejects_a_mismatched_base() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.toml");
    let out = syncsim(&[
        "calibrate",
        "--targets",
        arg(&fixture("fermi_reference.csv")),
        "--out",
        arg(&path),
        "--base",
        "tesla",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("128 blocks"));
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tesla.csv");
    let json = dir.path().join("tesla.json");
    let stdout = ok(&["bench", "--profile", "tesla", "--out", arg(&csv)]);
    assert!(stdout.contains("ratios for tesla"));
    assert!(!stdout.contains("OUT OF TOLERANCE"), "{stdout}");
    ok(&["bench", "--profile", "tesla", "--out", arg(&json)]);
    let table = BenchmarkTable::load(&csv).unwrap();
    assert_eq!(table.rows.len(), 12);
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(value["profile"], "tesla");
    assert_eq!(value["rows"].as_array().unwrap().len(), 12);
}

#[test]
fn fermi_bench_prints_known_deviations() {
    let stdout = ok(&["bench", "--profile", "fermi"]);
    assert_eq!(stdout.matches("known deviation").count(), 2, "{stdout}");
}

#[test]
fn run_writes_point_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("point.csv");
    let log = dir.path().join("log.csv");
    let stdout = ok(&[
        "run",
        "--profile",
        "fermi",
        "--primitive",
        "sleep_sem",
        "--blocks",
        "6",
        "--capacity",
        "2",
        "--ops",
        "4",
        "--out",
        arg(&out),
        "--log",
        arg(&log),
    ]);
    assert!(stdout.contains("all invariants hold"), "{stdout}");
    let point = std::fs::read_to_string(&out).unwrap();
    let mut lines = point.lines();
    assert_eq!(lines.next(), Some("profile,primitive,blocks,capacity,ops_per_sec,sim_time_ns"));
    assert!(lines.next().unwrap().starts_with("fermi,sleep_sem,6,2,"));
    let log = std::fs::read_to_string(&log).unwrap();
    assert!(log.lines().count() > 6 * 4);
}

#[test]
fn sweep_marks_points_beyond_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let stdout = ok(&[
        "sweep",
        "--profile",
        "tesla",
        "--primitive",
        "atomic_barrier",
        "--blocks",
        "8,60,64",
        "--ops",
        "5",
        "--out",
        arg(&out),
    ]);
    assert!(stdout.contains("not measured"));
    let csv = std::fs::read_to_string(&out).unwrap();
    let last = csv.lines().last().unwrap();
    assert_eq!(last, "tesla,atomic_barrier,64,,,");
}

#[test]
fn sweep_json_lists_every_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    ok(&[
        "sweep",
        "--profile",
        "fermi",
        "--primitive",
        "spin_sem",
        "--blocks",
        "2,4",
        "--capacities",
        "1,3",
        "--ops",
        "3",
        "--out",
        arg(&out),
    ]);
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // one object per point, like the CSV rows
    let points = value.as_array().unwrap();
    assert_eq!(points.len(), 4);
    assert_eq!(points[3]["capacity"], 3);
    assert_eq!(points[3]["blocks"], 4);
}

#[test]
fn identical_arguments_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("log{i}.csv"))).collect();
    let stdouts: Vec<String> = files
        .iter()
        .map(|f| {
            ok(&[
                "run",
                "--profile",
                "fermi",
                "--primitive",
                "ring_mutex",
                "--blocks",
                "5",
                "--ops",
                "3",
                "--seed",
                "7",
                "--log",
                arg(f),
            ])
        })
        .collect();
    assert_eq!(stdouts[0], stdouts[1]);
    assert_eq!(std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        &["run", "--profile", "volta", "--primitive", "fa_mutex", "--blocks", "2"][..],
        &["run", "--profile", "tesla", "--primitive", "ticket", "--blocks", "2"],
        &["run", "--profile", "tesla", "--primitive", "fa_mutex", "--blocks", "241"],
        &["run", "--profile", "tesla", "--primitive", "spin_sem", "--blocks", "2", "--capacity", "0"],
        &["run", "--profile", "tesla", "--primitive", "spin_mutex_backoff", "--blocks", "2", "--i-min", "8", "--i-max", "2"],
        &["frobnicate"],
    ] {
        let out = syncsim(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_files_fail() {
    let out = syncsim(&["classify", "--table", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent.csv"));
}

#[test]
fn profile_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for profile in [make_tesla_profile(), make_fermi_profile()] {
        let path = dir.path().join(format!("{}.toml", profile.name));
        profile.save(&path).unwrap();
        assert_eq!(MachineProfile::load(&path).unwrap(), profile);
        assert_eq!(MachineProfile::resolve(arg(&path)).unwrap(), profile);
    }
}
