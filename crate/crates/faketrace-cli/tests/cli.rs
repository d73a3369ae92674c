//! Black-box tests of the command-line interface: exit codes, artifact
//! round trips, and manifest emission.

use std::path::Path;
use std::process::{Command, Output};

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faketrace"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn csv_rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).expect("artifact exists");
    text.lines().skip(1).map(str::to_string).collect()
}

#[test]
fn unknown_subcommand_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["synth", "--set", "no_such_key=3", "--out", "c.csv", "--roles-out", "r.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn malformed_override_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["synth", "--set", "users", "--out", "c.csv", "--roles-out", "r.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["learn", "--corpus", "absent.csv", "--out", "m.csv", "--visits-out", "v.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_parameter_value_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["synth", "--set", "noise=1.5", "--out", "c.csv", "--roles-out", "r.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_overrides_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.conf"),
        "# comment\nusers = 4\ntrace_len = 10\nalternates = 1\n",
    )
    .unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["--config", "run.conf", "synth", "--out", "c.csv", "--roles-out", "r.csv"],
    ));
    let rows = csv_rows(&dir.path().join("c.csv"));
    let users: std::collections::BTreeSet<String> = rows
        .iter()
        .map(|r| r.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(users.len(), 4);
    assert_eq!(rows.len(), 4 * 10);
}

#[test]
fn synth_generate_audit_round_trip_passes() {
    let dir = tempfile::tempdir().unwrap();
    let small = [
        "--set", "users=6", "--set", "trace_len=24", "--set", "alternates=2",
        "--set", "count_per_seed=3",
    ];
    let with = |args: &[&'static str]| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend_from_slice(&small);
        v
    };
    assert_ok(&run_in(
        dir.path(),
        &with(&["synth", "--out", "c.csv", "--roles-out", "r.csv"]),
    ));
    assert_ok(&run_in(
        dir.path(),
        &with(&[
            "cluster", "--corpus", "c.csv", "--graph-out", "g.csv", "--classes-out",
            "cl.csv", "--k", "3",
        ]),
    ));
    assert_ok(&run_in(
        dir.path(),
        &with(&[
            "generate", "--corpus", "c.csv", "--classes", "cl.csv", "--out", "pool.csv",
            "--sidecar-out", "side.csv", "--rejections-out", "rej.csv",
        ]),
    ));
    assert_ok(&run_in(
        dir.path(),
        &with(&["audit", "--corpus", "c.csv", "--pool", "pool.csv", "--out", "a.csv"]),
    ));
    let verdicts = csv_rows(&dir.path().join("a.csv"));
    assert_eq!(verdicts.len(), 4 * 3, "one audit row per generated fake");
    for row in &verdicts {
        assert_eq!(row.split(',').nth(2).unwrap(), "true", "row: {row}");
    }
    assert!(dir.path().join("pool.csv.manifest").exists());
}

#[test]
fn similarity_emits_all_ordered_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--set", "users=4", "--set", "trace_len=16", "--set", "alternates=1"];
    let mut synth: Vec<&str> = vec!["synth", "--out", "c.csv", "--roles-out", "r.csv"];
    synth.extend_from_slice(&small);
    assert_ok(&run_in(dir.path(), &synth));
    let mut sim: Vec<&str> = vec![
        "similarity", "--corpus", "c.csv", "--kind", "sem0", "--out", "s.csv",
    ];
    sim.extend_from_slice(&small);
    assert_ok(&run_in(dir.path(), &sim));
    let rows = csv_rows(&dir.path().join("s.csv"));
    assert_eq!(rows.len(), 4 * 3, "ordered pairs of 4 users");
    for row in &rows {
        let score: f64 = row.split(',').last().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&score), "row: {row}");
    }
}

#[test]
fn split_keeps_only_requested_slot_range() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &[
            "synth", "--set", "users=3", "--set", "alternates=1", "--out", "c.csv",
            "--roles-out", "r.csv",
        ],
    ));
    assert_ok(&run_in(
        dir.path(),
        &["split", "--corpus", "c.csv", "--start", "10", "--end", "30", "--out", "w.csv"],
    ));
    let full = csv_rows(&dir.path().join("c.csv"));
    let window = csv_rows(&dir.path().join("w.csv"));
    assert_eq!(window.len(), 3 * 20);
    // slots are renumbered from zero and the locations match the window
    let expect: Vec<String> = full
        .iter()
        .filter(|r| {
            let slot: usize = r.split(',').nth(1).unwrap().parse().unwrap();
            (10..30).contains(&slot)
        })
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            let slot: usize = f[1].parse().unwrap();
            format!("{},{},{}", f[0], slot - 10, f[2])
        })
        .collect();
    assert_eq!(window, expect);
}
