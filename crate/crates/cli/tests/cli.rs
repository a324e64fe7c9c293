//! CLI surface tests: exit codes, help, file outputs, and the
//! collect/export/compare workflow against replay sources.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_powerprof")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn powerprof")
}

fn run_with_env(args: &[&str], env: &BTreeMap<&str, &str>) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn powerprof")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_power_replay(dir: &Path, rows: usize, period_ms: u64, peak: f64) -> PathBuf {
    let mut text = String::from("#powerprof-energy v1 mode=power domains=pkg,ssd:disk\n");
    for i in 0..rows {
        let w = if i == rows / 2 { peak } else { 10.0 + (i % 3) as f64 };
        text.push_str(&format!("{},pkg={w},ssd=0.5\n", i as u64 * period_ms));
    }
    let path = dir.join("replay.energy");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_exists_for_every_subcommand() {
    assert!(run(&["--help"]).status.success());
    for sub in ["collect", "run", "export", "compare", "plot-data", "bench", "sources"] {
        let out = run(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
    }
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = run(&["bench", "copy", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn operational_failures_exit_one() {
    let out = run(&["bench", "not-a-kernel"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["collect", "--source", "replay:/nonexistent.energy", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["export", "/nonexistent-dir", "--label", "x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_prints_a_result_line() {
    let out = run(&[
        "bench", "copy", "--variant", "opt", "--size", "10000", "--repeat", "2",
    ]);
    assert!(out.status.success());
    let line = stdout(&out);
    assert!(line.starts_with("kernel=copy variant=opt size=10000"));
    assert!(line.contains("wall_time_s="));
    assert!(line.contains("checksum="));
}

#[test]
fn bench_checksum_is_stable_for_fixed_seed() {
    let args = ["bench", "sortstr", "--size", "2000", "--seed", "7"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    let checksum = |s: &str| {
        s.split_whitespace()
            .find_map(|tok| tok.strip_prefix("checksum="))
            .map(str::to_string)
    };
    assert_eq!(checksum(&a), checksum(&b));
    assert!(checksum(&a).is_some());
}

#[test]
fn collect_export_compare_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let replay = write_power_replay(tmp.path(), 6, 100, 25.0);
    let replay = replay.to_str().unwrap();

    for (label, node) in [("before", "a0"), ("after", "a1")] {
        let dir = tmp.path().join(label);
        let out = run(&[
            "collect",
            "--source", &format!("replay:{replay}"),
            "--node", node,
            "--out", dir.to_str().unwrap(),
            "--period-ms", "10",
            "--meta", &format!("label={label}"),
        ]);
        assert!(out.status.success(), "collect {label}: {:?}", out);
        assert!(dir.join(format!("{node}.trace")).exists());
    }

    // Export both, twice each: byte-identical reports.
    let mut report_paths = Vec::new();
    for label in ["before", "after"] {
        let dir = tmp.path().join(label);
        let path = tmp.path().join(format!("{label}.report.json"));
        for _ in 0..2 {
            let out = run(&[
                "export", dir.to_str().unwrap(),
                "--label", label,
                "-o", path.to_str().unwrap(),
            ]);
            assert!(out.status.success());
        }
        report_paths.push(path);
    }
    let a = std::fs::read(&report_paths[0]).unwrap();
    let a2 = {
        let out = run(&[
            "export",
            tmp.path().join("before").to_str().unwrap(),
            "--label", "before",
        ]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(a, a2, "export to file and stdout differ");

    let cmp_path = tmp.path().join("cmp.json");
    let out = run(&[
        "compare",
        report_paths[0].to_str().unwrap(),
        report_paths[1].to_str().unwrap(),
        "-o", cmp_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table = stdout(&out);
    assert!(table.contains("w_max"));
    assert!(table.contains('%'));

    let cmp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cmp_path).unwrap()).unwrap();
    for metric in ["w_max", "w_med", "w_avg", "energy_total", "runtime"] {
        let m = &cmp["metrics"][metric];
        assert!(m["base"].is_number(), "{metric} missing base");
        assert!(m["other"].is_number());
        assert!(m["delta_abs"].is_number());
        assert!(m["delta_pct"].is_number());
    }
    // Identical inputs: all zero deltas.
    assert_eq!(cmp["metrics"]["w_max"]["delta_abs"], 0.0);
}

#[test]
fn plot_data_emits_two_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let replay = write_power_replay(tmp.path(), 4, 200, 30.0);
    let dir = tmp.path().join("d");
    let out = run(&[
        "collect",
        "--source", &format!("replay:{}", replay.to_str().unwrap()),
        "--node", "p0",
        "--out", dir.to_str().unwrap(),
        "--period-ms", "10",
    ]);
    assert!(out.status.success());

    let out = run(&["plot-data", dir.join("p0.trace").to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    for line in &lines {
        let mut cols = line.split('\t');
        cols.next().unwrap().parse::<u64>().unwrap();
        cols.next().unwrap().parse::<f64>().unwrap();
        assert!(cols.next().is_none());
    }
    // First row: pkg 10.0 + ssd 0.5.
    assert_eq!(lines[0], "0\t10.5");
}

#[test]
fn source_flag_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let replay = write_power_replay(tmp.path(), 3, 100, 12.0);
    let dir = tmp.path().join("envrun");
    let env: BTreeMap<&str, &str> = [(
        "POWERPROF_SOURCE",
        Box::leak(format!("replay:{}", replay.display()).into_boxed_str()) as &str,
    )]
    .into();
    let out = run_with_env(
        &[
            "collect",
            "--node", "e0",
            "--out", dir.to_str().unwrap(),
            "--period-ms", "10",
        ],
        &env,
    );
    assert!(out.status.success(), "{out:?}");
    assert!(dir.join("e0.trace").exists());

    // Without the flag or the variable it is a usage error.
    let out = run(&["collect", "--node", "e0", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sources_probe_exits_zero_and_reports_replay_domains() {
    let tmp = tempfile::tempdir().unwrap();
    let replay = write_power_replay(tmp.path(), 3, 100, 12.0);
    let out = run(&["sources", "--source", &format!("replay:{}", replay.display())]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("available, 2 domain(s)"));
    assert!(text.contains("class=disk"));

    // The host probe must not fail even where nothing is available.
    assert!(run(&["sources"]).status.success());
}

#[test]
fn run_preserves_child_failure_in_result_file() {
    let tmp = tempfile::tempdir().unwrap();
    let replay = write_power_replay(tmp.path(), 200, 50, 12.0);
    let dir = tmp.path().join("failrun");
    let out = run(&[
        "run",
        "--source", &format!("replay:{}", replay.display()),
        "--node", "f0",
        "--out", dir.to_str().unwrap(),
        "--period-ms", "50",
        "--opt-flag", "-O2",
        "--",
        "python3", "-c", "import sys, time; time.sleep(0.3); sys.exit(7)",
    ]);
    // Measurement succeeded, so the runner exits zero despite the child.
    assert!(out.status.success(), "{out:?}");
    let summary = stdout(&out);
    assert!(summary.contains("child_exit=7"), "{summary}");

    let result: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("f0.result")).unwrap(),
    )
    .unwrap();
    assert_eq!(result["exit_status"], 7);
    assert!(result["wall_time_s"].as_f64().unwrap() > 0.0);

    let trace = std::fs::read_to_string(dir.join("f0.trace")).unwrap();
    assert!(trace.contains("#meta opt_flag=-O2"));
}

#[test]
fn run_spawn_failure_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let replay = write_power_replay(tmp.path(), 10, 100, 12.0);
    let out = run(&[
        "run",
        "--source", &format!("replay:{}", replay.display()),
        "--node", "s0",
        "--out", tmp.path().join("o").to_str().unwrap(),
        "--",
        "/nonexistent/workload",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
