//! Exercises the binary end to end: artifact emission, verification, error
//! exit codes, the steiner helper, and determinism across runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parityc"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

const SMALL_PROBLEM: &str = r#"{
    "n_spins": 3,
    "terms": [
        {"spins": [1,2], "coefficient": 1.0},
        {"spins": [2,3], "coefficient": 1.0},
        {"spins": [1,3], "coefficient": 1.0},
        {"spins": [1,2,3], "coefficient": 1.0}
    ]
}"#;

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn compile_then_verify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(&problem, SMALL_PROBLEM);
    let out_dir = dir.path().join("out");

    let out = run(bin()
        .args(["compile", "--problem"])
        .arg(&problem)
        .args([
            "--device",
            "grid:2x2",
            "--budget",
            "1000",
            "--restarts",
            "2",
            "--out-dir",
        ])
        .arg(&out_dir));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["circuit.qasm", "report.json", "layout.json"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }

    let verify = run(bin()
        .args(["verify", "--circuit"])
        .arg(out_dir.join("circuit.qasm"))
        .args(["--problem"])
        .arg(&problem)
        .args(["--layout"])
        .arg(out_dir.join("layout.json")));
    assert!(
        verify.status.success(),
        "{}",
        String::from_utf8_lossy(&verify.stderr)
    );
    let stdout = String::from_utf8_lossy(&verify.stdout);
    assert!(stdout.contains("equivalence: ok"), "{stdout}");
}

#[test]
fn corrupted_circuit_exits_with_verification_code() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(&problem, SMALL_PROBLEM);
    let out_dir = dir.path().join("out");
    assert!(run(bin()
        .args(["compile", "--problem"])
        .arg(&problem)
        .args([
            "--device",
            "grid:2x2",
            "--budget",
            "1000",
            "--restarts",
            "2",
            "--out-dir"
        ])
        .arg(&out_dir))
    .status
    .success());

    // Drop the first CNOT line.
    let circuit_path = out_dir.join("circuit.qasm");
    let text = fs::read_to_string(&circuit_path).unwrap();
    let damaged: Vec<&str> = {
        let mut removed = false;
        text.lines()
            .filter(|l| {
                if !removed && l.starts_with("cx ") {
                    removed = true;
                    false
                } else {
                    true
                }
            })
            .collect()
    };
    write(&circuit_path, &(damaged.join("\n") + "\n"));

    let verify = run(bin()
        .args(["verify", "--circuit"])
        .arg(&circuit_path)
        .args(["--problem"])
        .arg(&problem)
        .args(["--layout"])
        .arg(out_dir.join("layout.json")));
    assert_eq!(
        verify.status.code(),
        Some(4),
        "verification failure exit code"
    );
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(
        &problem,
        r#"{"n_spins": 2, "terms": [{"spins": [1,9], "coefficient": 1.0}]}"#,
    );
    let out = run(bin()
        .args(["compile", "--problem"])
        .arg(&problem)
        .args(["--device", "chain:4"]));
    assert_eq!(out.status.code(), Some(2));

    let out = run(bin()
        .args(["compile", "--problem"])
        .arg(dir.path().join("missing.json"))
        .args(["--device", "chain:4"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn disconnected_device_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(&problem, SMALL_PROBLEM);
    let device = dir.path().join("d.json");
    write(
        &device,
        r#"{"nodes":[{"id":0},{"id":1},{"id":2},{"id":3},{"id":4}],"edges":[[0,1],[2,3]]}"#,
    );
    let out = run(bin()
        .args(["compile", "--problem"])
        .arg(&problem)
        .args(["--device"])
        .arg(&device));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not connected"));
}

#[test]
fn too_small_device_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(&problem, SMALL_PROBLEM);
    let out = run(bin()
        .args(["compile", "--problem"])
        .arg(&problem)
        .args(["--device", "chain:2"]));
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn oversize_verification_exits_five() {
    // 13 single-spin terms force 13 hardware qubits, beyond the oracle cap.
    let mut terms = Vec::new();
    for i in 1..=13 {
        terms.push(format!(r#"{{"spins": [{i}], "coefficient": 1.0}}"#));
    }
    let problem_text = format!(r#"{{"n_spins": 13, "terms": [{}]}}"#, terms.join(","));
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(&problem, &problem_text);
    let out_dir = dir.path().join("out");
    assert!(run(bin()
        .args(["compile", "--problem"])
        .arg(&problem)
        .args([
            "--device",
            "chain:13",
            "--budget",
            "200",
            "--restarts",
            "1",
            "--out-dir"
        ])
        .arg(&out_dir))
    .status
    .success());
    let verify = run(bin()
        .args(["verify", "--circuit"])
        .arg(out_dir.join("circuit.qasm"))
        .args(["--problem"])
        .arg(&problem)
        .args(["--layout"])
        .arg(out_dir.join("layout.json")));
    assert_eq!(verify.status.code(), Some(5));
}

#[test]
fn stats_prints_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(&problem, SMALL_PROBLEM);
    let out = run(bin().args(["stats", "--problem"]).arg(&problem).args([
        "--device",
        "grid:2x2",
        "--budget",
        "500",
        "--restarts",
        "1",
    ]));
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).expect("stats emits JSON");
    assert!(parsed.get("totals").is_some());
}

#[test]
fn steiner_subcommand_reports_tree() {
    let out = run(bin().args(["steiner", "--device", "grid:4x4", "--terminals", "0,3,12"]));
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("tree size: 6 edges"), "{stdout}");

    let exact = run(bin().args([
        "steiner",
        "--device",
        "grid:4x4",
        "--terminals",
        "0,3,12",
        "--exact",
    ]));
    assert!(exact.status.success());
    assert!(String::from_utf8_lossy(&exact.stdout).contains("tree size: 6 edges"));
}

#[test]
fn same_seed_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    write(&problem, SMALL_PROBLEM);
    let mut artifacts = Vec::new();
    for run_dir in ["a", "b"] {
        let out_dir = dir.path().join(run_dir);
        assert!(run(bin()
            .args(["compile", "--problem"])
            .arg(&problem)
            .args([
                "--device",
                "grid:2x2",
                "--seed",
                "7",
                "--budget",
                "800",
                "--restarts",
                "2",
                "--trace",
                "--out-dir"
            ])
            .arg(&out_dir))
        .status
        .success());
        artifacts.push((
            fs::read(out_dir.join("circuit.qasm")).unwrap(),
            fs::read(out_dir.join("report.json")).unwrap(),
            fs::read(out_dir.join("trace.jsonl")).unwrap(),
        ));
    }
    assert_eq!(artifacts[0], artifacts[1]);
}
