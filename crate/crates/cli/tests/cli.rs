//! End-to-end checks of the command line interface: file outputs,
//! determinism, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mztomo"));
    // Isolate from ambient configuration.
    for var in ["MZT_SEED", "MZT_ALPHA", "MZT_SHOTS", "MZT_JOBS"] {
        cmd.env_remove(var);
    }
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("output file exists")
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    let out = run(bin().args(["generate", "--out"]).arg(&path).args(extra));
    assert_success(&out);
    path
}

#[test]
fn generate_is_deterministic_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--kind", "bogoliubov", "--n", "3", "--seed", "11"];
    let a = generate(dir.path(), "a.json", &args);
    let b = generate(dir.path(), "b.json", &args);
    assert_eq!(read(&a), read(&b), "same seed must give identical files");
    let c = generate(
        dir.path(),
        "c.json",
        &["--kind", "bogoliubov", "--n", "3", "--seed", "12"],
    );
    assert_ne!(read(&a), read(&c), "different seeds must differ");

    let out = run(bin().args(["validate", "--device"]).arg(&a));
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("valid bogoliubov device, n = 3"),
        "stdout: {stdout}"
    );
}

#[test]
fn exact_tomography_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let device = generate(
        dir.path(),
        "device.json",
        &[
            "--kind",
            "lossy-bogoliubov",
            "--n",
            "2",
            "--seed",
            "5",
            "--eta",
            "0.8,0.6",
        ],
    );
    let report_path = dir.path().join("report.json");
    let out = run(bin()
        .args(["tomography", "--device"])
        .arg(&device)
        .args(["--out"])
        .arg(&report_path));
    assert_success(&out);
    let report: serde_json::Value = serde_json::from_str(&read(&report_path)).unwrap();
    assert_eq!(report["kind"], "lossy_bogoliubov");
    assert_eq!(report["n"], 2);
    assert!(report["frobenius_error_u"].as_f64().unwrap() < 1e-9);
    assert!(report["frobenius_error_v"].as_f64().unwrap() < 1e-9);
    assert!(report["eta_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["total_shots"], 0);
    assert_eq!(report["settings_used"], 2 + 16);
}

#[test]
fn finite_shots_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let device = generate(
        dir.path(),
        "d.json",
        &["--kind", "unitary", "--n", "2", "--seed", "1"],
    );
    let out = run(bin()
        .args(["tomography", "--shots", "100", "--device"])
        .arg(&device)
        .args(["--out"])
        .arg(dir.path().join("r.json")));
    assert_eq!(
        out.status.code(),
        Some(7),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn same_seed_reproduces_outputs_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let device = generate(
        dir.path(),
        "d.json",
        &["--kind", "unitary", "--n", "2", "--seed", "9"],
    );
    let run_once = |tag: &str, seed: &str| {
        let report = dir.path().join(format!("report-{tag}.json"));
        let records = dir.path().join(format!("records-{tag}.jsonl"));
        let csv = dir.path().join(format!("errors-{tag}.csv"));
        let out = run(bin()
            .args([
                "tomography",
                "--shots",
                "2000",
                "--seed",
                seed,
                "--jobs",
                "2",
                "--device",
            ])
            .arg(&device)
            .arg("--out")
            .arg(&report)
            .arg("--records")
            .arg(&records)
            .arg("--csv")
            .arg(&csv));
        assert_success(&out);
        (read(&report), read(&records), read(&csv))
    };
    let first = run_once("first", "21");
    let second = run_once("second", "21");
    assert_eq!(first, second, "same seed must reproduce all outputs");
    let other = run_once("other", "22");
    assert_ne!(first.1, other.1, "a different seed must change the records");
}

#[test]
fn opaque_mode_exits_with_unrecoverable_row() {
    let dir = tempfile::tempdir().unwrap();
    let device = generate(
        dir.path(),
        "d.json",
        &[
            "--kind",
            "lossy-unitary",
            "--n",
            "2",
            "--seed",
            "2",
            "--eta",
            "0.9,0",
        ],
    );
    let out = run(bin()
        .args(["tomography", "--device"])
        .arg(&device)
        .args(["--out"])
        .arg(dir.path().join("r.json")));
    assert_eq!(out.status.code(), Some(6));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mode 2"), "stderr: {stderr}");
}

#[test]
fn compare_reports_zero_distance_for_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let device = generate(
        dir.path(),
        "d.json",
        &[
            "--kind",
            "lossy-bogoliubov",
            "--n",
            "2",
            "--seed",
            "3",
            "--eta",
            "0.7",
        ],
    );
    let out = run(bin().arg("compare").arg(&device).arg(&device));
    assert_success(&out);
    let distance: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(distance["frobenius_u"], 0.0);
    assert_eq!(distance["frobenius_v"], 0.0);
    assert_eq!(distance["eta_max_abs_diff"], 0.0);
}

#[test]
fn study_writes_table_with_slope_footer() {
    let dir = tempfile::tempdir().unwrap();
    let device = generate(
        dir.path(),
        "d.json",
        &["--kind", "unitary", "--n", "2", "--seed", "6"],
    );
    let csv_path = dir.path().join("study.csv");
    let out = run(bin()
        .args([
            "shot-noise-study",
            "--shots-grid",
            "100,10000,1000000",
            "--seeds",
            "6",
        ])
        .args(["--seed", "4", "--device"])
        .arg(&device)
        .arg("--out")
        .arg(&csv_path));
    assert_success(&out);
    let csv = read(&csv_path);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5, "header, three rows, slope footer: {csv}");
    assert_eq!(lines[0], "shots,rmse,std_error");
    assert!(lines[1].starts_with("100,"));
    assert!(
        lines[4].starts_with("# log-log slope: -0."),
        "footer: {}",
        lines[4]
    );
    let slope: f64 = lines[4]
        .trim_start_matches("# log-log slope: ")
        .parse()
        .unwrap();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
}

#[test]
fn invalid_device_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    // 2x2 identity scaled by 2: well-formed JSON, not a unitary.
    std::fs::write(
        &path,
        r#"{"kind":"unitary","n":2,"u":[[[2.0,0.0],[0.0,0.0]],[[0.0,0.0],[2.0,0.0]]]}"#,
    )
    .unwrap();
    let out = run(bin().args(["validate", "--device"]).arg(&path));
    assert_eq!(out.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("violation"), "stdout: {stdout}");
    let out = run(bin()
        .args(["tomography", "--device"])
        .arg(&path)
        .args(["--out"])
        .arg(dir.path().join("r.json")));
    assert_eq!(out.status.code(), Some(4));

    let missing = run(bin()
        .args(["validate", "--device"])
        .arg(dir.path().join("nope.json")));
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let out = run(bin().arg("no-such-command"));
    assert_eq!(out.status.code(), Some(2));
    let out = run(bin().args(["generate", "--kind", "unitary"]));
    assert_eq!(out.status.code(), Some(2), "missing required --n");
    let help = run(bin().arg("--help"));
    assert!(help.status.success());
}

#[test]
fn generate_rejects_inconsistent_loss_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .args([
            "generate",
            "--kind",
            "lossy-unitary",
            "--n",
            "2",
            "--seed",
            "1",
            "--out",
        ])
        .arg(dir.path().join("d.json")));
    assert_eq!(out.status.code(), Some(7), "lossy kinds need --eta");
    let out = run(bin()
        .args([
            "generate", "--kind", "unitary", "--n", "2", "--seed", "1", "--eta", "0.5", "--out",
        ])
        .arg(dir.path().join("d.json")));
    assert_eq!(
        out.status.code(),
        Some(7),
        "--eta is meaningless for unitary kinds"
    );
    let out = run(bin()
        .args([
            "generate",
            "--kind",
            "lossy-unitary",
            "--n",
            "3",
            "--seed",
            "1",
        ])
        .args(["--eta", "0.5,0.6", "--out"])
        .arg(dir.path().join("d.json")));
    assert_eq!(out.status.code(), Some(7), "eta list length must match n");
}
