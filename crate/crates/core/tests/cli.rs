use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpartition"))
}

fn write_model(dir: &Path, text: &str) -> String {
    let path = dir.join("model.txt");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn exact_on_two_spins() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "spins 2\nedge 0 1 1.0\n");
    let out = run(&["exact", "--model", &model, "--beta", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let z: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("Z "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((z - 6.17232).abs() < 1e-5);
    let oracle = 2.0 * 1f64.exp() + 2.0 * (-1f64).exp();
    assert!((z / oracle - 1.0).abs() < 1e-14);
}

#[test]
fn quantum_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "spins 2\nedge 0 1 1.0\nfield 1 0.2\n");
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let out = run(&[
            "quantum",
            "--model",
            &model,
            "--beta",
            "1.5",
            "--mode",
            "perfect",
            "--eps",
            "0.2",
            "--seed",
            "7",
            "--trials",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(path).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let json: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(json["mode"], "perfect");
    assert_eq!(json["seed"], 7);
    assert!(json["exact_Z"].as_f64().unwrap() > 0.0);
    assert!(json["per_level"][0]["within_band_mass"].as_f64().unwrap() >= 7.0 / 8.0);
    assert_eq!(json["trials"]["count"], 3);
    assert!(json["ledger"]["controlled_reflections"].as_u64().unwrap() > 0);
    let text = String::from_utf8(reports[0].clone()).unwrap();
    assert!(text.contains("\"epsilon\": 2.0000000000000001e-1"));
}

#[test]
fn classical_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "spins 2\nedge 0 1 1.0\n");
    let args = ["classical", "--model", &model, "--eps", "0.3", "--seed", "3"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["classical", "--model", &model, "--eps", "0.3", "--seed", "4"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn walk_analyze_reports_gap_check() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "spins 3\nedge 0 1 1.0\nedge 1 2 0.5\nfield 0 -0.3\n");
    let out = run(&["walk-analyze", "--model", &model, "--beta", "0.8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("row,index,mu,phase,cos_half_phase,abs_error\n"));
    assert!(text.lines().any(|l| l == "Δ ≥ 2√δ: PASS"));
}

#[test]
fn schedule_and_bench_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "spins 3\nedge 0 1 1.0\nedge 1 2 1.0\n");
    let out = run(&["schedule", "--model", &model, "--beta", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("level,beta,beta_next,alpha\n"));
    for line in text.lines().skip(1) {
        let alpha: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.5..=1.0).contains(&alpha));
    }
    let out = run(&[
        "bench",
        "--model",
        &model,
        "--beta",
        "1",
        "--eps",
        "0.4,0.2,0.1",
        "--betas",
        "1,3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "sweep,epsilon,levels,beta_final,classical_steps,quantum_queries,measured_samples"
    );
    assert_eq!(lines.len(), 1 + 3 + 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "spins 2\nedge 0 1 1.0\n");
    assert_eq!(
        run(&["exact", "--model", "/nonexistent/model.txt"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["quantum", "--model", &model, "--eps", "0.2"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["quantum", "--model", &model, "--eps", "1.5", "--seed", "1"])
            .status
            .code(),
        Some(2)
    );
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "spins 2\nedge 0 9 1.0\n").unwrap();
    assert_eq!(run(&["exact", "--model", bad.to_str().unwrap()]).status.code(), Some(2));
    let capped = run(&[
        "quantum",
        "--model",
        &model,
        "--eps",
        "0.2",
        "--seed",
        "1",
        "--cap-amplitudes",
        "64",
    ]);
    assert_eq!(capped.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&capped.stderr).contains("cap"));
}
