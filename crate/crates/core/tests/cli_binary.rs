use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_gamma-null");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn counterexample_passes_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("counterexample.toml");
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&[
        "counterexample",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("PASS tube_area"));
    for name in ["summary.txt", "tubes.csv", "counterexample.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let csv = std::fs::read_to_string(out.join("tubes.csv")).unwrap();
    assert!(csv.starts_with("curve_id,radius,length,area_bound\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn summary_format_writes_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("counterexample.toml");
    let (code, _, _) = run(&[
        "counterexample",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--format",
        "summary",
    ]);
    assert_eq!(code, 0);
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec!["summary.txt"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("reference.toml");
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        run(&["avoid", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--seed", "3"]);
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    assert!(outputs[0].len() >= 5);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn failed_verdict_exits_nonzero() {
    let cfg = configs().join("reference.toml");
    let (code, stdout, stderr) = run(&["halving", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("status = \"fail\""));
    assert!(stderr.contains("FAIL halving"));
}

#[test]
fn empty_oracle_halving_is_degenerate_success() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[oracle]\ntype = \"empty\"\n[engine]\nsigma = 0.8\neps = 0.01\nlambda = 16.0\nrounds = 5\n",
    );
    let (code, stdout, _) = run(&["halving", "--config", &cfg]);
    assert_eq!(code, 0);
    assert!(stdout.contains("degenerate = true"));
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[oracle]\ntype = \"empty\"\n[engine]\nsigma = 0.8\neps = 0.01\nrounds = 5\n",
    );
    let (code, _, stderr) = run(&["halving", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(stderr.contains("engine.lambda"), "{stderr}");
    let cfg = write_config(dir.path(), "[counterexample]\nmu = 0.3\np = 2.0\ndepth = 10\neps = 0.01\nextra = 1\n");
    let (code, _, stderr) = run(&["counterexample", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(stderr.contains("counterexample.extra"), "{stderr}");
}

#[test]
fn strict_mode_reports_parameters_without_running() {
    let cfg = configs().join("strict.toml");
    let (code, stdout, _) = run(&["avoid", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("desk_feasible = false"));
    assert!(stdout.contains("PASS lambda_gate"));
    assert!(stdout.contains("runnable = false"));
}

#[test]
fn missing_config_file_is_a_runtime_error() {
    let (code, _, stderr) = run(&["avoid", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("io error"));
}
