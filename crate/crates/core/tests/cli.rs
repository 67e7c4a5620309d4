use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_caputo");

const HEAD: &str = "[problem]\ntheta = 0.5\nT = 1\n";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, format!("{HEAD}{body}")).unwrap();
    p.display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn kernel_test_passes() {
    let o = run(&["kernel-test"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn syntax_errors_report_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.ini",
        "alpha = 0.5\nn = 15\nM = 8\nf = sin(pi*x) +\n",
    );
    let o = run(&["solve", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.ini: 7:16:"), "{err}");
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "alpha.ini", "alpha = 2.5\nn = 15\nM = 8\n");
    assert_eq!(code(&run(&["solve", "--config", &cfg])), 2);
    assert_eq!(code(&run(&["solve"])), 2);
    assert_eq!(code(&run(&["solve", "--config", "/nonexistent/x.ini"])), 2);
    assert_eq!(code(&run(&["--bogus"])), 2);
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "corner.ini",
        "alpha = 0.5\nn = 15\nM = 16\nf = 1\n[checks]\nspatial = true\n",
    );
    let out = dir.path().join("out");
    let o = run(&[
        "check-compat",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let text = fs::read_to_string(out.join("compat_spatial.txt")).unwrap();
    assert!(text.contains("corner_compatibility"));
}

#[test]
fn solve_is_deterministic_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "heat.ini",
        "alpha = 0.7\nn = 15\nM = 16\nu0 = sin(pi*x)\nf = t*x*(1-x)\ngL = t\n",
    );
    let mut csv = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = run(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("report.txt").exists());
        assert!(out.join("summary.csv").exists());
        csv.push(fs::read(out.join("solution.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let text = String::from_utf8(csv.remove(0)).unwrap();
    // (M + 1) times, n + 2 nodes, one header line.
    assert_eq!(text.lines().count(), 17 * 17 + 1);
}

#[test]
fn refine_halves_the_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.ini",
        "alpha = 0.5\nn = 7\nM = 4\nu0 = sin(pi*x)\n",
    );
    let out = dir.path().join("out");
    let o = run(&[
        "solve",
        "--config",
        &cfg,
        "--refine",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(text.lines().count(), 9 * 17 + 1);
}
