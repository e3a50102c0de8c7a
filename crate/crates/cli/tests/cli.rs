use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ionkin(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ionkin"));
    cmd.args(args).env_remove("IONKIN_OUT").env("RUST_LOG", "error");
    if let Some(dir) = out_env {
        cmd.env("IONKIN_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ionkin(
        &["run", "--example", "2", "--method", "simpson", "--nx", "10", "--ny", "10", "--nt", "300", "--out", out, "--emit-slices"],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("p error"));
    for name in ["ex2_simpson_p_trace.csv", "ex2_simpson_u_slice.csv", "ex2_simpson_summary.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn environment_sets_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionkin(
        &["run", "--example", "1", "--method", "trapezoid", "--nx", "8", "--ny", "8", "--nt", "300"],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("ex1_trapezoid_p_trace.csv").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    let out = dir.path().join("results");
    fs::write(
        &config,
        format!(
            "# small run\nexample = 1\nmethod = lobatto\nnx = 6\nny = 6\nnt = 5\noutput_dir = {}\n",
            out.display()
        ),
    )
    .unwrap();
    // nt = 5 is unstable; the flag override makes it admissible.
    let refused = ionkin(&["run", "--config", config.to_str().unwrap()], None);
    assert_eq!(refused.status.code(), Some(3));
    let o = ionkin(&["run", "--config", config.to_str().unwrap(), "--nt", "2000"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("ex1_lobatto_summary.json").exists());
}

#[test]
fn invalid_specs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let odd = ionkin(&["run", "--example", "1", "--method", "simpson", "--nx", "25", "--out", out], None);
    assert_eq!(odd.status.code(), Some(2));
    let unknown = ionkin(&["run", "--example", "3", "--method", "simpson", "--out", out], None);
    assert_eq!(unknown.status.code(), Some(2));
    let missing = ionkin(&["run", "--method", "simpson", "--out", out], None);
    assert_eq!(missing.status.code(), Some(2));
    let trunc = ionkin(&["run", "--example", "1", "--method", "trapezoid", "--trunc-m", "3", "--out", out], None);
    assert_eq!(trunc.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    let o = ionkin(&["run", "--example", "2", "--method", "trapezoid", "--out", file.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn stability_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("marginal.conf");
    fs::write(&spec, "example = 1\nmethod = simpson\nnt = 2700\n").unwrap();
    let ok = ionkin(&["stability", spec.to_str().unwrap()], None);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("ADMITTED"));
    let bad = ionkin(&["stability", spec.to_str().unwrap(), "--nt", "2000"], None);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("REFUSED"));
    let spectral = ionkin(&["stability", "--example", "2", "--method", "spectral"], None);
    assert_eq!(spectral.status.code(), Some(2));
}

#[test]
fn check_prints_audit() {
    let o = ionkin(&["check", "2", "--trunc-m", "2", "--trunc-k", "3"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("compatibility audit for example 2"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn spectral_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = ionkin(
        &[
            "run", "--example", "2", "--method", "spectral", "--trunc-m", "3", "--trunc-k", "3", "--nt", "40",
            "--horizon", "0.1", "--nx", "6", "--ny", "6", "--out", dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout(&o).contains("stability margin"));
}
