use std::path::Path;
use std::process::{Command, Output};

fn wpcurv(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpcurv")).arg("--out").arg(out).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn surrogate_subcommand_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpcurv(dir.path(), &["--seeds", "3", "surrogate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS"));
    assert!(dir.path().join("surrogate.json").exists());
}

#[test]
fn rankone_subcommand_reports_the_failed_null_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpcurv(dir.path(), &["rankone"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn explain_rejects_empty_and_missing_reports() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"config_hash":"x","entries":[],"warnings":[]}"#).unwrap();
    assert_eq!(wpcurv(dir.path(), &["explain", "--report", empty.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(wpcurv(dir.path(), &["explain"]).status.code(), Some(2));
}

#[test]
fn bad_configuration_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "genus = 3\n").unwrap();
    assert_eq!(wpcurv(dir.path(), &["--config", cfg.to_str().unwrap(), "run"]).status.code(), Some(2));
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(wpcurv(dir.path(), &["--config", cfg.to_str().unwrap(), "run"]).status.code(), Some(2));
    assert_eq!(wpcurv(dir.path(), &["--stage", "nowhere", "run"]).status.code(), Some(2));
    assert_eq!(wpcurv(dir.path(), &["--tau-rel", "-1", "run"]).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpcurv(dir.path(), &["--word-length", "4", "--mesh-level", "1", "spectrum"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("qdiff"));
}

#[test]
fn small_run_is_reproducible_and_explainable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--mesh-level", "2", "--stage", "checks", "run"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = wpcurv(&a, &args);
    assert_eq!(first.status.code(), Some(0), "{}", stdout(&first));
    assert_eq!(wpcurv(&b, &args).status.code(), Some(0));
    let report = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(report, std::fs::read(b.join("report.json")).unwrap());
    assert_eq!(std::fs::read(a.join("green.bin")).unwrap(), std::fs::read(b.join("green.bin")).unwrap());

    let explained = wpcurv(&a, &["explain"]);
    assert_eq!(explained.status.code(), Some(0));
    let text = stdout(&explained);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9);
    assert!(text.lines().any(|l| l.starts_with("SKIP Lemma5.1")));
}

#[test]
fn spectrum_subcommand_prints_fifteen_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpcurv(dir.path(), &["--mesh-level", "1", "spectrum"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 16);
    assert!(text.lines().last().unwrap().starts_with("PASS"));
}
