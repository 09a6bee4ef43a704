use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn forgesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forgesim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const SMALL: &[&str] =
    &["run", "--model", "tfim1d", "--n-total", "4", "--layers", "2", "--epochs", "30", "--phase1-epochs", "5"];

fn small_run(dir: &Path, extra: &[&str]) -> Output {
    let mut args = SMALL.to_vec();
    args.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    args.extend_from_slice(extra);
    forgesim(&args)
}

#[test]
fn validate_prints_report() {
    let o = forgesim(&["validate", "--model", "tv2x2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("cross terms: 6"), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(forgesim(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "model = tfim1d\n# note\nlr_omega = fast\n").unwrap();
    let o = forgesim(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = forgesim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn oversized_model_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = forgesim(&["run", "--n-total", "14", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn bad_thread_count_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_forgesim"))
        .args(["validate"])
        .env("FORGESIM_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_runs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(small_run(a.path(), &["--seed", "3"]).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_forgesim"))
        .args(SMALL)
        .args(["--seed", "3", "--out", b.path().to_str().unwrap()])
        .env("FORGESIM_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    for f in ["trace.csv", "correlators.csv", "summary.json", "checkpoint.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn outputs_are_versioned_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_run(dir.path(), &["--checkpoint-every", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("# format_version=1"));
    assert_eq!(lines.next(), Some("epoch,energy,running_mean,grad_norm_theta,grad_norm_omega"));
    assert_eq!(lines.count(), 30);
    let timing = fs::read_to_string(dir.path().join("timing.csv")).unwrap();
    assert!(timing.lines().nth(1) == Some("epoch,wall_ms"));

    let corr = fs::read_to_string(dir.path().join("correlators.csv")).unwrap();
    assert_eq!(corr.lines().nth(1), Some("i,j,forged,exact,abs_err"));
    assert_eq!(corr.lines().count(), 2 + 6);

    let s = summary(dir.path());
    let (e, ed) = (s["final_energy"].as_f64().unwrap(), s["ed_energy"].as_f64().unwrap());
    assert_eq!(s["relative_error"].as_f64().unwrap(), (e - ed).abs() / ed.abs());
    assert_eq!(s["config"]["epochs"], 30);
    assert_eq!(s["config"]["optimizer"], "adam");
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);

    for f in ["checkpoint.json", "checkpoint_000010.json", "checkpoint_000020.json", "checkpoint_000030.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let ckpt: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("checkpoint.json")).unwrap()).unwrap();
    assert_eq!(ckpt["config_hash"], s["config_hash"]);
    assert_eq!(ckpt["epoch"], 30);
}

#[test]
fn eval_reproduces_correlator_entry() {
    let dir = tempfile::tempdir().unwrap();
    assert!(small_run(dir.path(), &[]).status.success());
    let ckpt = dir.path().join("checkpoint.json");
    let corr = fs::read_to_string(dir.path().join("correlators.csv")).unwrap();
    let row = corr.lines().find(|l| l.starts_with("0,2,")).unwrap();
    let forged = row.split(',').nth(2).unwrap();

    let o = forgesim(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--observable", "Z0Z2", "--observable", "ZIZI"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains(&format!("Z0Z2 {forged}")), "{out} vs {row}");
    assert!(out.contains(&format!("ZIZI {forged}")));

    let o = forgesim(&["eval", "--checkpoint", ckpt.to_str().unwrap()]);
    let energy: f64 = stdout(&o).trim().strip_prefix("energy ").unwrap().parse().unwrap();
    assert_eq!(energy, summary(dir.path())["final_energy"].as_f64().unwrap());

    let o = forgesim(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--observable", "Q7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resume_continues_epoch_count() {
    let dir = tempfile::tempdir().unwrap();
    assert!(small_run(dir.path(), &["--checkpoint-every", "10"]).status.success());
    let resumed = tempfile::tempdir().unwrap();
    let from = dir.path().join("checkpoint_000010.json");
    let o = small_run(resumed.path(), &["--resume", from.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(resumed.path().join("trace.csv")).unwrap();
    assert!(trace.lines().nth(2).unwrap().starts_with("10,"));
    assert_eq!(summary(resumed.path())["start_epoch"], 10);

    let o = forgesim(&["run", "--model", "tv2x2", "--resume", from.to_str().unwrap(), "--out", resumed.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sampled_run_writes_running_mean() {
    let dir = tempfile::tempdir().unwrap();
    let o = forgesim(&[
        "run", "--model", "tv2x2", "--mode", "sampled", "--n-sigma", "64", "--shots", "16", "--layers", "1",
        "--epochs", "12", "--phase1-epochs", "2", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        trace.lines().skip(2).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 12);
    let mean = rows.iter().map(|r| r[1]).sum::<f64>() / 12.0;
    assert!((rows[11][2] - mean).abs() < 1e-12);
    assert_eq!(summary(dir.path())["config"]["mode"], "sampled");
}

#[test]
fn ed_reports_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = forgesim(&["ed", "--model", "tfim2d", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let energy: f64 = out.lines().next().unwrap().strip_prefix("energy ").unwrap().parse().unwrap();
    assert!(energy < -13.0 && energy > -14.0, "{energy}");
    let csv = fs::read_to_string(dir.path().join("correlators.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 28);
    assert!(dir.path().join("ed.json").exists());
}

#[test]
fn default_tfim_run_reaches_ground_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = forgesim(&[
        "run", "--model", "tfim1d", "--n-total", "8", "--mode", "exact", "--seed", "7", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rel = summary(dir.path())["relative_error"].as_f64().unwrap();
    assert!(rel < 0.01, "relative error {rel}");
}
