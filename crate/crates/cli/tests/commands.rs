use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn jbsde(args: &[&str], config: &Path, out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_jbsde"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
        .status;
    status.code().expect("exit code")
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn solve_single_jump_model() {
    let dir = TempDir::new().unwrap();
    assert_eq!(jbsde(&["solve"], &configs().join("m1.toml"), dir.path()), 0);
    let s = summary(dir.path());
    assert!((s["picard"]["y0"].as_f64().unwrap() - 0.5).abs() < 1e-14);
    assert!((s["oracle"]["y0"].as_f64().unwrap() - 0.5).abs() < 1e-14);
    let (header, rows) = csv_rows(&dir.path().join("solution.csv"));
    assert_eq!(header, ["node", "depth", "history", "probability", "doleans", "y"]);
    assert_eq!(rows.len(), 3);
}

#[test]
fn solve_refuses_counterexample() {
    let dir = TempDir::new().unwrap();
    assert_eq!(jbsde(&["solve"], &configs().join("counterexample.toml"), dir.path()), 2);
    let s = summary(dir.path());
    assert_eq!(s["status"], "condition_violated");
    let flagged = &s["conditions"]["flagged_slots"][0];
    assert_eq!(flagged["slot"], 0);
    assert_eq!(flagged["value"].as_f64(), Some(2.0));
}

#[test]
fn zero_data_takes_one_iteration() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[model]\npreset = \"pdmp_like\"\nsteps = 3\ninitial = [0.5, 0.5]\n[terminal]\npreset = \"constant\"\nvalue = 0.0\n",
    );
    let out = dir.path().join("out");
    assert_eq!(jbsde(&["solve"], &cfg, &out), 0);
    let s = summary(&out);
    assert_eq!(s["picard"]["y0"].as_f64(), Some(0.0));
    assert_eq!(s["picard"]["iterations"], 1);
}

#[test]
fn counterexample_command_reports_blow_up() {
    let dir = TempDir::new().unwrap();
    assert_eq!(jbsde(&["counterexample"], &configs().join("counterexample.toml"), dir.path()), 2);
    let s = summary(dir.path());
    assert_eq!(s["oracle"]["outcome"], "step_singular");
    assert!(s["picard"]["final_max_abs_y_at_jump"].as_f64().unwrap() > 1e6);
    let (_, rows) = csv_rows(&dir.path().join("iterations.csv"));
    assert_eq!(rows.len(), 50);
}

#[test]
fn verify_defaults_pass() {
    let dir = TempDir::new().unwrap();
    assert_eq!(jbsde(&["verify"], &configs().join("verify.toml"), dir.path()), 0);
    let (header, rows) = csv_rows(&dir.path().join("checks.csv"));
    let pass = header.iter().position(|h| h == "pass").unwrap();
    assert!(rows.iter().all(|r| r[pass] == "true"));
    assert!(summary(dir.path())["checks"]["failed"].as_array().unwrap().is_empty());
}

#[test]
fn verify_catches_a_wrong_apriori_constant() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs().join("verify.toml")).unwrap() + "apriori_constant = 0.01\n";
    let cfg = write_config(&dir, &text);
    let out = dir.path().join("out");
    assert_eq!(jbsde(&["verify"], &cfg, &out), 2);
    assert_eq!(summary(&out)["checks"]["failed"], serde_json::json!(["apriori_estimate"]));
}

#[test]
fn verify_at_zero_beta_keeps_identity_and_skips_inequalities() {
    let dir = TempDir::new().unwrap();
    assert_eq!(jbsde(&["verify", "--beta", "0"], &configs().join("verify.toml"), dir.path()), 0);
    let (header, rows) = csv_rows(&dir.path().join("checks.csv"));
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    let row = |n: &str| rows.iter().find(|r| r[0] == n).unwrap().clone();
    assert_eq!(row("energy_identity")[col("skipped")], "false");
    assert_eq!(row("energy_identity")[col("pass")], "true");
    assert_eq!(row("integral_inequality")[col("skipped")], "true");
    assert!(!row("integral_inequality")[col("note")].is_empty());
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(jbsde(&["sweep"], &configs().join("m1.toml"), &out), 0);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("kind,value,steps,"));
}

#[test]
fn refinement_sweep_gaps_shrink() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[model]\npreset = \"discretized_intensity\"\nrate = 1.0\nsteps = 2\n\
         [generator]\npreset = \"saturating\"\nl_y = 0.5\nl_z = 1.0\nintercept = 0.2\n\
         [sweep]\nsteps = [2, 4, 8, 16]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(jbsde(&["sweep"], &cfg, &out), 0);
    let (header, rows) = csv_rows(&out.join("sweep.csv"));
    let y0 = header.iter().position(|h| h == "y0").unwrap();
    let ys: Vec<f64> = rows.iter().map(|r| r[y0].parse().unwrap()).collect();
    let gaps: Vec<f64> = ys.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{ys:?}");
}

#[test]
fn below_threshold_beta_is_recorded_not_rejected() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(jbsde(&["sweep"], &configs().join("sweep.toml"), &out), 0);
    let (header, rows) = csv_rows(&out.join("sweep.csv"));
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    let low = rows.iter().find(|r| r[col("kind")] == "beta_multiplier" && r[col("value")] == "0.25").unwrap();
    let beta: f64 = low[col("beta")].parse().unwrap();
    let beta_min: f64 = low[col("beta_min")].parse().unwrap();
    assert!(beta < beta_min);
}

#[test]
fn config_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(jbsde(&["solve"], &dir.path().join("missing.toml"), &out), 1);
    let cfg = write_config(&dir, "[model]\npreset = \"no_such_model\"\n");
    assert_eq!(jbsde(&["solve"], &cfg, &out), 1);
    assert_eq!(jbsde(&["solve", "--delta", "1.5"], &configs().join("m1.toml"), &out), 1);
    assert_eq!(jbsde(&["solve", "--beta", "soon"], &configs().join("m1.toml"), &out), 1);
}

#[test]
fn command_line_overrides_the_file() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        jbsde(&["solve", "--seed", "99", "--beta", "3.5", "--delta", "0.25"], &configs().join("m1.toml"), dir.path()),
        0
    );
    let s = summary(dir.path());
    assert_eq!(s["seed"], 99);
    assert_eq!(s["conditions"]["beta"].as_f64(), Some(3.5));
    assert_eq!(s["conditions"]["delta"].as_f64(), Some(0.25));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    for cmd in ["solve", "verify", "sweep", "counterexample"] {
        let (a, b) = (dir.path().join(format!("{cmd}-a")), dir.path().join(format!("{cmd}-b")));
        let cfg = configs().join("verify.toml");
        jbsde(&[cmd], &cfg, &a);
        jbsde(&[cmd], &cfg, &b);
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{cmd}: {name:?}");
        }
    }
}
