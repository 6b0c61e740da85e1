use std::path::Path;
use std::process::Command;

use aird::cli::ExperimentConfig;

fn aird(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_aird")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    aird(args).status.code().expect("exit code")
}

const SMALL: [&str; 10] = ["--n", "24", "--d", "6", "--clusters", "2", "--k", "32", "--seed", "3"];

fn with<'a>(cmd: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd, "--out", out];
    v.extend_from_slice(&SMALL);
    v.extend_from_slice(extra);
    v
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn gen_data_writes_a_loadable_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(code(&with("gen-data", out, &[])), 0);
    let ds = aird::dataset::load_dataset(tmp.path().join("dataset.jsonl")).unwrap();
    assert_eq!((ds.n(), ds.d(), ds.clusters()), (24, 6, 2));
    let stats: serde_json::Value = serde_json::from_str(&read(tmp.path(), "stats.json")).unwrap();
    assert_eq!(stats["n"], 24);
}

#[test]
fn identical_invocations_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        assert_eq!(code(&with("train", out, &["--steps", "60", "--log-every", "20", "--ntk-every", "20"])), 0);
    }
    for name in ["metrics.csv", "checkpoint.json", "summary.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    // config.json records the output directory, which differs by construction
    let mut ca = ExperimentConfig::load(a.path().join("config.json")).unwrap();
    let cb = ExperimentConfig::load(b.path().join("config.json")).unwrap();
    ca.output_dir = cb.output_dir.clone();
    assert_eq!(ca, cb);
    assert!(a.path().join("timing.json").exists());
}

#[test]
fn zero_steps_gives_a_header_only_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(code(&with("train", out, &["--steps", "0"])), 0);
    assert_eq!(read(tmp.path(), "metrics.csv"), format!("{}\n", aird::selfdistill::METRICS_HEADER));
}

#[test]
fn plain_mode_trains() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(code(&with("train", out, &["--mode", "plain", "--steps", "30", "--eta", "0.05"])), 0);
    let csv = read(tmp.path(), "metrics.csv");
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("1")));
}

#[test]
fn analyze_reports_six_noise_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(code(&with("train", out, &["--steps", "40", "--log-every", "10", "--ntk-every", "10"])), 0);
    let ckpt = tmp.path().join("checkpoint.json");
    let metrics = tmp.path().join("metrics.csv");
    let args = with(
        "analyze",
        out,
        &["--checkpoint", ckpt.to_str().unwrap(), "--metrics", metrics.to_str().unwrap()],
    );
    assert_eq!(code(&args), 0);
    let csv = read(tmp.path(), "noise_ratios.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step_or_level,value");
    assert_eq!(lines.len(), 7);
    let gain = read(tmp.path(), "information_gain.csv");
    assert_eq!(gain.lines().count(), 1 + 5);
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "analysis.json")).unwrap();
    assert_eq!(report["eigenvalues"].as_array().unwrap().len(), 24);
}

#[test]
fn check_theorem_prints_the_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let res = aird(&with("check-theorem", out, &["--cov-samples", "2000"]));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("T1"));
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "theorem.json")).unwrap();
    assert!(report["t1"].as_u64().unwrap() >= 1);
}

#[test]
fn sweep_writes_one_row_per_run_and_stop() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let args = with(
        "sweep",
        out,
        &["--steps", "40", "--stop-epochs", "0,10,40", "--student-steps", "20", "--runs", "2", "--eta", "0.05"],
    );
    assert_eq!(code(&args), 0);
    let csv = read(tmp.path(), "sweep.csv");
    assert_eq!(csv.lines().next(), Some("run,stop_epoch,teacher_err_true,student_err_true"));
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn corruption_at_one_half_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = aird(&with("gen-data", tmp.path().to_str().unwrap(), &["--rho", "0.5"]));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("1/2"));
}

#[test]
fn bad_flags_and_configs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&["train", "--no-such-flag"]), 2);
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"seed": 1, "surprise": true}"#).unwrap();
    assert_eq!(code(&["train", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]), 2);
    assert_eq!(code(&with("train", tmp.path().to_str().unwrap(), &["--k", "33"])), 2);
}

#[test]
fn degenerate_geometry_exits_with_three() {
    // Six centers in three dimensions span at most a rank-3 Gram under the identity map.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let args = [
        "check-theorem", "--out", out, "--n", "30", "--d", "3", "--clusters", "6", "--activation", "identity",
        "--cov-samples", "100", "--epsilon", "0.05",
    ];
    assert_eq!(code(&args), 3);
}

#[test]
fn written_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(code(&with("gen-data", out, &["--rho", "0.2"])), 0);
    let path = tmp.path().join("config.json");
    let loaded = ExperimentConfig::load(&path).unwrap();
    let again: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&loaded).unwrap()).unwrap();
    assert_eq!(loaded, again);

    let second = tempfile::tempdir().unwrap();
    let args = ["gen-data", "--config", path.to_str().unwrap(), "--out", second.path().to_str().unwrap()];
    assert_eq!(code(&args), 0);
    assert_eq!(read(tmp.path(), "dataset.jsonl"), read(second.path(), "dataset.jsonl"));
}
