use std::path::Path;
use std::process::{Command, Output};

use airdelay_core::model::{load_checkpoint, save_checkpoint};
use airdelay_core::tensor::Tensor;
use tempfile::TempDir;

fn airdelay(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airdelay"))
        .args(args)
        .current_dir(cwd)
        .env_remove("AIRDELAY_CONFIG")
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) {
    let out = airdelay(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).to_string();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {text:?}");
    lines[0].to_string()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn manifest(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_slice(&read(p)).unwrap()
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        ok(&["synth", "--airports", "3", "--days", "10", "--seed", "7", "--out", out], dir.path());
    }
    for f in ["flights.csv", "airport_qh.csv", "weather.csv", "oracle.csv"] {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)), "{f}");
    }
    let (a, b) = (manifest(dir.path().join("a/manifest-synth.json")), manifest(dir.path().join("b/manifest-synth.json")));
    assert_eq!(a["config"], b["config"]);
    assert_eq!(a["seed"], 7);
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("run.toml"), "[synth]\nn_days = 2\nseed = 3\n").unwrap();
    ok(&["--config", "run.toml", "synth", "--days", "1", "--out", "o"], dir.path());
    let m = manifest(dir.path().join("o/manifest-synth.json"));
    assert_eq!(m["config"]["n_days"], 1);
    assert_eq!(m["config"]["seed"], 3);
    assert_eq!(m["config"]["n_airports"], 3);

    // the environment variable names the file when --config is absent
    let out = Command::new(env!("CARGO_BIN_EXE_airdelay"))
        .args(["synth", "--out", "e"])
        .current_dir(dir.path())
        .env("AIRDELAY_CONFIG", "run.toml")
        .output()
        .unwrap();
    assert!(out.status.success());
    let m = manifest(dir.path().join("e/manifest-synth.json"));
    assert_eq!(m["config"]["n_days"], 2);
    assert_eq!(m["config_file"], "run.toml");
}

#[test]
fn evaluate_of_exact_median_forecaster_is_all_zero() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("calm.toml"),
        "[synth]\nnoise_minutes = 0.0\nweather_event_rate = 0.0\ncapacity_arr = 1000.0\ncapacity_dep = 1000.0\n",
    )
    .unwrap();
    ok(&["--config", "calm.toml", "synth", "--airports", "2", "--days", "8", "--out", "data"], d);
    ok(&["ingest", "--data", "data", "--out", "master"], d);
    ok(
        &[
            "train", "--master", "master/master.csv", "--out", "model", "--epochs", "1", "--hidden-size", "8",
            "--stride", "16", "--validation-days", "2", "--test-days", "2",
        ],
        d,
    );
    // zero output head and centre: every quantile forecast is exactly 0,
    // which is the delay of an uncongested day
    let ckpt = d.join("model/model.ckpt");
    let (mut config, mut params) = load_checkpoint(&ckpt).unwrap();
    for name in ["output.w", "output.b"] {
        let shape = params.get(name).unwrap().shape().to_vec();
        params.insert(name, Tensor::zeros(&shape));
    }
    config.target_center = 0.0;
    save_checkpoint(&ckpt, &config, &params).unwrap();

    ok(&["evaluate", "--master", "master/master.csv", "--model", "model", "--out", "eval"], d);
    let text = String::from_utf8(read(d.join("eval/mae.csv"))).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("scope,key,mae"));
    let mut n = 0;
    for row in rows {
        assert_eq!(row.rsplit(',').next(), Some("0"), "{row}");
        n += 1;
    }
    assert_eq!(n, 1 + 2 + 16);
}

#[test]
fn pipeline_outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["synth", "--airports", "1", "--days", "8", "--seed", "4", "--out", "data"], d);
    ok(&["ingest", "--data", "data", "--out", "master"], d);
    for run in ["r1", "r2"] {
        let model = format!("{run}/model");
        ok(
            &[
                "train", "--master", "master/master.csv", "--out", &model, "--epochs", "1", "--hidden-size", "8",
                "--stride", "16", "--validation-days", "2", "--test-days", "2",
            ],
            d,
        );
        ok(&["predict", "--master", "master/master.csv", "--model", &model, "--out", &format!("{run}/pred")], d);
        ok(&["interpret", "--master", "master/master.csv", "--model", &model, "--out", &format!("{run}/interp")], d);
    }
    for f in [
        "model/model.ckpt",
        "model/metrics.csv",
        "model/normalizer.json",
        "pred/forecasts.csv",
        "interp/attention_profile.csv",
        "interp/importance_encoder.csv",
    ] {
        assert_eq!(read(d.join("r1").join(f)), read(d.join("r2").join(f)), "{f}");
    }
    let header = String::from_utf8(read(d.join("r1/pred/forecasts.csv"))).unwrap();
    assert!(header.starts_with("airport,origin_quarter,horizon,q10,q50,q90\n"));
}

#[test]
fn missing_input_is_reported_as_one_coded_line() {
    let dir = TempDir::new().unwrap();
    let out = airdelay(&["ingest", "--data", "nowhere", "--out", "m"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).starts_with("error[E_INPUT]: input file nowhere/flights.csv not found"));
}

#[test]
fn schema_mismatch_exits_with_schema_code() {
    let dir = TempDir::new().unwrap();
    ok(&["synth", "--airports", "1", "--days", "1", "--out", "data"], dir.path());
    std::fs::write(dir.path().join("data/flights.csv"), "flight_id,origin\nAA1,ATL\n").unwrap();
    let out = airdelay(&["ingest", "--data", "data", "--out", "m"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let line = stderr_line(&out);
    assert!(line.starts_with("error[E_SCHEMA]: "), "{line}");
    assert!(line.contains("missing required column"), "{line}");
}

#[test]
fn config_conflicts_exit_with_config_code() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(&["synth", "--airports", "1", "--days", "2", "--out", "data"], d);
    ok(&["ingest", "--data", "data", "--out", "master"], d);
    let out = airdelay(
        &["train", "--master", "master/master.csv", "--out", "m", "--hidden-size", "10", "--heads", "4"],
        d,
    );
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr_line(&out).starts_with("error[E_CONFIG]: "));

    std::fs::write(d.join("bad.toml"), "[train]\nepochs = 3\n").unwrap();
    let out = airdelay(&["--config", "bad.toml", "synth", "--out", "x"], d);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr_line(&out).starts_with("error[E_CONFIG]: config file bad.toml"));

    let out = airdelay(&["synth", "--airports", "31", "--out", "x"], d);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn usage_errors_are_coded() {
    let dir = TempDir::new().unwrap();
    let out = airdelay(&["synth", "--days", "two", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error[E_USAGE]: "));
    assert!(!dir.path().join("x").exists());
}
