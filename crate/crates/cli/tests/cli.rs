use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relay_sentinel::harness::{preset, Scenario};
use relay_sentinel::AttackSpec;
use relay_sentinel_cli::files::ScenarioFile;
use relay_sentinel_cli::traces::TraceFile;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_relay-sentinel"));
    c.env_remove("RELAY_SENTINEL_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, s: &Scenario) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, ScenarioFile::from_scenario(s).canonical_json()).unwrap();
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn certify_counter_example_exits_manipulable() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(dir.path(), "ce.json", &preset("fig5b").unwrap());
    let out = run(&["certify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["manipulable"], true);
    assert!((v["lp_value"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    assert!(v["witness"].is_array() && v["induced_attack"].is_array());
}

#[test]
fn certify_motivating_channel_is_clean() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(dir.path(), "m.json", &preset("fig3b").unwrap());
    let out = run(&["certify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["manipulable"], false);
    assert_eq!(v["method"], "both");
    assert_eq!(v["dpv_found"], false);
}

#[test]
fn certify_names_the_bad_column() {
    let dir = TempDir::new().unwrap();
    let p = write_scenario(dir.path(), "m.json", &preset("fig3b").unwrap());
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    v["bc_marginal"][0][2] = Value::from(0.5);
    fs::write(&p, v.to_string()).unwrap();
    let out = run(&["certify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bc_marginal[.][2]"), "{err}");
}

#[test]
fn simulate_faithful_single_trial() {
    let dir = TempDir::new().unwrap();
    let s = Scenario {
        attack: AttackSpec::Identity,
        n: 500,
        trials: 1,
        ..preset("fig3a").unwrap()
    };
    let p = write_scenario(dir.path(), "s.json", &s);
    let out_csv = dir.path().join("r.csv");
    let out = run(&["simulate", p.to_str().unwrap(), "-o", out_csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_csv).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "trial,D,truth_stat,feasible,seed");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[2], "0");
    assert!(text.contains("# scenario_sha256="));
    assert!(text.contains("# rng=ChaCha20"));
}

#[test]
fn simulate_is_byte_identical_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let out = |name: &str, seed: Option<&str>| {
        let path = dir.path().join(name);
        let mut c = bin();
        c.args(["simulate", "--preset", "fig3a", "--trials", "20", "-o", path.to_str().unwrap()]);
        if let Some(s) = seed {
            c.env("RELAY_SENTINEL_SEED", s);
        }
        assert!(c.status().unwrap().success());
        fs::read(path).unwrap()
    };
    assert_eq!(out("a.csv", None), out("b.csv", None));
    assert_ne!(out("a.csv", None), out("c.csv", Some("99")));
    assert_eq!(out("c.csv", Some("99")), out("d.csv", Some("99")));
}

#[test]
fn simulate_preset_default_trial_count() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.csv");
    let out = run(&["simulate", "--preset", "fig3b", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(data_lines(&fs::read_to_string(path).unwrap()).len(), 301);
}

#[test]
fn detect_matches_library_on_emitted_trace() {
    let dir = TempDir::new().unwrap();
    let s = preset("fig3c").unwrap().with_trials(1);
    let ch = write_scenario(dir.path(), "c.json", &s);
    let traces = dir.path().join("traces");
    let r = dir.path().join("r.csv");
    let out = run(&[
        "simulate",
        ch.to_str().unwrap(),
        "--emit-trace",
        traces.to_str().unwrap(),
        "-o",
        r.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let node = traces.join("trial_0000_node.csv");
    assert!(traces.join("trial_0000_relay.csv").exists());

    let out = run(&["detect", ch.to_str().unwrap(), node.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);

    let t = TraceFile::read(fs::File::open(&node).unwrap()).unwrap();
    let lib = relay_sentinel::detector::run_detection(&s.detector_config().unwrap(), &t.first, &t.second)
        .unwrap();
    assert_eq!(v["statistic"].as_f64().unwrap(), lib.statistic);
    assert_eq!(v["verdict"], lib.verdict.as_str());
    assert_eq!(v["verdict"], "malicious");

    let csv = fs::read_to_string(r).unwrap();
    let d: f64 = data_lines(&csv)[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(d, lib.statistic);
}

#[test]
fn detect_rejects_an_empty_trace() {
    let dir = TempDir::new().unwrap();
    let ch = write_scenario(dir.path(), "c.json", &preset("fig3b").unwrap());
    let t = dir.path().join("t.csv");
    fs::write(&t, "n,x1,y1\n").unwrap();
    let out = run(&["detect", ch.to_str().unwrap(), t.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reproduce_writes_one_cdf_per_curve() {
    let dir = TempDir::new().unwrap();
    for (fig, curves) in [("fig3c", 4), ("fig5b", 2)] {
        let out = run(&["reproduce", fig, "-o", dir.path().to_str().unwrap(), "--trials", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        for i in 1..=curves {
            let text = fs::read_to_string(dir.path().join(format!("{fig}_phi{i}.csv"))).unwrap();
            let lines = data_lines(&text);
            assert_eq!(lines[0], "value,cum_fraction");
            assert_eq!(lines.len(), 4);
            assert!(lines[3].ends_with(",1"));
        }
        let summary = fs::read_to_string(dir.path().join(format!("{fig}_error_rates.csv"))).unwrap();
        assert_eq!(data_lines(&summary).len(), curves);
        assert!(!dir.path().join(format!("{fig}_phi{}.csv", curves + 1)).exists());
    }
}

#[test]
fn reproduce_unknown_figure_fails() {
    let dir = TempDir::new().unwrap();
    let out = run(&["reproduce", "fig9", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
