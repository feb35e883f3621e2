use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oco-queue"));
    c.env_remove("OCO_QUEUE_OUT");
    c
}

fn run_with(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    bin()
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_RUN: &str = "[experiment]\nhorizon = 200\n";

#[test]
fn run_writes_four_series_and_a_summary() {
    let dir = TempDir::new().unwrap();
    let o = run_with(dir.path(), SMALL_RUN, &["run"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for p in ["proposed", "hindsight", "react", "lowpower"] {
        let text = fs::read_to_string(out.join(format!("{p}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("slot,cost_running_avg,backlog_running_avg"));
        assert_eq!(lines.count(), 200);
    }
    let s = json(&out.join("summary.json"));
    assert_eq!(s["command"], "run");
    assert_eq!(s["result"]["policies"].as_array().unwrap().len(), 4);
}

#[test]
fn zero_arrivals_leave_no_backlog() {
    let dir = TempDir::new().unwrap();
    let o = run_with(
        dir.path(),
        "[experiment]\nhorizon = 100\narrival_mean = 0.0\n",
        &["run", "--policy", "proposed,react"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for p in ["proposed", "react"] {
        let text = fs::read_to_string(dir.path().join("out").join(format!("{p}.csv"))).unwrap();
        for line in text.lines().skip(1) {
            let backlog: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert_eq!(backlog, 0.0, "{p}: {line}");
        }
    }
    assert!(!dir.path().join("out/hindsight.csv").exists());
}

#[test]
fn same_seed_gives_identical_output() {
    let strip = |p: &Path| -> String {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("\"generated_at\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&run_with(d.path(), SMALL_RUN, &["run", "--seed", "9"])), 0);
    }
    assert_eq!(strip(&a.path().join("out/summary.json")), strip(&b.path().join("out/summary.json")));
    assert_eq!(
        fs::read(a.path().join("out/proposed.csv")).unwrap(),
        fs::read(b.path().join("out/proposed.csv")).unwrap()
    );
    let c = TempDir::new().unwrap();
    assert_eq!(code(&run_with(c.path(), SMALL_RUN, &["run", "--seed", "10"])), 0);
    assert_ne!(strip(&a.path().join("out/summary.json")), strip(&c.path().join("out/summary.json")));
}

#[test]
fn json_reports_lead_with_a_timestamp() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run_with(dir.path(), SMALL_RUN, &["run"])), 0);
    let text = fs::read_to_string(dir.path().join("out/summary.json")).unwrap();
    let second = text.lines().nth(1).unwrap();
    assert!(second.trim_start().starts_with("\"generated_at\""), "{second}");
    let s: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(s["seed"], 1);
    assert_eq!(s["config"]["experiment"]["horizon"], 200);
}

const SMALL_VERIFY: &str = "\
[verify]
seeds = 3
monte_carlo_seeds = 30
slater_rounds = 3
instances = [{ name = \"linear-1d\", horizon = 300 }]
";

#[test]
fn verify_passes_on_a_stock_instance() {
    let dir = TempDir::new().unwrap();
    let o = run_with(dir.path(), SMALL_VERIFY, &["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&dir.path().join("out/verify.json"));
    let inst = &r["result"]["instances"][0];
    assert_eq!(inst["instance"], "linear-1d");
    assert_eq!(inst["deterministic"].as_array().unwrap().len(), 7);
    let stat = inst["statistical"].as_array().unwrap();
    assert_eq!(stat.len(), 3 + 2);
    for s in stat {
        assert!(s["standard_error"].as_f64().unwrap() >= 0.0);
        assert!(s["passed"].as_bool().unwrap());
    }
}

#[test]
fn verify_rejects_an_understated_bound() {
    let dir = TempDir::new().unwrap();
    let cfg = SMALL_VERIFY.replace("horizon = 300", "horizon = 300, d2 = 0.5");
    let o = run_with(dir.path(), &cfg, &["verify"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn verify_rejects_too_few_monte_carlo_seeds() {
    let dir = TempDir::new().unwrap();
    let cfg = SMALL_VERIFY.replace("monte_carlo_seeds = 30", "monte_carlo_seeds = 10");
    assert_eq!(code(&run_with(dir.path(), &cfg, &["verify"])), 1);
}

#[test]
fn convergence_hook_recovers_half_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = "[convergence]\ngrid = [100, 1000, 10000, 100000]\ntest_metric = \"sqrt-t\"\n";
    let o = run_with(dir.path(), cfg, &["convergence"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("out/convergence.json"));
    for key in ["regret_slope", "violation_slope"] {
        let s = r["result"][key].as_f64().unwrap();
        assert!((s - 0.5).abs() < 1e-12, "{key} = {s}");
    }
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn convergence_runs_on_a_small_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = "[convergence]\ngrid = [50, 100, 200]\nseeds = 2\nmax_slope = 2.0\n";
    let o = run_with(dir.path(), cfg, &["convergence"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("out/convergence.json"));
    assert_eq!(r["result"]["points"].as_array().unwrap().len(), 3);
}

#[test]
fn convergence_rejects_a_single_horizon() {
    let dir = TempDir::new().unwrap();
    let o = run_with(dir.path(), "[convergence]\ngrid = [1000]\n", &["convergence"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unknown_config_keys_are_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run_with(dir.path(), "[experiment]\nhorizn = 5\n", &["run"])), 1);
}

#[test]
fn gen_trace_writes_prices() {
    let dir = TempDir::new().unwrap();
    let o = run_with(dir.path(), "[gen_trace]\nzones = 3\n", &["gen-trace", "--horizon", "48"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("out/prices.csv")).unwrap();
    assert!(text.lines().count() >= 48);
    assert!(dir.path().join("out/trace.json").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("env-out");
    let o = bin()
        .args(["gen-trace", "--horizon", "24"])
        .env("OCO_QUEUE_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("prices.csv").exists());
}
