//! Browser demo: a 1-D run with live queue, a policy comparison on a small
//! data center, and projection onto the stock feasible sets.
//!
//! Each export returns a JSON string. The `*_json` functions hold the logic
//! and are plain Rust, so they are tested natively.

use std::sync::Arc;

use oco_queue::analysis::cumulative_violation;
use oco_queue::datacenter::{run_experiment, ArrivalProcess, ExperimentConfig, Policy};
use oco_queue::instances::{IdentityLoss, PerturbedHalfLine};
use oco_queue::solver;
use oco_queue::{build_problem, AlgorithmParams, FeasibleSet, ProblemBounds};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Longest horizon the page may request.
pub const MAX_HORIZON: usize = 20_000;
/// Points kept per plotted series.
const PLOT_POINTS: usize = 400;

#[derive(Debug, Serialize)]
pub struct Simulation {
    pub rounds: Vec<usize>,
    pub decision: Vec<f64>,
    pub queue: Vec<f64>,
    /// `(1/t) sum_{s <= t} g(x(s); omega(s))`
    pub average_violation: Vec<f64>,
    pub final_violation: f64,
    pub average_decision: f64,
}

fn stride(len: usize) -> usize {
    len.div_ceil(PLOT_POINTS).max(1)
}

fn check_horizon(horizon: usize) -> Result<(), String> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(format!("horizon must lie in 1..={MAX_HORIZON}"));
    }
    Ok(())
}

/// `f^t(x) = x` on `[0, 1]` with `g(x; omega) = offset - x + omega`,
/// `omega ~ U[-spread, spread]`.
pub fn simulate_1d_json(v: f64, alpha: f64, horizon: usize, offset: f64, spread: f64, seed: u64) -> Result<String, String> {
    check_horizon(horizon)?;
    if !(0.0..1.0).contains(&offset) || !(spread >= 0.0 && spread <= 1.0) {
        return Err("offset must lie in [0, 1) and spread in [0, 1]".into());
    }
    let cons = PerturbedHalfLine { offset, spread };
    let bounds = ProblemBounds::new(1.0, 1.0, offset.max(1.0 - offset) + spread, 1.0, Some(1.0 - offset))
        .map_err(|e| e.to_string())?;
    let problem = build_problem(
        FeasibleSet::cube(1, 0.0, 1.0).map_err(|e| e.to_string())?,
        Arc::new(IdentityLoss),
        Arc::new(cons),
        Some(bounds),
    )
    .map_err(|e| e.to_string())?;
    let params = AlgorithmParams::new(v, alpha, horizon).map_err(|e| e.to_string())?;
    let traj = solver::run(&problem, &params, seed).map_err(|e| e.to_string())?;
    let step = stride(horizon);
    let mut out = Simulation {
        rounds: Vec::new(),
        decision: Vec::new(),
        queue: Vec::new(),
        average_violation: Vec::new(),
        final_violation: cumulative_violation(&traj)[0],
        average_decision: traj.losses().iter().sum::<f64>() / horizon as f64,
    };
    let mut running = 0.0;
    for t in 1..=horizon {
        running += traj.constraint_values(t)[0];
        if t % step == 0 || t == horizon {
            out.rounds.push(t);
            out.decision.push(traj.decision(t)[0]);
            out.queue.push(traj.queue(t)[0]);
            out.average_violation.push(running / t as f64);
        }
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct PolicySeries {
    pub policy: String,
    pub total_cost: f64,
    pub cost_running_avg: Vec<f64>,
    pub backlog_running_avg: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub slots: Vec<usize>,
    pub policies: Vec<PolicySeries>,
}

/// The four data-center policies on `servers` servers, one per zone, with a
/// synthetic price trace.
pub fn compare_policies_json(
    servers: usize,
    horizon: usize,
    arrival_mean: f64,
    v: f64,
    alpha: f64,
    seed: u64,
) -> Result<String, String> {
    check_horizon(horizon)?;
    let config = ExperimentConfig {
        n_servers: servers,
        n_zones: servers,
        horizon,
        arrival_mean,
        arrival_process: ArrivalProcess::Poisson,
        v,
        alpha,
        seed,
        policies: Policy::ALL.to_vec(),
        ..ExperimentConfig::default()
    };
    let result = run_experiment(&config).map_err(|e| e.to_string())?;
    let step = stride(horizon);
    let keep = |t: usize| t % step == 0 || t == horizon;
    let slots: Vec<usize> = (1..=horizon).filter(|t| keep(*t)).collect();
    let pick = |series: &[f64]| slots.iter().map(|t| series[t - 1]).collect::<Vec<f64>>();
    let policies = result
        .policies
        .iter()
        .map(|p| PolicySeries {
            policy: p.policy.name().to_string(),
            total_cost: p.total_cost,
            cost_running_avg: pick(&p.cost_running_avg),
            backlog_running_avg: pick(&p.backlog_running_avg),
        })
        .collect();
    serde_json::to_string(&Comparison { slots, policies }).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct Projection {
    pub point: Vec<f64>,
    pub distance: f64,
}

/// Projects `(x, y)` onto the unit box, the unit simplex or the unit ball
/// centered at `(0.5, 0.5)`.
pub fn project_json(set: &str, x: f64, y: f64) -> Result<String, String> {
    let set = match set {
        "box" => FeasibleSet::cube(2, 0.0, 1.0),
        "simplex" => FeasibleSet::simplex(2, 1.0),
        "ball" => FeasibleSet::ball(vec![0.5, 0.5], 0.5),
        other => return Err(format!("unknown set `{other}` (box, simplex or ball)")),
    }
    .map_err(|e| e.to_string())?;
    let point = set.project(&[x, y]).map_err(|e| e.to_string())?;
    let distance = ((point[0] - x).powi(2) + (point[1] - y).powi(2)).sqrt();
    serde_json::to_string(&Projection { point, distance }).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn simulate_1d(v: f64, alpha: f64, horizon: usize, offset: f64, spread: f64, seed: u32) -> Result<String, JsValue> {
    simulate_1d_json(v, alpha, horizon, offset, spread, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn compare_policies(
    servers: usize,
    horizon: usize,
    arrival_mean: f64,
    v: f64,
    alpha: f64,
    seed: u32,
) -> Result<String, JsValue> {
    compare_policies_json(servers, horizon, arrival_mean, v, alpha, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn project(set: &str, x: f64, y: f64) -> Result<String, JsValue> {
    project_json(set, x, y).map_err(|e| JsValue::from_str(&e))
}
