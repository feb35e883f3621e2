use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use oco_queue::analysis::{self, positive_series, sublinearity_slope};
use oco_queue::baselines::hindsight_solve;
use oco_queue::instances::StockInstance;
use oco_queue::solver;
use serde::Serialize;

use crate::config::{RunConfig, TestMetric};
use crate::output;
use crate::Outcome;

#[derive(Debug, Serialize)]
struct GridPoint {
    horizon: usize,
    /// Mean over seeds of the regret against the hindsight solution.
    regret: f64,
    /// Mean over seeds of `max_k max(sum_t g_k, 0)`.
    violation: f64,
}

#[derive(Debug, Serialize)]
struct ConvergenceReport {
    instance: String,
    points: Vec<GridPoint>,
    regret_slope: f64,
    violation_slope: f64,
    regret_shifted: bool,
    violation_shifted: bool,
    max_slope: f64,
    passed: bool,
}

fn measure(stock: StockInstance, horizon: usize, seeds: &[u64]) -> Result<GridPoint> {
    let problem = stock.build();
    if let Some(rounds) = problem.loss().rounds() {
        if horizon > rounds {
            bail!("instance {stock} is defined for {rounds} rounds, grid asks for {horizon}");
        }
    }
    let params = solver::default_params(horizon);
    let per_seed = analysis::map_seeds(seeds, |seed| {
        let traj = solver::run(&problem, &params, seed)?;
        let history: Vec<_> = (1..=horizon).map(|t| traj.realization(t).clone()).collect();
        let violation = analysis::cumulative_violation(&traj)
            .into_iter()
            .fold(0.0, |a, v| f64::max(a, v.max(0.0)));
        Ok((traj, history, violation))
    })?;
    let mut regret = 0.0;
    let mut violation = 0.0;
    for (traj, history, v) in &per_seed {
        let h = hindsight_solve(&problem, history, 1e-9).context("hindsight benchmark")?;
        let bench = analysis::benchmark_losses(&problem, traj, &h.x_star);
        regret += analysis::regret(traj, &bench)?;
        violation += v;
    }
    let n = seeds.len() as f64;
    Ok(GridPoint {
        horizon,
        regret: regret / n,
        violation: violation / n,
    })
}

pub fn cmd_convergence(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let c = &config.convergence;
    c.validate()?;
    let stock: StockInstance = c.instance.parse().map_err(anyhow::Error::msg)?;
    let seeds: Vec<u64> = (0..c.seeds as u64).map(|i| c.first_seed + i).collect();
    let mut points = Vec::new();
    for &t in &c.grid {
        points.push(match c.test_metric {
            Some(TestMetric::SqrtT) => GridPoint {
                horizon: t,
                regret: (t as f64).sqrt(),
                violation: (t as f64).sqrt(),
            },
            None => measure(stock, t, &seeds)?,
        });
    }
    let horizons: Vec<f64> = points.iter().map(|p| p.horizon as f64).collect();
    let (regret, regret_shifted) = positive_series(&points.iter().map(|p| p.regret).collect::<Vec<_>>());
    let (violation, violation_shifted) = positive_series(&points.iter().map(|p| p.violation).collect::<Vec<_>>());
    let regret_slope = sublinearity_slope(&horizons, &regret)?;
    let violation_slope = sublinearity_slope(&horizons, &violation)?;
    let passed = regret_slope <= c.max_slope && violation_slope <= c.max_slope;

    output::ensure_dir(out)?;
    let mut csv = String::from("T,regret,violation,regret_slope,violation_slope\n");
    for p in &points {
        writeln!(csv, "{},{},{},{},{}", p.horizon, p.regret, p.violation, regret_slope, violation_slope)?;
    }
    let path = out.join("convergence.csv");
    fs::write(&path, csv).with_context(|| format!("cannot write {}", path.display()))?;
    let report = ConvergenceReport {
        instance: stock.name().to_string(),
        points,
        regret_slope,
        violation_slope,
        regret_shifted,
        violation_shifted,
        max_slope: c.max_slope,
        passed,
    };
    output::write_json(out, "convergence.json", "convergence", c.first_seed, config, &report)?;
    println!(
        "regret slope {regret_slope:.4}, violation slope {violation_slope:.4} (limit {})",
        c.max_slope
    );
    Ok(if passed { Outcome::Ok } else { Outcome::StatisticalFailure })
}
