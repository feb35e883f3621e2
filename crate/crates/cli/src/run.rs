use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use oco_queue::datacenter::{run_experiment, Policy};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output;
use crate::Outcome;

#[derive(Serialize)]
struct PolicySummary {
    policy: Policy,
    total_cost: f64,
    final_cost_running_avg: f64,
    final_backlog: f64,
    final_backlog_running_avg: f64,
    cumulative_violation: f64,
    shortfall_slots: usize,
    series: String,
}

#[derive(Serialize)]
struct RunSummary {
    horizon: usize,
    mean_arrivals: f64,
    policies: Vec<PolicySummary>,
}

pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let result = run_experiment(&config.experiment)?;
    output::ensure_dir(out)?;
    let mut policies = Vec::new();
    for p in &result.policies {
        let file = format!("{}.csv", p.policy);
        let mut csv = String::from("slot,cost_running_avg,backlog_running_avg\n");
        for (t, (c, b)) in p.cost_running_avg.iter().zip(&p.backlog_running_avg).enumerate() {
            writeln!(csv, "{},{},{}", t + 1, c, b)?;
        }
        let path = out.join(&file);
        fs::write(&path, csv).with_context(|| format!("cannot write {}", path.display()))?;
        policies.push(PolicySummary {
            policy: p.policy,
            total_cost: p.total_cost,
            final_cost_running_avg: p.final_cost_running_avg(),
            final_backlog: p.final_backlog(),
            final_backlog_running_avg: p.final_backlog_running_avg(),
            cumulative_violation: p.cumulative_violation,
            shortfall_slots: p.shortfall_slots,
            series: file,
        });
    }
    let n = result.arrivals.len().max(1) as f64;
    let summary = RunSummary {
        horizon: config.experiment.horizon,
        mean_arrivals: result.arrivals.iter().sum::<f64>() / n,
        policies,
    };
    output::write_json(out, "summary.json", "run", config.experiment.seed, config, &summary)?;
    for p in &summary.policies {
        println!(
            "{:<10} total cost {:>14.2}  final avg backlog {:>10.3}",
            p.policy.name(),
            p.total_cost,
            p.final_backlog_running_avg
        );
    }
    Ok(Outcome::Ok)
}
