use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use oco_queue::analysis::{self, CheckReport};
use oco_queue::datacenter::ExperimentConfig;
use oco_queue::instances::StockInstance;
use oco_queue::solver::{self, RunOptions};
use oco_queue::{AlgorithmParams, ProblemBounds, ProblemInstance};
use serde::Serialize;

use crate::config::{RunConfig, VerifyInstance};
use crate::output;
use crate::Outcome;

#[derive(Debug, Serialize)]
struct CheckSummary {
    name: String,
    passed: bool,
    worst_slack: f64,
    witness_seed: Option<u64>,
    witness_round: Option<usize>,
    witness_k: Option<usize>,
    checked: usize,
}

#[derive(Debug, Serialize)]
struct StatSummary {
    name: String,
    passed: bool,
    estimate: f64,
    threshold: f64,
    standard_error: f64,
    samples: usize,
    round: Option<usize>,
}

#[derive(Debug, Serialize)]
struct InstanceReport {
    instance: String,
    params: AlgorithmParams,
    bounds: ProblemBounds,
    deterministic: Vec<CheckSummary>,
    statistical: Vec<StatSummary>,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    deterministic_passed: bool,
    statistical_passed: bool,
    instances: Vec<InstanceReport>,
}

fn resolve(spec: &VerifyInstance) -> Result<(StockInstance, ProblemInstance, AlgorithmParams)> {
    let stock = spec.stock()?;
    let mut problem = stock.build();
    if spec.d1.is_some() || spec.d2.is_some() || spec.g.is_some() {
        let b = *problem.bounds();
        let declared = ProblemBounds::new(
            spec.d1.unwrap_or(b.d1),
            spec.d2.unwrap_or(b.d2),
            spec.g.unwrap_or(b.g),
            b.r,
            b.epsilon,
        )?;
        problem = problem
            .redeclare(declared)
            .with_context(|| format!("instance {stock} rejected the declared bounds"))?;
    }
    let horizon = spec.horizon.unwrap_or(stock.default_horizon());
    let base = match stock {
        StockInstance::DatacenterDesk => ExperimentConfig::default().params()?,
        _ => solver::default_params(horizon),
    };
    let params = AlgorithmParams::new(spec.v.unwrap_or(base.v), spec.alpha.unwrap_or(base.alpha), horizon)?;
    Ok((stock, problem, params))
}

fn deterministic(
    problem: &ProblemInstance,
    params: &AlgorithmParams,
    seeds: &[u64],
    samples: usize,
) -> Result<Vec<CheckSummary>> {
    let set = problem.set().clone();
    let per_seed = analysis::sweep(problem, params, seeds, &RunOptions::default(), |traj| {
        let mut reports = analysis::deterministic_checks(traj);
        reports.push(analysis::check_decision_inequality(traj, &set, samples, traj.seed()));
        reports
    })?;
    let mut merged: BTreeMap<String, (CheckSummary, usize)> = BTreeMap::new();
    for (seed, reports) in seeds.iter().zip(per_seed) {
        for (order, r) in reports.into_iter().enumerate() {
            let CheckReport {
                name,
                passed,
                worst_slack,
                witness,
                checked,
                ..
            } = r;
            let entry = merged.entry(name.clone()).or_insert_with(|| {
                (
                    CheckSummary {
                        name,
                        passed: true,
                        worst_slack: f64::INFINITY,
                        witness_seed: None,
                        witness_round: None,
                        witness_k: None,
                        checked: 0,
                    },
                    order,
                )
            });
            let s = &mut entry.0;
            s.passed &= passed;
            s.checked += checked;
            if worst_slack < s.worst_slack {
                s.worst_slack = worst_slack;
                s.witness_seed = Some(*seed);
                s.witness_round = witness.map(|w| w.round);
                s.witness_k = witness.and_then(|w| w.k);
            }
        }
    }
    let mut out: Vec<(CheckSummary, usize)> = merged.into_values().collect();
    out.sort_by_key(|(_, order)| *order);
    Ok(out.into_iter().map(|(s, _)| s).collect())
}

fn statistical(
    problem: &ProblemInstance,
    params: &AlgorithmParams,
    seeds: &[u64],
    rounds: usize,
    mu: f64,
) -> Result<Vec<StatSummary>> {
    let mut out = Vec::new();
    if problem.constraint_count() == 0 {
        return Ok(out);
    }
    if let Some(slater) = problem.constraints().slater_point() {
        let sampled: Vec<usize> = (1..=rounds)
            .map(|i| (params.horizon * i).div_ceil(rounds).max(1))
            .collect();
        let report = analysis::check_slater_negativity(problem, params, &slater, seeds, &sampled)?;
        for r in report.rounds {
            out.push(StatSummary {
                name: "slater negativity".to_string(),
                passed: r.passed,
                estimate: r.estimate,
                threshold: r.threshold,
                standard_error: r.standard_error,
                samples: seeds.len(),
                round: Some(r.round),
            });
        }
    }
    if problem.bounds().epsilon.is_some() {
        let constants = analysis::theta_constant(
            analysis::default_t0(params.horizon),
            params,
            problem.bounds(),
            problem.constraint_count(),
        )?;
        let profile = analysis::queue_profile(problem, params, seeds)?;
        let t = profile.argmax_round();
        let bound = analysis::drift_expected_bound(&constants);
        out.push(StatSummary {
            name: "expected queue bound".to_string(),
            passed: profile.max_mean() < bound,
            estimate: profile.max_mean(),
            threshold: bound,
            standard_error: profile.se_norm[t - 1],
            samples: seeds.len(),
            round: Some(t),
        });
        let z = analysis::drift_tail_threshold(&constants, mu)?;
        let tail = analysis::tail_frequency(&profile.per_seed_max, z, mu);
        out.push(StatSummary {
            name: tail.name,
            passed: tail.passed,
            estimate: tail.estimate,
            threshold: tail.threshold,
            standard_error: tail.standard_error,
            samples: tail.samples,
            round: None,
        });
    }
    Ok(out)
}

pub fn cmd_verify(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let v = &config.verify;
    v.validate()?;
    let seeds: Vec<u64> = (0..v.seeds as u64).map(|i| v.first_seed + i).collect();
    let mc_seeds: Vec<u64> = (0..v.monte_carlo_seeds as u64).map(|i| v.first_seed + i).collect();
    let mut instances = Vec::new();
    for spec in &v.instances {
        let (stock, problem, params) = resolve(spec)?;
        let det = deterministic(&problem, &params, &seeds, v.decision_samples)?;
        let stat = statistical(&problem, &params, &mc_seeds, v.slater_rounds, v.mu)?;
        for c in &det {
            println!(
                "{} {stock} {}: worst slack {:.3e}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.worst_slack
            );
        }
        for s in &stat {
            println!(
                "{} {stock} {}: {:.4} vs {:.4} (se {:.3e})",
                if s.passed { "ok  " } else { "FAIL" },
                s.name,
                s.estimate,
                s.threshold,
                s.standard_error
            );
        }
        instances.push(InstanceReport {
            instance: stock.name().to_string(),
            params,
            bounds: *problem.bounds(),
            deterministic: det,
            statistical: stat,
        });
    }
    let report = VerifyReport {
        deterministic_passed: instances.iter().all(|i| i.deterministic.iter().all(|c| c.passed)),
        statistical_passed: instances.iter().all(|i| i.statistical.iter().all(|c| c.passed)),
        instances,
    };
    output::ensure_dir(out)?;
    output::write_json(out, "verify.json", "verify", v.first_seed, config, &report)?;
    Ok(if !report.deterministic_passed {
        Outcome::DeterministicFailure
    } else if !report.statistical_passed {
        Outcome::StatisticalFailure
    } else {
        Outcome::Ok
    })
}
