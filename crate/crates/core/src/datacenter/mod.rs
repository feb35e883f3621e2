//! Geo-distributed data-center power scheduling: price cost per slot, with
//! Poisson job arrivals that must be served on average.

mod model;
mod trace;

pub use model::*;
pub use trace::*;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, BaselineError};
use crate::linalg;
use crate::problem::{AlgorithmParams, ProblemError};
use crate::solver::{self, SolverError};
use crate::stream::{OmegaStream, Realization};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Proposed,
    Hindsight,
    React,
    Lowpower,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Proposed, Policy::Hindsight, Policy::React, Policy::Lowpower];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Proposed => "proposed",
            Policy::Hindsight => "hindsight",
            Policy::React => "react",
            Policy::Lowpower => "lowpower",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown policy `{s}` (expected proposed, hindsight, react or lowpower)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub h_a: f64,
    pub h_b: f64,
}

impl Default for ServerSpec {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 30.0,
            h_a: 4.0,
            h_b: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TraceSource {
    Synthetic {
        seed: u64,
        base: f64,
        daily_amplitude: f64,
        spike_prob: f64,
        spike_scale: f64,
    },
    File {
        path: PathBuf,
    },
}

impl Default for TraceSource {
    fn default() -> Self {
        let s = SynthSpec::default();
        TraceSource::Synthetic {
            seed: 7,
            base: s.base,
            daily_amplitude: s.daily_amplitude,
            spike_prob: s.spike_prob,
            spike_scale: s.spike_scale,
        }
    }
}

/// Defaults are the desk-scale setup: 10 servers, one per zone, 2160 slots,
/// 100 jobs per slot (10 per server), a synthetic trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_servers: usize,
    pub n_zones: usize,
    pub horizon: usize,
    pub arrival_mean: f64,
    pub arrival_process: ArrivalProcess,
    pub server: ServerSpec,
    pub trace: TraceSource,
    pub policies: Vec<Policy>,
    pub v: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Trailing window of the react and low-power estimators.
    pub estimator_window: usize,
    /// Number of cheapest zones low-power may use.
    pub lowpower_zones: usize,
    /// Per-server power of the proposed algorithm in slot 1; the box center
    /// when absent.
    pub initial_power: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_servers: 10,
            n_zones: 10,
            horizon: 2160,
            arrival_mean: 100.0,
            arrival_process: ArrivalProcess::Poisson,
            server: ServerSpec::default(),
            trace: TraceSource::default(),
            policies: Policy::ALL.to_vec(),
            v: 0.15,
            alpha: 20.0,
            seed: 1,
            estimator_window: 5,
            lowpower_zones: 1,
            initial_power: None,
        }
    }
}

impl ExperimentConfig {
    /// The 100-server, 10-zone setup with 1000 jobs per slot.
    pub fn paper_scale() -> Self {
        Self {
            n_servers: 100,
            arrival_mean: 1000.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.n_servers == 0 || self.n_zones == 0 {
            return bad("n_servers and n_zones must be positive");
        }
        if self.n_servers % self.n_zones != 0 {
            return bad("n_servers must be divisible by n_zones");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if !(self.arrival_mean >= 0.0 && self.arrival_mean.is_finite()) {
            return bad("arrival_mean must be finite and nonnegative");
        }
        if !(self.v > 0.0 && self.alpha > 0.0) {
            return bad("v and alpha must be positive");
        }
        if self.estimator_window == 0 {
            return bad("estimator_window must be at least 1");
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required");
        }
        let probe = ServerModel {
            zone: 0,
            x_min: self.server.x_min,
            x_max: self.server.x_max,
            h_a: self.server.h_a,
            h_b: self.server.h_b,
        };
        if !probe.is_valid() {
            return bad("server needs h_a > 0, h_b > 0 and 0 <= x_min < x_max < inf");
        }
        Ok(())
    }

    pub fn servers(&self) -> Vec<ServerModel> {
        let per_zone = self.n_servers / self.n_zones;
        (0..self.n_servers)
            .map(|i| ServerModel {
                zone: i / per_zone,
                x_min: self.server.x_min,
                x_max: self.server.x_max,
                h_a: self.server.h_a,
                h_b: self.server.h_b,
            })
            .collect()
    }

    pub fn load_trace(&self) -> Result<PriceTrace, ExperimentError> {
        Ok(match &self.trace {
            TraceSource::Synthetic {
                seed,
                base,
                daily_amplitude,
                spike_prob,
                spike_scale,
            } => synth_price_trace(
                self.n_zones,
                self.horizon,
                *seed,
                &SynthSpec {
                    base: *base,
                    daily_amplitude: *daily_amplitude,
                    spike_prob: *spike_prob,
                    spike_scale: *spike_scale,
                },
            )?,
            TraceSource::File { path } => load_price_trace(path)?,
        })
    }

    pub fn params(&self) -> Result<AlgorithmParams, ExperimentError> {
        Ok(AlgorithmParams::new(self.v, self.alpha, self.horizon)?)
    }
}

/// Builds the problem for `config` over the first `horizon` slots of `trace`.
pub fn build_problem_from_config(config: &ExperimentConfig, trace: &PriceTrace) -> Result<DatacenterProblem, ExperimentError> {
    config.validate()?;
    if trace.zones() != config.n_zones {
        return Err(ExperimentError::Config(format!(
            "trace has {} zones, config has {}",
            trace.zones(),
            config.n_zones
        )));
    }
    if trace.slots() < config.horizon {
        return Err(ExperimentError::Config(format!(
            "trace has {} slots, horizon is {}",
            trace.slots(),
            config.horizon
        )));
    }
    let servers = config.servers();
    let prices: Vec<Vec<f64>> = (0..config.horizon)
        .map(|t| servers.iter().map(|s| trace.price(s.zone, t)).collect())
        .collect();
    Ok(build_datacenter_problem(
        servers,
        prices,
        ArrivalModel::with_process(config.arrival_mean, config.arrival_process),
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyResult {
    pub policy: Policy,
    /// Row `t - 1` is the power vector of slot `t`.
    pub power: Vec<Vec<f64>>,
    pub cost: Vec<f64>,
    pub service: Vec<f64>,
    /// Unserved jobs carried after each slot.
    pub backlog: Vec<f64>,
    pub cost_running_avg: Vec<f64>,
    pub backlog_running_avg: Vec<f64>,
    pub total_cost: f64,
    /// Signed `sum_t (omega(t) - service(t))`.
    pub cumulative_violation: f64,
    /// Slots where the policy could not meet its own target.
    pub shortfall_slots: usize,
}

impl PolicyResult {
    pub fn final_backlog(&self) -> f64 {
        *self.backlog.last().unwrap_or(&0.0)
    }

    pub fn final_backlog_running_avg(&self) -> f64 {
        *self.backlog_running_avg.last().unwrap_or(&0.0)
    }

    pub fn final_cost_running_avg(&self) -> f64 {
        *self.cost_running_avg.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub arrivals: Vec<f64>,
    pub policies: Vec<PolicyResult>,
}

impl ExperimentResult {
    pub fn policy(&self, policy: Policy) -> Option<&PolicyResult> {
        self.policies.iter().find(|p| p.policy == policy)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    let trace = config.load_trace()?;
    run_experiment_with_trace(config, &trace)
}

/// Runs every configured policy on the same arrival sequence.
///
/// The react and low-power estimators are trailing means over the previous
/// `estimator_window` slots; in slot 1, with no history, they use the true
/// slot-1 values.
pub fn run_experiment_with_trace(config: &ExperimentConfig, trace: &PriceTrace) -> Result<ExperimentResult, ExperimentError> {
    let dc = build_problem_from_config(config, trace)?;
    let horizon = config.horizon;
    let stream = OmegaStream::new(config.seed);
    let history: Vec<Realization> = (1..=horizon)
        .map(|t| dc.instance.constraints().sample(&mut stream.round_rng(t)))
        .collect();
    let arrivals: Vec<f64> = history.iter().map(|r| r.first()).collect();
    let servers = dc.servers.as_slice();
    let window = config.estimator_window;
    let trailing = |series: &dyn Fn(usize) -> f64, t: usize| -> f64 {
        if t == 1 {
            return series(1);
        }
        let lo = t.saturating_sub(window).max(1);
        (lo..t).map(series).sum::<f64>() / (t - lo) as f64
    };

    let mut results = Vec::with_capacity(config.policies.len());
    for &policy in &config.policies {
        let mut shortfall_slots = 0;
        let power: Vec<Vec<f64>> = match policy {
            Policy::Proposed => {
                let options = solver::RunOptions {
                    initial: config.initial_power.map(|p| vec![p; servers.len()]),
                    ..solver::RunOptions::default()
                };
                let traj = solver::run_with(&dc.instance, &config.params()?, config.seed, &options)?;
                debug_assert!((1..=horizon).all(|t| traj.realization(t) == &history[t - 1]));
                (1..=horizon).map(|t| traj.decision(t).to_vec()).collect()
            }
            Policy::Hindsight => {
                let sol = baselines::hindsight_solve(&dc.instance, &history, 1e-9)?;
                vec![sol.x_star; horizon]
            }
            Policy::React => (1..=horizon)
                .map(|t| {
                    let estimate = trailing(&|s| arrivals[s - 1], t);
                    let d = baselines::react_policy(estimate, servers);
                    shortfall_slots += d.saturated as usize;
                    d.power
                })
                .collect(),
            Policy::Lowpower => (1..=horizon)
                .map(|t| {
                    let prices: Vec<f64> = (0..servers.len())
                        .map(|i| trailing(&|s| dc.loss.prices(s)[i], t))
                        .collect();
                    let required = trailing(&|s| arrivals[s - 1], t);
                    let d = baselines::lowpower_policy_zoned(&prices, required, servers, config.lowpower_zones);
                    shortfall_slots += (d.shortfall > 0.0) as usize;
                    d.power
                })
                .collect(),
        };
        results.push(account(policy, power, &dc, &arrivals, shortfall_slots));
    }
    Ok(ExperimentResult {
        config: config.clone(),
        arrivals,
        policies: results,
    })
}

fn account(
    policy: Policy,
    power: Vec<Vec<f64>>,
    dc: &DatacenterProblem,
    arrivals: &[f64],
    shortfall_slots: usize,
) -> PolicyResult {
    let horizon = power.len();
    let mut cost = Vec::with_capacity(horizon);
    let mut service = Vec::with_capacity(horizon);
    let mut backlog = Vec::with_capacity(horizon);
    let mut cost_running_avg = Vec::with_capacity(horizon);
    let mut backlog_running_avg = Vec::with_capacity(horizon);
    let (mut b, mut cost_sum, mut backlog_sum, mut violation) = (0.0f64, 0.0, 0.0, 0.0);
    for (i, x) in power.iter().enumerate() {
        let c = linalg::dot(dc.loss.prices(i + 1), x);
        let s = total_rate(&dc.servers, x);
        b = (b + arrivals[i] - s).max(0.0);
        violation += arrivals[i] - s;
        cost_sum += c;
        backlog_sum += b;
        cost.push(c);
        service.push(s);
        backlog.push(b);
        cost_running_avg.push(cost_sum / (i + 1) as f64);
        backlog_running_avg.push(backlog_sum / (i + 1) as f64);
    }
    PolicyResult {
        policy,
        power,
        cost,
        service,
        backlog,
        cost_running_avg,
        backlog_running_avg,
        total_cost: cost_sum,
        cumulative_violation: violation,
        shortfall_slots,
    }
}
