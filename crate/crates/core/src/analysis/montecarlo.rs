use serde::Serialize;

use super::AnalysisError;
use crate::linalg;
use crate::problem::{AlgorithmParams, ProblemInstance, SlaterPoint};
use crate::solver::{self, RunOptions, SolverError};
use crate::trajectory::Trajectory;

/// Fewest seeds a negativity estimate is computed from.
pub const MIN_SEEDS: usize = 30;

/// Maps `f` over seeds, in parallel when the `parallel` feature is on.
/// Results keep the order of `seeds`.
pub fn map_seeds<R, F>(seeds: &[u64], f: F) -> Result<Vec<R>, SolverError>
where
    R: Send,
    F: Fn(u64) -> Result<R, SolverError> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|s| f(*s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|s| f(*s)).collect()
    }
}

/// Runs the solver on every seed and reduces each trajectory with `reduce`
/// before the next one is kept, so memory stays at one trajectory per worker.
pub fn sweep<R, F>(
    problem: &ProblemInstance,
    params: &AlgorithmParams,
    seeds: &[u64],
    options: &RunOptions,
    reduce: F,
) -> Result<Vec<R>, SolverError>
where
    R: Send,
    F: Fn(&Trajectory) -> R + Sync + Send,
{
    map_seeds(seeds, |seed| {
        let traj = solver::run_with(problem, params, seed, options)?;
        Ok(reduce(&traj))
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-round mean of `||Q(t)||` over seeds, and each seed's maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueProfile {
    /// Index `t - 1` holds the mean of `||Q(t)||`, `t = 1..=T+1`.
    pub mean_norm: Vec<f64>,
    /// Standard error of each entry of `mean_norm`.
    pub se_norm: Vec<f64>,
    pub per_seed_max: Vec<f64>,
    pub seeds: usize,
}

impl QueueProfile {
    pub fn max_mean(&self) -> f64 {
        self.mean_norm.iter().copied().fold(0.0, f64::max)
    }

    /// Round `t` attaining [`Self::max_mean`].
    pub fn argmax_round(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, m) in self.mean_norm.iter().enumerate() {
            if *m > best.1 {
                best = (i, *m);
            }
        }
        best.0 + 1
    }
}

pub fn queue_profile(
    problem: &ProblemInstance,
    params: &AlgorithmParams,
    seeds: &[u64],
) -> Result<QueueProfile, SolverError> {
    let norms = sweep(problem, params, seeds, &RunOptions::default(), |traj| {
        (1..=traj.len() + 1).map(|t| traj.queue_norm(t)).collect::<Vec<f64>>()
    })?;
    let len = params.horizon + 1;
    let (mut mean_norm, mut se_norm) = (Vec::with_capacity(len), Vec::with_capacity(len));
    let mut column = Vec::with_capacity(norms.len());
    for i in 0..len {
        column.clear();
        column.extend(norms.iter().map(|run| run[i]));
        let (m, se) = mean_and_se(&column);
        mean_norm.push(m);
        se_norm.push(se);
    }
    let per_seed_max = norms.iter().map(|r| r.iter().copied().fold(0.0, f64::max)).collect();
    Ok(QueueProfile {
        mean_norm,
        se_norm,
        per_seed_max,
        seeds: seeds.len(),
    })
}

/// Outcome of a statistical threshold test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatReport {
    pub name: String,
    pub passed: bool,
    pub estimate: f64,
    /// The estimate passes when it is at most this value.
    pub threshold: f64,
    pub standard_error: f64,
    pub samples: usize,
}

/// Fraction of `values` at or above `level`, tested against
/// `mu + 3 sqrt(mu (1 - mu) / n)`.
pub fn tail_frequency(values: &[f64], level: f64, mu: f64) -> StatReport {
    let n = values.len();
    let hits = values.iter().filter(|v| **v >= level).count();
    let estimate = hits as f64 / n.max(1) as f64;
    let se = (mu * (1.0 - mu) / n.max(1) as f64).sqrt();
    let threshold = mu + 3.0 * se;
    StatReport {
        name: format!("tail frequency at mu = {mu}"),
        passed: estimate <= threshold,
        estimate,
        threshold,
        standard_error: se,
        samples: n,
    }
}

/// One sampled round of the Slater negativity test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlaterRound {
    pub round: usize,
    /// Mean of `sum_k Q_k(t) g_k(x_hat; omega(t))`.
    pub estimate: f64,
    pub mean_queue_norm: f64,
    /// `-epsilon * mean ||Q(t)|| + 3 SE`, with SE of the paired difference.
    pub threshold: f64,
    pub standard_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlaterReport {
    pub passed: bool,
    pub seeds: usize,
    pub epsilon: f64,
    pub rounds: Vec<SlaterRound>,
}

/// Estimates `E[sum_k Q_k(t) g_k(x_hat; omega(t))]` at each of `rounds` over
/// `seeds` solver runs. `Q(t)` depends only on `omega(1..t-1)`, so for a
/// point with `E[g_k(x_hat)] <= -epsilon` the expectation is at most
/// `-epsilon E||Q(t)||`. The per-seed paired difference
/// `sum_k Q_k g_k(x_hat) + epsilon ||Q(t)||` must have mean at most three
/// standard errors.
pub fn check_slater_negativity(
    problem: &ProblemInstance,
    params: &AlgorithmParams,
    slater: &SlaterPoint,
    seeds: &[u64],
    rounds: &[usize],
) -> Result<SlaterReport, AnalysisError> {
    if seeds.len() < MIN_SEEDS {
        return Err(AnalysisError::InsufficientSeeds {
            got: seeds.len(),
            need: MIN_SEEDS,
        });
    }
    if let Some(&t) = rounds.iter().find(|t| **t == 0 || **t > params.horizon) {
        return Err(AnalysisError::RoundOutOfRange(t));
    }
    if problem.constraint_count() == 0 {
        return Ok(SlaterReport {
            passed: true,
            seeds: seeds.len(),
            epsilon: slater.epsilon,
            rounds: Vec::new(),
        });
    }
    let eps = slater.epsilon;
    let samples = sweep(problem, params, seeds, &RunOptions::default(), |traj| {
        rounds
            .iter()
            .map(|&t| {
                let g = problem.constraints().evaluate(&slater.point, traj.realization(t)).values;
                let q = traj.queue(t);
                (linalg::dot(q, &g), traj.queue_norm(t))
            })
            .collect::<Vec<(f64, f64)>>()
    })?;
    let mut out = Vec::with_capacity(rounds.len());
    for (i, &t) in rounds.iter().enumerate() {
        let qg: Vec<f64> = samples.iter().map(|s| s[i].0).collect();
        let qn: Vec<f64> = samples.iter().map(|s| s[i].1).collect();
        let paired: Vec<f64> = samples.iter().map(|s| s[i].0 + eps * s[i].1).collect();
        let (estimate, _) = mean_and_se(&qg);
        let (mean_queue_norm, _) = mean_and_se(&qn);
        let (paired_mean, standard_error) = mean_and_se(&paired);
        out.push(SlaterRound {
            round: t,
            estimate,
            mean_queue_norm,
            threshold: -eps * mean_queue_norm + 3.0 * standard_error,
            standard_error,
            passed: paired_mean <= 3.0 * standard_error,
        });
    }
    Ok(SlaterReport {
        passed: out.iter().all(|r| r.passed),
        seeds: seeds.len(),
        epsilon: eps,
        rounds: out,
    })
}
