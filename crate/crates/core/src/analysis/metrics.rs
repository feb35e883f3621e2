use serde::Serialize;

use super::AnalysisError;
use crate::linalg;
use crate::problem::ProblemInstance;
use crate::trajectory::Trajectory;

/// `sum_t f^t(x(t)) - sum_t f^t(x*)`
pub fn regret(trajectory: &Trajectory, benchmark_losses: &[f64]) -> Result<f64, AnalysisError> {
    if benchmark_losses.len() != trajectory.len() {
        return Err(AnalysisError::LengthMismatch {
            what: "benchmark losses",
            expected: trajectory.len(),
            found: benchmark_losses.len(),
        });
    }
    Ok(trajectory.losses().iter().sum::<f64>() - benchmark_losses.iter().sum::<f64>())
}

/// `f^t(x*)` for every round of `trajectory`, using the recorded realizations.
pub fn benchmark_losses(problem: &ProblemInstance, trajectory: &Trajectory, x_star: &[f64]) -> Vec<f64> {
    (1..=trajectory.len())
        .map(|t| problem.loss().evaluate(t, x_star, trajectory.realization(t)).value)
        .collect()
}

/// Per-constraint `sum_t g_k(x(t); omega(t))`, signed.
pub fn cumulative_violation(trajectory: &Trajectory) -> Vec<f64> {
    let mut out = vec![0.0; trajectory.constraint_count()];
    for t in 1..=trajectory.len() {
        for (o, g) in out.iter_mut().zip(trajectory.constraint_values(t)) {
            *o += g;
        }
    }
    out
}

/// `(1/T) sum_{t=1}^T x(t)`
pub fn averaged_iterate(trajectory: &Trajectory) -> Vec<f64> {
    let n = trajectory.dimension();
    let len = trajectory.len().max(1);
    let mut out = vec![0.0; n];
    for t in 1..=len {
        for (o, x) in out.iter_mut().zip(trajectory.decision(t)) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|o| *o /= len as f64);
    out
}

/// `max_{t <= T+1} ||Q(t)||`
pub fn max_queue_norm(trajectory: &Trajectory) -> f64 {
    (1..=trajectory.len() + 1)
        .map(|t| trajectory.queue_norm(t))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub regret: Option<f64>,
    pub violations: Vec<f64>,
    pub max_queue: f64,
    pub final_queue_norm: f64,
    pub averaged_iterate: Vec<f64>,
    pub total_loss: f64,
}

pub fn summarize(trajectory: &Trajectory, benchmark: Option<&[f64]>) -> Result<RunSummary, AnalysisError> {
    Ok(RunSummary {
        regret: benchmark.map(|b| regret(trajectory, b)).transpose()?,
        violations: cumulative_violation(trajectory),
        max_queue: max_queue_norm(trajectory),
        final_queue_norm: linalg::norm(trajectory.final_queue()),
        averaged_iterate: averaged_iterate(trajectory),
        total_loss: trajectory.losses().iter().sum(),
    })
}

/// Returns `series` unchanged when every value is positive, otherwise
/// `max(value, 0) + 1` for every value, so that a log-log fit is defined.
/// The flag tells whether the shift was applied.
pub fn positive_series(series: &[f64]) -> (Vec<f64>, bool) {
    if series.iter().all(|v| *v > 0.0) {
        (series.to_vec(), false)
    } else {
        (series.iter().map(|v| v.max(0.0) + 1.0).collect(), true)
    }
}

/// Least-squares slope of `ln(metric)` against `ln(T)`.
pub fn sublinearity_slope(horizons: &[f64], metric: &[f64]) -> Result<f64, AnalysisError> {
    if horizons.len() != metric.len() {
        return Err(AnalysisError::LengthMismatch {
            what: "metric series",
            expected: horizons.len(),
            found: metric.len(),
        });
    }
    let mut distinct: Vec<f64> = horizons.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 || horizons.iter().any(|h| !(*h > 0.0)) {
        return Err(AnalysisError::DegenerateGrid);
    }
    if let Some((index, &value)) = metric.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(AnalysisError::NonPositiveMetric { index, value });
    }
    let xs: Vec<f64> = horizons.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = metric.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
