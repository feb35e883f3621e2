//! The drift-plus-penalty update with virtual queues, and plain online
//! gradient descent.

use thiserror::Error;

use crate::geometry::{FeasibleSet, GeometryError};
use crate::linalg;
use crate::problem::{AlgorithmParams, ProblemError, ProblemInstance, QueueState};
use crate::stream::OmegaStream;
use crate::trajectory::{RoundRecord, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("round {round}, seed {seed}: {source}")]
    Oracle {
        round: usize,
        seed: u64,
        #[source]
        source: ProblemError,
    },
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("step size gamma must be positive and finite, got {0}")]
    BadGamma(f64),
}

/// What the solver observes at the end of round `t`, evaluated at `x(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFeedback {
    pub loss_subgradient: Vec<f64>,
    pub constraint_values: Vec<f64>,
    /// Row `k` is the subgradient of `g_k`.
    pub constraint_subgradients: Vec<Vec<f64>>,
}

impl StepFeedback {
    fn check(&self, n: usize, m: usize) -> Result<(), SolverError> {
        let mismatch = |what, expected, found| SolverError::DimensionMismatch { what, expected, found };
        if self.loss_subgradient.len() != n {
            return Err(mismatch("loss subgradient", n, self.loss_subgradient.len()));
        }
        if self.constraint_values.len() != m {
            return Err(mismatch("constraint values", m, self.constraint_values.len()));
        }
        if self.constraint_subgradients.len() != m {
            return Err(mismatch("constraint subgradient rows", m, self.constraint_subgradients.len()));
        }
        if let Some(row) = self.constraint_subgradients.iter().find(|r| r.len() != n) {
            return Err(mismatch("constraint subgradient row", n, row.len()));
        }
        Ok(())
    }
}

/// `d(t) = V grad f + sum_k Q_k grad g_k`
pub fn dpp_direction(
    feedback: &StepFeedback,
    queue: &QueueState,
    params: &AlgorithmParams,
) -> Result<Vec<f64>, SolverError> {
    let n = feedback.loss_subgradient.len();
    feedback.check(n, queue.len())?;
    let mut d: Vec<f64> = feedback.loss_subgradient.iter().map(|g| params.v * g).collect();
    for (q, row) in queue.values().iter().zip(&feedback.constraint_subgradients) {
        for (di, gi) in d.iter_mut().zip(row) {
            *di += q * gi;
        }
    }
    Ok(d)
}

/// `x(t+1) = P[x(t) - d(t) / (2 alpha)]`, the closed-form minimizer of the
/// linearized drift-plus-penalty objective with proximal weight `alpha`.
///
/// The step is accumulated as `gamma * grad f + sum_k (Q_k / (2 alpha)) grad g_k`
/// with `gamma = V / (2 alpha)`, so that with no constraints the arithmetic is
/// exactly that of [`ogd_step`].
pub fn dpp_step(
    x: &[f64],
    feedback: &StepFeedback,
    queue: &QueueState,
    params: &AlgorithmParams,
    set: &FeasibleSet,
) -> Result<Vec<f64>, SolverError> {
    let n = set.dim();
    if x.len() != n {
        return Err(SolverError::DimensionMismatch {
            what: "decision",
            expected: n,
            found: x.len(),
        });
    }
    feedback.check(n, queue.len())?;
    let gamma = params.v / (2.0 * params.alpha);
    let mut step: Vec<f64> = feedback.loss_subgradient.iter().map(|g| gamma * g).collect();
    for (q, row) in queue.values().iter().zip(&feedback.constraint_subgradients) {
        let w = q / (2.0 * params.alpha);
        for (si, gi) in step.iter_mut().zip(row) {
            *si += w * gi;
        }
    }
    let target: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - si).collect();
    Ok(set.project(&target)?)
}

/// `Q_k <- max(Q_k + g_k + grad g_k^T displacement, 0)`
pub fn queue_update(
    queue: &QueueState,
    constraint_values: &[f64],
    constraint_subgradients: &[Vec<f64>],
    displacement: &[f64],
) -> Result<QueueState, SolverError> {
    let m = queue.len();
    if constraint_values.len() != m || constraint_subgradients.len() != m {
        return Err(SolverError::DimensionMismatch {
            what: "constraint feedback",
            expected: m,
            found: constraint_values.len(),
        });
    }
    let mut next = Vec::with_capacity(m);
    for ((q, g), row) in queue.values().iter().zip(constraint_values).zip(constraint_subgradients) {
        if row.len() != displacement.len() {
            return Err(SolverError::DimensionMismatch {
                what: "constraint subgradient row",
                expected: displacement.len(),
                found: row.len(),
            });
        }
        next.push((q + g + linalg::dot(row, displacement)).max(0.0));
    }
    Ok(QueueState::from_vec(next).expect("clamped queue is nonnegative"))
}

/// `x(t+1) = P[x(t) - gamma grad f(x(t))]`
pub fn ogd_step(
    x: &[f64],
    loss_subgradient: &[f64],
    gamma: f64,
    set: &FeasibleSet,
) -> Result<Vec<f64>, SolverError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(SolverError::BadGamma(gamma));
    }
    if x.len() != loss_subgradient.len() {
        return Err(SolverError::DimensionMismatch {
            what: "loss subgradient",
            expected: x.len(),
            found: loss_subgradient.len(),
        });
    }
    let target: Vec<f64> = x
        .iter()
        .zip(loss_subgradient)
        .map(|(xi, gi)| xi - gamma * gi)
        .collect();
    Ok(set.project(&target)?)
}

/// `V = sqrt(T)`, `alpha = T`.
pub fn default_params(horizon: usize) -> AlgorithmParams {
    let t = horizon.max(1) as f64;
    AlgorithmParams::new(t.sqrt(), t, horizon.max(1)).expect("positive defaults")
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Starting point; the projected set center when `None`.
    pub initial: Option<Vec<f64>>,
    /// Skip the per-round bound checks against the instance bounds.
    pub skip_bound_checks: bool,
}

/// Runs the drift-plus-penalty algorithm for `params.horizon` rounds.
pub fn run(problem: &ProblemInstance, params: &AlgorithmParams, seed: u64) -> Result<Trajectory, SolverError> {
    run_with(problem, params, seed, &RunOptions::default())
}

pub fn run_with(
    problem: &ProblemInstance,
    params: &AlgorithmParams,
    seed: u64,
    options: &RunOptions,
) -> Result<Trajectory, SolverError> {
    drive(problem, params, seed, options, |x, fb, q, set| {
        let next = dpp_step(x, fb, q, params, set)?;
        let disp = linalg::sub(&next, x);
        let q_next = queue_update(q, &fb.constraint_values, &fb.constraint_subgradients, &disp)?;
        Ok((next, q_next))
    })
}

/// Online gradient descent on the losses alone. Constraints are still
/// sampled and recorded so violation metrics can be compared, but the queue
/// columns stay at zero.
pub fn run_ogd(
    problem: &ProblemInstance,
    gamma: f64,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory, SolverError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(SolverError::BadGamma(gamma));
    }
    // Recorded params describe the same step size: V / (2 alpha) = gamma.
    let params = AlgorithmParams::new(1.0, 1.0 / (2.0 * gamma), horizon).map_err(|source| SolverError::Oracle {
        round: 0,
        seed,
        source,
    })?;
    let m = problem.constraint_count();
    drive(problem, &params, seed, &RunOptions::default(), |x, fb, _q, set| {
        Ok((ogd_step(x, &fb.loss_subgradient, gamma, set)?, QueueState::zeros(m)))
    })
}

fn drive<F>(
    problem: &ProblemInstance,
    params: &AlgorithmParams,
    seed: u64,
    options: &RunOptions,
    mut step: F,
) -> Result<Trajectory, SolverError>
where
    F: FnMut(&[f64], &StepFeedback, &QueueState, &FeasibleSet) -> Result<(Vec<f64>, QueueState), SolverError>,
{
    let set = problem.set();
    let x1 = match &options.initial {
        Some(x) => set.project(x)?,
        None => set.project(&set.center())?,
    };
    let m = problem.constraint_count();
    let stream = OmegaStream::new(seed);
    let mut traj = Trajectory::new(*problem.bounds(), *params, seed, x1.clone(), vec![0.0; m]);
    let mut x = x1;
    let mut q = QueueState::zeros(m);
    for t in 1..=params.horizon {
        let omega = problem.constraints().sample(&mut stream.round_rng(t));
        let loss = problem.loss().evaluate(t, &x, &omega);
        let cons = problem.constraints().evaluate(&x, &omega);
        if !options.skip_bound_checks {
            problem
                .check_feedback(t, &x, &omega, &loss, &cons)
                .map_err(|source| SolverError::Oracle { round: t, seed, source })?;
        }
        let feedback = StepFeedback {
            loss_subgradient: loss.subgradient,
            constraint_values: cons.values,
            constraint_subgradients: cons.subgradients,
        };
        feedback.check(x.len(), m).map_err(|e| match e {
            SolverError::DimensionMismatch { what, expected, found } => SolverError::Oracle {
                round: t,
                seed,
                source: ProblemError::DimensionMismatch { what, expected, found },
            },
            other => other,
        })?;
        let (next, q_next) = step(&x, &feedback, &q, set)?;
        traj.push(RoundRecord {
            realization: omega,
            loss: loss.value,
            loss_subgradient: feedback.loss_subgradient,
            constraint_values: feedback.constraint_values,
            constraint_subgradients: feedback.constraint_subgradients,
            next_decision: next.clone(),
            next_queue: q_next.values().to_vec(),
        });
        x = next;
        q = q_next;
    }
    Ok(traj)
}
