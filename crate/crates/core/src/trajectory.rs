//! Per-round record of a run, stored column-wise.

use crate::linalg;
use crate::problem::{AlgorithmParams, ProblemBounds};
use crate::stream::Realization;

/// Everything observed and decided in round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub realization: Realization,
    pub loss: f64,
    pub loss_subgradient: Vec<f64>,
    pub constraint_values: Vec<f64>,
    pub constraint_subgradients: Vec<Vec<f64>>,
    /// `x(t+1)`
    pub next_decision: Vec<f64>,
    /// `Q(t+1)`
    pub next_queue: Vec<f64>,
}

/// Rounds are 1-based. Decisions and queues are stored for `t = 1..=T+1`,
/// per-round feedback for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    m: usize,
    bounds: ProblemBounds,
    params: AlgorithmParams,
    seed: u64,
    decisions: Vec<f64>,
    queues: Vec<f64>,
    losses: Vec<f64>,
    constraint_values: Vec<f64>,
    loss_subgradients: Vec<f64>,
    constraint_subgradients: Vec<f64>,
    linearized: Vec<f64>,
    displacements: Vec<f64>,
    realizations: Vec<Realization>,
}

impl Trajectory {
    pub fn new(
        bounds: ProblemBounds,
        params: AlgorithmParams,
        seed: u64,
        x1: Vec<f64>,
        q1: Vec<f64>,
    ) -> Self {
        let n = x1.len();
        let m = q1.len();
        let cap = params.horizon;
        let mut decisions = Vec::with_capacity((cap + 1) * n);
        decisions.extend_from_slice(&x1);
        let mut queues = Vec::with_capacity((cap + 1) * m);
        queues.extend_from_slice(&q1);
        Self {
            n,
            m,
            bounds,
            params,
            seed,
            decisions,
            queues,
            losses: Vec::with_capacity(cap),
            constraint_values: Vec::with_capacity(cap * m),
            loss_subgradients: Vec::with_capacity(cap * n),
            constraint_subgradients: Vec::with_capacity(cap * m * n),
            linearized: Vec::with_capacity(cap * m),
            displacements: Vec::with_capacity(cap),
            realizations: Vec::with_capacity(cap),
        }
    }

    /// Builds a trajectory from recorded rounds, e.g. a hand-made or
    /// deliberately corrupted one for checker tests.
    pub fn from_parts(
        bounds: ProblemBounds,
        params: AlgorithmParams,
        seed: u64,
        x1: Vec<f64>,
        q1: Vec<f64>,
        rounds: impl IntoIterator<Item = RoundRecord>,
    ) -> Self {
        let mut traj = Self::new(bounds, params, seed, x1, q1);
        for r in rounds {
            traj.push(r);
        }
        traj
    }

    /// Appends round `len() + 1`. Panics on shape mismatch.
    pub fn push(&mut self, r: RoundRecord) {
        let (n, m) = (self.n, self.m);
        assert_eq!(r.loss_subgradient.len(), n, "loss subgradient length");
        assert_eq!(r.constraint_values.len(), m, "constraint value count");
        assert_eq!(r.constraint_subgradients.len(), m, "constraint subgradient rows");
        assert_eq!(r.next_decision.len(), n, "decision length");
        assert_eq!(r.next_queue.len(), m, "queue length");
        let start = self.decisions.len() - n;
        let disp = linalg::sub(&r.next_decision, &self.decisions[start..]);
        for row in &r.constraint_subgradients {
            assert_eq!(row.len(), n, "constraint subgradient length");
            self.linearized.push(linalg::dot(row, &disp));
            self.constraint_subgradients.extend_from_slice(row);
        }
        self.displacements.push(linalg::norm(&disp));
        self.losses.push(r.loss);
        self.loss_subgradients.extend_from_slice(&r.loss_subgradient);
        self.constraint_values.extend_from_slice(&r.constraint_values);
        self.decisions.extend_from_slice(&r.next_decision);
        self.queues.extend_from_slice(&r.next_queue);
        self.realizations.push(r.realization);
    }

    /// Number of completed rounds.
    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn constraint_count(&self) -> usize {
        self.m
    }

    pub fn bounds(&self) -> &ProblemBounds {
        &self.bounds
    }

    pub fn params(&self) -> &AlgorithmParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `x(t)` for `t` in `1..=len()+1`.
    pub fn decision(&self, t: usize) -> &[f64] {
        &self.decisions[(t - 1) * self.n..t * self.n]
    }

    /// `Q(t)` for `t` in `1..=len()+1`.
    pub fn queue(&self, t: usize) -> &[f64] {
        &self.queues[(t - 1) * self.m..t * self.m]
    }

    pub fn queue_norm(&self, t: usize) -> f64 {
        linalg::norm(self.queue(t))
    }

    pub fn final_queue(&self) -> &[f64] {
        self.queue(self.len() + 1)
    }

    pub fn loss(&self, t: usize) -> f64 {
        self.losses[t - 1]
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn loss_subgradient(&self, t: usize) -> &[f64] {
        &self.loss_subgradients[(t - 1) * self.n..t * self.n]
    }

    /// `g(x(t); omega(t))`
    pub fn constraint_values(&self, t: usize) -> &[f64] {
        &self.constraint_values[(t - 1) * self.m..t * self.m]
    }

    /// Row `k` of the constraint subgradient matrix at round `t`.
    pub fn constraint_subgradient(&self, t: usize, k: usize) -> &[f64] {
        let start = ((t - 1) * self.m + k) * self.n;
        &self.constraint_subgradients[start..start + self.n]
    }

    /// `s_k(t) = grad g_k(x(t))^T (x(t+1) - x(t))` for every `k`.
    pub fn linearized(&self, t: usize) -> &[f64] {
        &self.linearized[(t - 1) * self.m..t * self.m]
    }

    /// `||x(t+1) - x(t)||`
    pub fn displacement(&self, t: usize) -> f64 {
        self.displacements[t - 1]
    }

    pub fn realization(&self, t: usize) -> &Realization {
        &self.realizations[t - 1]
    }

    /// Round `t` as it was pushed.
    pub fn round(&self, t: usize) -> RoundRecord {
        RoundRecord {
            realization: self.realization(t).clone(),
            loss: self.loss(t),
            loss_subgradient: self.loss_subgradient(t).to_vec(),
            constraint_values: self.constraint_values(t).to_vec(),
            constraint_subgradients: (0..self.m).map(|k| self.constraint_subgradient(t, k).to_vec()).collect(),
            next_decision: self.decision(t + 1).to_vec(),
            next_queue: self.queue(t + 1).to_vec(),
        }
    }

    /// Recomputes `Q(2..=T+1)` from `Q(1)` and the recorded constraint values
    /// and linearized terms using the queue update rule.
    pub fn replay_queues(&self) -> Vec<Vec<f64>> {
        let mut q = self.queue(1).to_vec();
        let mut out = Vec::with_capacity(self.len());
        for t in 1..=self.len() {
            let g = self.constraint_values(t);
            let s = self.linearized(t);
            for k in 0..self.m {
                q[k] = (q[k] + g[k] + s[k]).max(0.0);
            }
            out.push(q.clone());
        }
        out
    }
}
