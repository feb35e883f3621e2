use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::FeasibleSet;
use crate::linalg;
use crate::trajectory::Trajectory;

/// Slack below which a deterministic inequality counts as violated.
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub round: usize,
    pub k: Option<usize>,
}

/// Outcome of checking one inequality at every round of a trajectory.
/// Slack is `rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_slack: f64,
    /// Where the worst slack was attained.
    pub witness: Option<Witness>,
    pub checked: usize,
    pub tol: f64,
}

impl CheckReport {
    fn new(name: &str, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            worst_slack: f64::INFINITY,
            witness: None,
            checked: 0,
            tol,
        }
    }

    fn observe(&mut self, lhs: f64, rhs: f64, round: usize, k: Option<usize>) {
        let slack = rhs - lhs;
        self.checked += 1;
        if !(slack >= self.worst_slack) {
            self.worst_slack = slack;
            self.witness = Some(Witness { round, k });
        }
        if !(slack >= -self.tol) {
            self.passed = false;
        }
    }
}

/// `(1/2)||Q(t+1)||^2 - (1/2)||Q(t)||^2 <= sum_k Q_k(t)(g_k + s_k) + (1/2) delta^2`
pub fn check_drift_bound(trajectory: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("drift", DEFAULT_TOL);
    let m = trajectory.constraint_count();
    let delta = trajectory.bounds().delta_max(m);
    for t in 1..=trajectory.len() {
        let (q, q_next) = (trajectory.queue(t), trajectory.queue(t + 1));
        let drift = 0.5 * (linalg::dot(q_next, q_next) - linalg::dot(q, q));
        let g = trajectory.constraint_values(t);
        let s = trajectory.linearized(t);
        let cross: f64 = (0..m).map(|k| q[k] * (g[k] + s[k])).sum();
        report.observe(drift, cross + 0.5 * delta * delta, t, None);
    }
    report
}

/// For every prefix `1..=T` and every `k`, both
/// `sum_t g_k <= ||Q(T+1)|| + D2 sum_t ||x(t+1) - x(t)||` and
/// `sum_t g_k <= ||Q(T+1)|| + V T D1 D2 / (2 alpha) + sqrt(m) D2^2 / (2 alpha) sum_t ||Q(t)||`.
/// The witness round is the index of the queue on the right-hand side, `T + 1`.
pub fn check_queue_violation_bound(trajectory: &Trajectory) -> [CheckReport; 2] {
    let mut by_motion = CheckReport::new("queue-violation (displacement)", DEFAULT_TOL);
    let mut by_queue = CheckReport::new("queue-violation (queue sum)", DEFAULT_TOL);
    let m = trajectory.constraint_count();
    let b = trajectory.bounds();
    let p = trajectory.params();
    let mut sums = vec![0.0; m];
    let mut motion = 0.0;
    let mut queue_sum = 0.0;
    for t in 1..=trajectory.len() {
        for (s, g) in sums.iter_mut().zip(trajectory.constraint_values(t)) {
            *s += g;
        }
        motion += trajectory.displacement(t);
        queue_sum += trajectory.queue_norm(t);
        let q_end = trajectory.queue_norm(t + 1);
        let rhs_motion = q_end + b.d2 * motion;
        let rhs_queue = q_end
            + p.v * t as f64 * b.d1 * b.d2 / (2.0 * p.alpha)
            + (m as f64).sqrt() * b.d2 * b.d2 / (2.0 * p.alpha) * queue_sum;
        for (k, s) in sums.iter().enumerate() {
            by_motion.observe(*s, rhs_motion, t + 1, Some(k));
            by_queue.observe(*s, rhs_queue, t + 1, Some(k));
        }
    }
    [by_motion, by_queue]
}

/// `||x(t+1) - x(t)|| <= V D1 / (2 alpha) + sqrt(m) D2 ||Q(t)|| / (2 alpha)`
pub fn check_step_bound(trajectory: &Trajectory) -> CheckReport {
    let mut report = CheckReport::new("step", DEFAULT_TOL);
    let m = trajectory.constraint_count() as f64;
    let b = trajectory.bounds();
    let p = trajectory.params();
    for t in 1..=trajectory.len() {
        let rhs = (p.v * b.d1 + m.sqrt() * b.d2 * trajectory.queue_norm(t)) / (2.0 * p.alpha);
        report.observe(trajectory.displacement(t), rhs, t, None);
    }
    report
}

/// `||Q(t)|| - delta <= ||Q(t+1)|| <= ||Q(t)|| + G`
pub fn check_queue_jumps(trajectory: &Trajectory) -> [CheckReport; 2] {
    let mut up = CheckReport::new("queue jump (increase)", DEFAULT_TOL);
    let mut down = CheckReport::new("queue jump (decrease)", DEFAULT_TOL);
    let b = trajectory.bounds();
    let delta = b.delta_max(trajectory.constraint_count());
    for t in 1..=trajectory.len() {
        let (a, c) = (trajectory.queue_norm(t), trajectory.queue_norm(t + 1));
        up.observe(c, a + b.g, t, None);
        down.observe(a - delta, c, t, None);
    }
    [up, down]
}

/// The proximal optimality inequality of the decision update against
/// `samples` random comparison points `z` per round. Tolerance is relative
/// to the magnitude of the terms.
pub fn check_decision_inequality(trajectory: &Trajectory, set: &FeasibleSet, samples: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("decision update", DEFAULT_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = trajectory.constraint_count();
    let p = trajectory.params();
    for t in 1..=trajectory.len() {
        let x = trajectory.decision(t);
        let x_next = trajectory.decision(t + 1);
        let q = trajectory.queue(t);
        let mut d: Vec<f64> = trajectory.loss_subgradient(t).iter().map(|g| p.v * g).collect();
        for (k, qk) in q.iter().enumerate().take(m) {
            for (di, gi) in d.iter_mut().zip(trajectory.constraint_subgradient(t, k)) {
                *di += qk * gi;
            }
        }
        let step = linalg::sub(x_next, x);
        let lhs = linalg::dot(&d, &step) + p.alpha * linalg::dot(&step, &step);
        for _ in 0..samples {
            let z = set.sample(&mut rng);
            let to_z = linalg::sub(&z, x);
            let from_next = linalg::distance(&z, x_next);
            let rhs = linalg::dot(&d, &to_z) + p.alpha * (linalg::dot(&to_z, &to_z) - from_next * from_next);
            let scale = 1.0 + linalg::norm(&d) * set.diameter() + p.alpha * set.diameter().powi(2);
            report.observe(lhs / scale, rhs / scale, t, None);
        }
    }
    report
}

/// Every deterministic per-trajectory check except the decision inequality,
/// which needs the feasible set.
pub fn deterministic_checks(trajectory: &Trajectory) -> Vec<CheckReport> {
    let mut out = vec![check_drift_bound(trajectory)];
    out.extend(check_queue_violation_bound(trajectory));
    out.push(check_step_bound(trajectory));
    out.extend(check_queue_jumps(trajectory));
    out
}
