//! Comparators: the best fixed decision in hindsight and the two
//! data-center heuristics.

use thiserror::Error;

use crate::datacenter::ServerModel;
use crate::linalg;
use crate::problem::{ConstraintEval, LossEval, ProblemInstance};
use crate::stream::Realization;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("no feasible point found after {escalations} penalty escalations (max mean violation {violation})")]
    Infeasible { escalations: usize, violation: f64 },
    #[error("empty history")]
    EmptyHistory,
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HindsightSolution {
    pub x_star: Vec<f64>,
    /// `sum_t f^t(x*)`
    pub objective: f64,
    /// `(1/T) sum_t g_k(x*; omega(t))`
    pub empirical_constraint_means: Vec<f64>,
    /// Closed-form `E[g_k(x*)]` when the oracle provides it.
    pub expected_constraints: Option<Vec<f64>>,
    /// Largest positive part of the empirical constraint means.
    pub solver_residual: f64,
    pub penalty: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HindsightOptions {
    pub tol: f64,
    pub epoch: usize,
    pub initial_penalty: f64,
    pub max_escalations: usize,
}

impl Default for HindsightOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            epoch: 100,
            initial_penalty: 1.0,
            max_escalations: 10,
        }
    }
}

struct Averaged {
    objective: f64,
    gradient: Vec<f64>,
    means: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

fn averaged(problem: &ProblemInstance, history: &[Realization], x: &[f64]) -> Averaged {
    let n = x.len();
    let m = problem.constraint_count();
    let scale = 1.0 / history.len() as f64;
    let loss = problem.loss().average(x, history).unwrap_or_else(|| {
        let mut acc = LossEval {
            value: 0.0,
            subgradient: vec![0.0; n],
        };
        for (i, omega) in history.iter().enumerate() {
            let e = problem.loss().evaluate(i + 1, x, omega);
            acc.value += e.value;
            for (a, g) in acc.subgradient.iter_mut().zip(&e.subgradient) {
                *a += g;
            }
        }
        acc.value *= scale;
        acc.subgradient.iter_mut().for_each(|g| *g *= scale);
        acc
    });
    let cons = if m == 0 {
        ConstraintEval::empty()
    } else {
        problem.constraints().average(x, history).unwrap_or_else(|| {
            let mut acc = ConstraintEval {
                values: vec![0.0; m],
                subgradients: vec![vec![0.0; n]; m],
            };
            for omega in history {
                let e = problem.constraints().evaluate(x, omega);
                for k in 0..m {
                    acc.values[k] += e.values[k];
                    for (a, g) in acc.subgradients[k].iter_mut().zip(&e.subgradients[k]) {
                        *a += g;
                    }
                }
            }
            acc.values.iter_mut().for_each(|g| *g *= scale);
            acc.subgradients.iter_mut().flatten().for_each(|g| *g *= scale);
            acc
        })
    };
    Averaged {
        objective: loss.value,
        gradient: loss.subgradient,
        means: cons.values,
        rows: cons.subgradients,
    }
}

/// Minimizes `sum_t f^t(x)` over `{x in set : (1/T) sum_t g_k(x; omega(t)) <= 0}`.
///
/// Projected normalized subgradient descent on the averaged exact-penalty
/// objective `(1/T) sum f^t + rho * sum_k max(mean g_k, 0)`. The step halves
/// whenever a 100-iteration epoch improves the best value by less than `tol`,
/// and the level stops once the step falls below `tol * max(R, 1)`. If the
/// best iterate is still infeasible, `rho` grows tenfold, at most ten times.
pub fn hindsight_solve(
    problem: &ProblemInstance,
    history: &[Realization],
    tol: f64,
) -> Result<HindsightSolution, BaselineError> {
    hindsight_solve_with(
        problem,
        history,
        &HindsightOptions {
            tol,
            ..HindsightOptions::default()
        },
    )
}

pub fn hindsight_solve_with(
    problem: &ProblemInstance,
    history: &[Realization],
    options: &HindsightOptions,
) -> Result<HindsightSolution, BaselineError> {
    if history.is_empty() {
        return Err(BaselineError::EmptyHistory);
    }
    let set = problem.set();
    let r = set.diameter().max(1.0);
    let floor = options.tol * r;
    let penalized = |a: &Averaged, rho: f64| a.objective + rho * a.means.iter().map(|g| g.max(0.0)).sum::<f64>();
    let violation = |a: &Averaged| a.means.iter().fold(0.0f64, |acc, g| acc.max(*g));

    let mut x = set.project(&set.center()).expect("center has set dimension");
    let mut rho = options.initial_penalty;
    let mut iterations = 0;
    let mut worst = f64::INFINITY;
    for escalation in 0..=options.max_escalations {
        let mut step = r / 2.0;
        let mut best_x = x.clone();
        let mut best_val = penalized(&averaged(problem, history, &x), rho);
        let mut feasible_best: Option<(f64, Vec<f64>)> = None;
        'level: loop {
            let epoch_start = best_val;
            for _ in 0..options.epoch {
                let a = averaged(problem, history, &x);
                iterations += 1;
                let val = penalized(&a, rho);
                if val < best_val {
                    best_val = val;
                    best_x = x.clone();
                }
                if violation(&a) <= options.tol && feasible_best.as_ref().is_none_or(|(v, _)| a.objective < *v) {
                    feasible_best = Some((a.objective, x.clone()));
                }
                let mut s = a.gradient.clone();
                for (k, g) in a.means.iter().enumerate() {
                    if *g > 0.0 {
                        for (si, gi) in s.iter_mut().zip(&a.rows[k]) {
                            *si += rho * gi;
                        }
                    }
                }
                let norm = linalg::norm(&s);
                if norm == 0.0 {
                    break 'level;
                }
                let target: Vec<f64> = x.iter().zip(&s).map(|(xi, si)| xi - step * si / norm).collect();
                x = set.project(&target).expect("dimension checked");
            }
            if epoch_start - best_val < options.tol {
                if step <= floor {
                    break;
                }
                step /= 2.0;
                x = best_x.clone();
            }
        }
        // The penalty is exact once the penalized minimum is no lower than
        // the best feasible value; otherwise rho is below the multiplier.
        let gap_tol = options.tol.sqrt() * (1.0 + best_val.abs());
        if let Some((obj, x_star)) = feasible_best.filter(|(obj, _)| *obj - best_val <= gap_tol) {
            let a = averaged(problem, history, &x_star);
            debug_assert_eq!(a.objective, obj);
            let t = history.len() as f64;
            return Ok(HindsightSolution {
                objective: a.objective * t,
                solver_residual: violation(&a),
                expected_constraints: problem.constraints().expected(&x_star),
                empirical_constraint_means: a.means,
                x_star,
                penalty: rho,
                iterations,
            });
        }
        worst = violation(&averaged(problem, history, &best_x));
        if escalation < options.max_escalations {
            rho *= 10.0;
            x = best_x;
        }
    }
    Err(BaselineError::Infeasible {
        escalations: options.max_escalations,
        violation: worst,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactDecision {
    pub power: Vec<f64>,
    /// Some server could not reach the per-server target rate.
    pub saturated: bool,
}

/// Smallest `x` in `[x_min, x_max]` with `h(x) >= rate`, to within 1e-10.
/// Returns `(x, saturated)`.
pub fn inverse_rate(server: &ServerModel, rate: f64) -> (f64, bool) {
    if rate <= server.rate(server.x_min) {
        return (server.x_min, false);
    }
    if rate > server.capacity() {
        return (server.x_max, true);
    }
    let (mut lo, mut hi) = (server.x_min, server.x_max);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if server.rate(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), false)
}

/// Splits the estimated arrivals evenly: every server targets
/// `arrival_estimate / n`.
pub fn react_policy(arrival_estimate: f64, servers: &[ServerModel]) -> ReactDecision {
    let mu = arrival_estimate.max(0.0) / servers.len() as f64;
    let mut saturated = false;
    let power = servers
        .iter()
        .map(|s| {
            let (x, sat) = inverse_rate(s, mu);
            saturated |= sat;
            x
        })
        .collect();
    ReactDecision { power, saturated }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowPowerDecision {
    pub power: Vec<f64>,
    /// `max(required_rate - delivered rate, 0)`
    pub shortfall: f64,
}

/// Fills servers to `x_max` in ascending order of estimated price (ties by
/// index) until their combined capacity reaches `required_rate`. Everyone
/// else stays at `x_min`.
pub fn lowpower_policy(price_estimates: &[f64], required_rate: f64, servers: &[ServerModel]) -> LowPowerDecision {
    let eligible: Vec<usize> = (0..servers.len()).collect();
    fill_cheapest(price_estimates, required_rate, servers, &eligible)
}

/// [`lowpower_policy`] restricted to servers in the `zones` cheapest zones,
/// where a zone's price is the mean estimate of its servers.
pub fn lowpower_policy_zoned(
    price_estimates: &[f64],
    required_rate: f64,
    servers: &[ServerModel],
    zones: usize,
) -> LowPowerDecision {
    let mut zone_ids: Vec<usize> = servers.iter().map(|s| s.zone).collect();
    zone_ids.sort_unstable();
    zone_ids.dedup();
    let mut zone_prices: Vec<(f64, usize)> = zone_ids
        .iter()
        .map(|&z| {
            let members: Vec<f64> = servers
                .iter()
                .zip(price_estimates)
                .filter(|(s, _)| s.zone == z)
                .map(|(_, p)| *p)
                .collect();
            (members.iter().sum::<f64>() / members.len() as f64, z)
        })
        .collect();
    zone_prices.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = zone_prices.iter().take(zones).map(|(_, z)| *z).collect();
    let eligible: Vec<usize> = (0..servers.len()).filter(|&i| chosen.contains(&servers[i].zone)).collect();
    fill_cheapest(price_estimates, required_rate, servers, &eligible)
}

fn fill_cheapest(
    price_estimates: &[f64],
    required_rate: f64,
    servers: &[ServerModel],
    eligible: &[usize],
) -> LowPowerDecision {
    let mut order = eligible.to_vec();
    order.sort_by(|&a, &b| price_estimates[a].total_cmp(&price_estimates[b]).then(a.cmp(&b)));
    let mut power: Vec<f64> = servers.iter().map(|s| s.x_min).collect();
    let mut filled = 0.0;
    for i in order {
        if filled >= required_rate {
            break;
        }
        power[i] = servers[i].x_max;
        filled += servers[i].capacity();
    }
    let delivered: f64 = servers.iter().zip(&power).map(|(s, x)| s.rate(*x)).sum();
    LowPowerDecision {
        power,
        shortfall: (required_rate - delivered).max(0.0),
    }
}
