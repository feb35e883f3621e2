//! Server model and the online problem built from a price trace.

use std::sync::Arc;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::geometry::FeasibleSet;
use crate::linalg;
use crate::problem::{
    build_problem, ConstraintEval, ConstraintOracle, LossEval, LossOracle, ProblemBounds, ProblemError,
    ProblemInstance, SlaterPoint,
};
use crate::stream::{OmegaRng, Realization};

/// One server with service rate `h(x) = h_a * ln(1 + h_b * x)` on
/// `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerModel {
    pub zone: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub h_a: f64,
    pub h_b: f64,
}

impl ServerModel {
    pub fn rate(&self, x: f64) -> f64 {
        self.h_a * (self.h_b * x).ln_1p()
    }

    pub fn rate_derivative(&self, x: f64) -> f64 {
        self.h_a * self.h_b / (1.0 + self.h_b * x)
    }

    pub fn capacity(&self) -> f64 {
        self.rate(self.x_max)
    }

    pub fn is_valid(&self) -> bool {
        self.h_a > 0.0 && self.h_b > 0.0 && self.x_min >= 0.0 && self.x_max > self.x_min && self.x_max.is_finite()
    }
}

/// `sum_i h_i(x_i)`
pub fn total_rate(servers: &[ServerModel], x: &[f64]) -> f64 {
    servers.iter().zip(x).map(|(s, xi)| s.rate(*xi)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalProcess {
    #[default]
    Poisson,
    /// Exactly `lambda` jobs every slot.
    Constant,
}

/// Arrivals `min(Poisson(lambda), cap)`. The cap sits ten standard deviations
/// above the mean so that it almost never binds, yet gives a hard bound on the
/// constraint value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalModel {
    pub mean: f64,
    pub cap: f64,
    pub process: ArrivalProcess,
}

impl ArrivalModel {
    pub fn new(mean: f64) -> Self {
        Self::with_process(mean, ArrivalProcess::Poisson)
    }

    pub fn with_process(mean: f64, process: ArrivalProcess) -> Self {
        let cap = match process {
            _ if mean <= 0.0 => 0.0,
            ArrivalProcess::Poisson => (mean + 10.0 * mean.sqrt() + 10.0).ceil(),
            ArrivalProcess::Constant => mean,
        };
        Self { mean, cap, process }
    }

    pub fn sample(&self, rng: &mut OmegaRng) -> f64 {
        if self.mean <= 0.0 || self.process == ArrivalProcess::Constant {
            return self.mean.max(0.0);
        }
        let draw: f64 = Poisson::new(self.mean).expect("positive mean").sample(rng);
        draw.min(self.cap)
    }

    /// Exact mean of the truncated distribution.
    pub fn expected(&self) -> f64 {
        if self.mean <= 0.0 || self.process == ArrivalProcess::Constant {
            return self.mean.max(0.0);
        }
        let cap = self.cap as u64;
        let mut log_p = -self.mean;
        let mut below = 0.0;
        let mut mass = 0.0;
        for k in 0..cap {
            let p = log_p.exp();
            below += k as f64 * p;
            mass += p;
            log_p += self.mean.ln() - ((k + 1) as f64).ln();
        }
        below + self.cap * (1.0 - mass).max(0.0)
    }
}

/// `f^t(x) = c(t)^T x` with `c_i(t)` the price in server `i`'s zone.
#[derive(Debug, Clone)]
pub struct DatacenterLoss {
    /// Row `t - 1` holds the per-server prices of slot `t`.
    prices: Arc<Vec<Vec<f64>>>,
    /// Row `t` holds the per-server price sums over slots `1..=t`.
    prefix: Arc<Vec<Vec<f64>>>,
}

impl DatacenterLoss {
    fn new(prices: Vec<Vec<f64>>) -> Self {
        let n = prices.first().map_or(0, |r| r.len());
        let mut prefix = Vec::with_capacity(prices.len() + 1);
        prefix.push(vec![0.0; n]);
        for row in &prices {
            let last = prefix.last().expect("nonempty");
            let next: Vec<f64> = last.iter().zip(row).map(|(a, b)| a + b).collect();
            prefix.push(next);
        }
        Self {
            prices: Arc::new(prices),
            prefix: Arc::new(prefix),
        }
    }

    pub fn prices(&self, t: usize) -> &[f64] {
        &self.prices[t - 1]
    }
}

impl LossOracle for DatacenterLoss {
    fn dimension(&self) -> usize {
        self.prices[0].len()
    }
    fn evaluate(&self, t: usize, x: &[f64], _omega: &Realization) -> LossEval {
        let c = self.prices(t);
        LossEval {
            value: linalg::dot(c, x),
            subgradient: c.to_vec(),
        }
    }
    fn subgradient_bound(&self) -> Option<f64> {
        Some(self.prices.iter().map(|c| linalg::norm(c)).fold(0.0, f64::max))
    }
    fn rounds(&self) -> Option<usize> {
        Some(self.prices.len())
    }
    fn average(&self, x: &[f64], history: &[Realization]) -> Option<LossEval> {
        let t = history.len();
        let sums = self.prefix.get(t)?;
        let mean: Vec<f64> = sums.iter().map(|s| s / t as f64).collect();
        Some(LossEval {
            value: linalg::dot(&mean, x),
            subgradient: mean,
        })
    }
}

/// `g(x; omega) = omega - sum_i h_i(x_i)`, with `omega` the arrivals.
#[derive(Debug, Clone)]
pub struct DatacenterConstraint {
    servers: Arc<Vec<ServerModel>>,
    arrivals: ArrivalModel,
}

impl DatacenterConstraint {
    fn capacity(&self) -> f64 {
        self.servers.iter().map(|s| s.capacity()).sum()
    }
    fn min_rate(&self) -> f64 {
        self.servers.iter().map(|s| s.rate(s.x_min)).sum()
    }
    fn d2(&self) -> f64 {
        let row: Vec<f64> = self.servers.iter().map(|s| s.rate_derivative(s.x_min)).collect();
        linalg::norm(&row)
    }
    fn g(&self) -> f64 {
        (self.arrivals.cap - self.min_rate()).max(self.capacity())
    }
}

impl ConstraintOracle for DatacenterConstraint {
    fn dimension(&self) -> usize {
        self.servers.len()
    }
    fn count(&self) -> usize {
        1
    }
    fn sample(&self, rng: &mut OmegaRng) -> Realization {
        Realization::scalar(self.arrivals.sample(rng))
    }
    fn evaluate(&self, x: &[f64], omega: &Realization) -> ConstraintEval {
        ConstraintEval {
            values: vec![omega.first() - total_rate(&self.servers, x)],
            subgradients: vec![self.servers.iter().zip(x).map(|(s, xi)| -s.rate_derivative(*xi)).collect()],
        }
    }
    fn expected(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![self.arrivals.expected() - total_rate(&self.servers, x)])
    }
    fn advertised_bounds(&self) -> Option<(f64, f64)> {
        Some((self.d2(), self.g()))
    }
    fn average(&self, x: &[f64], history: &[Realization]) -> Option<ConstraintEval> {
        let mean = history.iter().map(|r| r.first()).sum::<f64>() / history.len() as f64;
        Some(self.evaluate(x, &Realization::scalar(mean)))
    }
    fn slater_point(&self) -> Option<SlaterPoint> {
        let epsilon = self.capacity() - self.arrivals.expected();
        (epsilon > 0.0).then(|| SlaterPoint {
            point: self.servers.iter().map(|s| s.x_max).collect(),
            epsilon,
        })
    }
}

/// The online problem together with the pieces the baselines need.
#[derive(Debug, Clone)]
pub struct DatacenterProblem {
    pub instance: ProblemInstance,
    pub servers: Arc<Vec<ServerModel>>,
    pub arrivals: ArrivalModel,
    pub loss: Arc<DatacenterLoss>,
}

/// Builds the problem for `horizon` slots. Server `i` belongs to zone
/// `i / (n / zones)` and pays that zone's price. All bounds are analytic:
/// `D1 = max_t ||c(t)||`, `D2 = ||h'(x_min)||`, `R = ||x_max - x_min||`,
/// `G` from the arrival cap and the total capacity, `epsilon = capacity - E[omega]`.
pub fn build_datacenter_problem(
    servers: Vec<ServerModel>,
    prices: Vec<Vec<f64>>,
    arrivals: ArrivalModel,
) -> Result<DatacenterProblem, ProblemError> {
    let lower: Vec<f64> = servers.iter().map(|s| s.x_min).collect();
    let upper: Vec<f64> = servers.iter().map(|s| s.x_max).collect();
    let set = FeasibleSet::boxed(lower, upper)?;
    let servers = Arc::new(servers);
    let loss = Arc::new(DatacenterLoss::new(prices));
    let constraint = DatacenterConstraint {
        servers: servers.clone(),
        arrivals,
    };
    let (d2, g) = constraint.advertised_bounds().expect("analytic");
    let epsilon = constraint.slater_point().map(|s| s.epsilon);
    let declared = ProblemBounds::new(
        loss.subgradient_bound().expect("analytic"),
        d2,
        g,
        set.diameter(),
        epsilon,
    )?;
    let instance = build_problem(set, loss.clone(), Arc::new(constraint), Some(declared))?;
    Ok(DatacenterProblem {
        instance,
        servers,
        arrivals,
        loss,
    })
}
