//! Stock test instances with certified bounds and closed-form expectations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::datacenter::{self, ExperimentConfig};
use crate::geometry::FeasibleSet;
use crate::linalg;
use crate::problem::{
    build_problem, ConstraintEval, ConstraintOracle, LossEval, LossOracle, NoConstraints, ProblemBounds,
    ProblemInstance, SlaterPoint,
};
use crate::stream::{OmegaRng, Realization};

/// `f^t(x) = x` on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityLoss;

impl LossOracle for IdentityLoss {
    fn dimension(&self) -> usize {
        1
    }
    fn evaluate(&self, _t: usize, x: &[f64], _omega: &Realization) -> LossEval {
        LossEval {
            value: x[0],
            subgradient: vec![1.0],
        }
    }
    fn subgradient_bound(&self) -> Option<f64> {
        Some(1.0)
    }
    fn average(&self, x: &[f64], _history: &[Realization]) -> Option<LossEval> {
        Some(self.evaluate(1, x, &Realization::empty()))
    }
}

/// `g(x; omega) = offset - x + omega`, `omega ~ U[-spread, spread]`.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedHalfLine {
    pub offset: f64,
    pub spread: f64,
}

impl ConstraintOracle for PerturbedHalfLine {
    fn dimension(&self) -> usize {
        1
    }
    fn count(&self) -> usize {
        1
    }
    fn sample(&self, rng: &mut OmegaRng) -> Realization {
        Realization::scalar(rng.random_range(-self.spread..=self.spread))
    }
    fn evaluate(&self, x: &[f64], omega: &Realization) -> ConstraintEval {
        ConstraintEval {
            values: vec![self.offset - x[0] + omega.first()],
            subgradients: vec![vec![-1.0]],
        }
    }
    fn expected(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![self.offset - x[0]])
    }
    fn advertised_bounds(&self) -> Option<(f64, f64)> {
        // On [0, 1]: |offset - x + omega| <= max(offset, 1 - offset) + spread.
        Some((1.0, self.offset.max(1.0 - self.offset) + self.spread))
    }
    fn slater_point(&self) -> Option<SlaterPoint> {
        let epsilon = 1.0 - self.offset;
        (epsilon > 0.0).then(|| SlaterPoint {
            point: vec![1.0],
            epsilon,
        })
    }
    fn average(&self, x: &[f64], history: &[Realization]) -> Option<ConstraintEval> {
        let mean = history.iter().map(|r| r.first()).sum::<f64>() / history.len() as f64;
        Some(self.evaluate(x, &Realization::scalar(mean)))
    }
}

/// The 1-D linear instance: `f^t(x) = x`, `g(x; omega) = 0.5 - x + omega`
/// with `omega ~ U[-0.1, 0.1]`, on `[0, 1]`. The expected constraint is
/// `0.5 - x`, so the best fixed feasible decision is `x* = 0.5`.
pub fn linear_1d() -> ProblemInstance {
    let cons = PerturbedHalfLine {
        offset: 0.5,
        spread: 0.1,
    };
    let bounds = ProblemBounds::new(1.0, 1.0, 0.6, 1.0, Some(0.5)).expect("valid");
    build_problem(
        FeasibleSet::cube(1, 0.0, 1.0).expect("valid"),
        Arc::new(IdentityLoss),
        Arc::new(cons),
        Some(bounds),
    )
    .expect("stock instance validates")
}

/// `f^t(x) = ||x - c_t||^2` with `c_t` circling inside `[0, 1]^2`.
#[derive(Debug, Clone, Copy)]
pub struct MovingQuadratic {
    pub period: f64,
}

impl MovingQuadratic {
    pub fn target(&self, t: usize) -> [f64; 2] {
        let phase = 2.0 * PI * t as f64 / self.period;
        [0.5 + 0.4 * phase.cos(), 0.5 + 0.4 * phase.sin()]
    }
}

impl LossOracle for MovingQuadratic {
    fn dimension(&self) -> usize {
        2
    }
    fn evaluate(&self, t: usize, x: &[f64], _omega: &Realization) -> LossEval {
        let c = self.target(t);
        let diff = [x[0] - c[0], x[1] - c[1]];
        LossEval {
            value: diff[0] * diff[0] + diff[1] * diff[1],
            subgradient: vec![2.0 * diff[0], 2.0 * diff[1]],
        }
    }
    fn subgradient_bound(&self) -> Option<f64> {
        // x and c_t both lie in the unit square.
        Some(2.0 * 2f64.sqrt())
    }
}

/// `g(x; omega) = (1 + omega) x_1 - cap`, `omega ~ U[-spread, spread]`.
#[derive(Debug, Clone, Copy)]
pub struct RandomCoefficientCap {
    pub cap: f64,
    pub spread: f64,
}

impl ConstraintOracle for RandomCoefficientCap {
    fn dimension(&self) -> usize {
        2
    }
    fn count(&self) -> usize {
        1
    }
    fn sample(&self, rng: &mut OmegaRng) -> Realization {
        Realization::scalar(rng.random_range(-self.spread..=self.spread))
    }
    fn evaluate(&self, x: &[f64], omega: &Realization) -> ConstraintEval {
        let a = 1.0 + omega.first();
        ConstraintEval {
            values: vec![a * x[0] - self.cap],
            subgradients: vec![vec![a, 0.0]],
        }
    }
    fn expected(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![x[0] - self.cap])
    }
    fn advertised_bounds(&self) -> Option<(f64, f64)> {
        // x_1 in [0, 1] on the simplex.
        let top = 1.0 + self.spread;
        Some((top, (top - self.cap).max(self.cap)))
    }
    fn slater_point(&self) -> Option<SlaterPoint> {
        Some(SlaterPoint {
            point: vec![0.0, 1.0],
            epsilon: self.cap,
        })
    }
    fn average(&self, x: &[f64], history: &[Realization]) -> Option<ConstraintEval> {
        let mean = history.iter().map(|r| r.first()).sum::<f64>() / history.len() as f64;
        Some(self.evaluate(x, &Realization::scalar(mean)))
    }
}

/// The 2-D instance: moving quadratic loss over the unit simplex with the
/// stochastic cap `(1 + omega) x_1 <= 0.4`, `omega ~ U[-0.2, 0.2]`.
pub fn quadratic_simplex_2d() -> ProblemInstance {
    let cons = RandomCoefficientCap { cap: 0.4, spread: 0.2 };
    let bounds = ProblemBounds::new(2.0 * 2f64.sqrt(), 1.2, 0.8, 2f64.sqrt(), Some(0.4)).expect("valid");
    build_problem(
        FeasibleSet::simplex(2, 1.0).expect("valid"),
        Arc::new(MovingQuadratic { period: 97.0 }),
        Arc::new(cons),
        Some(bounds),
    )
    .expect("stock instance validates")
}

/// `f(x) = c^T x` with a fixed vector `c`.
#[derive(Debug, Clone)]
pub struct FixedLinear {
    pub c: Vec<f64>,
}

impl LossOracle for FixedLinear {
    fn dimension(&self) -> usize {
        self.c.len()
    }
    fn evaluate(&self, _t: usize, x: &[f64], _omega: &Realization) -> LossEval {
        LossEval {
            value: linalg::dot(&self.c, x),
            subgradient: self.c.clone(),
        }
    }
    fn subgradient_bound(&self) -> Option<f64> {
        Some(linalg::norm(&self.c))
    }
    fn average(&self, x: &[f64], _history: &[Realization]) -> Option<LossEval> {
        Some(self.evaluate(1, x, &Realization::empty()))
    }
}

/// The deterministic constraint `1 - x_1 - x_2 <= 0`.
#[derive(Debug, Clone, Copy)]
pub struct CoverConstraint;

impl ConstraintOracle for CoverConstraint {
    fn dimension(&self) -> usize {
        2
    }
    fn count(&self) -> usize {
        1
    }
    fn sample(&self, _rng: &mut OmegaRng) -> Realization {
        Realization::empty()
    }
    fn evaluate(&self, x: &[f64], _omega: &Realization) -> ConstraintEval {
        ConstraintEval {
            values: vec![1.0 - x[0] - x[1]],
            subgradients: vec![vec![-1.0, -1.0]],
        }
    }
    fn expected(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.evaluate(x, &Realization::empty()).values)
    }
    fn advertised_bounds(&self) -> Option<(f64, f64)> {
        // On [0, 5]^2: 1 - x_1 - x_2 ranges over [-9, 1].
        Some((2f64.sqrt(), 9.0))
    }
    fn slater_point(&self) -> Option<SlaterPoint> {
        Some(SlaterPoint {
            point: vec![5.0, 5.0],
            epsilon: 9.0,
        })
    }
    fn average(&self, x: &[f64], _history: &[Realization]) -> Option<ConstraintEval> {
        Some(self.evaluate(x, &Realization::empty()))
    }
}

/// `min x_1 + x_2` over `[0, 5]^2` subject to `1 - x_1 - x_2 <= 0`; the
/// optimal value is 1.
pub fn lp_2d() -> ProblemInstance {
    let bounds = ProblemBounds::new(2f64.sqrt(), 2f64.sqrt(), 9.0, 5.0 * 2f64.sqrt(), Some(9.0)).expect("valid");
    build_problem(
        FeasibleSet::cube(2, 0.0, 5.0).expect("valid"),
        Arc::new(FixedLinear { c: vec![1.0, 1.0] }),
        Arc::new(CoverConstraint),
        Some(bounds),
    )
    .expect("stock instance validates")
}

/// `f^t(x) = x` on `[0, 1]` with no constraints.
pub fn unconstrained_1d() -> ProblemInstance {
    build_problem(
        FeasibleSet::cube(1, 0.0, 1.0).expect("valid"),
        Arc::new(IdentityLoss),
        Arc::new(NoConstraints { dim: 1 }),
        Some(ProblemBounds::new(1.0, 0.0, 0.0, 1.0, None).expect("valid")),
    )
    .expect("stock instance validates")
}

/// The desk-scale data center (10 servers, 2160 slots, synthetic trace).
pub fn datacenter_desk() -> ProblemInstance {
    let config = ExperimentConfig::default();
    let trace = config.load_trace().expect("synthetic trace");
    datacenter::build_problem_from_config(&config, &trace)
        .expect("desk config validates")
        .instance
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StockInstance {
    Linear1d,
    QuadraticSimplex2d,
    Lp2d,
    Unconstrained1d,
    DatacenterDesk,
}

impl StockInstance {
    pub const ALL: [StockInstance; 5] = [
        StockInstance::Linear1d,
        StockInstance::QuadraticSimplex2d,
        StockInstance::Lp2d,
        StockInstance::Unconstrained1d,
        StockInstance::DatacenterDesk,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StockInstance::Linear1d => "linear-1d",
            StockInstance::QuadraticSimplex2d => "quadratic-simplex-2d",
            StockInstance::Lp2d => "lp-2d",
            StockInstance::Unconstrained1d => "unconstrained-1d",
            StockInstance::DatacenterDesk => "datacenter-desk",
        }
    }

    pub fn build(&self) -> ProblemInstance {
        match self {
            StockInstance::Linear1d => linear_1d(),
            StockInstance::QuadraticSimplex2d => quadratic_simplex_2d(),
            StockInstance::Lp2d => lp_2d(),
            StockInstance::Unconstrained1d => unconstrained_1d(),
            StockInstance::DatacenterDesk => datacenter_desk(),
        }
    }

    /// Horizon used by the verification suite.
    pub fn default_horizon(&self) -> usize {
        match self {
            StockInstance::DatacenterDesk => 2160,
            _ => 1000,
        }
    }
}

impl fmt::Display for StockInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StockInstance {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StockInstance::ALL
            .into_iter()
            .find(|i| i.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = StockInstance::ALL.iter().map(|i| i.name()).collect();
                format!("unknown instance `{s}` (expected one of {})", names.join(", "))
            })
    }
}
