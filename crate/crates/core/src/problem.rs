//! Problem instances: the fixed set, the loss and constraint oracles, and
//! the bound constants the analysis needs.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{FeasibleSet, GeometryError};
use crate::linalg;
use crate::stream::{OmegaRng, OmegaStream, Realization};

/// Relative slack applied when comparing observed norms against bounds.
const BOUND_RTOL: f64 = 1e-9;
/// Inflation applied to empirically estimated bounds.
pub const ESTIMATE_INFLATION: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Loss subgradient norm bound D1.
    LossSubgradient,
    /// Constraint subgradient norm bound D2 (per constraint row).
    ConstraintSubgradient,
    /// Constraint vector norm bound G.
    ConstraintValue,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundKind::LossSubgradient => write!(f, "D1 (loss subgradient norm)"),
            BoundKind::ConstraintSubgradient => write!(f, "D2 (constraint subgradient norm)"),
            BoundKind::ConstraintValue => write!(f, "G (constraint vector norm)"),
        }
    }
}

/// A sampled point at which a declared bound failed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub kind: BoundKind,
    pub observed: f64,
    pub bound: f64,
    pub round: usize,
    pub point: Vec<f64>,
    pub realization: Realization,
}

impl fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} bound {} exceeded: observed {} at round {} point {:?} realization {:?}",
            self.kind,
            self.bound,
            self.observed,
            self.round,
            self.point,
            self.realization.values()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{what} has dimension {found}, feasible set has {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("oracle returned {found} constraint entries, expected {expected}")]
    ConstraintCount { expected: usize, found: usize },
    #[error("declared bound violated: {0}")]
    BoundViolated(Box<BoundViolation>),
    #[error("bound {name} must be finite and nonnegative, got {value}")]
    InvalidBound { name: &'static str, value: f64 },
    #[error("Slater margin epsilon={epsilon} exceeds constraint bound G={g}")]
    EpsilonExceedsG { epsilon: f64, g: f64 },
    #[error("algorithm parameter {name} invalid: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("queue entry {index} is negative ({value})")]
    NegativeQueue { index: usize, value: f64 },
}

/// Upper bounds on subgradients, constraint values and the set diameter,
/// plus the optional Slater margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemBounds {
    pub d1: f64,
    pub d2: f64,
    pub g: f64,
    pub r: f64,
    pub epsilon: Option<f64>,
}

impl ProblemBounds {
    pub fn new(d1: f64, d2: f64, g: f64, r: f64, epsilon: Option<f64>) -> Result<Self, ProblemError> {
        let bounds = Self { d1, d2, g, r, epsilon };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        for (name, value) in [("D1", self.d1), ("D2", self.d2), ("G", self.g), ("R", self.r)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ProblemError::InvalidBound { name, value });
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(ProblemError::InvalidBound {
                    name: "epsilon",
                    value: eps,
                });
            }
            if eps > self.g {
                return Err(ProblemError::EpsilonExceedsG { epsilon: eps, g: self.g });
            }
        }
        Ok(())
    }

    /// `G + sqrt(m) * D2 * R`: the per-round bound on queue-vector increments.
    pub fn delta_max(&self, constraint_count: usize) -> f64 {
        self.g + (constraint_count as f64).sqrt() * self.d2 * self.r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub subgradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEval {
    pub values: Vec<f64>,
    /// Row `k` is a subgradient of `g_k` at the evaluation point.
    pub subgradients: Vec<Vec<f64>>,
}

impl ConstraintEval {
    pub fn empty() -> Self {
        Self {
            values: Vec::new(),
            subgradients: Vec::new(),
        }
    }
}

/// A point with `E[g_k(x; omega)] <= -epsilon` for every constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterPoint {
    pub point: Vec<f64>,
    pub epsilon: f64,
}

/// Per-round convex losses `f^t`.
///
/// The solver calls `evaluate` for round `t` only after `x(t)` is committed,
/// passing the realization `omega(t)` of that same round. Oracles never see
/// realizations of later rounds.
pub trait LossOracle: Send + Sync {
    fn dimension(&self) -> usize;

    fn evaluate(&self, t: usize, x: &[f64], omega: &Realization) -> LossEval;

    /// A certified bound on subgradient norms, if the oracle knows one.
    fn subgradient_bound(&self) -> Option<f64> {
        None
    }

    /// Number of distinct rounds the oracle is defined for (e.g. the length
    /// of a price trace). Bound estimation samples rounds from `1..=rounds`.
    fn rounds(&self) -> Option<usize> {
        None
    }

    /// Mean of `f^t(x)` and its subgradient over rounds `1..=history.len()`,
    /// for oracles that can do better than evaluating every round.
    fn average(&self, _x: &[f64], _history: &[Realization]) -> Option<LossEval> {
        None
    }
}

/// Stochastic constraints `g_k(x; omega)` with i.i.d. realizations.
pub trait ConstraintOracle: Send + Sync {
    fn dimension(&self) -> usize;

    /// Number of constraint functions `m`.
    fn count(&self) -> usize;

    fn sample(&self, rng: &mut OmegaRng) -> Realization;

    fn evaluate(&self, x: &[f64], omega: &Realization) -> ConstraintEval;

    /// Closed-form `E[g(x; omega)]`, when known.
    fn expected(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Certified `(D2, G)`, when known.
    fn advertised_bounds(&self) -> Option<(f64, f64)> {
        None
    }

    fn slater_point(&self) -> Option<SlaterPoint> {
        None
    }

    /// Sample mean of `g(x; omega)` and its subgradients over `history`,
    /// for oracles that can do better than evaluating every realization.
    fn average(&self, _x: &[f64], _history: &[Realization]) -> Option<ConstraintEval> {
        None
    }
}

type LossFn = dyn Fn(usize, &[f64], &Realization) -> LossEval + Send + Sync;
type SamplerFn = dyn Fn(&mut OmegaRng) -> Realization + Send + Sync;
type ConstraintFn = dyn Fn(&[f64], &Realization) -> ConstraintEval + Send + Sync;
type ExpectationFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Loss oracle backed by a closure.
pub struct FnLoss {
    dim: usize,
    eval: Box<LossFn>,
    bound: Option<f64>,
    rounds: Option<usize>,
}

impl FnLoss {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(usize, &[f64], &Realization) -> LossEval + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Box::new(eval),
            bound: None,
            rounds: None,
        }
    }

    pub fn with_bound(mut self, d1: f64) -> Self {
        self.bound = Some(d1);
        self
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = Some(rounds);
        self
    }
}

impl fmt::Debug for FnLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnLoss")
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl LossOracle for FnLoss {
    fn dimension(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, t: usize, x: &[f64], omega: &Realization) -> LossEval {
        (self.eval)(t, x, omega)
    }
    fn subgradient_bound(&self) -> Option<f64> {
        self.bound
    }
    fn rounds(&self) -> Option<usize> {
        self.rounds
    }
}

/// Constraint oracle backed by closures.
pub struct FnConstraint {
    dim: usize,
    count: usize,
    sampler: Box<SamplerFn>,
    eval: Box<ConstraintFn>,
    expected: Option<Box<ExpectationFn>>,
    bounds: Option<(f64, f64)>,
    slater: Option<SlaterPoint>,
}

impl FnConstraint {
    pub fn new<S, E>(dim: usize, count: usize, sampler: S, eval: E) -> Self
    where
        S: Fn(&mut OmegaRng) -> Realization + Send + Sync + 'static,
        E: Fn(&[f64], &Realization) -> ConstraintEval + Send + Sync + 'static,
    {
        Self {
            dim,
            count,
            sampler: Box::new(sampler),
            eval: Box::new(eval),
            expected: None,
            bounds: None,
            slater: None,
        }
    }

    pub fn with_expectation<F>(mut self, expected: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.expected = Some(Box::new(expected));
        self
    }

    pub fn with_bounds(mut self, d2: f64, g: f64) -> Self {
        self.bounds = Some((d2, g));
        self
    }

    pub fn with_slater(mut self, point: Vec<f64>, epsilon: f64) -> Self {
        self.slater = Some(SlaterPoint { point, epsilon });
        self
    }
}

impl fmt::Debug for FnConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnConstraint")
            .field("dim", &self.dim)
            .field("count", &self.count)
            .field("bounds", &self.bounds)
            .field("slater", &self.slater)
            .finish_non_exhaustive()
    }
}

impl ConstraintOracle for FnConstraint {
    fn dimension(&self) -> usize {
        self.dim
    }
    fn count(&self) -> usize {
        self.count
    }
    fn sample(&self, rng: &mut OmegaRng) -> Realization {
        (self.sampler)(rng)
    }
    fn evaluate(&self, x: &[f64], omega: &Realization) -> ConstraintEval {
        (self.eval)(x, omega)
    }
    fn expected(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.expected.as_ref().map(|e| e(x))
    }
    fn advertised_bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }
    fn slater_point(&self) -> Option<SlaterPoint> {
        self.slater.clone()
    }
}

/// The `m = 0` case: no functional constraints at all.
#[derive(Debug, Clone, Copy)]
pub struct NoConstraints {
    pub dim: usize,
}

impl ConstraintOracle for NoConstraints {
    fn dimension(&self) -> usize {
        self.dim
    }
    fn count(&self) -> usize {
        0
    }
    fn sample(&self, _rng: &mut OmegaRng) -> Realization {
        Realization::empty()
    }
    fn evaluate(&self, _x: &[f64], _omega: &Realization) -> ConstraintEval {
        ConstraintEval::empty()
    }
    fn expected(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(Vec::new())
    }
    fn advertised_bounds(&self) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

/// Where each bound constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    /// Passed to [`build_problem`] by the caller.
    Declared,
    /// Reported by the oracle itself.
    Advertised,
    /// Sampled maximum inflated by [`ESTIMATE_INFLATION`]; an estimate, not a
    /// certificate.
    Estimated,
    /// Computed exactly from the feasible set.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundProvenance {
    pub d1: BoundSource,
    pub d2: BoundSource,
    pub g: BoundSource,
    pub r: BoundSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Number of sampled `(x, omega, t)` triples; at least 1000 is advisable.
    pub samples: usize,
    pub seed: u64,
    /// Round range sampled when the loss oracle does not report one.
    pub default_rounds: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0x5eed_0b0d,
            default_rounds: 1000,
        }
    }
}

/// A validated online optimization problem.
#[derive(Clone)]
pub struct ProblemInstance {
    set: FeasibleSet,
    loss: Arc<dyn LossOracle>,
    constraints: Arc<dyn ConstraintOracle>,
    bounds: ProblemBounds,
    provenance: BoundProvenance,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("set", &self.set)
            .field("dimension", &self.dimension())
            .field("constraint_count", &self.constraint_count())
            .field("bounds", &self.bounds)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl ProblemInstance {
    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }
    pub fn loss(&self) -> &dyn LossOracle {
        self.loss.as_ref()
    }
    pub fn constraints(&self) -> &dyn ConstraintOracle {
        self.constraints.as_ref()
    }
    pub fn bounds(&self) -> &ProblemBounds {
        &self.bounds
    }
    pub fn provenance(&self) -> &BoundProvenance {
        &self.provenance
    }
    pub fn dimension(&self) -> usize {
        self.set.dim()
    }
    pub fn constraint_count(&self) -> usize {
        self.constraints.count()
    }

    /// Rebuilds the instance with `declared` bounds, re-running validation.
    pub fn redeclare(&self, declared: ProblemBounds) -> Result<ProblemInstance, ProblemError> {
        build_problem(self.set.clone(), self.loss.clone(), self.constraints.clone(), Some(declared))
    }

    /// Checks one round of oracle output against the instance bounds.
    pub fn check_feedback(
        &self,
        t: usize,
        x: &[f64],
        omega: &Realization,
        loss: &LossEval,
        cons: &ConstraintEval,
    ) -> Result<(), ProblemError> {
        self.check_shapes(loss, cons)?;
        let witness = |kind, observed, bound| {
            ProblemError::BoundViolated(Box::new(BoundViolation {
                kind,
                observed,
                bound,
                round: t,
                point: x.to_vec(),
                realization: omega.clone(),
            }))
        };
        let d1 = linalg::norm(&loss.subgradient);
        if exceeds(d1, self.bounds.d1) {
            return Err(witness(BoundKind::LossSubgradient, d1, self.bounds.d1));
        }
        for row in &cons.subgradients {
            let d2 = linalg::norm(row);
            if exceeds(d2, self.bounds.d2) {
                return Err(witness(BoundKind::ConstraintSubgradient, d2, self.bounds.d2));
            }
        }
        let g = linalg::norm(&cons.values);
        if exceeds(g, self.bounds.g) {
            return Err(witness(BoundKind::ConstraintValue, g, self.bounds.g));
        }
        Ok(())
    }

    fn check_shapes(&self, loss: &LossEval, cons: &ConstraintEval) -> Result<(), ProblemError> {
        let n = self.dimension();
        let m = self.constraint_count();
        if loss.subgradient.len() != n {
            return Err(ProblemError::DimensionMismatch {
                what: "loss subgradient",
                expected: n,
                found: loss.subgradient.len(),
            });
        }
        if cons.values.len() != m || cons.subgradients.len() != m {
            return Err(ProblemError::ConstraintCount {
                expected: m,
                found: cons.values.len().max(cons.subgradients.len()),
            });
        }
        if let Some(row) = cons.subgradients.iter().find(|r| r.len() != n) {
            return Err(ProblemError::DimensionMismatch {
                what: "constraint subgradient",
                expected: n,
                found: row.len(),
            });
        }
        Ok(())
    }
}

fn exceeds(observed: f64, bound: f64) -> bool {
    !(observed <= bound * (1.0 + BOUND_RTOL) + 1e-12)
}

/// Builds and validates a problem instance with default sampling options.
///
/// Bounds are resolved per quantity: `declared` wins, then whatever the
/// oracle advertises, then an estimate (sampled maximum times 1.1). `R` is
/// always the exact set diameter. Declared and advertised bounds are checked
/// against the same samples and a violation is reported with its witness.
pub fn build_problem(
    set: FeasibleSet,
    loss: Arc<dyn LossOracle>,
    constraints: Arc<dyn ConstraintOracle>,
    declared: Option<ProblemBounds>,
) -> Result<ProblemInstance, ProblemError> {
    build_problem_with(set, loss, constraints, declared, &ValidationOptions::default())
}

pub fn build_problem_with(
    set: FeasibleSet,
    loss: Arc<dyn LossOracle>,
    constraints: Arc<dyn ConstraintOracle>,
    declared: Option<ProblemBounds>,
    options: &ValidationOptions,
) -> Result<ProblemInstance, ProblemError> {
    set.validate()?;
    let n = set.dim();
    if loss.dimension() != n {
        return Err(ProblemError::DimensionMismatch {
            what: "loss oracle",
            expected: n,
            found: loss.dimension(),
        });
    }
    if constraints.dimension() != n {
        return Err(ProblemError::DimensionMismatch {
            what: "constraint oracle",
            expected: n,
            found: constraints.dimension(),
        });
    }
    if let Some(b) = &declared {
        b.validate()?;
    }
    let r = set.diameter();

    let rounds = loss.rounds().unwrap_or(options.default_rounds).max(1);
    let mut point_rng = ChaCha8Rng::seed_from_u64(options.seed);
    let stream = OmegaStream::new(options.seed ^ 0x9e37_79b9_7f4a_7c15);
    let center = set.center();

    struct Sample {
        t: usize,
        x: Vec<f64>,
        omega: Realization,
        loss: LossEval,
        cons: ConstraintEval,
    }
    let mut samples = Vec::with_capacity(options.samples);
    for i in 0..options.samples.max(1) {
        let x = if i == 0 { center.clone() } else { set.sample(&mut point_rng) };
        let t = point_rng.random_range(1..=rounds);
        let omega = constraints.sample(&mut stream.round_rng(i + 1));
        let loss_eval = loss.evaluate(t, &x, &omega);
        let cons_eval = constraints.evaluate(&x, &omega);
        samples.push(Sample {
            t,
            x,
            omega,
            loss: loss_eval,
            cons: cons_eval,
        });
    }

    let max_d1 = samples
        .iter()
        .map(|s| linalg::norm(&s.loss.subgradient))
        .fold(0.0, f64::max);
    let max_d2 = samples
        .iter()
        .flat_map(|s| s.cons.subgradients.iter().map(|row| linalg::norm(row)))
        .fold(0.0, f64::max);
    let max_g = samples
        .iter()
        .map(|s| linalg::norm(&s.cons.values))
        .fold(0.0, f64::max);

    let advertised_d1 = loss.subgradient_bound();
    let advertised_cons = constraints.advertised_bounds();
    let resolve = |declared: Option<f64>, advertised: Option<f64>, observed: f64| match (declared, advertised) {
        (Some(v), _) => (v, BoundSource::Declared),
        (None, Some(v)) => (v, BoundSource::Advertised),
        (None, None) => (observed * ESTIMATE_INFLATION, BoundSource::Estimated),
    };
    let (d1, d1_src) = resolve(declared.map(|b| b.d1), advertised_d1, max_d1);
    let (d2, d2_src) = resolve(declared.map(|b| b.d2), advertised_cons.map(|b| b.0), max_d2);
    let (g, g_src) = resolve(declared.map(|b| b.g), advertised_cons.map(|b| b.1), max_g);
    let epsilon = declared
        .and_then(|b| b.epsilon)
        .or_else(|| constraints.slater_point().map(|s| s.epsilon));

    let bounds = ProblemBounds::new(d1, d2, g, r, epsilon)?;
    let instance = ProblemInstance {
        set,
        loss,
        constraints,
        bounds,
        provenance: BoundProvenance {
            d1: d1_src,
            d2: d2_src,
            g: g_src,
            r: BoundSource::Exact,
        },
    };
    for s in &samples {
        instance.check_feedback(s.t, &s.x, &s.omega, &s.loss, &s.cons)?;
    }
    Ok(instance)
}

/// Step-size parameters of the drift-plus-penalty update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgorithmParams {
    pub v: f64,
    pub alpha: f64,
    pub horizon: usize,
}

impl AlgorithmParams {
    pub fn new(v: f64, alpha: f64, horizon: usize) -> Result<Self, ProblemError> {
        if !(v.is_finite() && v > 0.0) {
            return Err(ProblemError::InvalidParam { name: "V", value: v });
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ProblemError::InvalidParam {
                name: "alpha",
                value: alpha,
            });
        }
        if horizon == 0 {
            return Err(ProblemError::InvalidParam {
                name: "horizon",
                value: 0.0,
            });
        }
        Ok(Self { v, alpha, horizon })
    }
}

/// Virtual queue backlogs `Q(t)`, one per constraint, always nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    q: Vec<f64>,
}

impl QueueState {
    pub fn zeros(m: usize) -> Self {
        Self { q: vec![0.0; m] }
    }

    pub fn from_vec(q: Vec<f64>) -> Result<Self, ProblemError> {
        if let Some((index, &value)) = q.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(ProblemError::NegativeQueue { index, value });
        }
        Ok(Self { q })
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.q)
    }
}
