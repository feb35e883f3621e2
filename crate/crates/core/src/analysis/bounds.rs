use serde::Serialize;

use super::AnalysisError;
use crate::problem::{AlgorithmParams, ProblemBounds};

/// Constants of the multi-step queue drift argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    /// `G + sqrt(m) D2 R`
    pub delta_max: f64,
    /// `epsilon / 2`
    pub zeta: f64,
    pub t0: usize,
    pub theta: f64,
    /// `(8 delta^2 / eps) ln[1 + (32 delta^2 / eps^2) e^{eps / (8 delta)}]`
    pub b: f64,
    pub epsilon: f64,
    pub m: usize,
}

impl BoundConstants {
    pub fn is_valid(&self) -> bool {
        self.t0 > 0 && self.zeta > 0.0 && self.zeta <= self.delta_max && self.theta.is_finite()
    }

    /// `4 delta^2 / zeta * ln[1 + (8 delta^2 / zeta^2) e^{zeta / (4 delta)}]`
    fn drift_log_term(&self) -> f64 {
        let (d, z) = (self.delta_max, self.zeta);
        4.0 * d * d / z * (8.0 * d * d / (z * z) * (z / (4.0 * d)).exp()).ln_1p()
    }
}

/// `ceil(sqrt(T))`
pub fn default_t0(horizon: usize) -> usize {
    ((horizon as f64).sqrt().ceil() as usize).max(1)
}

/// `theta = (eps/2) t0 + delta t0 + 2 alpha R^2 / (t0 eps) + (2 V D1 R + delta^2) / eps`
/// with `delta = G + sqrt(m) D2 R` for `m` constraints.
pub fn theta_constant(
    t0: usize,
    params: &AlgorithmParams,
    bounds: &ProblemBounds,
    m: usize,
) -> Result<BoundConstants, AnalysisError> {
    if t0 == 0 {
        return Err(AnalysisError::InvalidT0);
    }
    let epsilon = match bounds.epsilon {
        Some(e) if e > 0.0 => e,
        _ => return Err(AnalysisError::MissingEpsilon),
    };
    let delta = bounds.delta_max(m);
    let t0f = t0 as f64;
    let r = bounds.r;
    let theta = epsilon / 2.0 * t0f
        + delta * t0f
        + 2.0 * params.alpha * r * r / (t0f * epsilon)
        + (2.0 * params.v * bounds.d1 * r + delta * delta) / epsilon;
    let b = 8.0 * delta * delta / epsilon
        * (32.0 * delta * delta / (epsilon * epsilon) * (epsilon / (8.0 * delta)).exp()).ln_1p();
    Ok(BoundConstants {
        delta_max: delta,
        zeta: epsilon / 2.0,
        t0,
        theta,
        b,
        epsilon,
        m,
    })
}

/// Bound on `E ||Q(t)||` valid for every `t`.
pub fn drift_expected_bound(c: &BoundConstants) -> f64 {
    c.theta + c.t0 as f64 * c.drift_log_term()
}

/// `z` with `P(||Q(t)|| >= z) <= mu` for every `t`.
pub fn drift_tail_threshold(c: &BoundConstants, mu: f64) -> Result<f64, AnalysisError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(AnalysisError::MuOutOfRange(mu));
    }
    let (d, z) = (c.delta_max, c.zeta);
    Ok(drift_expected_bound(c) + c.t0 as f64 * 4.0 * d * d / z * (1.0 / mu).ln())
}
