//! Feasible sets and Euclidean projections.
//!
//! The solver only ever needs `project` onto the fixed set, so the set
//! families are limited to ones with closed-form (or sort-based exact)
//! projections: axis-aligned boxes, Euclidean balls and scaled simplices.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: set has dimension {expected}, point has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("box bounds have different lengths ({lower} vs {upper})")]
    RaggedBox { lower: usize, upper: usize },
    #[error("box coordinate {index} has lower {lower} > upper {upper}")]
    InvertedBox { index: usize, lower: f64, upper: f64 },
    #[error("ball radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("simplex scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("sets must have dimension at least 1")]
    ZeroDimension,
    #[error("non-finite coordinate in set description")]
    NonFinite,
    #[error("tolerance must be nonnegative, got {0}")]
    NegativeTolerance(f64),
}

/// A nonempty compact convex subset of R^n.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{x : lower <= x <= upper}` coordinate-wise.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x : ||x - center|| <= radius}`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x >= 0 : sum(x) = scale}` in `dim` coordinates.
    Simplex { dim: usize, scale: f64 },
}

impl FeasibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        let set = FeasibleSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, GeometryError> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        let set = FeasibleSet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn simplex(dim: usize, scale: f64) -> Result<Self, GeometryError> {
        let set = FeasibleSet::Simplex { dim, scale };
        set.validate()?;
        Ok(set)
    }

    /// Checks the variant invariants. Constructors call this; it is public so
    /// that sets built from the enum variants directly can be checked too.
    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(GeometryError::RaggedBox {
                        lower: lower.len(),
                        upper: upper.len(),
                    });
                }
                if lower.is_empty() {
                    return Err(GeometryError::ZeroDimension);
                }
                for (index, (&lo, &hi)) in lower.iter().zip(upper).enumerate() {
                    if !lo.is_finite() || !hi.is_finite() {
                        return Err(GeometryError::NonFinite);
                    }
                    if lo > hi {
                        return Err(GeometryError::InvertedBox {
                            index,
                            lower: lo,
                            upper: hi,
                        });
                    }
                }
                Ok(())
            }
            FeasibleSet::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(GeometryError::ZeroDimension);
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(GeometryError::NonFinite);
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(GeometryError::BadRadius(*radius));
                }
                Ok(())
            }
            FeasibleSet::Simplex { dim, scale } => {
                if *dim == 0 {
                    return Err(GeometryError::ZeroDimension);
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(GeometryError::BadScale(*scale));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Simplex { dim, .. } => *dim,
        }
    }

    fn check_dim(&self, point: &[f64]) -> Result<(), GeometryError> {
        if point.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        Ok(())
    }

    /// Canonical interior reference point: box midpoint, ball center or
    /// simplex barycenter.
    pub fn center(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(lo, hi)| lo + 0.5 * (hi - lo))
                .collect(),
            FeasibleSet::Ball { center, .. } => center.clone(),
            FeasibleSet::Simplex { dim, scale } => vec![scale / *dim as f64; *dim],
        }
    }

    /// Euclidean projection of `point` onto the set.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_dim(point)?;
        Ok(match self {
            FeasibleSet::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&p, (&lo, &hi))| p.clamp(lo, hi))
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                let offset = linalg::sub(point, center);
                let dist = linalg::norm(&offset);
                if dist <= *radius {
                    point.to_vec()
                } else {
                    let shrink = radius / dist;
                    center
                        .iter()
                        .zip(&offset)
                        .map(|(c, o)| c + shrink * o)
                        .collect()
                }
            }
            FeasibleSet::Simplex { scale, .. } => project_simplex(point, *scale),
        })
    }

    /// Largest distance between two points of the set.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => linalg::distance(upper, lower),
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
            // A 1-simplex in one coordinate is the single point {scale}.
            FeasibleSet::Simplex { dim: 1, .. } => 0.0,
            FeasibleSet::Simplex { scale, .. } => scale * std::f64::consts::SQRT_2,
        }
    }

    /// Whether `point` lies within Euclidean distance `tol` of the set.
    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool, GeometryError> {
        if !(tol >= 0.0) {
            return Err(GeometryError::NegativeTolerance(tol));
        }
        let projected = self.project(point)?;
        Ok(linalg::distance(&projected, point) <= tol)
    }

    /// Draws a point of the set. Boxes and balls are sampled uniformly, the
    /// simplex from the flat Dirichlet distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                let n = center.len();
                let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let len = linalg::norm(&dir);
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                if len == 0.0 {
                    return center.clone();
                }
                center
                    .iter()
                    .zip(&dir)
                    .map(|(c, d)| c + r * d / len)
                    .collect()
            }
            FeasibleSet::Simplex { dim, scale } => {
                let w: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = w.iter().sum();
                w.iter().map(|wi| scale * wi / total).collect()
            }
        }
    }
}

/// Sort-based exact projection onto `{x >= 0, sum x = scale}`.
fn project_simplex(point: &[f64], scale: f64) -> Vec<f64> {
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - scale) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    point.iter().map(|&p| (p - threshold).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_projection_clamps() {
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        assert_eq!(set.project(&[1.5]).unwrap(), vec![1.0]);
        assert_eq!(set.project(&[-0.5]).unwrap(), vec![0.0]);
        assert_eq!(set.project(&[0.25]).unwrap(), vec![0.25]);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let set = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = set.project(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn simplex_projection_symmetric_shift() {
        let set = FeasibleSet::simplex(2, 1.0).unwrap();
        assert_eq!(set.project(&[0.2, 0.2]).unwrap(), vec![0.5, 0.5]);
    }

    /// Brute-force argmin of ||x - p|| over a grid of the 3-simplex, step 1e-3.
    fn simplex_grid_argmin(p: &[f64; 3]) -> [f64; 3] {
        let steps = 1000;
        let h = 1.0 / steps as f64;
        let mut best = (f64::INFINITY, [0.0; 3]);
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let x = [i as f64 * h, j as f64 * h, (steps - i - j) as f64 * h];
                let d: f64 = x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, x);
                }
            }
        }
        best.1
    }

    #[test]
    fn simplex_projection_matches_grid_search() {
        let p = [0.9, 0.5, -0.2];
        let grid = simplex_grid_argmin(&p);
        let set = FeasibleSet::simplex(3, 1.0).unwrap();
        let proj = set.project(&p).unwrap();
        for (a, b) in proj.iter().zip(&grid) {
            assert!((a - b).abs() <= 2e-3, "{proj:?} vs grid {grid:?}");
        }
        // Exact answer is (0.7, 0.3, 0): threshold 0.2 on the top two entries.
        assert_abs_diff_eq!(proj[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(proj[1], 0.3, epsilon = 1e-12);
        assert_eq!(proj[2], 0.0);
    }

    #[test]
    fn diameters() {
        let cube = FeasibleSet::cube(3, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(cube.diameter(), 3f64.sqrt(), epsilon = 1e-15);
        let ball = FeasibleSet::ball(vec![1.0, -1.0], 2.0).unwrap();
        assert_eq!(ball.diameter(), 4.0);
        let simplex = FeasibleSet::simplex(3, 1.0).unwrap();
        assert_abs_diff_eq!(simplex.diameter(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn containment() {
        let unit = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        assert!(unit.contains(&[1.000_000_1], 1e-6).unwrap());
        let ball = FeasibleSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!ball.contains(&[1.1, 0.0], 1e-3).unwrap());
        let simplex = FeasibleSet::simplex(2, 1.0).unwrap();
        assert!(simplex.contains(&[0.5, 0.5], 0.0).unwrap());
        assert!(matches!(
            simplex.contains(&[0.5, 0.5], -1.0),
            Err(GeometryError::NegativeTolerance(_))
        ));
    }

    #[test]
    fn invalid_sets_and_points() {
        assert!(matches!(
            FeasibleSet::boxed(vec![1.0], vec![0.0]),
            Err(GeometryError::InvertedBox { index: 0, .. })
        ));
        assert!(matches!(
            FeasibleSet::ball(vec![0.0], 0.0),
            Err(GeometryError::BadRadius(_))
        ));
        assert!(matches!(
            FeasibleSet::simplex(2, -1.0),
            Err(GeometryError::BadScale(_))
        ));
        let set = FeasibleSet::cube(2, 0.0, 1.0).unwrap();
        assert!(matches!(
            set.project(&[0.0]),
            Err(GeometryError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn samples_lie_in_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sets = [
            FeasibleSet::boxed(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 4.0]).unwrap(),
            FeasibleSet::ball(vec![1.0, 2.0, 3.0], 0.5).unwrap(),
            FeasibleSet::simplex(4, 2.0).unwrap(),
        ];
        for set in &sets {
            for _ in 0..1000 {
                let x = set.sample(&mut rng);
                assert!(set.contains(&x, 1e-12).unwrap());
            }
        }
    }

    fn arb_set() -> impl Strategy<Value = FeasibleSet> {
        let boxes = prop::collection::vec((-5.0f64..5.0, 0.0f64..4.0), 1..5).prop_map(|v| {
            let lower: Vec<f64> = v.iter().map(|(lo, _)| *lo).collect();
            let upper: Vec<f64> = v.iter().map(|(lo, w)| lo + w).collect();
            FeasibleSet::boxed(lower, upper).unwrap()
        });
        let balls = (prop::collection::vec(-5.0f64..5.0, 1..5), 0.1f64..4.0)
            .prop_map(|(c, r)| FeasibleSet::ball(c, r).unwrap());
        let simplices =
            (1usize..6, 0.1f64..4.0).prop_map(|(d, s)| FeasibleSet::simplex(d, s).unwrap());
        prop_oneof![boxes, balls, simplices]
    }

    fn set_and_points() -> impl Strategy<Value = (FeasibleSet, Vec<f64>, Vec<f64>, u64)> {
        arb_set().prop_flat_map(|set| {
            let n = set.dim();
            (
                Just(set),
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
                any::<u64>(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn projection_is_closest_point((set, p, _q, seed) in set_and_points()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let proj = set.project(&p).unwrap();
            let d = linalg::distance(&proj, &p);
            for _ in 0..5 {
                let y = set.sample(&mut rng);
                prop_assert!(d <= linalg::distance(&y, &p) + 1e-9);
            }
        }

        #[test]
        fn projection_is_nonexpansive((set, p, q, _seed) in set_and_points()) {
            let pp = set.project(&p).unwrap();
            let pq = set.project(&q).unwrap();
            prop_assert!(linalg::distance(&pp, &pq) <= linalg::distance(&p, &q) + 1e-12);
        }

        #[test]
        fn projection_is_idempotent((set, p, _q, _seed) in set_and_points()) {
            let once = set.project(&p).unwrap();
            let twice = set.project(&once).unwrap();
            match set {
                FeasibleSet::Box { .. } => prop_assert_eq!(once, twice),
                _ => prop_assert!(linalg::distance(&once, &twice) <= 1e-12),
            }
        }
    }
}
