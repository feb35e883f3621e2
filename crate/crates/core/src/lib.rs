//! Online convex optimization with stochastic constraints, solved by a
//! drift-plus-penalty update over virtual queues.
//!
//! Build a [`ProblemInstance`] from loss and constraint oracles, run
//! [`solver::run`], then inspect the [`trajectory::Trajectory`] with the
//! [`analysis`] checks. [`datacenter`] holds the power-allocation experiment.

pub mod analysis;
pub mod baselines;
pub mod datacenter;
pub mod geometry;
pub mod instances;
pub mod linalg;
pub mod problem;
pub mod solver;
pub mod stream;
pub mod trajectory;

pub use geometry::*;
pub use problem::*;
pub use stream::*;
pub use trajectory::{RoundRecord, Trajectory};
