//! Decision-focused learning of constraint parameters.
//!
//! Predictors map features to the unknown parameters of a constrained
//! optimization problem and are trained against two decision-aware losses:
//! an infeasibility penalty on the solution obtained under the prediction and
//! an optimality-preserving term that keeps the true optimum feasible. A single
//! coefficient `alpha` trades one against the other.

pub mod cop;
pub mod datagen;
pub mod error;
pub mod loss;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod plot;
pub mod solve;

pub use cop::{objective_value, Assignment, ConstraintSystem, CopInstance, Family, ParameterVector, VarDomain};
pub use error::{Error, Result};
