//! Exact optimization backends.

mod bnb;
mod enumerate;
pub mod simplex;

pub use bnb::solve_binary_bnb;
pub use enumerate::{enumerate_binary_oracle, MAX_ENUMERATION_VARS};
pub use simplex::{solve_lp, solve_lp_detailed, LinearProgram, LpSolution, RowSense};

use serde::{Deserialize, Serialize};

use crate::cop::{Assignment, ConstraintSystem, ParameterVector, VarDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub objective: Option<f64>,
    /// Branch-and-bound nodes; zero for pure LP solves.
    pub nodes_explored: usize,
}

impl SolveOutcome {
    pub fn optimal(assignment: Assignment, objective: f64, nodes_explored: usize) -> Self {
        SolveOutcome {
            status: SolveStatus::Optimal,
            assignment: Some(assignment),
            objective: Some(objective),
            nodes_explored,
        }
    }

    pub fn without_solution(status: SolveStatus, nodes_explored: usize) -> Self {
        debug_assert_ne!(status, SolveStatus::Optimal);
        SolveOutcome {
            status,
            assignment: None,
            objective: None,
            nodes_explored,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Anything that can return `x*(q, rho)` for a constraint system.
pub trait CopSolver: Sync {
    fn solve(
        &self,
        system: &ConstraintSystem,
        q: &[f64],
        rho: &ParameterVector,
    ) -> Result<SolveOutcome>;
}

/// Branch-and-bound for binary families, simplex for continuous ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSolver;

/// Exhaustive enumeration; binary families with at most 20 variables.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumerationSolver;

impl CopSolver for ExactSolver {
    fn solve(
        &self,
        system: &ConstraintSystem,
        q: &[f64],
        rho: &ParameterVector,
    ) -> Result<SolveOutcome> {
        match system.var_domain() {
            VarDomain::Binary => solve_binary_bnb(system, q, rho),
            VarDomain::NonnegativeContinuous => solve_continuous(system, q, rho),
        }
    }
}

impl CopSolver for EnumerationSolver {
    fn solve(
        &self,
        system: &ConstraintSystem,
        q: &[f64],
        rho: &ParameterVector,
    ) -> Result<SolveOutcome> {
        enumerate_binary_oracle(system, q, rho)
    }
}

/// The LP `min q.x  s.t.  g(x; rho) <= 0,  x >= 0` for a continuous family.
pub fn cop_linear_program(
    system: &ConstraintSystem,
    q: &[f64],
    rho: &ParameterVector,
) -> Result<LinearProgram> {
    if q.len() != system.num_vars() {
        return Err(Error::shape("objective length does not match variable count"));
    }
    let (a, b) = system.linear_form(rho)?;
    let m = system.num_constraints();
    Ok(LinearProgram::nonnegative(q.to_vec(), a, b, vec![RowSense::Le; m]))
}

fn solve_continuous(
    system: &ConstraintSystem,
    q: &[f64],
    rho: &ParameterVector,
) -> Result<SolveOutcome> {
    solve_lp(&cop_linear_program(system, q, rho)?)
}
