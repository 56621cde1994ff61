//! Depth-first branch-and-bound over binary variables with LP-relaxation bounds.

use super::simplex::{solve_lp_detailed, LinearProgram, RowSense};
use super::{SolveOutcome, SolveStatus};
use crate::cop::{dot, Assignment, ConstraintSystem, ParameterVector, VarDomain};
use crate::error::{Error, Result};

/// Desk-scale limit on binary variables.
pub const MAX_BNB_VARS: usize = 100;

const INTEGRALITY_TOL: f64 = 1e-9;
const PRUNE_TOL: f64 = 1e-9;

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// LP objective of the parent; a lower bound for this subtree.
    bound: f64,
}

/// Provably optimal binary assignment for a knapsack-style system.
///
/// Branches on the fractional variable closest to 0.5 (lowest index on ties)
/// and explores the child matching the rounded LP value first. Among equal
/// objectives the first incumbent found is kept, so results are deterministic.
pub fn solve_binary_bnb(
    system: &ConstraintSystem,
    q: &[f64],
    rho: &ParameterVector,
) -> Result<SolveOutcome> {
    let n = system.num_vars();
    if system.var_domain() != VarDomain::Binary {
        return Err(Error::config("branch-and-bound needs a binary system"));
    }
    if n > MAX_BNB_VARS {
        return Err(Error::config(format!(
            "branch-and-bound supports at most {MAX_BNB_VARS} variables, got {n}"
        )));
    }
    if q.len() != n {
        return Err(Error::shape("objective length does not match variable count"));
    }
    if !rho.is_finite() {
        return Err(Error::shape("parameter vector must be finite"));
    }
    let (a, b) = system.linear_form(rho)?;
    let m = system.num_constraints();
    let base = LinearProgram {
        c: q.to_vec(),
        a,
        b,
        sense: vec![RowSense::Le; m],
        lower: vec![0.0; n],
        upper: vec![1.0; n],
    };
    let rho_s = rho.as_slice();
    let exact_feasible = |x: &[f64]| (0..m).all(|i| system.g_unchecked(x, rho_s, i) <= 0.0);

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0usize;
    let mut stack = vec![Node {
        lower: vec![0.0; n],
        upper: vec![1.0; n],
        bound: f64::NEG_INFINITY,
    }];
    let pruned = |bound: f64, incumbent: &Option<(Vec<f64>, f64)>| {
        incumbent
            .as_ref()
            .is_some_and(|(_, best)| bound >= best - PRUNE_TOL * best.abs().max(1.0))
    };
    let mut lp = base.clone();

    while let Some(node) = stack.pop() {
        if pruned(node.bound, &incumbent) {
            continue;
        }
        nodes += 1;
        lp.lower.clone_from(&node.lower);
        lp.upper.clone_from(&node.upper);
        let sol = solve_lp_detailed(&lp)?;
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded | SolveStatus::NumericalFailure => {
                return Ok(SolveOutcome::without_solution(
                    SolveStatus::NumericalFailure,
                    nodes,
                ));
            }
        }
        let bound = sol.objective.unwrap_or(f64::INFINITY);
        if pruned(bound, &incumbent) {
            continue;
        }
        let x = sol.x.unwrap_or_default();
        if incumbent.is_none() {
            incumbent = round_down_and_fill(&x, q, &exact_feasible);
        }

        let mut branch_var: Option<(usize, f64)> = None;
        for (j, &v) in x.iter().enumerate() {
            let frac = v - v.floor();
            if frac > INTEGRALITY_TOL && frac < 1.0 - INTEGRALITY_TOL {
                let dist = (v - 0.5).abs();
                if branch_var.is_none_or(|(_, d)| dist < d) {
                    branch_var = Some((j, dist));
                }
            }
        }

        let branch_on = match branch_var {
            Some((j, _)) => Some(j),
            None => {
                let rounded: Vec<f64> = x.iter().map(|v| v.round()).collect();
                if exact_feasible(&rounded) {
                    let obj = dot(q, &rounded);
                    if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                        incumbent = Some((rounded, obj));
                    }
                    None
                } else {
                    // Tolerance artifact: LP-feasible but violated in exact arithmetic.
                    (0..n).find(|&j| node.lower[j] != node.upper[j])
                }
            }
        };

        if let Some(j) = branch_on {
            let mut node = node;
            if let Some((_, best)) = &incumbent {
                fix_by_reduced_cost(&mut node, &x, &sol.reduced_costs, best - bound);
            }
            let first = if x[j] >= 0.5 { 1.0 } else { 0.0 };
            let second = 1.0 - first;
            let child = |val: f64| {
                let mut lower = node.lower.clone();
                let mut upper = node.upper.clone();
                lower[j] = val;
                upper[j] = val;
                Node { lower, upper, bound }
            };
            stack.push(child(second));
            stack.push(child(first));
        }
    }

    Ok(match incumbent {
        Some((x, obj)) => SolveOutcome::optimal(Assignment::new(x, VarDomain::Binary)?, obj, nodes),
        None => SolveOutcome::without_solution(SolveStatus::Infeasible, nodes),
    })
}

/// Fix nonbasic variables whose reduced cost alone exceeds the gap to the
/// incumbent: moving them off their bound cannot lead to a better solution.
fn fix_by_reduced_cost(node: &mut Node, x: &[f64], reduced: &[f64], gap: f64) {
    let free = (0..x.len()).filter(|&j| node.lower[j] != node.upper[j]);
    for (idx, j) in free.enumerate().collect::<Vec<_>>() {
        let d = reduced[idx];
        let margin = gap + PRUNE_TOL * gap.abs().max(1.0);
        if d > margin && x[j] <= INTEGRALITY_TOL {
            node.upper[j] = 0.0;
        } else if -d > margin && x[j] >= 1.0 - INTEGRALITY_TOL {
            node.lower[j] = 1.0;
        }
    }
}

/// Greedy incumbent: floor the LP point, then add profitable variables in
/// order of LP value while the assignment stays feasible.
fn round_down_and_fill(
    x: &[f64],
    q: &[f64],
    feasible: &impl Fn(&[f64]) -> bool,
) -> Option<(Vec<f64>, f64)> {
    let mut cur: Vec<f64> = x.iter().map(|v| (v + INTEGRALITY_TOL).floor().clamp(0.0, 1.0)).collect();
    if !feasible(&cur) {
        return None;
    }
    let mut order: Vec<usize> = (0..x.len()).filter(|&j| cur[j] == 0.0 && q[j] < 0.0).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(q[a].total_cmp(&q[b])));
    for j in order {
        cur[j] = 1.0;
        if !feasible(&cur) {
            cur[j] = 0.0;
        }
    }
    let obj = dot(q, &cur);
    Some((cur, obj))
}
