use super::{SolveOutcome, SolveStatus};
use crate::cop::{dot, Assignment, ConstraintSystem, ParameterVector, VarDomain};
use crate::error::{Error, Result};

pub const MAX_ENUMERATION_VARS: usize = 20;

/// Brute-force optimum over all `2^N` binary assignments.
///
/// Assignments are visited in lexicographic order of `(x_0, ..., x_{N-1})`
/// and the first one reaching the minimum objective is kept.
pub fn enumerate_binary_oracle(
    system: &ConstraintSystem,
    q: &[f64],
    rho: &ParameterVector,
) -> Result<SolveOutcome> {
    let n = system.num_vars();
    if system.var_domain() != VarDomain::Binary {
        return Err(Error::config("enumeration needs a binary system"));
    }
    if n > MAX_ENUMERATION_VARS {
        return Err(Error::config(format!(
            "enumeration supports at most {MAX_ENUMERATION_VARS} variables, got {n}"
        )));
    }
    if q.len() != n {
        return Err(Error::shape("objective length does not match variable count"));
    }
    system.check_rho(rho)?;

    let m = system.num_constraints();
    let mut x = vec![0.0; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u64..(1u64 << n) {
        for (pos, v) in x.iter_mut().enumerate() {
            *v = if mask >> (n - 1 - pos) & 1 == 1 { 1.0 } else { 0.0 };
        }
        let feasible = (0..m).all(|i| system.g_unchecked(&x, rho.as_slice(), i) <= 0.0);
        if !feasible {
            continue;
        }
        let obj = dot(q, &x);
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((x.clone(), obj));
        }
    }
    Ok(match best {
        Some((x, obj)) => SolveOutcome::optimal(Assignment::new(x, VarDomain::Binary)?, obj, 0),
        None => SolveOutcome::without_solution(SolveStatus::Infeasible, 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cop::Family;

    #[test]
    fn single_item() {
        let sys = ConstraintSystem::new(Family::KnapsackWeights, 1, 1, vec![1.0]).unwrap();
        let out = enumerate_binary_oracle(&sys, &[-5.0], &ParameterVector::new(vec![1.0])).unwrap();
        assert_eq!(out.assignment.unwrap().values(), &[1.0]);
    }

    #[test]
    fn infeasible_and_too_large() {
        let sys = ConstraintSystem::new(Family::KnapsackWeights, 2, 1, vec![-1.0]).unwrap();
        let rho = ParameterVector::new(vec![1.0, 1.0]);
        let out = enumerate_binary_oracle(&sys, &[-1.0, -1.0], &rho).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);

        let sys = ConstraintSystem::new(Family::KnapsackCapacities, 21, 1, vec![1.0; 21]).unwrap();
        let rho = ParameterVector::new(vec![1.0]);
        assert!(enumerate_binary_oracle(&sys, &[0.0; 21], &rho).is_err());
    }

    #[test]
    fn ties_keep_lexicographically_first() {
        // Either item alone fills the knapsack with equal value.
        let sys = ConstraintSystem::new(Family::KnapsackWeights, 2, 1, vec![1.0]).unwrap();
        let rho = ParameterVector::new(vec![1.0, 1.0]);
        let out = enumerate_binary_oracle(&sys, &[-3.0, -3.0], &rho).unwrap();
        assert_eq!(out.assignment.unwrap().values(), &[0.0, 1.0]);
    }
}
