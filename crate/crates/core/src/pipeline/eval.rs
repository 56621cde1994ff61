//! Test-time metrics: infeasibility ratio and normalized regret.

use serde::{Deserialize, Serialize};

use crate::cop::{objective_value, CopInstance};
use crate::error::{Error, Result};
use crate::model::Predictor;
use crate::parallel::map_indexed;
use crate::solve::{CopSolver, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    /// Position within the evaluated split.
    pub index: usize,
    pub status: SolveStatus,
    /// Predicted solution exists and satisfies every true constraint.
    pub feasible: bool,
    pub regret: Option<f64>,
    pub predicted_objective: Option<f64>,
    pub true_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub num_instances: usize,
    pub num_feasible: usize,
    pub infeasibility_ratio: f64,
    /// Mean relative regret over feasible instances; absent when none are.
    pub normalized_regret: Option<f64>,
    pub records: Vec<InstanceRecord>,
}

/// `(f(x_hat) - f(x*)) / |f(x*)|`; the raw gap when the optimum is zero.
pub fn relative_regret(predicted: f64, optimum: f64) -> f64 {
    let gap = predicted - optimum;
    if optimum == 0.0 {
        gap
    } else {
        gap / optimum.abs()
    }
}

impl EvalReport {
    pub fn from_records(records: Vec<InstanceRecord>) -> Self {
        let k = records.len();
        let feasible = records.iter().filter(|r| r.feasible).count();
        let regrets: Vec<f64> = records.iter().filter_map(|r| r.regret).collect();
        EvalReport {
            num_instances: k,
            num_feasible: feasible,
            infeasibility_ratio: if k == 0 {
                0.0
            } else {
                (k - feasible) as f64 / k as f64
            },
            normalized_regret: if regrets.is_empty() {
                None
            } else {
                Some(regrets.iter().sum::<f64>() / regrets.len() as f64)
            },
            records,
        }
    }
}

fn evaluate_one(
    index: usize,
    inst: &CopInstance,
    model: &dyn Predictor,
    solver: &dyn CopSolver,
) -> Result<InstanceRecord> {
    let true_objective = match inst.true_objective() {
        Some(f) => f,
        None => solver
            .solve(&inst.system, &inst.objective, &inst.rho_true)?
            .objective
            .ok_or_else(|| Error::config(format!("instance {index} has no true optimum")))?,
    };
    let rho_hat = model.predict(&inst.features)?;
    let out = solver.solve(&inst.system, &inst.objective, &rho_hat)?;
    let mut rec = InstanceRecord {
        index,
        status: out.status,
        feasible: false,
        regret: None,
        predicted_objective: None,
        true_objective,
    };
    if let (SolveStatus::Optimal, Some(x_hat)) = (out.status, out.assignment) {
        let f_hat = objective_value(&inst.objective, &x_hat)?;
        rec.predicted_objective = Some(f_hat);
        if inst.system.is_feasible(&x_hat, &inst.rho_true)? {
            rec.feasible = true;
            rec.regret = Some(relative_regret(f_hat, true_objective));
        }
    }
    Ok(rec)
}

/// Predict, solve under the prediction and score against the truth.
///
/// A predicted problem without solution (or a solver failure) counts as an
/// infeasible outcome and contributes no regret.
pub fn evaluate(
    instances: &[&CopInstance],
    model: &(dyn Predictor + Sync),
    solver: &dyn CopSolver,
) -> Result<EvalReport> {
    let records = map_indexed(instances.len(), |k| {
        evaluate_one(k, instances[k], model, solver)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(feasible: bool, regret: Option<f64>) -> InstanceRecord {
        InstanceRecord {
            index: 0,
            status: SolveStatus::Optimal,
            feasible,
            regret,
            predicted_objective: None,
            true_objective: -1.0,
        }
    }

    #[test]
    fn regret_conventions() {
        assert!((relative_regret(12.0, 10.0) - 0.2).abs() < 1e-15);
        assert!((relative_regret(-90.0, -100.0) - 0.1).abs() < 1e-15);
        assert_eq!(relative_regret(-100.0, -100.0), 0.0);
    }

    #[test]
    fn report_aggregates() {
        let r = EvalReport::from_records(vec![
            rec(true, Some(0.1)),
            rec(false, None),
            rec(true, Some(0.3)),
            rec(false, None),
        ]);
        assert_eq!(r.num_feasible, 2);
        assert_eq!(r.infeasibility_ratio, 0.5);
        assert!((r.normalized_regret.unwrap() - 0.2).abs() < 1e-15);
        let none = EvalReport::from_records(vec![rec(false, None)]);
        assert_eq!(none.normalized_regret, None);
        assert_eq!(none.infeasibility_ratio, 1.0);
    }
}
