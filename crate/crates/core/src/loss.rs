//! Decision-aware losses on predicted constraint parameters.
//!
//! All gradients are taken with respect to the predicted parameters only.
//! Solver outputs and satisfaction masks are piecewise constant in the
//! prediction and are treated as constants.

use serde::{Deserialize, Serialize};

use crate::cop::{Assignment, ConstraintSystem, ParameterVector};
use crate::error::{Error, Result};
use crate::solve::{CopSolver, SolveStatus};

pub const DEFAULT_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    Softplus,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Margin by which constraints should be violated or satisfied.
    pub margin: f64,
    /// Infeasibility-aversion coefficient: weight of the penalty term.
    pub alpha: f64,
    pub variant: LossVariant,
    pub reduction: Reduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            margin: DEFAULT_MARGIN,
            alpha: 0.5,
            variant: LossVariant::Softplus,
            reduction: Reduction::Mean,
        }
    }
}

impl LossConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        LossConfig {
            alpha,
            ..Default::default()
        }
    }

    /// Checks `0 <= alpha <= 1` and a strictly positive margin (zero margin is
    /// allowed when `allow_zero_margin` is set, for exact-optimality checks).
    pub fn validate(&self, allow_zero_margin: bool) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        let margin_ok = if allow_zero_margin {
            self.margin >= 0.0
        } else {
            self.margin > 0.0
        };
        if !margin_ok || !self.margin.is_finite() {
            return Err(Error::config(format!("invalid margin {}", self.margin)));
        }
        Ok(())
    }

    /// Combine per-instance values according to the reduction.
    pub fn reduce(&self, total: f64, count: usize) -> f64 {
        match self.reduction {
            Reduction::Sum => total,
            Reduction::Mean => total / count.max(1) as f64,
        }
    }

    /// Per-instance weight applied to gradients under the reduction.
    pub fn instance_weight(&self, count: usize) -> f64 {
        match self.reduction {
            Reduction::Sum => 1.0,
            Reduction::Mean => 1.0 / count.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad_rho_hat: Vec<f64>,
    /// Set when the problem instantiated with the prediction had no solution.
    pub no_predicted_solution: bool,
}

impl LossValue {
    pub fn zero(len: usize) -> Self {
        LossValue {
            value: 0.0,
            grad_rho_hat: vec![0.0; len],
            no_predicted_solution: false,
        }
    }

    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self.grad_rho_hat.iter_mut().for_each(|g| *g *= s);
        self
    }
}

/// Numerically stable logistic function.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Modeled probability that a constraint with value `g` is satisfied.
pub fn sat_probability(g: f64) -> f64 {
    logistic(-g)
}

/// Modeled probability that a constraint with value `g` is violated.
pub fn unsat_probability(g: f64) -> f64 {
    logistic(g)
}

/// Value and derivative of the surrogate hinge.
fn hinge(variant: LossVariant, t: f64) -> (f64, f64) {
    match variant {
        LossVariant::Softplus => (softplus(t), logistic(t)),
        LossVariant::Relu => {
            if t > 0.0 {
                (t, 1.0)
            } else {
                (0.0, 0.0)
            }
        }
    }
}

fn check_lengths(system: &ConstraintSystem, rho: &[&ParameterVector]) -> Result<()> {
    for r in rho {
        system.check_rho(r)?;
    }
    Ok(())
}

/// Penalty for a truly infeasible assignment looking feasible under the prediction.
///
/// Sums the surrogate of `margin - g_i(x_neg; rho_hat)` over constraints that
/// `x_neg` violates under `rho_true`.
pub fn ial_loss(
    system: &ConstraintSystem,
    x_neg: &Assignment,
    rho_true: &ParameterVector,
    rho_hat: &ParameterVector,
    cfg: &LossConfig,
) -> Result<LossValue> {
    check_lengths(system, &[rho_true, rho_hat])?;
    let mask = system.unsat_mask(x_neg, rho_true)?;
    let mut out = LossValue::zero(rho_hat.len());
    for (i, violated) in mask.into_iter().enumerate() {
        if !violated {
            continue;
        }
        let g = system.g_unchecked(x_neg.values(), rho_hat.as_slice(), i);
        let (v, d) = hinge(cfg.variant, cfg.margin - g);
        out.value += v;
        if d != 0.0 {
            system.add_grad_unchecked(x_neg.values(), i, -d, &mut out.grad_rho_hat);
        }
    }
    Ok(out)
}

/// Infeasibility penalty on the solution obtained under the prediction.
///
/// Zero when that solution satisfies the true constraints, and zero (with
/// `no_predicted_solution` set) when the predicted problem has no solution.
pub fn ipl_loss(
    system: &ConstraintSystem,
    q: &[f64],
    rho_true: &ParameterVector,
    rho_hat: &ParameterVector,
    cfg: &LossConfig,
    solver: &dyn CopSolver,
) -> Result<LossValue> {
    check_lengths(system, &[rho_true, rho_hat])?;
    let outcome = solver.solve(system, q, rho_hat)?;
    match outcome.status {
        SolveStatus::Optimal => {
            let x_hat = outcome
                .assignment
                .ok_or_else(|| Error::NumericalFailure("optimal outcome without assignment".into()))?;
            if system.is_feasible(&x_hat, rho_true)? {
                Ok(LossValue::zero(rho_hat.len()))
            } else {
                ial_loss(system, &x_hat, rho_true, rho_hat, cfg)
            }
        }
        SolveStatus::Infeasible | SolveStatus::Unbounded => {
            let mut out = LossValue::zero(rho_hat.len());
            out.no_predicted_solution = true;
            Ok(out)
        }
        SolveStatus::NumericalFailure => Err(Error::NumericalFailure(
            "solver failed under predicted parameters".into(),
        )),
    }
}

/// Penalty for the true optimum becoming infeasible under the prediction.
pub fn opl_loss(
    system: &ConstraintSystem,
    x_star_true: &Assignment,
    rho_hat: &ParameterVector,
    cfg: &LossConfig,
) -> Result<LossValue> {
    let g = system.constraint_values(x_star_true, rho_hat)?;
    let mut out = LossValue::zero(rho_hat.len());
    for (i, g) in g.into_iter().enumerate() {
        let (v, d) = hinge(cfg.variant, cfg.margin + g);
        out.value += v;
        if d != 0.0 {
            system.add_grad_unchecked(x_star_true.values(), i, d, &mut out.grad_rho_hat);
        }
    }
    Ok(out)
}

/// `alpha * IPL + (1 - alpha) * OPL`; the solve is skipped when `alpha == 0`.
#[allow(clippy::too_many_arguments)]
pub fn combined_loss(
    system: &ConstraintSystem,
    q: &[f64],
    rho_true: &ParameterVector,
    rho_hat: &ParameterVector,
    x_star_true: &Assignment,
    cfg: &LossConfig,
    solver: &dyn CopSolver,
) -> Result<LossValue> {
    cfg.validate(true)?;
    let opl = if cfg.alpha < 1.0 {
        opl_loss(system, x_star_true, rho_hat, cfg)?.scaled(1.0 - cfg.alpha)
    } else {
        LossValue::zero(rho_hat.len())
    };
    if cfg.alpha == 0.0 {
        check_lengths(system, &[rho_true])?;
        return Ok(opl);
    }
    let ipl = ipl_loss(system, q, rho_true, rho_hat, cfg, solver)?.scaled(cfg.alpha);
    Ok(LossValue {
        value: ipl.value + opl.value,
        grad_rho_hat: ipl
            .grad_rho_hat
            .iter()
            .zip(&opl.grad_rho_hat)
            .map(|(a, b)| a + b)
            .collect(),
        no_predicted_solution: ipl.no_predicted_solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cop::{Family, VarDomain};
    use crate::solve::ExactSolver;

    fn relu(margin: f64) -> LossConfig {
        LossConfig {
            margin,
            alpha: 0.5,
            variant: LossVariant::Relu,
            reduction: Reduction::Mean,
        }
    }

    #[test]
    fn sat_probability_examples() {
        assert_eq!(sat_probability(0.0), 0.5);
        assert!(sat_probability(50.0) < 1e-20);
        for g in [-1000.0, -3.2, 0.7, 999.0] {
            let s = sat_probability(g) + sat_probability(-g);
            assert!((s - 1.0).abs() < 1e-15);
            assert!(sat_probability(g).is_finite());
        }
        assert!((unsat_probability(2.0) - sat_probability(-2.0)).abs() < 1e-15);
    }

    #[test]
    fn softplus_tails() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn ial_relu_satisfied_with_margin() {
        // Single item: true weight 7 violates capacity 5; predicted weight 7 gives g = 2.
        let sys = ConstraintSystem::new(Family::KnapsackWeights, 1, 1, vec![5.0]).unwrap();
        let x = Assignment::binary(&[true]);
        let truth = ParameterVector::new(vec![7.0]);
        let pred = ParameterVector::new(vec![7.0]);
        let v = ial_loss(&sys, &x, &truth, &pred, &relu(1.0)).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.grad_rho_hat, vec![0.0]);
    }

    #[test]
    fn ial_zero_when_x_neg_truly_feasible() {
        let sys = ConstraintSystem::new(Family::KnapsackWeights, 2, 1, vec![5.0]).unwrap();
        let x = Assignment::binary(&[true, false]);
        let truth = ParameterVector::new(vec![1.0, 9.0]);
        let pred = ParameterVector::new(vec![-3.0, 2.0]);
        let cfg = LossConfig::default();
        let v = ial_loss(&sys, &x, &truth, &pred, &cfg).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.grad_rho_hat.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn ipl_single_item_arithmetic() {
        let sys = ConstraintSystem::new(Family::KnapsackWeights, 1, 1, vec![4.0]).unwrap();
        let truth = ParameterVector::new(vec![5.0]);
        let pred = ParameterVector::new(vec![3.0]);
        let v = ipl_loss(&sys, &[-1.0], &truth, &pred, &relu(0.0), &ExactSolver).unwrap();
        assert_eq!(v.value, 1.0);
        // d/d w_hat of max(0, 0 - (w_hat - 4)) = -1
        assert_eq!(v.grad_rho_hat, vec![-1.0]);

        let feasible_pred = ParameterVector::new(vec![6.0]);
        let v = ipl_loss(&sys, &[-1.0], &truth, &feasible_pred, &relu(0.0), &ExactSolver).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn ipl_predicted_problem_infeasible() {
        let sys = ConstraintSystem::new(Family::KnapsackCapacities, 1, 1, vec![1.0]).unwrap();
        let truth = ParameterVector::new(vec![0.5]);
        let pred = ParameterVector::new(vec![-1.0]);
        let v = ipl_loss(&sys, &[-1.0], &truth, &pred, &LossConfig::default(), &ExactSolver)
            .unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.no_predicted_solution);
    }

    #[test]
    fn opl_relu_examples() {
        let sys = ConstraintSystem::new(Family::KnapsackCapacities, 1, 2, vec![1.0, 1.0]).unwrap();
        let x = Assignment::binary(&[true]);
        // g = 1 - cap = -2 for both
        let pred = ParameterVector::new(vec![3.0, 3.0]);
        assert_eq!(opl_loss(&sys, &x, &pred, &relu(1.0)).unwrap().value, 0.0);

        let sys1 = ConstraintSystem::new(Family::KnapsackCapacities, 1, 1, vec![1.0]).unwrap();
        let pred = ParameterVector::new(vec![1.5]);
        let v = opl_loss(&sys1, &x, &pred, &relu(1.0)).unwrap();
        assert_eq!(v.value, 0.5);
        assert_eq!(v.grad_rho_hat, vec![-1.0]);
    }

    #[test]
    fn softplus_dominates_relu_with_ln2_gap_at_zero() {
        let sys = ConstraintSystem::new(Family::KnapsackCapacities, 1, 1, vec![1.0]).unwrap();
        let x = Assignment::binary(&[true]);
        let pred = ParameterVector::new(vec![1.0]);
        let mut cfg = relu(0.0);
        let r = opl_loss(&sys, &x, &pred, &cfg).unwrap().value;
        cfg.variant = LossVariant::Softplus;
        let s = opl_loss(&sys, &x, &pred, &cfg).unwrap().value;
        assert_eq!(r, 0.0);
        assert!((s - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn combined_extremes() {
        let sys = ConstraintSystem::new(Family::KnapsackWeights, 2, 1, vec![4.0]).unwrap();
        let truth = ParameterVector::new(vec![3.0, 3.0]);
        let pred = ParameterVector::new(vec![1.0, 2.0]);
        let q = [-5.0, -4.0];
        let x_star = Assignment::binary(&[true, false]);
        let mut cfg = LossConfig::default();

        cfg.alpha = 0.0;
        let c = combined_loss(&sys, &q, &truth, &pred, &x_star, &cfg, &ExactSolver).unwrap();
        assert_eq!(c, opl_loss(&sys, &x_star, &pred, &cfg).unwrap());

        cfg.alpha = 1.0;
        let c = combined_loss(&sys, &q, &truth, &pred, &x_star, &cfg, &ExactSolver).unwrap();
        let ipl = ipl_loss(&sys, &q, &truth, &pred, &cfg, &ExactSolver).unwrap();
        assert_eq!(c, ipl);
        assert!(ipl.value > 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(LossConfig::with_alpha(1.5).validate(false).is_err());
        let mut cfg = LossConfig::default();
        cfg.margin = 0.0;
        assert!(cfg.validate(false).is_err());
        assert!(cfg.validate(true).is_ok());
    }

    #[test]
    fn covering_gradients_have_expected_sign() {
        // Increasing content lowers g, so OPL gradient on contents is <= 0.
        let sys = ConstraintSystem::new(Family::CoveringLhs, 2, 1, vec![6.0]).unwrap();
        let x = Assignment::new(vec![1.0, 2.0], VarDomain::NonnegativeContinuous).unwrap();
        let pred = ParameterVector::new(vec![3.0, 1.0]);
        let v = opl_loss(&sys, &x, &pred, &LossConfig::default()).unwrap();
        assert!(v.grad_rho_hat.iter().all(|&g| g <= 0.0));
    }
}
