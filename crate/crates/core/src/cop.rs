//! Parametric constrained optimization problems with linear constraint families.
//!
//! Every family is normalized to the form `g_i(x; rho) <= 0`, so callers never
//! need to know whether a row was a packing or a covering constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility tolerance applied to continuous decision variables.
pub const CONTINUOUS_FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// 0-1 knapsack with unknown item weights, known capacities.
    KnapsackWeights,
    /// 0-1 knapsack with unknown capacities, known item weights.
    KnapsackCapacities,
    /// Covering LP with unknown left-hand-side contents, known requirements.
    CoveringLhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarDomain {
    Binary,
    NonnegativeContinuous,
}

impl Family {
    pub fn var_domain(self) -> VarDomain {
        match self {
            Family::KnapsackWeights | Family::KnapsackCapacities => VarDomain::Binary,
            Family::CoveringLhs => VarDomain::NonnegativeContinuous,
        }
    }
}

/// Known structure of a COP family plus the values of its non-predicted slots.
///
/// Matrix-shaped parameters (item weights, metal contents) are stored
/// constraint-major: slot `(i, n)` lives at index `i * N + n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    family: Family,
    num_vars: usize,
    num_constraints: usize,
    fixed_params: Vec<f64>,
}

/// Predicted or true constraint parameters (the predicted slots only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParameterVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        ParameterVector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        ParameterVector(v)
    }
}

/// A decision vector together with its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    x: Vec<f64>,
    domain: VarDomain,
}

impl Assignment {
    pub fn new(x: Vec<f64>, domain: VarDomain) -> Result<Self> {
        let ok = match domain {
            VarDomain::Binary => x.iter().all(|&v| v == 0.0 || v == 1.0),
            VarDomain::NonnegativeContinuous => x.iter().all(|&v| v >= 0.0 && v.is_finite()),
        };
        if !ok {
            return Err(Error::shape(format!(
                "assignment entries violate {domain:?} domain"
            )));
        }
        Ok(Assignment { x, domain })
    }

    pub fn binary(bits: &[bool]) -> Self {
        Assignment {
            x: bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            domain: VarDomain::Binary,
        }
    }

    pub fn zeros(n: usize, domain: VarDomain) -> Self {
        Assignment {
            x: vec![0.0; n],
            domain,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn domain(&self) -> VarDomain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Number of entries equal to one (meaningful for binary assignments).
    pub fn count_ones(&self) -> usize {
        self.x.iter().filter(|&&v| v == 1.0).count()
    }
}

/// One predict-then-optimize instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopInstance {
    pub system: ConstraintSystem,
    pub features: Vec<f64>,
    pub rho_true: ParameterVector,
    /// Minimization coefficients; knapsack instances store negated values.
    pub objective: Vec<f64>,
    pub x_star: Option<Assignment>,
}

impl CopInstance {
    pub fn new(
        system: ConstraintSystem,
        features: Vec<f64>,
        rho_true: ParameterVector,
        objective: Vec<f64>,
    ) -> Result<Self> {
        if rho_true.len() != system.predicted_slot_count() {
            return Err(Error::shape(format!(
                "rho_true has {} entries, system expects {}",
                rho_true.len(),
                system.predicted_slot_count()
            )));
        }
        if objective.len() != system.num_vars() {
            return Err(Error::shape(format!(
                "objective has {} entries, system has {} variables",
                objective.len(),
                system.num_vars()
            )));
        }
        if !features.iter().all(|v| v.is_finite()) || !objective.iter().all(|v| v.is_finite()) {
            return Err(Error::shape("features and objective must be finite"));
        }
        Ok(CopInstance {
            system,
            features,
            rho_true,
            objective,
            x_star: None,
        })
    }

    /// Attach the true optimum after checking it is feasible under `rho_true`.
    pub fn set_x_star(&mut self, x: Assignment) -> Result<()> {
        if !self.system.is_feasible(&x, &self.rho_true)? {
            return Err(Error::shape("x_star is infeasible under rho_true"));
        }
        self.x_star = Some(x);
        Ok(())
    }

    pub fn true_objective(&self) -> Option<f64> {
        self.x_star
            .as_ref()
            .map(|x| dot(&self.objective, x.values()))
    }
}

impl ConstraintSystem {
    pub fn new(
        family: Family,
        num_vars: usize,
        num_constraints: usize,
        fixed_params: Vec<f64>,
    ) -> Result<Self> {
        if num_vars == 0 || num_constraints == 0 {
            return Err(Error::shape("systems need at least one variable and one constraint"));
        }
        let expected = match family {
            Family::KnapsackWeights | Family::CoveringLhs => num_constraints,
            Family::KnapsackCapacities => num_vars * num_constraints,
        };
        if fixed_params.len() != expected {
            return Err(Error::shape(format!(
                "{family:?} with N={num_vars}, M={num_constraints} needs {expected} fixed params, got {}",
                fixed_params.len()
            )));
        }
        if !fixed_params.iter().all(|v| v.is_finite()) {
            return Err(Error::shape("fixed params must be finite"));
        }
        Ok(ConstraintSystem {
            family,
            num_vars,
            num_constraints,
            fixed_params,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    pub fn fixed_params(&self) -> &[f64] {
        &self.fixed_params
    }

    pub fn var_domain(&self) -> VarDomain {
        self.family.var_domain()
    }

    pub fn predicted_slot_count(&self) -> usize {
        match self.family {
            Family::KnapsackWeights | Family::CoveringLhs => self.num_vars * self.num_constraints,
            Family::KnapsackCapacities => self.num_constraints,
        }
    }

    /// Index of the `(constraint, variable)` entry in a constraint-major matrix.
    pub fn slot(&self, constraint: usize, var: usize) -> usize {
        constraint * self.num_vars + var
    }

    /// Tolerance on `g_i` below which a constraint counts as satisfied.
    pub fn feasibility_tolerance(&self) -> f64 {
        match self.var_domain() {
            VarDomain::Binary => 0.0,
            VarDomain::NonnegativeContinuous => CONTINUOUS_FEAS_TOL,
        }
    }

    fn check(&self, x: &Assignment, rho: &ParameterVector) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::shape(format!(
                "assignment has {} entries, system has {} variables",
                x.len(),
                self.num_vars
            )));
        }
        self.check_rho(rho)
    }

    pub(crate) fn check_rho(&self, rho: &ParameterVector) -> Result<()> {
        if rho.len() != self.predicted_slot_count() {
            return Err(Error::shape(format!(
                "parameter vector has {} entries, system expects {}",
                rho.len(),
                self.predicted_slot_count()
            )));
        }
        Ok(())
    }

    /// Coefficients `a_i` and offsets `b_i` such that `g_i(x) = a_i . x - b_i`.
    ///
    /// Row-major `M x N` coefficient matrix followed by the `M` offsets.
    pub fn linear_form(&self, rho: &ParameterVector) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_rho(rho)?;
        let (n, m) = (self.num_vars, self.num_constraints);
        let rho = rho.as_slice();
        let (coeffs, offsets) = match self.family {
            Family::KnapsackWeights => (rho.to_vec(), self.fixed_params.clone()),
            Family::KnapsackCapacities => (self.fixed_params.clone(), rho.to_vec()),
            Family::CoveringLhs => (
                rho.iter().map(|v| -v).collect(),
                self.fixed_params.iter().map(|v| -v).collect(),
            ),
        };
        debug_assert_eq!(coeffs.len(), n * m);
        Ok((coeffs, offsets))
    }

    pub(crate) fn g_unchecked(&self, x: &[f64], rho: &[f64], i: usize) -> f64 {
        let n = self.num_vars;
        let row = i * n..(i + 1) * n;
        match self.family {
            Family::KnapsackWeights => {
                let lhs: f64 = rho[row].iter().zip(x).map(|(w, x)| w * x).sum();
                lhs - self.fixed_params[i]
            }
            Family::KnapsackCapacities => {
                let lhs: f64 = self.fixed_params[row].iter().zip(x).map(|(w, x)| w * x).sum();
                lhs - rho[i]
            }
            Family::CoveringLhs => {
                let lhs: f64 = rho[row].iter().zip(x).map(|(c, x)| c * x).sum();
                self.fixed_params[i] - lhs
            }
        }
    }

    /// `g_i(x; rho)`; the constraint is satisfied when this is `<= 0`.
    pub fn constraint_value(&self, x: &Assignment, rho: &ParameterVector, i: usize) -> Result<f64> {
        self.check(x, rho)?;
        if i >= self.num_constraints {
            return Err(Error::shape(format!(
                "constraint index {i} out of range for M={}",
                self.num_constraints
            )));
        }
        Ok(self.g_unchecked(x.values(), rho.as_slice(), i))
    }

    /// All `M` constraint values.
    pub fn constraint_values(&self, x: &Assignment, rho: &ParameterVector) -> Result<Vec<f64>> {
        self.check(x, rho)?;
        Ok((0..self.num_constraints)
            .map(|i| self.g_unchecked(x.values(), rho.as_slice(), i))
            .collect())
    }

    /// Gradient of `g_i` with respect to the predicted slots.
    pub fn constraint_grad_rho(
        &self,
        x: &Assignment,
        rho: &ParameterVector,
        i: usize,
    ) -> Result<Vec<f64>> {
        self.check(x, rho)?;
        if i >= self.num_constraints {
            return Err(Error::shape(format!(
                "constraint index {i} out of range for M={}",
                self.num_constraints
            )));
        }
        let mut grad = vec![0.0; self.predicted_slot_count()];
        self.add_grad_unchecked(x.values(), i, 1.0, &mut grad);
        Ok(grad)
    }

    /// `out += scale * dg_i/drho`.
    pub(crate) fn add_grad_unchecked(&self, x: &[f64], i: usize, scale: f64, out: &mut [f64]) {
        let n = self.num_vars;
        match self.family {
            Family::KnapsackWeights => {
                for (o, xv) in out[i * n..(i + 1) * n].iter_mut().zip(x) {
                    *o += scale * xv;
                }
            }
            Family::KnapsackCapacities => out[i] -= scale,
            Family::CoveringLhs => {
                for (o, xv) in out[i * n..(i + 1) * n].iter_mut().zip(x) {
                    *o -= scale * xv;
                }
            }
        }
    }

    /// `UNSAT_i = 1{g_i > tol}`; boundary points are satisfied.
    pub fn unsat_mask(&self, x: &Assignment, rho: &ParameterVector) -> Result<Vec<bool>> {
        let tol = self.feasibility_tolerance();
        Ok(self
            .constraint_values(x, rho)?
            .into_iter()
            .map(|g| g > tol)
            .collect())
    }

    pub fn is_feasible(&self, x: &Assignment, rho: &ParameterVector) -> Result<bool> {
        Ok(self.unsat_mask(x, rho)?.iter().all(|&v| !v))
    }

    /// Copy of this system with different fixed parameters.
    pub fn with_fixed_params(&self, fixed_params: Vec<f64>) -> Result<Self> {
        ConstraintSystem::new(self.family, self.num_vars, self.num_constraints, fixed_params)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Linear objective `f(x; q) = q . x`.
pub fn objective_value(q: &[f64], x: &Assignment) -> Result<f64> {
    if q.len() != x.len() {
        return Err(Error::shape(format!(
            "objective has {} entries, assignment has {}",
            q.len(),
            x.len()
        )));
    }
    Ok(dot(q, x.values()))
}
