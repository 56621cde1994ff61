//! Dense two-phase tableau simplex for small linear programs.
//!
//! Variable bounds are handled by shifting `x = l + y`; fixed columns are
//! dropped and finite upper bounds are kept implicit (nonbasic columns rest
//! at either bound, and the ratio test includes bound flips).
//! Pricing is Dantzig's rule until a run of degenerate pivots is seen, after
//! which Bland's rule takes over for the rest of the phase.

use serde::{Deserialize, Serialize};

use super::{SolveOutcome, SolveStatus};
use crate::cop::{Assignment, VarDomain};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const MIN_PIVOT: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

/// Desk-scale limit on rows and columns.
pub const MAX_DIM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    /// `a . x <= b`
    Le,
    /// `a . x >= b`
    Ge,
}

/// `min c . x  s.t.  A x (<=|>=) b,  lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    /// Row-major `rows x c.len()` constraint matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub sense: Vec<RowSense>,
    pub lower: Vec<f64>,
    /// `f64::INFINITY` for unbounded columns.
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Nonnegative variables without upper bounds.
    pub fn nonnegative(c: Vec<f64>, a: Vec<f64>, b: Vec<f64>, sense: Vec<RowSense>) -> Self {
        let n = c.len();
        LinearProgram {
            c,
            a,
            b,
            sense,
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_cols(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = (self.num_rows(), self.num_cols());
        if self.a.len() != m * n || self.sense.len() != m {
            return Err(Error::shape(format!(
                "LP with {m} rows and {n} columns needs a {m}x{n} matrix and {m} senses"
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::shape("bound vectors must match the column count"));
        }
        if m > MAX_DIM || n > MAX_DIM {
            return Err(Error::shape(format!(
                "LP is {m}x{n}, limit is {MAX_DIM}x{MAX_DIM}"
            )));
        }
        let finite = self.c.iter().chain(&self.a).chain(&self.b).chain(&self.lower);
        if !finite.into_iter().all(|v| v.is_finite()) || self.upper.iter().any(|v| v.is_nan()) {
            return Err(Error::shape("LP data must be finite"));
        }
        Ok(())
    }
}

/// Simplex result including the final reduced costs.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Phase-two reduced costs of every non-artificial tableau column
    /// (shifted structural columns, then slacks). Empty unless optimal.
    pub reduced_costs: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    fn status_only(status: SolveStatus, pivots: usize) -> Self {
        LpSolution {
            status,
            x: None,
            objective: None,
            reduced_costs: Vec::new(),
            pivots,
        }
    }

    pub fn into_outcome(self) -> Result<SolveOutcome> {
        match (self.status, self.x) {
            (SolveStatus::Optimal, Some(x)) => Ok(SolveOutcome::optimal(
                Assignment::new(x, VarDomain::NonnegativeContinuous)?,
                self.objective.unwrap_or_default(),
                0,
            )),
            (status, _) => Ok(SolveOutcome::without_solution(status, 0)),
        }
    }
}

/// Solve a linear program with nonnegative lower bounds and return the outcome.
///
/// Columns whose lower bound is negative are still supported; the returned
/// [`Assignment`] is only built when the solution is nonnegative.
pub fn solve_lp(lp: &LinearProgram) -> Result<SolveOutcome> {
    if lp.lower.iter().any(|&l| l < 0.0) {
        return Err(Error::shape("solve_lp returns nonnegative assignments; use solve_lp_detailed"));
    }
    solve_lp_detailed(lp)?.into_outcome()
}

struct Tableau {
    rows: usize,
    width: usize,
    /// `rows x width` matrix `B^-1 A` over all columns.
    data: Vec<f64>,
    /// Current values of the basic variables, one per row.
    value: Vec<f64>,
    /// Reduced costs of the current phase.
    obj: Vec<f64>,
    /// Column upper bounds (lower bounds are zero after shifting).
    upper: Vec<f64>,
    /// Nonbasic columns resting at their upper bound.
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    pivots: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Failure(String),
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn is_basic(&self, c: usize) -> bool {
        self.basis.contains(&c)
    }

    /// Row-reduce on `(pr, pc)`; basic values are maintained by the caller.
    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        let start = pr * w;
        for v in &mut self.data[start..start + w] {
            *v *= inv;
        }
        self.data[start + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[start..start + w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                let row = &mut self.data[r * w..(r + 1) * w];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.at_upper[pc] = false;
        self.pivots += 1;
    }

    /// Improving direction for nonbasic column `j`: +1 to increase, -1 to decrease.
    fn direction(&self, j: usize) -> Option<f64> {
        let d = self.obj[j];
        if self.at_upper[j] {
            (d > COST_TOL).then_some(-1.0)
        } else {
            (d < -COST_TOL).then_some(1.0)
        }
    }

    fn run(&mut self) -> PhaseEnd {
        let limit = 50 * (self.rows + self.width) + 1000;
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut basic = vec![false; self.width];
        for _ in 0..limit {
            basic.iter_mut().for_each(|b| *b = false);
            for &b in &self.basis {
                basic[b] = true;
            }
            let candidates = (0..self.width).filter(|&j| self.enterable[j] && !basic[j]);
            let entering = if bland {
                candidates
                    .filter_map(|j| self.direction(j).map(|s| (j, s)))
                    .next()
            } else {
                let mut best: Option<(usize, f64, f64)> = None;
                for j in candidates {
                    if let Some(s) = self.direction(j) {
                        let score = self.obj[j].abs();
                        if best.is_none_or(|(_, _, b)| score > b) {
                            best = Some((j, s, score));
                        }
                    }
                }
                best.map(|(j, s, _)| (j, s))
            };
            let Some((pc, dir)) = entering else {
                return PhaseEnd::Optimal;
            };

            // Largest step keeping every basic variable within its bounds.
            let mut step = self.upper[pc];
            let mut leave: Option<(usize, bool)> = None;
            for r in 0..self.rows {
                let a = dir * self.at(r, pc);
                let b = self.basis[r];
                let (ratio, to_upper) = if a > PIVOT_TOL {
                    (self.value[r].max(0.0) / a, false)
                } else if a < -PIVOT_TOL && self.upper[b].is_finite() {
                    ((self.upper[b] - self.value[r]).max(0.0) / -a, true)
                } else {
                    continue;
                };
                let better = ratio < step
                    || (ratio == step
                        && leave.is_some_and(|(lr, _)| b < self.basis[lr]));
                if better {
                    step = ratio;
                    leave = Some((r, to_upper));
                }
            }
            if step.is_infinite() {
                return PhaseEnd::Unbounded;
            }
            if step <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }

            for r in 0..self.rows {
                self.value[r] -= dir * step * self.at(r, pc);
            }
            let entering_value = if self.at_upper[pc] { self.upper[pc] } else { 0.0 } + dir * step;
            match leave {
                None => {
                    // Bound flip: the entering column crosses to its other bound.
                    self.at_upper[pc] = !self.at_upper[pc];
                    self.pivots += 1;
                }
                Some((pr, to_upper)) => {
                    if self.at(pr, pc).abs() < MIN_PIVOT {
                        return PhaseEnd::Failure(format!(
                            "pivot element {:e} too small",
                            self.at(pr, pc)
                        ));
                    }
                    let leaving = self.basis[pr];
                    self.pivot(pr, pc);
                    self.value[pr] = entering_value;
                    self.at_upper[leaving] = to_upper;
                }
            }
            if !self.obj.iter().all(|v| v.is_finite()) || !self.value.iter().all(|v| v.is_finite()) {
                return PhaseEnd::Failure("non-finite tableau entry".into());
            }
        }
        PhaseEnd::Failure(format!("iteration limit {limit} reached"))
    }

    /// Value of column `c` in the current basic solution.
    fn column_value(&self, c: usize) -> f64 {
        match self.basis.iter().position(|&b| b == c) {
            Some(r) => self.value[r],
            None if self.at_upper[c] => self.upper[c],
            None => 0.0,
        }
    }

    /// Load phase costs `c` (over all columns) as reduced costs.
    fn set_costs(&mut self, c: &[f64]) {
        self.obj.copy_from_slice(c);
        for r in 0..self.rows {
            let b = self.basis[r];
            let f = self.obj[b];
            if f != 0.0 {
                for col in 0..self.width {
                    self.obj[col] -= f * self.data[r * self.width + col];
                }
                self.obj[b] = 0.0;
            }
        }
    }
}

/// Two-phase bounded-variable simplex returning the full solution record.
pub fn solve_lp_detailed(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let (m, n) = (lp.num_rows(), lp.num_cols());

    // Shift bounds and drop fixed columns.
    let mut kept = Vec::with_capacity(n);
    for j in 0..n {
        let span = lp.upper[j] - lp.lower[j];
        if span < 0.0 {
            return Ok(LpSolution::status_only(SolveStatus::Infeasible, 0));
        }
        if span > 0.0 {
            kept.push(j);
        }
    }
    let k = kept.len();

    // (coefficients over kept columns, rhs, sense)
    let mut rows: Vec<(Vec<f64>, f64, RowSense)> = Vec::with_capacity(m);
    for r in 0..m {
        let arow = &lp.a[r * n..(r + 1) * n];
        let shift: f64 = arow.iter().zip(&lp.lower).map(|(a, l)| a * l).sum();
        let coeffs = kept.iter().map(|&j| arow[j]).collect();
        rows.push((coeffs, lp.b[r] - shift, lp.sense[r]));
    }
    for (coeffs, rhs, sense) in rows.iter_mut() {
        let flip = *rhs < 0.0 || (*rhs == 0.0 && *sense == RowSense::Ge);
        if flip {
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *sense = match sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
            };
        }
    }

    let rows_n = rows.len();
    let num_art = rows.iter().filter(|r| r.2 == RowSense::Ge).count();
    let width = k + rows_n + num_art;
    let mut data = vec![0.0; rows_n * width];
    let mut value = vec![0.0; rows_n];
    let mut basis = vec![0; rows_n];
    let mut art = k + rows_n;
    for (r, (coeffs, rhs, sense)) in rows.iter().enumerate() {
        let row = &mut data[r * width..(r + 1) * width];
        row[..k].copy_from_slice(coeffs);
        value[r] = *rhs;
        match sense {
            RowSense::Le => {
                row[k + r] = 1.0;
                basis[r] = k + r;
            }
            RowSense::Ge => {
                row[k + r] = -1.0;
                row[art] = 1.0;
                basis[r] = art;
                art += 1;
            }
        }
    }
    let mut upper = vec![f64::INFINITY; width];
    for (pos, &j) in kept.iter().enumerate() {
        upper[pos] = lp.upper[j] - lp.lower[j];
    }
    let mut t = Tableau {
        rows: rows_n,
        width,
        data,
        value,
        obj: vec![0.0; width],
        upper,
        at_upper: vec![false; width],
        basis,
        enterable: vec![true; width],
        pivots: 0,
    };

    if num_art > 0 {
        // Phase one: minimize the sum of artificials.
        let mut c1 = vec![0.0; width];
        c1[k + rows_n..].iter_mut().for_each(|v| *v = 1.0);
        t.set_costs(&c1);
        match t.run() {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Ok(LpSolution::status_only(
                    SolveStatus::NumericalFailure,
                    t.pivots,
                ))
            }
            PhaseEnd::Failure(msg) => {
                log::debug!("simplex phase one failed: {msg}");
                return Ok(LpSolution::status_only(
                    SolveStatus::NumericalFailure,
                    t.pivots,
                ));
            }
        }
        let infeas: f64 = (k + rows_n..width).map(|c| t.column_value(c)).sum();
        let scale = 1.0 + rows.iter().map(|r| r.1).fold(0.0, f64::max);
        if infeas > PHASE1_TOL * scale {
            return Ok(LpSolution::status_only(SolveStatus::Infeasible, t.pivots));
        }
        // Drive zero-level artificials out of the basis.
        let mut dead_rows = Vec::new();
        for r in 0..rows_n {
            if t.basis[r] >= k + rows_n {
                let candidate = (0..k + rows_n).find(|&c| !t.is_basic(c) && t.at(r, c).abs() > PIVOT_TOL);
                match candidate {
                    Some(c) => {
                        let v = t.column_value(c);
                        t.pivot(r, c);
                        t.value[r] = v;
                    }
                    None => dead_rows.push(r),
                }
            }
        }
        for c in k + rows_n..width {
            t.enterable[c] = false;
        }
        // Redundant rows: zero them so they never constrain a ratio test.
        for &r in &dead_rows {
            t.data[r * width..(r + 1) * width].iter_mut().for_each(|v| *v = 0.0);
            t.value[r] = 0.0;
        }
    }

    // Phase two.
    let mut c2 = vec![0.0; width];
    for (pos, &j) in kept.iter().enumerate() {
        c2[pos] = lp.c[j];
    }
    t.set_costs(&c2);
    match t.run() {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return Ok(LpSolution::status_only(SolveStatus::Unbounded, t.pivots)),
        PhaseEnd::Failure(msg) => {
            log::debug!("simplex phase two failed: {msg}");
            return Ok(LpSolution::status_only(
                SolveStatus::NumericalFailure,
                t.pivots,
            ));
        }
    }

    let mut x = lp.lower.clone();
    for (pos, &j) in kept.iter().enumerate() {
        x[j] = (lp.lower[j] + t.column_value(pos)).clamp(lp.lower[j], lp.upper[j]);
    }
    let objective = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpSolution {
        status: SolveStatus::Optimal,
        x: Some(x),
        objective: Some(objective),
        reduced_costs: t.obj[..k + rows_n].to_vec(),
        pivots: t.pivots,
    })
}
