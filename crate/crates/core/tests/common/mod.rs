//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use odece::{ConstraintSystem, Family, ParameterVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random MDKP with predicted weights: `(system, q, rho_true)`.
pub fn random_mdkp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (ConstraintSystem, Vec<f64>, ParameterVector) {
    let weights: Vec<f64> = (0..n * m).map(|_| rng.random_range(1.0..10.0)).collect();
    let caps: Vec<f64> = (0..m)
        .map(|i| {
            let row: f64 = weights[i * n..(i + 1) * n].iter().sum();
            row * rng.random_range(0.2..0.6)
        })
        .collect();
    let q: Vec<f64> = (0..n).map(|_| -rng.random_range(1.0..20.0)).collect();
    let system = ConstraintSystem::new(Family::KnapsackWeights, n, m, caps).unwrap();
    (system, q, ParameterVector::new(weights))
}

/// Multiplicative perturbation `rho * U[1-w, 1+w]`.
pub fn perturb(rng: &mut ChaCha8Rng, rho: &ParameterVector, w: f64) -> ParameterVector {
    ParameterVector::new(
        rho.as_slice()
            .iter()
            .map(|v| v * rng.random_range(1.0 - w..1.0 + w))
            .collect(),
    )
}

/// Solve a square system by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum of `c.x` over `{x >= 0 : rows[k].x >= rhs[k]}` by enumerating all
/// basic solutions. Returns `None` when no vertex is feasible.
pub fn covering_vertex_oracle(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Option<f64> {
    let n = c.len();
    // Constraint list: covering rows, then x_j >= 0.
    let mut all: Vec<(Vec<f64>, f64)> = rows.iter().cloned().zip(rhs.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        all.push((e, 0.0));
    }
    let total = all.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&k| all[k].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&k| all[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            let feasible = all.iter().all(|(row, r)| {
                let lhs: f64 = row.iter().zip(&x).map(|(a, x)| a * x).sum();
                lhs >= r - 1e-9 * (1.0 + r.abs())
            });
            if feasible {
                let obj: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // Next n-combination of 0..total.
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < total - n + k {
                break;
            }
        }
        idx[k] += 1;
        for j in k + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Central difference of `f` at `x` along coordinate `j`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], j: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[j] += h;
    xm[j] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Relative error with an absolute floor so tiny gradients compare sensibly.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
