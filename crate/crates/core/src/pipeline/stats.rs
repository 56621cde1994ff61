//! One-sided paired t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alternative {
    /// H1: mean of `a - b` is positive.
    AGreater,
    /// H1: mean of `a - b` is negative.
    BGreater,
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + t * t));
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// p-value of a one-sided paired t-test on `a - b`.
///
/// Zero-variance differences are decided by their sign: p = 0 when the
/// mean difference points in the alternative's direction, 1 when it points
/// the other way, and 0.5 when every difference is zero.
pub fn paired_t_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::shape("paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let m = mean(&d);
    let sd = sample_sd(&d);
    let signed = match alternative {
        Alternative::AGreater => m,
        Alternative::BGreater => -m,
    };
    if sd == 0.0 || !sd.is_finite() {
        return Ok(if signed > 0.0 {
            0.0
        } else if signed < 0.0 {
            1.0
        } else {
            0.5
        });
    }
    let t = signed / (sd / n.sqrt());
    Ok(1.0 - student_t_cdf(t, n - 1.0))
}
