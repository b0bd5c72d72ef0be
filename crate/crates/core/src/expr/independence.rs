use nalgebra::DMatrix;
use serde::Serialize;

use super::Expr;
use crate::error::{Error, Result};

/// Default cutoff on the smallest singular value of the column-normalized
/// sample matrix.
pub const DEFAULT_INDEPENDENCE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Independent,
    Dependent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub verdict: Verdict,
    pub sigma_min: f64,
    /// Unit coefficient vector `(c_0, c_1, ..., c_k)` with
    /// `c_0 + c_1 f_1 + ... + c_k f_k ~ 0` on the interval. Present only for
    /// a dependent verdict. The first non-negligible entry is positive.
    pub null_direction: Option<Vec<f64>>,
}

/// Tests whether `{1, f_1, ..., f_k}` is linearly independent on `[lo, hi]`.
///
/// The `m x (k + 1)` matrix of samples at Chebyshev nodes, with each column
/// scaled to unit norm, is decomposed by SVD; the family is reported
/// dependent when its smallest singular value falls below `threshold`.
pub fn check_linear_independence(
    fs: &[Expr],
    interval: (f64, f64),
    m: usize,
    threshold: f64,
) -> Result<IndependenceReport> {
    let (lo, hi) = interval;
    let cols = fs.len() + 1;
    if !(lo < hi) {
        return Err(Error::param(format!("empty interval [{lo}, {hi}]")));
    }
    if m < 2 * cols {
        return Err(Error::param(format!("need at least {} sample points, got {m}", 2 * cols)));
    }
    if !(threshold > 0.0) {
        return Err(Error::param("threshold must be positive"));
    }

    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut a = DMatrix::<f64>::zeros(m, cols);
    for j in 0..m {
        let theta = std::f64::consts::PI * (2 * j + 1) as f64 / (2 * m) as f64;
        let x = mid + half * theta.cos();
        a[(j, 0)] = 1.0;
        for (i, f) in fs.iter().enumerate() {
            a[(j, i + 1)] = f.eval(x)?;
        }
    }

    let norms: Vec<f64> = (0..cols).map(|c| a.column(c).norm()).collect();
    if let Some(zero) = norms.iter().position(|&n| n == 0.0) {
        let mut dir = vec![0.0; cols];
        dir[zero] = 1.0;
        return Ok(IndependenceReport {
            verdict: Verdict::Dependent,
            sigma_min: 0.0,
            null_direction: Some(dir),
        });
    }
    for (c, &n) in norms.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / n);
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let (idx, &sigma_min) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one column");

    if sigma_min >= threshold {
        return Ok(IndependenceReport {
            verdict: Verdict::Independent,
            sigma_min,
            null_direction: None,
        });
    }

    // Undo the column scaling so the coefficients act on the raw functions.
    let mut dir: Vec<f64> = (0..cols).map(|c| v_t[(idx, c)] / norms[c]).collect();
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = dir.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let lead = dir.iter().find(|v| v.abs() > 1e-9 * scale).copied().unwrap_or(1.0);
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    for v in &mut dir {
        *v *= sign / len;
    }
    Ok(IndependenceReport {
        verdict: Verdict::Dependent,
        sigma_min,
        null_direction: Some(dir),
    })
}
