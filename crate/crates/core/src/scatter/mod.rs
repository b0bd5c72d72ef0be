//! Pair sums `N^-2 sum_{m<n<=N} min(|a(n) - a(m)|^-delta, 1)`, the growth
//! condition, and joint scatteredness over sampled directions.

mod growth;

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::reduce::{stable_sum, PrefixSums};
use crate::seeding::sample_directions;
use crate::sequences::{linear_combination, SampleSet, Sequence, SequenceSpec};

pub use growth::{weyl_growth_check, Coverage, GrowthReport, GrowthVerdict, Witness};

/// Largest `N` that [`ScatterMode::Auto`] evaluates pair by pair.
pub const EXACT_CUTOFF: usize = 1 << 13;

pub const DEFAULT_BUCKET_RATIO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScatterMode {
    Exact,
    /// Geometric buckets of ratio `1 + eta`.
    Bucketed(f64),
    /// Exact up to [`EXACT_CUTOFF`], bucketed beyond.
    Auto(f64),
}

impl Default for ScatterMode {
    fn default() -> Self {
        ScatterMode::Auto(DEFAULT_BUCKET_RATIO)
    }
}

impl std::str::FromStr for ScatterMode {
    type Err = Error;

    /// `exact`, `bucketed[:eta]` or `auto[:eta]`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, eta) = match s.trim().split_once(':') {
            Some((h, e)) => {
                let eta: f64 = e
                    .trim()
                    .parse()
                    .map_err(|_| Error::param(format!("bad bucket ratio `{e}`")))?;
                (h, eta)
            }
            None => (s.trim(), DEFAULT_BUCKET_RATIO),
        };
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::param(format!("bucket ratio must lie in (0, 1), got {eta}")));
        }
        match head {
            "exact" => Ok(ScatterMode::Exact),
            "bucketed" => Ok(ScatterMode::Bucketed(eta)),
            "auto" => Ok(ScatterMode::Auto(eta)),
            other => Err(Error::param(format!("unknown scatter mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Bucketed,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Bucketed => "bucketed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterValue {
    pub s: f64,
    /// Absolute bound on `|s - exact|`; zero in exact mode.
    pub err_bound: f64,
    pub method: Method,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("delta must lie in (0, 1], got {delta}")))
    }
}

fn check_mode(mode: ScatterMode) -> Result<()> {
    match mode {
        ScatterMode::Exact => Ok(()),
        ScatterMode::Bucketed(eta) | ScatterMode::Auto(eta) => {
            if eta > 0.0 && eta <= 0.05 {
                Ok(())
            } else {
                Err(Error::param(format!("bucket ratio must lie in (0, 0.05], got {eta}")))
            }
        }
    }
}

#[inline]
fn pair_weight(t: f64, delta: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if delta == 1.0 {
        1.0 / t
    } else {
        t.powf(-delta)
    }
}

/// `sum_{j<i} w(|a_i - a_j|)` for every `i`, in a fixed order per row.
fn row_sums(samples: &SampleSet, delta: f64) -> Vec<f64> {
    (0..samples.len())
        .into_par_iter()
        .map(|i| (0..i).fold(0.0, |acc, j| acc + pair_weight(samples.abs_diff(i, j), delta)))
        .collect()
}

/// Number of sorted pairs `i < j` with `v[j] - v[i] <= t`, and the smallest
/// difference strictly above `t` (infinite if none).
fn pairs_within(sorted: &SampleSet, t: f64) -> (u64, f64) {
    let n = sorted.len();
    let mut count = 0u64;
    let mut next = f64::INFINITY;
    let mut hi = 0usize;
    for lo in 0..n {
        if hi < lo + 1 {
            hi = lo + 1;
        }
        while hi < n && sorted.abs_diff(hi, lo) <= t {
            hi += 1;
        }
        count += (hi - lo - 1) as u64;
        if hi < n {
            next = next.min(sorted.abs_diff(hi, lo));
        }
    }
    (count, next)
}

fn bucketed(samples: &SampleSet, delta: f64, eta: f64) -> ScatterValue {
    let n = samples.len();
    let sorted = samples.sorted();
    let (near, mut next) = pairs_within(&sorted, 1.0);
    let ln_ratio = eta.ln_1p();
    let mut below = near;
    let mut far = 0.0;
    while next.is_finite() {
        // Bucket (r^j, r^(j+1)] holding the smallest remaining difference.
        let mut j = ((next.ln() / ln_ratio).ceil() - 1.0).max(0.0);
        while ((j + 1.0) * ln_ratio).exp() < next {
            j += 1.0;
        }
        let upper = ((j + 1.0) * ln_ratio).exp();
        let (count, after) = pairs_within(&sorted, upper);
        let in_bucket = count - below;
        let mid = ((j + 0.5) * ln_ratio).exp();
        far += in_bucket as f64 * mid.powf(-delta);
        below = count;
        next = after;
    }
    let scale = 1.0 / (n as f64 * n as f64);
    ScatterValue {
        s: (near as f64 + far) * scale,
        // Geometric midpoints are within a factor (1 + eta)^(delta/2) of every
        // weight in their bucket.
        err_bound: delta * eta * far * scale,
        method: Method::Bucketed,
    }
}

/// Scatter sum over the first `n` values of `samples`.
pub fn scatter_sum_samples(samples: &SampleSet, n: usize, delta: f64, mode: ScatterMode) -> Result<ScatterValue> {
    check_delta(delta)?;
    check_mode(mode)?;
    if n < 2 || n > samples.len() {
        return Err(Error::param(format!("need 2 <= N <= {}, got {n}", samples.len())));
    }
    let prefix = samples.prefix(n);
    let eta = match mode {
        ScatterMode::Exact => None,
        ScatterMode::Bucketed(eta) => Some(eta),
        ScatterMode::Auto(eta) => (n > EXACT_CUTOFF).then_some(eta),
    };
    Ok(match eta {
        Some(eta) => bucketed(&prefix, delta, eta),
        None => ScatterValue {
            s: stable_sum(&row_sums(&prefix, delta)) / (n as f64 * n as f64),
            err_bound: 0.0,
            method: Method::Exact,
        },
    })
}

pub fn scatter_sum(seq: &Sequence, n: usize, delta: f64, mode: ScatterMode) -> Result<ScatterValue> {
    check_delta(delta)?;
    if n < 2 {
        return Err(Error::param(format!("need N >= 2, got {n}")));
    }
    scatter_sum_samples(&seq.samples(n)?, n, delta, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub n: usize,
    pub s: f64,
    /// `log(1/S) / log log N - 1`.
    pub eps_pointwise: f64,
    pub method: Method,
    pub err_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterReport {
    pub delta: f64,
    pub points: Vec<ScatterPoint>,
    /// Minimum of the pointwise exponents over the grid.
    pub eps_hat: f64,
    /// Slope of `log S` against `log log N`.
    pub slope_loglog: f64,
    /// Slope of `log S` against `log N`.
    pub slope_log: f64,
}

impl ScatterReport {
    /// Finite-range evidence only: the property concerns all large `N`.
    pub fn evidence_of_scattered(&self) -> bool {
        self.eps_hat > 0.0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io {
            path: "<csv>".into(),
            message: e.to_string(),
        };
        w.write_record(["N", "S", "eps_pointwise", "method", "err_bound"]).map_err(err)?;
        for p in &self.points {
            w.write_record([
                p.n.to_string(),
                format!("{:e}", p.s),
                format!("{:e}", p.eps_pointwise),
                p.method.to_string(),
                format!("{:e}", p.err_bound),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            message: e.to_string(),
        })
    }
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.len() < 4 {
        return Err(Error::param("grid needs at least 4 points"));
    }
    if grid[0] < 8 {
        return Err(Error::param("grid must start at N >= 8"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grid must be strictly increasing"));
    }
    Ok(())
}

/// Scatter sums along `grid`, reusing one set of exact row sums for every
/// grid point that the mode evaluates exactly.
pub fn fit_scatter_samples(samples: &SampleSet, delta: f64, grid: &[usize], mode: ScatterMode) -> Result<ScatterReport> {
    check_delta(delta)?;
    check_mode(mode)?;
    check_grid(grid)?;
    let n_max = *grid.last().expect("non-empty grid");
    if n_max > samples.len() {
        return Err(Error::param(format!("grid reaches {n_max} but only {} samples", samples.len())));
    }
    let exact_upto = grid
        .iter()
        .copied()
        .filter(|&n| match mode {
            ScatterMode::Exact => true,
            ScatterMode::Bucketed(_) => false,
            ScatterMode::Auto(_) => n <= EXACT_CUTOFF,
        })
        .max();
    let rows = exact_upto.map(|m| row_sums(&samples.prefix(m), delta));
    let prefix = rows.as_deref().map(PrefixSums::new);

    let mut points = Vec::with_capacity(grid.len());
    for &n in grid {
        let value = match (&prefix, exact_upto) {
            (Some(p), Some(m)) if n <= m => ScatterValue {
                s: p.prefix(n) / (n as f64 * n as f64),
                err_bound: 0.0,
                method: Method::Exact,
            },
            _ => {
                let eta = match mode {
                    ScatterMode::Bucketed(eta) | ScatterMode::Auto(eta) => eta,
                    ScatterMode::Exact => unreachable!("exact mode covers the whole grid"),
                };
                bucketed(&samples.prefix(n), delta, eta)
            }
        };
        let loglog = (n as f64).ln().ln();
        points.push(ScatterPoint {
            n,
            s: value.s,
            eps_pointwise: (1.0 / value.s).ln() / loglog - 1.0,
            method: value.method,
            err_bound: value.err_bound,
        });
    }
    let eps_hat = points.iter().map(|p| p.eps_pointwise).fold(f64::INFINITY, f64::min);
    let log_s: Vec<f64> = points.iter().map(|p| p.s.ln()).collect();
    let log_n: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let loglog_n: Vec<f64> = log_n.iter().map(|l| l.ln()).collect();
    Ok(ScatterReport {
        delta,
        eps_hat,
        slope_loglog: fit_line(&loglog_n, &log_s)?.slope,
        slope_log: fit_line(&log_n, &log_s)?.slope,
        points,
    })
}

pub fn fit_scatter(seq: &Sequence, delta: f64, grid: &[usize], mode: ScatterMode) -> Result<ScatterReport> {
    check_grid(grid)?;
    let samples = seq.samples(*grid.last().expect("non-empty grid"))?;
    fit_scatter_samples(&samples, delta, grid, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionReport {
    pub direction: Vec<f64>,
    pub report: ScatterReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointScatterReport {
    pub directions: Vec<DirectionReport>,
    /// Smallest `eps_hat` over the sampled directions.
    pub eps_hat: f64,
}

impl JointScatterReport {
    /// Sampled evidence: only finitely many directions were tried.
    pub fn evidence_of_jointly_scattered(&self) -> bool {
        self.eps_hat > 0.0
    }
}

/// [`fit_scatter`] of `v . (a_1, ..., a_k)` for each given direction `v`.
pub fn joint_scatter_along(
    specs: &[SequenceSpec],
    directions: &[Vec<f64>],
    delta: f64,
    grid: &[usize],
    mode: ScatterMode,
) -> Result<JointScatterReport> {
    if specs.len() < 2 {
        return Err(Error::param("joint scatteredness needs at least two sequences"));
    }
    check_grid(grid)?;
    let mut out = Vec::with_capacity(directions.len());
    for v in directions {
        if v.len() != specs.len() {
            return Err(Error::param(format!("direction has {} entries, expected {}", v.len(), specs.len())));
        }
        let combo = linear_combination(v.iter().copied().zip(specs.iter().cloned()).collect())?;
        let seq = crate::sequences::make_sequence(combo)?;
        out.push(DirectionReport {
            direction: v.clone(),
            report: fit_scatter(&seq, delta, grid, mode)?,
        });
    }
    let eps_hat = out.iter().map(|d| d.report.eps_hat).fold(f64::INFINITY, f64::min);
    Ok(JointScatterReport { directions: out, eps_hat })
}

/// Axis directions followed by `directions - k` seeded uniform unit vectors.
pub fn joint_scatter_check(
    specs: &[SequenceSpec],
    delta: f64,
    grid: &[usize],
    directions: usize,
    seed: u64,
    mode: ScatterMode,
) -> Result<JointScatterReport> {
    let k = specs.len();
    if directions < k {
        return Err(Error::param(format!("need at least {k} directions, got {directions}")));
    }
    joint_scatter_along(specs, &sample_directions(k, directions, seed), delta, grid, mode)
}
