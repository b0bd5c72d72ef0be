//! Star discrepancy `D*_N = sup_B |#{x_n in B}/N - vol(B)|` over boxes
//! `B = [0, t_1) x ... x [0, t_k)`.
//!
//! The extreme discrepancy over all boxes lies between `D*` and `2^k D*`, so
//! either one tends to zero exactly when the other does.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::real::Real;
use crate::weyl::{csv_error, PhaseTable, PointGenerator};

/// Largest `N` accepted by the exact two-dimensional sweep.
pub const EXACT_KD_MAX_POINTS: usize = 4096;

/// Largest number of lattice cells the grid method will allocate.
pub const MAX_GRID_CELLS: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscrepancyMethod {
    Exact,
    /// Thresholds `j/m` on every axis; additive error at most `k/m`.
    Grid(usize),
    /// Exact for `k = 1`, and for `k = 2` up to the size cap; otherwise a grid
    /// of 256 (`k = 2`) or 64 cells per axis.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodUsed {
    Exact1d,
    ExactKd,
    Grid(usize),
}

impl FromStr for DiscrepancyMethod {
    type Err = Error;

    /// `exact`, `auto`, `grid:m` or `grid(m)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "exact" => return Ok(DiscrepancyMethod::Exact),
            "auto" => return Ok(DiscrepancyMethod::Auto),
            _ => {}
        }
        let m = s
            .strip_prefix("grid:")
            .or_else(|| s.strip_prefix("grid(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| Error::param(format!("unknown discrepancy method `{s}`")))?;
        let m: usize = m
            .trim()
            .parse()
            .map_err(|_| Error::param(format!("bad grid size `{m}`")))?;
        if m == 0 {
            return Err(Error::param("grid size must be positive"));
        }
        Ok(DiscrepancyMethod::Grid(m))
    }
}

impl fmt::Display for DiscrepancyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscrepancyMethod::Exact => f.write_str("exact"),
            DiscrepancyMethod::Grid(m) => write!(f, "grid:{m}"),
            DiscrepancyMethod::Auto => f.write_str("auto"),
        }
    }
}

impl fmt::Display for MethodUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodUsed::Exact1d => f.write_str("exact-1d"),
            MethodUsed::ExactKd => f.write_str("exact-kd"),
            MethodUsed::Grid(m) => write!(f, "grid({m})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy<T> {
    pub value: T,
    /// Additive bound on `exact - value`; zero for exact methods.
    pub err_bound: T,
    pub method: MethodUsed,
}

fn check_unit<T: Real>(index: usize, v: T) -> Result<()> {
    if v >= T::zero() && v < T::one() {
        Ok(())
    } else {
        Err(Error::OutsideUnitCube {
            index,
            value: v.to_f64_lossy(),
        })
    }
}

/// Exact one-dimensional star discrepancy by the sorted formula.
pub fn star_discrepancy_1d<T: Real>(points: &[T]) -> Result<T> {
    if points.is_empty() {
        return Err(Error::param("need at least one point"));
    }
    for (i, &p) in points.iter().enumerate() {
        check_unit(i, p)?;
    }
    let mut xs = points.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("checked finite"));
    let n = T::from_count(xs.len());
    Ok(xs.iter().enumerate().fold(T::zero(), |acc, (i, &x)| {
        let above = T::from_count(i + 1) / n - x;
        let below = x - T::from_count(i) / n;
        acc.max(above).max(below)
    }))
}

fn check_points<T: Real>(points: &[Vec<T>]) -> Result<usize> {
    let k = points.first().map(Vec::len).ok_or_else(|| Error::param("need at least one point"))?;
    if k == 0 {
        return Err(Error::param("points must have dimension at least 1"));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != k {
            return Err(Error::param(format!("point {} has dimension {}, expected {k}", i + 1, p.len())));
        }
        for &v in p {
            check_unit(i, v)?;
        }
    }
    Ok(k)
}

/// Star discrepancy of points in `[0, 1)^k`.
pub fn star_discrepancy_kd<T: Real>(points: &[Vec<T>], method: DiscrepancyMethod) -> Result<Discrepancy<T>> {
    let k = check_points(points)?;
    let n = points.len();
    let method = match method {
        DiscrepancyMethod::Auto => match k {
            1 => DiscrepancyMethod::Exact,
            2 if n <= EXACT_KD_MAX_POINTS => DiscrepancyMethod::Exact,
            2 => DiscrepancyMethod::Grid(256),
            _ => DiscrepancyMethod::Grid(64),
        },
        m => m,
    };
    match method {
        DiscrepancyMethod::Exact if k == 1 => {
            let xs: Vec<T> = points.iter().map(|p| p[0]).collect();
            Ok(Discrepancy {
                value: star_discrepancy_1d(&xs)?,
                err_bound: T::zero(),
                method: MethodUsed::Exact1d,
            })
        }
        DiscrepancyMethod::Exact if k == 2 => {
            if n > EXACT_KD_MAX_POINTS {
                return Err(Error::MethodMismatch(format!(
                    "exact method takes at most {EXACT_KD_MAX_POINTS} points, got {n}"
                )));
            }
            Ok(Discrepancy {
                value: exact_2d(points),
                err_bound: T::zero(),
                method: MethodUsed::ExactKd,
            })
        }
        DiscrepancyMethod::Exact => Err(Error::MethodMismatch(format!(
            "exact method is available for k <= 2, got k = {k}"
        ))),
        DiscrepancyMethod::Grid(m) => grid(points, k, m),
        DiscrepancyMethod::Auto => unreachable!("resolved above"),
    }
}

/// Sorted distinct values followed by 1.
fn thresholds<T: Real>(values: impl Iterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("checked finite"));
    v.dedup();
    v.push(T::one());
    v
}

/// Every critical corner `(a, b)` with `a`, `b` a coordinate value or 1.
/// The supremum of `count/N - ab` is reached on closed boxes `[0,a] x [0,b]`
/// and that of `ab - count/N` on open ones.
fn exact_2d<T: Real>(points: &[Vec<T>]) -> T {
    let n = T::from_count(points.len());
    let xs = thresholds(points.iter().map(|p| p[0]));
    let ys = thresholds(points.iter().map(|p| p[1]));
    let rank = |v: T, axis: &[T]| axis.partition_point(|&t| t < v);

    // Points grouped by the rank of their first coordinate.
    let mut by_x: Vec<Vec<usize>> = vec![Vec::new(); xs.len()];
    for p in points {
        by_x[rank(p[0], &xs)].push(rank(p[1], &ys));
    }

    let mut column = vec![0usize; ys.len()];
    let mut best = T::zero();
    for (ia, &a) in xs.iter().enumerate() {
        // `column` holds points with first coordinate < a.
        let mut open = 0usize;
        for (ib, &b) in ys.iter().enumerate() {
            best = best.max(a * b - T::from_count(open) / n);
            open += column[ib];
        }
        for &iy in &by_x[ia] {
            column[iy] += 1;
        }
        let mut closed = 0usize;
        for (ib, &b) in ys.iter().enumerate() {
            closed += column[ib];
            best = best.max(T::from_count(closed) / n - a * b);
        }
    }
    best
}

/// Smallest `j` with `v < j/m`, minus one: the cell holding `v`.
fn cell<T: Real>(v: T, m: usize) -> usize {
    let mf = T::from_count(m);
    let mut j = (v * mf).floor().to_usize().unwrap_or(0).min(m - 1);
    while j > 0 && v < T::from_count(j) / mf {
        j -= 1;
    }
    while j + 1 < m && v >= T::from_count(j + 1) / mf {
        j += 1;
    }
    j
}

fn grid<T: Real>(points: &[Vec<T>], k: usize, m: usize) -> Result<Discrepancy<T>> {
    if m < 1 {
        return Err(Error::param("grid needs at least one cell per axis"));
    }
    let cells = (0..k).try_fold(1usize, |acc, _| acc.checked_mul(m)).filter(|&c| c <= MAX_GRID_CELLS);
    let cells = cells.ok_or_else(|| Error::param(format!("grid of {m}^{k} cells exceeds {MAX_GRID_CELLS}")))?;

    let mut counts = vec![0u32; cells];
    for p in points {
        let idx = p.iter().fold(0usize, |acc, &v| acc * m + cell(v, m));
        counts[idx] += 1;
    }
    // Cumulative sums along each axis turn cell counts into counts of the
    // open boxes [0, (j_1+1)/m) x ... .
    let mut stride = 1;
    for _ in 0..k {
        for idx in 0..cells {
            if (idx / stride) % m != 0 {
                counts[idx] += counts[idx - stride];
            }
        }
        stride *= m;
    }

    let n = T::from_count(points.len());
    let mf = T::from_count(m);
    let value = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let mut vol = T::one();
            let mut rest = idx;
            for _ in 0..k {
                vol = vol * (T::from_count(rest % m + 1) / mf);
                rest /= m;
            }
            (T::from_count(counts[idx] as usize) / n - vol).abs()
        })
        .reduce(T::zero, T::max);
    Ok(Discrepancy {
        value,
        err_bound: T::from_count(k) / mf,
        method: MethodUsed::Grid(m),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyPoint {
    pub n: usize,
    pub dstar: f64,
    pub err_bound: f64,
    pub method: MethodUsed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub dimension: usize,
    pub source: String,
    pub points: Vec<DiscrepancyPoint>,
    /// Least-squares slope of `log D*` against `log N`; absent when some
    /// value is zero or fewer than two grid points were given.
    pub slope: Option<f64>,
}

impl DiscrepancyReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "dstar", "err_bound", "method"]).map_err(csv_error)?;
        for p in &self.points {
            w.write_record([
                p.n.to_string(),
                format!("{:e}", p.dstar),
                format!("{:e}", p.err_bound),
                p.method.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| csv_error(e.into()))
    }
}

/// `D*_N` of the first `N` generated points for each `N` in `grid`.
pub fn ud_trend(gen: &PointGenerator, grid: &[usize], method: DiscrepancyMethod) -> Result<DiscrepancyReport> {
    check_grid(grid)?;
    let table = gen.phases(*grid.last().expect("non-empty"))?;
    ud_trend_table(&table, grid, method, describe(gen))
}

/// [`ud_trend`] over an already reduced table.
pub fn ud_trend_table(
    table: &PhaseTable,
    grid: &[usize],
    method: DiscrepancyMethod,
    source: String,
) -> Result<DiscrepancyReport> {
    check_grid(grid)?;
    let top = *grid.last().expect("non-empty");
    if top > table.len() {
        return Err(Error::param(format!("grid reaches {top} but the table holds {}", table.len())));
    }
    let all: Vec<Vec<f64>> = (0..top).map(|i| table.point(i)).collect();
    let mut points = Vec::with_capacity(grid.len());
    for &n in grid {
        let d = star_discrepancy_kd(&all[..n], method)?;
        points.push(DiscrepancyPoint {
            n,
            dstar: d.value,
            err_bound: d.err_bound,
            method: d.method,
        });
    }
    let slope = if points.len() >= 2 && points.iter().all(|p| p.dstar > 0.0) {
        let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.dstar.ln()).collect();
        Some(fit_line(&xs, &ys)?.slope)
    } else {
        None
    };
    Ok(DiscrepancyReport {
        dimension: table.dimension(),
        source,
        points,
        slope,
    })
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grid must be non-empty, positive and strictly increasing"));
    }
    Ok(())
}

pub fn describe(gen: &PointGenerator) -> String {
    let parts: Vec<String> = gen.recipes().iter().map(crate::lab::format_recipe).collect();
    format!("{} at x = {}", parts.join("; "), gen.x())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(star_discrepancy_1d(&[0.5]).unwrap(), 0.5);
        let mid: Vec<f64> = (1..=4).map(|i| (2 * i - 1) as f64 / 8.0).collect();
        assert_eq!(star_discrepancy_1d(&mid).unwrap(), 0.125);
        assert_eq!(star_discrepancy_1d(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(star_discrepancy_1d(&[1.0]).is_err());
        assert!(star_discrepancy_1d(&[-0.1]).is_err());
        assert_eq!(star_discrepancy_1d(&[0.5f32]).unwrap(), 0.5f32);
    }

    #[test]
    fn single_point_in_the_plane() {
        let d = star_discrepancy_kd(&[vec![0.5, 0.5]], DiscrepancyMethod::Exact).unwrap();
        assert_eq!(d.value, 0.75);
        assert_eq!(d.err_bound, 0.0);
        assert_eq!(d.method, MethodUsed::ExactKd);
        let g = star_discrepancy_kd(&[vec![0.5, 0.5]], DiscrepancyMethod::Grid(100)).unwrap();
        assert!(g.value <= 0.75 && g.value >= 0.75 - 0.02);
    }

    #[test]
    fn product_lattice() {
        let pts: Vec<Vec<f64>> = (0..10)
            .flat_map(|i| (0..10).map(move |j| vec![i as f64 / 10.0, j as f64 / 10.0]))
            .collect();
        // The closed box [0, 0.9]^2 holds every point but has area 0.81.
        let e = star_discrepancy_kd(&pts, DiscrepancyMethod::Exact).unwrap();
        assert!((e.value - 0.19).abs() < 1e-12);
        let g = star_discrepancy_kd(&pts, DiscrepancyMethod::Grid(1000)).unwrap();
        assert!(g.value <= e.value && g.value >= e.value - g.err_bound);
    }

    #[test]
    fn method_limits() {
        let three = vec![vec![0.1, 0.2, 0.3]];
        assert!(matches!(
            star_discrepancy_kd(&three, DiscrepancyMethod::Exact),
            Err(Error::MethodMismatch(_))
        ));
        assert_eq!(star_discrepancy_kd(&three, DiscrepancyMethod::Auto).unwrap().method, MethodUsed::Grid(64));
        let many = vec![vec![0.1, 0.2]; EXACT_KD_MAX_POINTS + 1];
        assert!(star_discrepancy_kd(&many, DiscrepancyMethod::Exact).is_err());
        assert!(matches!(
            star_discrepancy_kd(&[vec![0.1, 1.0]], DiscrepancyMethod::Auto),
            Err(Error::OutsideUnitCube { index: 0, .. })
        ));
        assert!(star_discrepancy_kd(&[vec![0.1], vec![0.1, 0.2]], DiscrepancyMethod::Auto).is_err());
    }

    #[test]
    fn grid_cells_respect_float_thresholds() {
        for m in [3, 7, 10, 256] {
            for j in 0..m {
                let t = j as f64 / m as f64;
                assert_eq!(cell(t, m), j);
                if j > 0 {
                    assert_eq!(cell(t.next_down(), m), j - 1);
                }
            }
        }
    }
}
