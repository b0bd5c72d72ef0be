//! Exponential sums `F_N = |S_N|^-1 sum_{n in S_N} e(v . x_n)`.

use std::io::Write;

use astro_float::Consts;
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::precision::{tower_fract, DoubleDouble};
use crate::real::Real;
use crate::reduce::{stable_sum, PrefixSums};
use crate::sequences::{index_sets, IndexSetFamily, SequenceSpec};

pub type Complex64 = Complex<f64>;

/// Phases above this magnitude are reported as reduced in double-double.
const WIDE_PHASE: f64 = 1_099_511_627_776.0; // 2^40

/// Largest index a phase table will materialize.
pub const MAX_TABLE_LEN: usize = 1 << 27;

/// How one coordinate of `x_n` is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    /// `a(n) * f(x)`.
    Product { seq: SequenceSpec, factor: Expr },
    /// `g(x)^b(n)`, reduced in arbitrary precision. Requires `g(x) > 1`.
    PowerTower { base: Expr, exponent: SequenceSpec },
    /// Given values `x_1, x_2, ...`.
    Raw(Vec<f64>),
}

/// Points `x_n` in `R^k` built from per-coordinate recipes at a fixed `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGenerator {
    recipes: Vec<Recipe>,
    x: f64,
}

impl PointGenerator {
    pub fn new(recipes: Vec<Recipe>, x: f64) -> Result<Self> {
        if recipes.is_empty() {
            return Err(Error::param("a point generator needs at least one coordinate"));
        }
        for r in &recipes {
            match r {
                Recipe::Product { seq, factor } => {
                    seq.validate()?;
                    factor.eval::<f64>(x)?;
                }
                Recipe::PowerTower { base, exponent } => {
                    exponent.validate()?;
                    let g = base.eval::<f64>(x)?;
                    if !(g > 1.0 && g.is_finite()) {
                        return Err(Error::param(format!("power-tower base is {g} at x = {x}, need > 1")));
                    }
                }
                Recipe::Raw(values) => {
                    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                        return Err(Error::param(format!("raw value {} is not finite", i + 1)));
                    }
                }
            }
        }
        Ok(Self { recipes, x })
    }

    /// Raw generator from points `x_1, x_2, ...`, each of dimension `k`.
    pub fn raw(points: &[Vec<f64>]) -> Result<Self> {
        let k = points.first().map(Vec::len).unwrap_or(0);
        if k == 0 || points.iter().any(|p| p.len() != k) {
            return Err(Error::param("raw points must be non-empty and share one dimension"));
        }
        let cols = (0..k).map(|i| Recipe::Raw(points.iter().map(|p| p[i]).collect())).collect();
        Self::new(cols, 0.0)
    }

    /// `(a_1(n) f_1(x), ..., a_k(n) f_k(x))`.
    pub fn products(parts: Vec<(SequenceSpec, Expr)>, x: f64) -> Result<Self> {
        Self::new(
            parts.into_iter().map(|(seq, factor)| Recipe::Product { seq, factor }).collect(),
            x,
        )
    }

    pub fn dimension(&self) -> usize {
        self.recipes.len()
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    /// Same recipes at another `x`.
    pub fn at(&self, x: f64) -> Result<Self> {
        Self::new(self.recipes.clone(), x)
    }

    /// Reduced coordinates of `x_1, ..., x_len`.
    pub fn phases(&self, len: usize) -> Result<PhaseTable> {
        if len > MAX_TABLE_LEN {
            return Err(Error::param(format!("{len} points exceed the table cap of {MAX_TABLE_LEN}")));
        }
        let mut coords = Vec::with_capacity(self.recipes.len());
        let mut bits = vec![53u32; len];
        for r in &self.recipes {
            let (col, col_bits) = self.reduce_coordinate(r, len)?;
            for (b, c) in bits.iter_mut().zip(col_bits) {
                *b = (*b).max(c);
            }
            coords.push(col);
        }
        Ok(PhaseTable { coords, bits })
    }

    fn reduce_coordinate(&self, recipe: &Recipe, len: usize) -> Result<(Vec<DoubleDouble>, Vec<u32>)> {
        let pairs: Vec<(DoubleDouble, u32)> = match recipe {
            Recipe::Product { seq, factor } => {
                let c = factor.eval::<f64>(self.x)?;
                (1..=len as u64)
                    .into_par_iter()
                    .map(|n| {
                        let a = seq.value(n)?;
                        if !a.is_finite() {
                            return Err(Error::MethodMismatch(format!(
                                "a({n}) overflows f64; use a power-tower coordinate"
                            )));
                        }
                        let p = DoubleDouble::product(a, c);
                        let bits = if p.hi.abs() >= WIDE_PHASE { 106 } else { 53 };
                        Ok((p.fract(), bits))
                    })
                    .collect::<Result<_>>()?
            }
            Recipe::PowerTower { base, exponent } => {
                let g = base.eval::<f64>(self.x)?;
                (1..=len as u64)
                    .into_par_iter()
                    .map_init(
                        || Consts::new().map_err(|e| Error::param(format!("arbitrary-precision setup: {e:?}"))),
                        |cc, n| {
                            let cc = cc.as_mut().map_err(|e| e.clone())?;
                            let (f, bits) = tower_fract(g, exponent.value(n)?, cc)?;
                            Ok((f, bits as u32))
                        },
                    )
                    .collect::<Result<_>>()?
            }
            Recipe::Raw(values) => {
                if values.len() < len {
                    return Err(Error::param(format!("raw coordinate has {} values, need {len}", values.len())));
                }
                values[..len]
                    .iter()
                    .map(|&v| (DoubleDouble::new(v, 0.0).fract(), 53))
                    .collect()
            }
        };
        Ok(pairs.into_iter().unzip())
    }
}

/// Fractional parts of every coordinate of `x_1, ..., x_len`.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    coords: Vec<Vec<DoubleDouble>>,
    bits: Vec<u32>,
}

/// `exp(2 pi i t)`.
pub fn e<T: Real>(t: T) -> Complex<T> {
    let (s, c) = (T::TAU() * t).sin_cos();
    Complex::new(c, s)
}

impl PhaseTable {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    /// `{v . x_n}` for the zero-based position `i`.
    pub fn phase(&self, v: &[i64], i: usize) -> f64 {
        let mut t = DoubleDouble::default();
        for (col, &vi) in self.coords.iter().zip(v) {
            if vi != 0 {
                t = t.add(col[i].scale(vi));
            }
        }
        t.fract().to_f64()
    }

    /// Coordinates of `x_n` reduced into `[0, 1)` for the zero-based position `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords
            .iter()
            .map(|col| {
                let v = col[i].to_f64();
                // Fractions within half an ulp of 1 round up to it.
                if v >= 1.0 {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    }

    /// `e(v . x_n)` for every `n`.
    pub fn terms(&self, v: &[i64]) -> Vec<Complex64> {
        (0..self.len()).into_par_iter().map(|i| e(self.phase(v, i))).collect()
    }

    /// Working precision of the widest reduction among the first `n` points.
    pub fn precision_bits(&self, n: usize) -> u32 {
        self.bits[..n].iter().copied().max().unwrap_or(53)
    }

    pub fn check_frequency(&self, v: &[i64]) -> Result<()> {
        if v.len() != self.dimension() {
            return Err(Error::param(format!("frequency has {} entries, expected {}", v.len(), self.dimension())));
        }
        if v.iter().all(|&c| c == 0) {
            return Err(Error::param("frequency vector must be non-zero"));
        }
        if v.iter().any(|c| c.unsigned_abs() > 1 << 40) {
            return Err(Error::param("frequency entries must stay below 2^40"));
        }
        Ok(())
    }

    /// `F_N` over the first `n` points.
    pub fn average(&self, v: &[i64], n: usize) -> Result<Complex64> {
        self.check_frequency(v)?;
        if n == 0 || n > self.len() {
            return Err(Error::param(format!("need 1 <= N <= {}, got {n}", self.len())));
        }
        let terms: Vec<Complex64> = (0..n).into_par_iter().map(|i| e(self.phase(v, i))).collect();
        Ok(stable_sum(&terms) / n as f64)
    }
}

pub fn weyl_sum(gen: &PointGenerator, v: &[i64], n: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::param("N must be at least 1"));
    }
    gen.phases(n)?.average(v, n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylPoint {
    pub n: usize,
    pub set_size: u64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub precision_bits: u32,
    /// `sum_{M <= N} 1/|S_M|`.
    pub reciprocal_partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylSumSeries {
    pub v: Vec<i64>,
    pub points: Vec<WeylPoint>,
}

impl WeylSumSeries {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let v = self.v.iter().map(i64::to_string).collect::<Vec<_>>().join(";");
        w.write_record(["N", "v", "re", "im", "abs", "precision_bits"]).map_err(csv_error)?;
        for p in &self.points {
            w.write_record([
                p.n.to_string(),
                v.clone(),
                format!("{:e}", p.re),
                format!("{:e}", p.im),
                format!("{:e}", p.abs),
                p.precision_bits.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| csv_error(e.into()))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    }
}

/// `F_N` over the family's sets `S_N` for each `N` in `grid`.
pub fn weyl_sum_over_sets(
    gen: &PointGenerator,
    v: &[i64],
    family: &IndexSetFamily,
    grid: &[usize],
) -> Result<WeylSumSeries> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grid must be non-empty and strictly increasing"));
    }
    let sets = grid.iter().map(|&n| index_sets(family, n)).collect::<Result<Vec<_>>>()?;
    let top = sets.iter().map(|s| s.max()).max().expect("non-empty grid");
    if top > MAX_TABLE_LEN as u64 {
        return Err(Error::param(format!("index {top} exceeds the table cap of {MAX_TABLE_LEN}")));
    }
    let table = gen.phases(top as usize)?;
    table.check_frequency(v)?;
    let initial_segments = matches!(family, IndexSetFamily::Prefixes | IndexSetFamily::Geometric { .. });
    let terms = if initial_segments { table.terms(v) } else { Vec::new() };
    let prefix = PrefixSums::new(&terms);

    let mut points = Vec::with_capacity(grid.len());
    for (set, &n) in sets.iter().zip(grid) {
        let sum = if initial_segments {
            prefix.prefix(set.len as usize)
        } else {
            let picked: Vec<Complex64> = set.iter().map(|m| e(table.phase(v, m as usize - 1))).collect();
            stable_sum(&picked)
        };
        let f = sum / set.len as f64;
        let bits = set.iter().map(|m| table.bits[m as usize - 1]).max().unwrap_or(53);
        points.push(WeylPoint {
            n,
            set_size: set.len,
            re: f.re,
            im: f.im,
            abs: f.norm(),
            precision_bits: bits,
            reciprocal_partial_sum: set.reciprocal_partial_sum,
        });
    }
    Ok(WeylSumSeries { v: v.to_vec(), points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxWeylSum {
    pub n: usize,
    pub magnitude: f64,
    pub argmax: Vec<i64>,
}

/// Non-zero integer vectors with `|v|_inf <= bound`, in lexicographic order.
pub fn frequency_box(k: usize, bound: i64) -> Vec<Vec<i64>> {
    let side = (2 * bound + 1) as usize;
    let total = side.pow(k as u32);
    (0..total)
        .map(|mut code| {
            let mut v = vec![0i64; k];
            for slot in v.iter_mut().rev() {
                *slot = (code % side) as i64 - bound;
                code /= side;
            }
            v
        })
        .filter(|v| v.iter().any(|&c| c != 0))
        .collect()
}

/// Largest `|F_N|` over the frequency box, for each `N` in `grid`. Ties go
/// to the lexicographically first frequency.
pub fn max_weyl_sum_grid(table: &PhaseTable, bound: i64, grid: &[usize]) -> Result<Vec<MaxWeylSum>> {
    if bound < 1 {
        return Err(Error::param("frequency bound must be at least 1"));
    }
    if grid.iter().any(|&n| n == 0 || n > table.len()) {
        return Err(Error::param(format!("grid points must lie in 1..={}", table.len())));
    }
    let freqs = frequency_box(table.dimension(), bound);
    let per_freq: Vec<Vec<f64>> = freqs
        .par_iter()
        .map(|v| {
            let terms = table.terms(v);
            let prefix = PrefixSums::new(&terms);
            grid.iter().map(|&n| (prefix.prefix(n) / n as f64).norm()).collect()
        })
        .collect();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let mut best = 0;
            for i in 1..freqs.len() {
                if per_freq[i][g] > per_freq[best][g] {
                    best = i;
                }
            }
            MaxWeylSum {
                n,
                magnitude: per_freq[best][g],
                argmax: freqs[best].clone(),
            }
        })
        .collect())
}

pub fn max_weyl_sum(gen: &PointGenerator, bound: i64, n: usize) -> Result<MaxWeylSum> {
    if n == 0 {
        return Err(Error::param("N must be at least 1"));
    }
    let table = gen.phases(n)?;
    Ok(max_weyl_sum_grid(&table, bound, &[n])?.remove(0))
}

/// `ceil(exp(r^(1 - eps)))` for `r = 1..=r_max`, deduplicated.
pub fn sublacunary_grid(eps: f64, r_max: usize) -> Result<Vec<usize>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("exponent must lie in (0, 1), got {eps}")));
    }
    if r_max < 2 {
        return Err(Error::param("r_max must be at least 2"));
    }
    let mut out: Vec<usize> = Vec::new();
    for r in 1..=r_max {
        let v = (r as f64).powf(1.0 - eps).exp().ceil();
        if v >= MAX_TABLE_LEN as f64 {
            break;
        }
        let v = v as usize;
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

/// `|A_N - A_M|` for the running averages `A_j = (z_1 + ... + z_j) / j`,
/// together with the bound `2 (1 - N/M)` valid for `|z| <= 1`.
#[derive(Debug, Clone)]
pub struct CesaroAverages<T> {
    sums: Vec<Complex<T>>,
}

impl<T: Real> CesaroAverages<T> {
    pub fn new(zs: &[Complex<T>]) -> Result<Self> {
        let tol = T::one() + T::lit(1e-12);
        if let Some(i) = zs.iter().position(|z| !(z.norm() <= tol)) {
            return Err(Error::param(format!("|z_{}| exceeds 1", i + 1)));
        }
        let prefix = PrefixSums::new(zs);
        Ok(Self {
            sums: (0..=zs.len()).map(|j| prefix.prefix(j)).collect(),
        })
    }

    pub fn gap(&self, n: usize, m: usize) -> Result<(T, T)> {
        if !(1 <= n && n < m && m < self.sums.len()) {
            return Err(Error::param(format!("need 1 <= N < M <= {}, got N = {n}, M = {m}", self.sums.len() - 1)));
        }
        let (nf, mf) = (T::from_count(n), T::from_count(m));
        let lhs = (self.sums[n] / nf - self.sums[m] / mf).norm();
        Ok((lhs, T::lit(2.0) * (T::one() - nf / mf)))
    }
}

pub fn cesaro_gap<T: Real>(zs: &[Complex<T>], n: usize, m: usize) -> Result<(T, T)> {
    CesaroAverages::new(zs)?.gap(n, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn linear(alpha: &str) -> PointGenerator {
        PointGenerator::products(vec![(SequenceSpec::Identity, parse_expr(alpha).unwrap())], 0.0).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn worked_examples() {
        assert_eq!(weyl_sum(&linear("0"), &[1], 7).unwrap(), Complex::new(1.0, 0.0));
        assert!(close(weyl_sum(&linear("1/2"), &[1], 2).unwrap(), Complex::new(0.0, 0.0)));
        assert!(close(weyl_sum(&linear("1/4"), &[1], 4).unwrap(), Complex::new(0.0, 0.0)));
    }

    #[test]
    fn conjugate_symmetry_and_bound() {
        let g = PointGenerator::products(
            vec![
                (SequenceSpec::Identity, parse_expr("x").unwrap()),
                (SequenceSpec::Power { eps: 0.5 }, parse_expr("x^2").unwrap()),
            ],
            0.37,
        )
        .unwrap();
        for v in [[1, 0], [2, -3], [-1, 4]] {
            let a = weyl_sum(&g, &v, 300).unwrap();
            let b = weyl_sum(&g, &[-v[0], -v[1]], 300).unwrap();
            assert!(close(a, b.conj()));
            assert!(a.norm() <= 1.0);
        }
    }

    #[test]
    fn index_set_families() {
        let half = linear("1/2");
        let s = weyl_sum_over_sets(&half, &[1], &IndexSetFamily::Strided { c: 2 }, &[1, 2, 5]).unwrap();
        for p in &s.points {
            assert!((p.re - 1.0).abs() < 1e-12 && p.im.abs() < 1e-12);
        }
        let zero = linear("0");
        let s = weyl_sum_over_sets(&zero, &[1], &IndexSetFamily::Geometric { rho: 2.0 }, &[1, 3, 6]).unwrap();
        assert!(s.points.iter().all(|p| p.abs == 1.0));
        assert_eq!(s.points[2].set_size, 64);

        let g = linear("sqrt(2)");
        let s = weyl_sum_over_sets(&g, &[3], &IndexSetFamily::Prefixes, &[10, 50]).unwrap();
        for p in &s.points {
            let direct = weyl_sum(&g, &[3], p.n).unwrap();
            assert_eq!((p.re, p.im), (direct.re, direct.im));
        }
        assert!((s.points[0].reciprocal_partial_sum - (1..=10).map(|j| 1.0 / j as f64).sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn max_over_box() {
        let r = max_weyl_sum(&PointGenerator::raw(&vec![vec![0.0, 0.0]; 20]).unwrap(), 2, 20).unwrap();
        assert_eq!(r.magnitude, 1.0);
        assert_eq!(r.argmax, vec![-2, -2]);
        let phi = linear("(1 + sqrt(5))/2");
        let r = max_weyl_sum(&phi, 3, 10_000).unwrap();
        assert!(r.magnitude <= 0.02, "{r:?}");
        assert_eq!(frequency_box(2, 1).len(), 8);
        assert_eq!(frequency_box(1, 2), vec![vec![-2], vec![-1], vec![1], vec![2]]);
    }

    #[test]
    fn diagonal_phases_cancel() {
        let g = PointGenerator::products(
            vec![
                (SequenceSpec::Identity, parse_expr("sqrt(2)").unwrap()),
                (SequenceSpec::Identity, parse_expr("sqrt(2)").unwrap()),
            ],
            0.0,
        )
        .unwrap();
        assert_eq!(weyl_sum(&g, &[1, -1], 1000).unwrap(), Complex::new(1.0, 0.0));
        assert_eq!(max_weyl_sum(&g, 2, 1000).unwrap().magnitude, 1.0);
    }

    #[test]
    fn tower_generator() {
        let g = PointGenerator::new(
            vec![Recipe::PowerTower {
                base: parse_expr("x").unwrap(),
                exponent: SequenceSpec::Identity,
            }],
            1.5,
        )
        .unwrap();
        let t = g.phases(10).unwrap();
        assert_eq!(t.phase(&[1], 2), 0.375);
        assert!(t.precision_bits(10) >= 128);
        let bad = PointGenerator::new(
            vec![Recipe::PowerTower {
                base: parse_expr("x").unwrap(),
                exponent: SequenceSpec::Identity,
            }],
            1.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn large_products_use_double_double() {
        let g = PointGenerator::products(vec![(SequenceSpec::Power { eps: 3.0 }, parse_expr("0.5").unwrap())], 0.0).unwrap();
        let t = g.phases(20_000).unwrap();
        assert_eq!(t.precision_bits(100), 53);
        assert_eq!(t.precision_bits(20_000), 106);
        // n^3 / 2 has fractional part 1/2 exactly when n is odd.
        assert_eq!(t.phase(&[1], 19_998), 0.5);
    }

    #[test]
    fn sublacunary_points() {
        let g = sublacunary_grid(0.5, 9).unwrap();
        assert_eq!(g[0], 3);
        assert!(g.contains(&8) && g.contains(&21));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let long = sublacunary_grid(0.5, 400).unwrap();
        let n = long.len();
        assert!((long[n - 1] as f64 / long[n - 2] as f64) < 1.1);
        assert!(sublacunary_grid(1.0, 5).is_err());
        assert!(sublacunary_grid(0.5, 1).is_err());
    }

    #[test]
    fn cesaro_examples() {
        let ones = vec![Complex::new(1.0, 0.0); 5];
        assert_eq!(cesaro_gap(&ones, 2, 5).unwrap().0, 0.0);
        let alt: Vec<Complex64> = (0..4).map(|i| Complex::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
        assert_eq!(cesaro_gap(&alt, 1, 2).unwrap(), (1.0, 1.0));
        assert!(cesaro_gap(&[Complex::new(1.5, 0.0)], 1, 1).is_err());
        assert!(cesaro_gap(&alt, 2, 2).is_err());
        let f32s = vec![Complex::new(1.0f32, 0.0); 3];
        assert_eq!(cesaro_gap(&f32s, 1, 3).unwrap().0, 0.0);
    }
}
