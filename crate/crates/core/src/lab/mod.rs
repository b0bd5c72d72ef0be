//! Config-driven Monte Carlo experiments over the parameter `x`.
//!
//! An "almost every `x`" statement is probed by drawing `x` uniformly from an
//! interval with per-sample seeded streams, building the point generator at
//! each sample and tracking `D*_N` and the largest small-frequency Weyl sum
//! along an `N` grid.

mod generator;
mod grid;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use generator::{format_recipe, parse_recipe, parse_recipes};
pub use grid::GridSpec;

use crate::discrepancy::{ud_trend_table, DiscrepancyMethod, DiscrepancyReport, EXACT_KD_MAX_POINTS};
use crate::error::{Error, Result};
use crate::expr::{check_linear_independence, parse_expr, Expr, Verdict, DEFAULT_INDEPENDENCE_THRESHOLD};
use crate::oscillatory::vdc_constant;
use crate::plot::{loglog_svg, Series, Style};
use crate::precision::TOWER_GUARD_BITS;
use crate::seeding::derived_rng;
use crate::sequences::SequenceSpec;
use crate::weyl::{csv_error, max_weyl_sum_grid, MaxWeylSum, PointGenerator, Recipe};

/// Which family of points an experiment samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// `(a_i(n) p_i(x))` with polynomial `p_i`.
    #[serde(rename = "theorem-1.5", alias = "polynomial-products")]
    PolynomialProducts,
    /// `(a_i(n) f_i(x))` with analytic `f_i`.
    #[serde(rename = "theorem-1.8", alias = "analytic-products")]
    AnalyticProducts,
    /// `(g(x)^b(n), a_1(n) p_1(x), ...)`: the first function/sequence pair is
    /// the tower, the rest are polynomial products.
    #[serde(rename = "theorem-1.9", alias = "tower-and-products")]
    TowerAndProducts,
    /// Two coordinates that cancel along a fixed frequency.
    #[serde(rename = "diagonal-counterexample")]
    DiagonalCounterexample,
    /// Every coordinate is a tower `f_i(x)^a_i(n)`. Exploratory only.
    #[serde(rename = "conjecture-power-tower")]
    PowerTowers,
    /// Any generator written in the textual coordinate syntax.
    #[serde(rename = "custom")]
    Custom,
}

impl ExperimentKind {
    pub fn is_exploratory(self) -> bool {
        self == ExperimentKind::PowerTowers
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Per-sample bound on `D*_N` at the last grid point.
    pub sample_dstar: Option<f64>,
    /// Bound on the median of `D*_N` at the last grid point.
    pub median_dstar: Option<f64>,
    /// Per-sample lower bound on `|F_N(probe)|` at every grid point.
    pub probe_min: Option<f64>,
    /// Fraction of samples that must pass individually.
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
}

fn default_pass_fraction() -> f64 {
    0.9
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sample_dstar: None,
            median_dstar: None,
            probe_min: None,
            pass_fraction: default_pass_fraction(),
        }
    }
}

impl Thresholds {
    fn is_empty(&self) -> bool {
        self.sample_dstar.is_none() && self.median_dstar.is_none() && self.probe_min.is_none()
    }
}

fn default_frequency_bound() -> i64 {
    3
}

fn default_method() -> String {
    "auto".into()
}

/// Experiment description, read from TOML.
///
/// ```toml
/// kind = "theorem-1.5"
/// functions = ["x", "x^2"]
/// sequences = ["identity", "identity"]
/// x_interval = [0.05, 0.95]
/// x_samples = 20
/// seed = 7
/// grid = "sublacunary:0.5:200:20000"
/// frequency_bound = 3
/// method = "grid:256"
/// output_dir = "out/probe"
///
/// [thresholds]
/// median_dstar = 0.02
/// sample_dstar = 0.02
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub sequences: Vec<String>,
    /// Coordinate syntax of [`parse_recipes`]; used by the custom kind.
    #[serde(default)]
    pub generator: Option<String>,
    pub x_interval: [f64; 2],
    pub x_samples: usize,
    pub seed: u64,
    pub grid: GridSpec,
    #[serde(default = "default_frequency_bound")]
    pub frequency_bound: i64,
    #[serde(default = "default_method")]
    pub method: String,
    /// Frequency whose Weyl average is tracked for every sample. The
    /// diagonal kind defaults to `(1, -1)`.
    #[serde(default)]
    pub probe: Option<Vec<i64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn method(&self) -> Result<DiscrepancyMethod> {
        self.method.parse()
    }

    fn probe(&self) -> Option<Vec<i64>> {
        match (&self.probe, self.kind) {
            (Some(p), _) => Some(p.clone()),
            (None, ExperimentKind::DiagonalCounterexample) => Some(vec![1, -1]),
            _ => None,
        }
    }

    fn pairs(&self) -> Result<Vec<(Expr, SequenceSpec)>> {
        if self.functions.is_empty() {
            return Err(Error::Config(format!("{:?} needs at least one function", self.kind)));
        }
        if self.functions.len() != self.sequences.len() {
            return Err(Error::Config(format!(
                "{} functions but {} sequences",
                self.functions.len(),
                self.sequences.len()
            )));
        }
        self.functions
            .iter()
            .zip(&self.sequences)
            .map(|(f, s)| Ok((parse_expr(f)?, s.parse()?)))
            .collect()
    }

    /// Coordinate recipes, independent of `x`.
    pub fn recipes(&self) -> Result<Vec<Recipe>> {
        use ExperimentKind::*;
        if self.kind == Custom {
            let g = self
                .generator
                .as_deref()
                .ok_or_else(|| Error::Config("the custom kind needs `generator`".into()))?;
            return parse_recipes(g);
        }
        if self.generator.is_some() {
            return Err(Error::Config("`generator` is only read by the custom kind".into()));
        }
        let pairs = self.pairs()?;
        if let Some((i, _)) = pairs.iter().enumerate().find(|(_, (f, _))| !f.has_var()) {
            return Err(Error::Config(format!("function {} is constant", i + 1)));
        }
        let polynomial_from = match self.kind {
            PolynomialProducts => Some(0),
            TowerAndProducts => Some(1),
            _ => None,
        };
        if let Some(start) = polynomial_from {
            if let Some((i, _)) = pairs.iter().enumerate().skip(start).find(|(_, (f, _))| !f.is_polynomial()) {
                return Err(Error::Config(format!("function {} must be a polynomial", i + 1)));
            }
        }
        if self.kind == DiagonalCounterexample && pairs.len() != 2 {
            return Err(Error::Config("the diagonal kind takes exactly two coordinates".into()));
        }
        if self.kind == TowerAndProducts && pairs.len() < 2 {
            return Err(Error::Config("the tower kind needs a tower and at least one product".into()));
        }
        Ok(pairs
            .into_iter()
            .enumerate()
            .map(|(i, (f, s))| {
                let tower = self.kind == PowerTowers || (self.kind == TowerAndProducts && i == 0);
                if tower {
                    Recipe::PowerTower { base: f, exponent: s }
                } else {
                    Recipe::Product { seq: s, factor: f }
                }
            })
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.x_interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad x interval [{lo}, {hi}]")));
        }
        if self.x_samples == 0 {
            return Err(Error::Config("x_samples must be positive".into()));
        }
        if self.frequency_bound < 1 {
            return Err(Error::Config("frequency_bound must be at least 1".into()));
        }
        let t = &self.thresholds;
        if !(t.pass_fraction > 0.0 && t.pass_fraction <= 1.0) {
            return Err(Error::Config("pass_fraction must lie in (0, 1]".into()));
        }
        self.method()?;
        self.grid.points()?;
        let recipes = self.recipes()?;
        if let Some(p) = self.probe() {
            if p.len() != recipes.len() || p.iter().all(|&c| c == 0) {
                return Err(Error::Config(format!("probe must be a nonzero vector of length {}", recipes.len())));
            }
        }
        for r in &recipes {
            if let Recipe::PowerTower { base, .. } = r {
                for j in 0..=64 {
                    let x = lo + (hi - lo) * j as f64 / 64.0;
                    let g = base.eval::<f64>(x)?;
                    if !(g > 1.0) {
                        return Err(Error::Config(format!("tower base {base} is {g} <= 1 at x = {x}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// The `index`-th sampled parameter. Depends only on `(seed, index)`.
    pub fn sample_x(&self, index: usize) -> f64 {
        let [lo, hi] = self.x_interval;
        let u: f64 = derived_rng(self.seed, index as u64).random();
        lo + (hi - lo) * u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbePoint {
    pub n: usize,
    pub abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleResult {
    pub index: usize,
    pub x: f64,
    pub discrepancy: Option<DiscrepancyReport>,
    pub max_weyl: Vec<MaxWeylSum>,
    pub probe: Vec<ProbePoint>,
    /// Set when any stage failed for this sample; the other fields are then empty.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub n: usize,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentVerdict {
    Pass,
    Fail,
    /// No thresholds apply; the run only records data.
    Exploratory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub verdict: ExperimentVerdict,
    /// Indices of samples that failed or errored.
    pub exceptions: Vec<usize>,
    pub pass_fraction: f64,
    pub final_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub crate_version: String,
    pub tower_guard_bits: usize,
    pub exact_kd_max_points: usize,
    /// `(d, C_d)` for the higher-derivative decay bound.
    pub vdc_constants: Vec<(usize, f64)>,
    /// Independence of `{1, f_1, ..., f_k}` on the interval, when meaningful.
    pub functions_independent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub grid: Vec<usize>,
    pub samples: Vec<SampleResult>,
    pub quantiles: Vec<Quantiles>,
    pub partial_coverage: bool,
    pub evaluation: Evaluation,
    pub provenance: Provenance,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn quantiles(grid: &[usize], samples: &[SampleResult]) -> Vec<Quantiles> {
    let reports: Vec<&DiscrepancyReport> = samples.iter().filter_map(|s| s.discrepancy.as_ref()).collect();
    if reports.is_empty() {
        return Vec::new();
    }
    grid.iter()
        .enumerate()
        .map(|(g, &n)| {
            let mut col: Vec<f64> = reports.iter().map(|r| r.points[g].dstar).collect();
            col.sort_by(f64::total_cmp);
            Quantiles {
                n,
                median: quantile(&col, 0.5),
                p10: quantile(&col, 0.1),
                p90: quantile(&col, 0.9),
            }
        })
        .collect()
}

fn sample_passes(s: &SampleResult, t: &Thresholds) -> bool {
    if s.error.is_some() {
        return false;
    }
    if let Some(bound) = t.sample_dstar {
        match s.discrepancy.as_ref().and_then(|d| d.points.last()) {
            Some(p) if p.dstar <= bound => {}
            _ => return false,
        }
    }
    if let Some(min) = t.probe_min {
        if s.probe.is_empty() || s.probe.iter().any(|p| !(p.abs >= min)) {
            return false;
        }
    }
    true
}

/// Applies the configured thresholds to the stored samples and quantiles.
pub fn evaluate(report: &ExperimentReport) -> Evaluation {
    let t = &report.provenance.config.thresholds;
    let exceptions: Vec<usize> = report
        .samples
        .iter()
        .filter(|s| !sample_passes(s, t))
        .map(|s| s.index)
        .collect();
    let total = report.samples.len().max(1);
    let pass_fraction = (report.samples.len() - exceptions.len()) as f64 / total as f64;
    let final_median = report.quantiles.last().map(|q| q.median);
    let verdict = if report.kind.is_exploratory() || t.is_empty() {
        ExperimentVerdict::Exploratory
    } else {
        let median_ok = match t.median_dstar {
            Some(b) => final_median.is_some_and(|m| m <= b),
            None => true,
        };
        if median_ok && pass_fraction >= t.pass_fraction {
            ExperimentVerdict::Pass
        } else {
            ExperimentVerdict::Fail
        }
    };
    Evaluation {
        verdict,
        exceptions,
        pass_fraction,
        final_median,
    }
}

fn run_sample(
    recipes: &[Recipe],
    x: f64,
    grid: &[usize],
    method: DiscrepancyMethod,
    bound: i64,
    probe: Option<&[i64]>,
) -> Result<(DiscrepancyReport, Vec<MaxWeylSum>, Vec<ProbePoint>)> {
    let gen = PointGenerator::new(recipes.to_vec(), x)?;
    let top = *grid.last().expect("validated grid");
    let table = gen.phases(top)?;
    let disc = ud_trend_table(&table, grid, method, crate::discrepancy::describe(&gen))?;
    let max_weyl = max_weyl_sum_grid(&table, bound, grid)?;
    let probe = match probe {
        Some(v) => {
            table.check_frequency(v)?;
            let terms = table.terms(v);
            let prefix = crate::reduce::PrefixSums::new(&terms);
            grid.iter()
                .map(|&n| ProbePoint {
                    n,
                    abs: (prefix.prefix(n) / n as f64).norm(),
                })
                .collect()
        }
        None => Vec::new(),
    };
    Ok((disc, max_weyl, probe))
}

fn independence(config: &ExperimentConfig) -> Option<bool> {
    use ExperimentKind::*;
    let [lo, hi] = config.x_interval;
    if !matches!(config.kind, PolynomialProducts | AnalyticProducts | DiagonalCounterexample) || !(lo < hi) {
        return None;
    }
    let fs: Vec<Expr> = config.functions.iter().map(|f| parse_expr(f)).collect::<Result<_>>().ok()?;
    let m = (4 * (fs.len() + 1)).max(64);
    check_linear_independence(&fs, (lo, hi), m, DEFAULT_INDEPENDENCE_THRESHOLD)
        .ok()
        .map(|r| r.verdict == Verdict::Independent)
}

/// Runs every sample, in parallel, and assembles the report in sample order.
/// A failing sample is recorded with its error; the run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let recipes = config.recipes()?;
    let grid = config.grid.points()?;
    let method = config.method()?;
    let probe = config.probe();
    let samples: Vec<SampleResult> = (0..config.x_samples)
        .into_par_iter()
        .map(|index| {
            let x = config.sample_x(index);
            match run_sample(&recipes, x, &grid, method, config.frequency_bound, probe.as_deref()) {
                Ok((d, w, p)) => SampleResult {
                    index,
                    x,
                    discrepancy: Some(d),
                    max_weyl: w,
                    probe: p,
                    error: None,
                },
                Err(e) => SampleResult {
                    index,
                    x,
                    discrepancy: None,
                    max_weyl: Vec::new(),
                    probe: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let partial_coverage = samples.iter().any(|s| s.error.is_some());
    let quantiles = quantiles(&grid, &samples);
    let mut report = ExperimentReport {
        kind: config.kind,
        grid,
        samples,
        quantiles,
        partial_coverage,
        evaluation: Evaluation {
            verdict: ExperimentVerdict::Exploratory,
            exceptions: Vec::new(),
            pass_fraction: 0.0,
            final_median: None,
        },
        provenance: Provenance {
            config: config.clone(),
            seed: config.seed,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            tower_guard_bits: TOWER_GUARD_BITS,
            exact_kd_max_points: EXACT_KD_MAX_POINTS,
            vdc_constants: (2..=8).map(|d| (d, vdc_constant(d))).collect(),
            functions_independent: independence(config),
        },
    };
    report.evaluation = evaluate(&report);
    Ok(report)
}

/// Per-sample rows `sample,x,N,dstar,err_bound,method,max_weyl,argmax,probe_abs`.
/// Samples that errored contribute no rows.
pub fn write_samples_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample", "x", "N", "dstar", "err_bound", "method", "max_weyl", "argmax", "probe_abs"])
        .map_err(csv_error)?;
    for s in &report.samples {
        let Some(d) = &s.discrepancy else { continue };
        for (g, p) in d.points.iter().enumerate() {
            let (mw, arg) = match s.max_weyl.get(g) {
                Some(m) => (
                    format!("{:e}", m.magnitude),
                    m.argmax.iter().map(i64::to_string).collect::<Vec<_>>().join(";"),
                ),
                None => (String::new(), String::new()),
            };
            let probe = s.probe.get(g).map(|q| format!("{:e}", q.abs)).unwrap_or_default();
            w.write_record([
                s.index.to_string(),
                format!("{:e}", s.x),
                p.n.to_string(),
                format!("{:e}", p.dstar),
                format!("{:e}", p.err_bound),
                p.method.to_string(),
                mw,
                arg,
                probe,
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| csv_error(e.into()))
}

pub fn write_quantiles_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "median", "p10", "p90"]).map_err(csv_error)?;
    for q in &report.quantiles {
        w.write_record([
            q.n.to_string(),
            format!("{:e}", q.median),
            format!("{:e}", q.p10),
            format!("{:e}", q.p90),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| csv_error(e.into()))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn with_path(path: &Path, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Io { message, .. } => Error::Io {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Writes the per-sample CSV to `path`.
pub fn emit_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    with_path(path, write_samples_csv(report, create(path)?))
}

fn sample_series<F>(report: &ExperimentReport, value: F) -> Vec<Series>
where
    F: Fn(&SampleResult) -> Vec<(f64, f64)>,
{
    report
        .samples
        .iter()
        .filter(|s| s.error.is_none())
        .map(|s| Series::new(format!("x = {}", s.x), value(s), Style::Faint))
        .collect()
}

/// Log-log plot of `D*_N` against `N`: one line per sample and the median.
pub fn discrepancy_svg(report: &ExperimentReport) -> String {
    let mut series = sample_series(report, |s| {
        s.discrepancy
            .as_ref()
            .map(|d| d.points.iter().map(|p| (p.n as f64, p.dstar)).collect())
            .unwrap_or_default()
    });
    series.push(Series::new(
        "median",
        report.quantiles.iter().map(|q| (q.n as f64, q.median)).collect(),
        Style::Bold,
    ));
    loglog_svg("star discrepancy", "N", "D*_N", &series)
}

/// Log-log plot of the largest `|F_N(v)|` over the frequency box.
pub fn weyl_svg(report: &ExperimentReport) -> String {
    let series = sample_series(report, |s| s.max_weyl.iter().map(|m| (m.n as f64, m.magnitude)).collect());
    loglog_svg("largest Weyl average", "N", "max |F_N(v)|", &series)
}

/// Writes the discrepancy plot to `path`.
pub fn emit_svg(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(discrepancy_svg(report).as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes `report.json`, `samples.csv`, `quantiles.csv`, `dstar.svg` and
/// `max_weyl.svg` into `dir`.
pub fn write_artifacts(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join("report.json");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    emit_csv(report, &dir.join("samples.csv"))?;
    let path = dir.join("quantiles.csv");
    with_path(&path, write_quantiles_csv(report, create(&path)?))?;
    emit_svg(report, &dir.join("dstar.svg"))?;
    let path = dir.join("max_weyl.svg");
    fs::write(&path, weyl_svg(report)).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(text).unwrap()
    }

    const SMALL: &str = r#"
kind = "theorem-1.5"
functions = ["x", "x^2"]
sequences = ["identity", "identity"]
x_interval = [0.05, 0.95]
x_samples = 6
seed = 11
grid = "pow2:6..9"
method = "exact"
[thresholds]
sample_dstar = 0.5
median_dstar = 0.5
"#;

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.1), 1.4);
        assert_eq!(quantile(&[2.0], 0.9), 2.0);
    }

    #[test]
    fn small_run_is_reproducible() {
        let c = config(SMALL);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 6);
        assert_eq!(a.quantiles.len(), 4);
        assert!(!a.partial_coverage);
        assert_eq!(a.evaluation.verdict, ExperimentVerdict::Pass);
        assert_eq!(evaluate(&a), a.evaluation);
        assert_eq!(a.provenance.functions_independent, Some(true));
        for q in &a.quantiles {
            assert!(q.p10 <= q.median && q.median <= q.p90);
        }
    }

    #[test]
    fn samples_use_their_own_streams() {
        let mut c = config(SMALL);
        let xs: Vec<f64> = (0..6).map(|i| c.sample_x(i)).collect();
        c.x_samples = 3;
        assert_eq!((0..3).map(|i| c.sample_x(i)).collect::<Vec<_>>(), xs[..3]);
        assert!(xs.iter().all(|x| (0.05..0.95).contains(x)));
    }

    #[test]
    fn config_errors() {
        let bad = [
            SMALL.replace(r#"["identity", "identity"]"#, r#"["identity"]"#),
            SMALL.replace(r#"["x", "x^2"]"#, r#"["x", "sin(x)"]"#),
            SMALL.replace("x_samples = 6", "x_samples = 0"),
            SMALL.replace("pow2:6..9", "pow2:9..6"),
            SMALL.replace("\"exact\"", "\"fancy\""),
            SMALL.replace("seed = 11", "seed = 11\nbogus = 1"),
        ];
        for text in &bad {
            let r = ExperimentConfig::from_toml_str(text).and_then(|c| c.validate());
            assert!(r.is_err(), "{text}");
        }
        let tower = SMALL
            .replace("theorem-1.5", "conjecture-power-tower")
            .replace("[0.05, 0.95]", "[0.5, 1.5]");
        assert!(config(&tower).validate().is_err());
    }

    #[test]
    fn diagonal_probe_is_one() {
        let c = config(
            r#"
kind = "diagonal-counterexample"
functions = ["x", "x"]
sequences = ["identity", "identity"]
x_interval = [0.1, 0.9]
x_samples = 4
seed = 3
grid = "list:10,100,1000"
[thresholds]
probe_min = 0.999999
"#,
        );
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.evaluation.verdict, ExperimentVerdict::Pass);
        for s in &r.samples {
            assert!(s.probe.iter().all(|p| (p.abs - 1.0).abs() < 1e-12));
            assert!(s.max_weyl.iter().all(|m| (m.magnitude - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn errors_stay_with_their_sample() {
        // 1/x is undefined at the only sampled point.
        let c = config(
            r#"
kind = "custom"
generator = "identity @ x; identity @ 1/x"
x_interval = [0.0, 0.0]
x_samples = 2
seed = 1
grid = "list:10,20"
[thresholds]
sample_dstar = 1.0
"#,
        );
        let r = run_experiment(&c).unwrap();
        assert!(r.partial_coverage);
        assert!(r.samples.iter().all(|s| s.error.is_some()));
        assert!(r.quantiles.is_empty());
        assert_eq!(r.evaluation.verdict, ExperimentVerdict::Fail);
        let mut buf = Vec::new();
        write_samples_csv(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn svg_has_a_line_per_sample_and_median() {
        let r = run_experiment(&config(SMALL)).unwrap();
        let svg = discrepancy_svg(&r);
        assert_eq!(svg.matches("<polyline").count(), 7);
        assert_eq!(svg.matches(r#"class="bold""#).count(), 1);
    }
}
