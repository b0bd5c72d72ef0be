use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use udlab::discrepancy::{star_discrepancy_1d, star_discrepancy_kd, ud_trend, DiscrepancyMethod};
use udlab::lab::{self, parse_recipes, ExperimentConfig, ExperimentVerdict, GridSpec};
use udlab::oscillatory::{decay_fit, geometric_radii, osc_integral, vdc_bound_first, OscillatoryDecayFit};
use udlab::plot::{loglog_svg, Series, Style};
use udlab::scatter::{fit_scatter, weyl_growth_check, GrowthVerdict, ScatterMode};
use udlab::sequences::{make_sequence, IndexSetFamily, SequenceSpec};
use udlab::weyl::{max_weyl_sum, weyl_sum_over_sets, PointGenerator};
use udlab::{parse_expr, Expr};

const EXIT_THRESHOLD: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNRELIABLE: u8 = 3;

/// Numerical probes of uniform distribution modulo one.
#[derive(Parser)]
#[command(name = "udlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized pair sum S_delta(N) along a grid, with decay fits.
    Scatter {
        #[arg(long)]
        seq: String,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value = "pow2:8..14")]
        grid: String,
        /// exact | bucketed[:eta] | auto[:eta]
        #[arg(long, default_value = "auto")]
        mode: String,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Searches for pairs violating the separation growth condition.
    Growth {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        g: f64,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value_t = 50_000_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Weyl averages F_N(v) over an index-set family.
    Weylsum {
        /// Coordinates `SEQ @ EXPR` or `tower:EXPR^^SEQ`, separated by `;`.
        #[arg(long)]
        gen: String,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        /// Comma-separated integer frequency.
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value = "pow2:6..14")]
        grid: String,
        /// prefixes | geometric:rho=R | strided:c=C | nested:1,2;1,2,3
        #[arg(long, default_value = "prefixes")]
        sets: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Star discrepancy of a generator along a grid.
    Discrepancy {
        #[arg(long)]
        gen: String,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        #[arg(long, default_value = "pow2:6..12")]
        grid: String,
        /// exact | auto | grid:M
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Decay of |I(lambda)| = |int e(lambda . f)| along sampled directions.
    Oscdecay {
        /// Functions separated by `;`.
        #[arg(long)]
        f: String,
        /// `LO,HI`
        #[arg(long, allow_hyphen_values = true)]
        interval: String,
        /// `R0:RATIO:COUNT` (geometric) or a comma-separated list.
        #[arg(long, default_value = "8.5,16.5,32.5,64.5,128.5,256.5,512.5,1024.5")]
        radii: String,
        #[arg(long, default_value_t = 8)]
        dirs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Runs a TOML experiment and writes its artifacts.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quick consistency checks of the numerical kernels.
    Selftest,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_svg(path: Option<&Path>, svg: impl FnOnce() -> String) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, svg()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().ok().with_context(|| format!("bad {what} `{s}`")))
        .collect()
}

fn grid_points(text: &str) -> Result<Vec<usize>> {
    Ok(text.parse::<GridSpec>()?.points()?)
}

fn scatter(seq: &str, delta: f64, grid: &str, mode: &str, out: Option<&Path>) -> Result<u8> {
    let seq = make_sequence(seq.parse::<SequenceSpec>()?)?;
    let mode: ScatterMode = mode.parse()?;
    let report = fit_scatter(&seq, delta, &grid_points(grid)?, mode)?;
    report.write_csv(open_out(out)?)?;
    let evidence = report.evidence_of_scattered();
    eprintln!(
        "eps_hat = {:.4}  slope(log S, log log N) = {:.4}  slope(log S, log N) = {:.4}  scattered evidence: {}",
        report.eps_hat, report.slope_loglog, report.slope_log, evidence
    );
    Ok(if evidence { 0 } else { EXIT_THRESHOLD })
}

fn growth(seq: &str, eps: f64, g: f64, n: u64, budget: u64, seed: u64) -> Result<u8> {
    let seq = make_sequence(seq.parse::<SequenceSpec>()?)?;
    let report = weyl_growth_check(&seq, n, eps, g, budget, seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(match report.verdict {
        GrowthVerdict::Pass => 0,
        GrowthVerdict::Fail => EXIT_THRESHOLD,
    })
}

fn parse_family(text: &str) -> Result<IndexSetFamily> {
    Ok(text.parse()?)
}

fn weylsum(gen: &str, x: f64, v: &str, grid: &str, sets: &str, out: Option<&Path>, svg: Option<&Path>) -> Result<u8> {
    let gen = PointGenerator::new(parse_recipes(gen)?, x)?;
    let v: Vec<i64> = parse_list(v, "frequency entry")?;
    let series = weyl_sum_over_sets(&gen, &v, &parse_family(sets)?, &grid_points(grid)?)?;
    series.write_csv(open_out(out)?)?;
    write_svg(svg, || {
        let pts = series.points.iter().map(|p| (p.n as f64, p.abs)).collect();
        loglog_svg("Weyl average", "N", "|F_N(v)|", &[Series::new("|F_N|", pts, Style::Plain)])
    })?;
    Ok(0)
}

fn discrepancy(gen: &str, x: f64, grid: &str, method: &str, out: Option<&Path>, svg: Option<&Path>) -> Result<u8> {
    let gen = PointGenerator::new(parse_recipes(gen)?, x)?;
    let method: DiscrepancyMethod = method.parse()?;
    let report = ud_trend(&gen, &grid_points(grid)?, method)?;
    report.write_csv(open_out(out)?)?;
    if let Some(s) = report.slope {
        eprintln!("slope(log D*, log N) = {s:.4}");
    }
    write_svg(svg, || {
        let pts = report.points.iter().map(|p| (p.n as f64, p.dstar)).collect();
        loglog_svg("star discrepancy", "N", "D*_N", &[Series::new("D*_N", pts, Style::Plain)])
    })?;
    Ok(0)
}

fn parse_radii(text: &str) -> Result<Vec<f64>> {
    let fields: Vec<&str> = text.split(':').collect();
    if fields.len() == 3 {
        let r0: f64 = fields[0].trim().parse().context("bad R0")?;
        let ratio: f64 = fields[1].trim().parse().context("bad ratio")?;
        let count: usize = fields[2].trim().parse().context("bad count")?;
        return Ok(geometric_radii(r0, ratio, count));
    }
    parse_list(text, "radius")
}

fn decay_svg(fit: &OscillatoryDecayFit) -> String {
    let series: Vec<Series> = fit
        .directions
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let pts = fit.radii.iter().copied().zip(d.magnitudes.iter().copied()).collect();
            let style = if i == fit.binding { Style::Bold } else { Style::Faint };
            Series::new(format!("direction {i}"), pts, style)
        })
        .collect();
    loglog_svg("oscillatory integral decay", "R", "|I(R omega)|", &series)
}

#[allow(clippy::too_many_arguments)]
fn oscdecay(
    f: &str,
    interval: &str,
    radii: &str,
    dirs: usize,
    seed: u64,
    tol: f64,
    out: Option<&Path>,
    svg: Option<&Path>,
) -> Result<u8> {
    let fs: Vec<Expr> = f.split(';').map(parse_expr).collect::<udlab::Result<_>>()?;
    let iv: Vec<f64> = parse_list(interval, "interval endpoint")?;
    if iv.len() != 2 {
        bail!("--interval expects LO,HI");
    }
    let fit = decay_fit(&fs, (iv[0], iv[1]), &parse_radii(radii)?, dirs, seed, tol)?;
    fit.write_csv(open_out(out)?)?;
    eprintln!(
        "delta_hat = {:.4} (direction {})  pooled slope = {:.4}  pooled R^2 = {:.4}",
        fit.delta_hat, fit.binding, fit.pooled_slope, fit.pooled_r_squared
    );
    write_svg(svg, || decay_svg(&fit))?;
    let unreliable = fit.directions.iter().any(|d| !d.degenerate && d.unreliable.iter().any(|&u| u));
    Ok(if unreliable { EXIT_UNRELIABLE } else { 0 })
}

fn experiment(config: &Path, out: Option<&Path>) -> Result<u8> {
    let config = ExperimentConfig::from_path(config)?;
    let report = lab::run_experiment(&config)?;
    let dir = out.map(Path::to_path_buf).or_else(|| config.output_dir.clone());
    if let Some(dir) = &dir {
        lab::write_artifacts(&report, dir)?;
        eprintln!("artifacts written to {}", dir.display());
    }
    let mut stdout = io::stdout().lock();
    lab::write_quantiles_csv(&report, &mut stdout)?;
    let e = &report.evaluation;
    eprintln!(
        "verdict: {:?}  pass fraction: {:.3}  final median D*: {}  exceptions: {:?}",
        e.verdict,
        e.pass_fraction,
        e.final_median.map(|m| format!("{m:.5}")).unwrap_or_else(|| "-".into()),
        e.exceptions
    );
    for s in report.samples.iter().filter(|s| s.error.is_some()) {
        eprintln!("sample {} (x = {}): {}", s.index, s.x, s.error.as_deref().unwrap_or(""));
    }
    Ok(match e.verdict {
        ExperimentVerdict::Fail => EXIT_THRESHOLD,
        _ if report.partial_coverage => EXIT_UNRELIABLE,
        _ => 0,
    })
}

fn check(name: &str, ok: bool, failures: &mut usize) {
    println!("{} {name}", if ok { "ok  " } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

fn selftest() -> Result<u8> {
    let mut failures = 0;
    let mid: Vec<f64> = (1..=4).map(|i| (2 * i - 1) as f64 / 8.0).collect();
    check("1-d discrepancy of midpoints is 1/(2N)", star_discrepancy_1d(&mid)? == 0.125, &mut failures);

    let diag: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64 / 64.0; 2]).collect();
    let d = star_discrepancy_kd(&diag, DiscrepancyMethod::Exact)?.value;
    check("diagonal discrepancy is near 1/4", (d - 0.25).abs() < 0.02, &mut failures);

    let g = PointGenerator::new(parse_recipes("identity @ x; identity @ x")?, 0.3)?;
    let m = max_weyl_sum(&g, 2, 500)?;
    check("diagonal generator has a unit Weyl average", (m.magnitude - 1.0).abs() < 1e-12, &mut failures);

    let golden = PointGenerator::new(parse_recipes("identity @ (1+sqrt(5))/2")?, 0.0)?;
    let r = ud_trend(&golden, &[1000], DiscrepancyMethod::Exact)?;
    let n = 1000f64;
    check("golden-ratio sequence is well spread", r.points[0].dstar <= 5.0 * n.ln() / n, &mut failures);

    let fs = [parse_expr("x^2")?];
    let i = osc_integral(&fs, &[50.0], (1.0, 2.0), 1e-10)?;
    let b = vdc_bound_first(&fs[0], 50.0, (1.0, 2.0))?;
    check("oscillatory integral obeys the first-derivative bound", i.value.norm() <= b, &mut failures);

    let seq = make_sequence("sqrtres".parse()?)?;
    let rep = weyl_growth_check(&seq, 100, 0.1, 0.5, 1_000_000, 0)?;
    check("square residues violate the growth condition", rep.verdict == GrowthVerdict::Fail, &mut failures);

    Ok(if failures == 0 { 0 } else { EXIT_THRESHOLD })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Scatter { seq, delta, grid, mode, out } => scatter(&seq, delta, &grid, &mode, out.as_deref()),
        Command::Growth { seq, eps, g, n, budget, seed } => growth(&seq, eps, g, n, budget, seed),
        Command::Weylsum { gen, x, v, grid, sets, out, svg } => {
            weylsum(&gen, x, &v, &grid, &sets, out.as_deref(), svg.as_deref())
        }
        Command::Discrepancy { gen, x, grid, method, out, svg } => {
            discrepancy(&gen, x, &grid, &method, out.as_deref(), svg.as_deref())
        }
        Command::Oscdecay { f, interval, radii, dirs, seed, tol, out, svg } => {
            oscdecay(&f, &interval, &radii, dirs, seed, tol, out.as_deref(), svg.as_deref())
        }
        Command::Experiment { config, out } => experiment(&config, out.as_deref()),
        Command::Selftest => selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
