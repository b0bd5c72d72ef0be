//! Integrals `I(lambda) = int_lo^hi e(lambda . f(x)) dx` with phases in
//! cycles, van der Corput bounds, and the decay of `|I|` along rays.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{check_linear_independence, Expr, Verdict, DEFAULT_INDEPENDENCE_THRESHOLD};
use crate::fit::fit_line;
use crate::real::Real;
use crate::reduce::stable_sum;
use crate::seeding::sample_directions;
use crate::weyl::{csv_error, e};

/// Most panels a single integral may use before it is flagged unreliable.
pub const PANEL_CAP: usize = 1 << 20;

/// Largest radius accepted by [`decay_fit`].
pub const MAX_RADIUS: f64 = 65536.0;

/// Largest phase change, in cycles, allowed across one panel.
const MAX_PANEL_PHASE: f64 = 0.25;

// 15-point Kronrod abscissae on [-1, 1] (non-negative half, descending) with
// weights; odd positions are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatoryEstimate<T> {
    pub lambda: Vec<T>,
    pub lo: T,
    pub hi: T,
    pub value: Complex<T>,
    pub err_est: T,
    pub panels: usize,
    /// Set when the panel cap stopped refinement before `err_est <= tol`.
    pub unreliable: bool,
}

/// `phi = lambda . f` with its first `d` derivatives at `x`.
fn phase_jet<T: Real>(fs: &[Expr], lambda: &[T], x: T, d: usize) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); d + 1];
    for (f, &l) in fs.iter().zip(lambda) {
        if l == T::zero() {
            continue;
        }
        let jet = f.eval_jet(x, d)?;
        for (j, o) in out.iter_mut().enumerate() {
            *o = *o + l * jet.get(j);
        }
    }
    Ok(out)
}

fn phase<T: Real>(fs: &[Expr], lambda: &[T], x: T) -> Result<T> {
    let mut acc = T::zero();
    for (f, &l) in fs.iter().zip(lambda) {
        if l != T::zero() {
            acc = acc + l * f.eval(x)?;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: Complex<T>,
    err: T,
}

fn kronrod<T: Real>(fs: &[Expr], lambda: &[T], a: T, b: T) -> Result<Panel<T>> {
    let half = (b - a) / T::lit(2.0);
    let mid = a + half;
    let f = |x: T| -> Result<Complex<T>> { Ok(e(phase(fs, lambda, x)?)) };
    let centre = f(mid)?;
    let mut kron = centre * T::lit(WGK[7]);
    let mut gauss = centre * T::lit(WG[3]);
    let mut abs_k = centre.norm() * T::lit(WGK[7]);
    let mut values = [Complex::new(T::zero(), T::zero()); 14];
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let (l, r) = (f(mid - dx)?, f(mid + dx)?);
        values[2 * j] = l;
        values[2 * j + 1] = r;
        kron = kron + (l + r) * T::lit(WGK[j]);
        abs_k = abs_k + (l.norm() + r.norm()) * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + (l + r) * T::lit(WG[j / 2]);
        }
    }
    // Spread of the integrand about its mean, as in QUADPACK's qk15.
    let mean = kron * T::lit(0.5);
    let mut asc = (centre - mean).norm() * T::lit(WGK[7]);
    for j in 0..7 {
        asc = asc + ((values[2 * j] - mean).norm() + (values[2 * j + 1] - mean).norm()) * T::lit(WGK[j]);
    }
    let hw = half.abs();
    let resasc = asc * hw;
    let mut err = ((kron - gauss) * half).norm();
    if resasc != T::zero() && err != T::zero() {
        err = resasc * T::one().min((T::lit(200.0) * err / resasc).powf(T::lit(1.5)));
    }
    let eps50 = T::epsilon() * T::lit(50.0);
    let resabs = abs_k * hw;
    if resabs > T::min_positive_value() / eps50 {
        err = err.max(eps50 * resabs);
    }
    Ok(Panel {
        a,
        b,
        value: kron * half,
        err,
    })
}

/// Splits `[lo, hi]` until the phase changes by at most a quarter cycle per
/// panel, judged from values and first derivatives at both ends and the middle.
fn phase_panels<T: Real>(fs: &[Expr], lambda: &[T], lo: T, hi: T) -> Result<(Vec<(T, T)>, bool)> {
    let limit = T::lit(MAX_PANEL_PHASE);
    let jet = |x: T| phase_jet(fs, lambda, x, 1);
    let mut out = Vec::new();
    let mut capped = false;
    let mut stack = vec![(lo, jet(lo)?, hi, jet(hi)?)];
    while let Some((a, ja, b, jb)) = stack.pop() {
        let m = a + (b - a) / T::lit(2.0);
        let jm = jet(m)?;
        let by_values = (jm[0] - ja[0]).abs() + (jb[0] - jm[0]).abs();
        let slope = ja[1].abs().max(jm[1].abs()).max(jb[1].abs());
        let variation = by_values.max((b - a) * slope);
        let splittable = m > a && m < b;
        if variation <= limit || !splittable || out.len() + stack.len() >= PANEL_CAP {
            capped |= variation > limit;
            out.push((a, b));
        } else {
            // Right half first so panels pop in increasing order.
            stack.push((m, jm.clone(), b, jb));
            stack.push((a, ja, m, jm));
        }
    }
    Ok((out, capped))
}

/// Adaptive Gauss-Kronrod quadrature of `e(lambda . f)` on `[lo, hi]` to an
/// absolute error `tol`.
pub fn osc_integral<T: Real>(fs: &[Expr], lambda: &[T], interval: (T, T), tol: T) -> Result<OscillatoryEstimate<T>> {
    let (lo, hi) = interval;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param("interval must satisfy lo < hi"));
    }
    if !(tol >= T::lit(1e-12) && tol <= T::lit(1e-4)) {
        return Err(Error::param("tolerance must lie in [1e-12, 1e-4]"));
    }
    if fs.is_empty() || fs.len() != lambda.len() {
        return Err(Error::param(format!("{} functions but {} frequencies", fs.len(), lambda.len())));
    }
    let estimate = |value, err_est, panels, unreliable| OscillatoryEstimate {
        lambda: lambda.to_vec(),
        lo,
        hi,
        value,
        err_est,
        panels,
        unreliable,
    };
    if lambda.iter().all(|&l| l == T::zero()) {
        return Ok(estimate(Complex::new(hi - lo, T::zero()), T::zero(), 0, false));
    }
    for f in fs {
        f.eval(lo)?;
        f.eval(hi)?;
    }

    let (bounds, mut capped) = phase_panels(fs, lambda, lo, hi)?;
    let mut panels: Vec<Panel<T>> = bounds
        .par_iter()
        .map(|&(a, b)| kronrod(fs, lambda, a, b))
        .collect::<Result<_>>()?;
    let width = hi - lo;
    loop {
        let errs: Vec<T> = panels.iter().map(|p| p.err).collect();
        let total = stable_sum(&errs);
        if total <= tol || capped {
            break;
        }
        let refine: Vec<bool> = panels
            .iter()
            .map(|p| p.err > tol * (p.b - p.a) / width && p.a + (p.b - p.a) / T::lit(2.0) > p.a)
            .collect();
        let count = refine.iter().filter(|&&r| r).count();
        if count == 0 {
            break;
        }
        if panels.len() + count > PANEL_CAP {
            capped = true;
            break;
        }
        let next: Vec<Vec<Panel<T>>> = panels
            .par_iter()
            .zip(refine.par_iter())
            .map(|(p, &r)| {
                if !r {
                    return Ok(vec![*p]);
                }
                let m = p.a + (p.b - p.a) / T::lit(2.0);
                Ok(vec![kronrod(fs, lambda, p.a, m)?, kronrod(fs, lambda, m, p.b)?])
            })
            .collect::<Result<_>>()?;
        panels = next.into_iter().flatten().collect();
    }
    let values: Vec<Complex<T>> = panels.iter().map(|p| p.value).collect();
    let errs: Vec<T> = panels.iter().map(|p| p.err).collect();
    let err_est = stable_sum(&errs);
    Ok(estimate(stable_sum(&values), err_est, panels.len(), capped && err_est > tol))
}

/// Strict sign changes of `g` among `samples` evenly spaced points, each
/// refined by bisection to a root. Zero samples carry no sign.
fn sign_change_roots<T: Real>(g: impl Fn(T) -> Result<T>, lo: T, hi: T, samples: usize) -> Result<Vec<T>> {
    let xs = even_samples(lo, hi, samples);
    let vals = xs.iter().map(|&x| g(x)).collect::<Result<Vec<T>>>()?;
    let mut roots = Vec::new();
    let mut last: Option<usize> = None;
    for i in 0..samples {
        if vals[i] == T::zero() {
            continue;
        }
        if let Some(p) = last {
            if (vals[p] < T::zero()) != (vals[i] < T::zero()) {
                roots.push(bisect(&g, xs[p], vals[p], xs[i])?);
            }
        }
        last = Some(i);
    }
    Ok(roots)
}

fn even_samples<T: Real>(lo: T, hi: T, samples: usize) -> Vec<T> {
    let step = (hi - lo) / T::from_count(samples - 1);
    (0..samples)
        .map(|i| if i + 1 == samples { hi } else { lo + step * T::from_count(i) })
        .collect()
}

/// Root of `g` in `[a, b]` given a sign change, to full precision.
fn bisect<T: Real>(g: &impl Fn(T) -> Result<T>, mut a: T, mut fa: T, mut b: T) -> Result<T> {
    loop {
        let m = a + (b - a) / T::lit(2.0);
        if !(m > a && m < b) {
            return Ok(m);
        }
        let fm = g(m)?;
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
}

/// First-derivative van der Corput bound for `|int e(lambda f)|`.
///
/// The interval is cut where `phi''` changes sign among 128 samples, so `phi'`
/// is monotone on each piece, and the piece bounds
/// `max(1/|phi'(left)|, 1/|phi'(right)|)` are summed. A zero of `phi'` at a
/// piece end, or a sign change of `phi'` inside a piece, yields infinity.
pub fn vdc_bound_first<T: Real>(f: &Expr, lambda: T, interval: (T, T)) -> Result<T> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::param("interval must satisfy lo < hi"));
    }
    let d1 = |x: T| -> Result<T> { Ok(lambda * f.eval_jet(x, 1)?.get(1)) };
    let d2 = |x: T| -> Result<T> { Ok(lambda * f.eval_jet(x, 2)?.get(2)) };
    let mut cuts = vec![lo];
    cuts.extend(sign_change_roots(d2, lo, hi, 128)?);
    cuts.push(hi);
    let mut total = T::zero();
    for w in cuts.windows(2) {
        let (l, r) = (d1(w[0])?, d1(w[1])?);
        if l == T::zero() || r == T::zero() || (l < T::zero()) != (r < T::zero()) {
            return Ok(T::infinity());
        }
        total = total + (T::one() / l.abs()).max(T::one() / r.abs());
    }
    Ok(total)
}

/// `2^d`, the working constant in the `d`-th derivative bound.
pub fn vdc_constant(d: usize) -> f64 {
    2f64.powi(d as i32)
}

/// Minimum of `g` on `[a, b]` by golden-section search.
fn golden_min<T: Real>(g: &impl Fn(T) -> Result<T>, mut a: T, mut b: T) -> Result<T> {
    let ratio = T::lit(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * ratio;
    let mut d = a + (b - a) * ratio;
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    let mut best = gc.min(gd);
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - (b - a) * ratio;
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + (b - a) * ratio;
            gd = g(d)?;
        }
        best = best.min(gc).min(gd);
    }
    Ok(best)
}

/// `C_d (inf |phi^(d)|)^(-1/d)` with `C_d = 2^d`, the infimum taken over 1024
/// samples and refined around the three smallest. Infinite when the
/// infimum falls below `1e-300`.
pub fn vdc_bound_high<T: Real>(f: &Expr, lambda: T, interval: (T, T), d: usize) -> Result<T> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::param("interval must satisfy lo < hi"));
    }
    if !(2..=8).contains(&d) {
        return Err(Error::param(format!("derivative order must lie in 2..=8, got {d}")));
    }
    let signed = |x: T| -> Result<T> { Ok(lambda * f.eval_jet(x, d)?.get(d)) };
    let g = |x: T| -> Result<T> { Ok(signed(x)?.abs()) };
    const SAMPLES: usize = 1024;
    let xs = even_samples(lo, hi, SAMPLES);
    let raw = xs.iter().map(|&x| signed(x)).collect::<Result<Vec<T>>>()?;
    // A sign change means the derivative vanishes in between.
    if raw.windows(2).any(|w| (w[0] < T::zero() && w[1] > T::zero()) || (w[0] > T::zero() && w[1] < T::zero())) {
        return Ok(T::infinity());
    }
    let vals: Vec<T> = raw.iter().map(|v| v.abs()).collect();
    let mut order: Vec<usize> = (0..SAMPLES).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut inf = vals[order[0]];
    for &i in order.iter().take(3) {
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(SAMPLES - 1)];
        inf = inf.min(golden_min(&g, a, b)?);
    }
    if !(inf >= T::lit(1e-300)) {
        return Ok(T::infinity());
    }
    Ok(T::lit(vdc_constant(d)) * inf.powf(-T::one() / T::from_count(d)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionFit {
    pub omega: Vec<f64>,
    /// `|I(R omega)|` for each radius.
    pub magnitudes: Vec<f64>,
    pub err_est: Vec<f64>,
    pub unreliable: Vec<bool>,
    /// Slope of `log |I|` against `log R`; `None` if a magnitude is zero.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// The direction along which `lambda . f` is constant.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillatoryDecayFit {
    pub radii: Vec<f64>,
    pub directions: Vec<DirectionFit>,
    /// Smallest decay rate `-slope` over non-degenerate directions: a sampled
    /// estimate, not a certified exponent.
    pub delta_hat: f64,
    /// Index of the direction attaining `delta_hat`.
    pub binding: usize,
    /// Fit through all non-degenerate cells at once.
    pub pooled_slope: f64,
    pub pooled_intercept: f64,
    pub pooled_r_squared: f64,
}

impl OscillatoryDecayFit {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["direction", "omega", "R", "abs_integral", "err_est", "flags"]).map_err(csv_error)?;
        for (i, d) in self.directions.iter().enumerate() {
            let omega = d.omega.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";");
            for (j, &r) in self.radii.iter().enumerate() {
                let mut flags = Vec::new();
                if d.degenerate {
                    flags.push("degenerate");
                }
                if d.unreliable[j] {
                    flags.push("unreliable");
                }
                w.write_record([
                    i.to_string(),
                    omega.clone(),
                    format!("{r:?}"),
                    format!("{:e}", d.magnitudes[j]),
                    format!("{:e}", d.err_est[j]),
                    flags.join("|"),
                ])
                .map_err(csv_error)?;
            }
        }
        w.flush().map_err(|e| csv_error(e.into()))
    }
}

/// Radii `r_0 * q^j`, `j = 0..count`.
pub fn geometric_radii(r0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| r0 * ratio.powi(j as i32)).collect()
}

/// Magnitudes `|I(R omega)|` over `radii` for the axis directions and
/// `directions - k` seeded unit vectors, with a log-log fit per direction.
///
/// When `{1, f_1, ..., f_k}` is linearly dependent the null direction is added,
/// flagged degenerate and left out of `delta_hat` and the pooled fit.
pub fn decay_fit(
    fs: &[Expr],
    interval: (f64, f64),
    radii: &[f64],
    directions: usize,
    seed: u64,
    tol: f64,
) -> Result<OscillatoryDecayFit> {
    let k = fs.len();
    if k == 0 {
        return Err(Error::param("need at least one function"));
    }
    if directions < k {
        return Err(Error::param(format!("need at least {k} directions, got {directions}")));
    }
    if radii.len() < 6 || radii[0] <= 0.0 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("radii must be at least 6 positive, strictly increasing values"));
    }
    if radii[radii.len() - 1] > MAX_RADIUS {
        return Err(Error::param(format!("radii must not exceed {MAX_RADIUS}")));
    }

    let mut omegas: Vec<(Vec<f64>, bool)> = sample_directions(k, directions, seed).into_iter().map(|w| (w, false)).collect();
    let m = 32.max(2 * (k + 1));
    let indep = check_linear_independence(fs, interval, m, DEFAULT_INDEPENDENCE_THRESHOLD)?;
    if indep.verdict == Verdict::Dependent {
        if let Some(null) = indep.null_direction {
            let w = &null[1..];
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                omegas.push((w.iter().map(|v| v / norm).collect(), true));
            }
        }
    }

    let cells: Vec<(usize, usize)> = (0..omegas.len()).flat_map(|i| (0..radii.len()).map(move |j| (i, j))).collect();
    let results: Vec<OscillatoryEstimate<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let lambda: Vec<f64> = omegas[i].0.iter().map(|w| w * radii[j]).collect();
            osc_integral(fs, &lambda, interval, tol)
        })
        .collect::<Result<_>>()?;

    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mut fits = Vec::with_capacity(omegas.len());
    let (mut pooled_x, mut pooled_y) = (Vec::new(), Vec::new());
    for (i, (omega, degenerate)) in omegas.into_iter().enumerate() {
        let row = &results[i * radii.len()..(i + 1) * radii.len()];
        let magnitudes: Vec<f64> = row.iter().map(|r| r.value.norm()).collect();
        let line = if magnitudes.iter().all(|&v| v > 0.0) {
            let ys: Vec<f64> = magnitudes.iter().map(|v| v.ln()).collect();
            if !degenerate {
                pooled_x.extend_from_slice(&log_r);
                pooled_y.extend_from_slice(&ys);
            }
            Some(fit_line(&log_r, &ys)?)
        } else {
            None
        };
        fits.push(DirectionFit {
            omega,
            err_est: row.iter().map(|r| r.err_est).collect(),
            unreliable: row.iter().map(|r| r.unreliable).collect(),
            magnitudes,
            slope: line.map(|l| l.slope),
            intercept: line.map(|l| l.intercept),
            r_squared: line.map(|l| l.r_squared),
            degenerate,
        });
    }

    let mut binding = 0;
    let mut delta_hat = f64::INFINITY;
    for (i, f) in fits.iter().enumerate() {
        if f.degenerate {
            continue;
        }
        // A direction with an exactly vanishing integral decays arbitrarily fast.
        let rate = f.slope.map_or(f64::INFINITY, |s| -s);
        if rate < delta_hat {
            delta_hat = rate;
            binding = i;
        }
    }
    let pooled = fit_line(&pooled_x, &pooled_y).ok();
    Ok(OscillatoryDecayFit {
        radii: radii.to_vec(),
        directions: fits,
        delta_hat,
        binding,
        pooled_slope: pooled.map_or(f64::NAN, |l| l.slope),
        pooled_intercept: pooled.map_or(f64::NAN, |l| l.intercept),
        pooled_r_squared: pooled.map_or(f64::NAN, |l| l.r_squared),
    })
}
