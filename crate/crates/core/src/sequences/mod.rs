//! Real sequences `a: N -> R` and averaging index-set families.
//!
//! Sequences are described by a [`SequenceSpec`] and have a textual form used
//! by the CLI and the experiment configs:
//!
//! ```text
//! identity | affine:alpha=2,beta=0 | power:eps=0.5 | logpow:p=2 | nplog
//! sqrtres | iterexp | custom:n + sin(n)/n | compose:x^2|power:eps=0.5
//! combo:1*identity,-1*logpow:p=2
//! ```

mod index_sets;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use index_sets::{index_sets, IndexSet, IndexSetFamily};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, parse_expr_in, Expr};
use crate::ext::ExtFloat;

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    /// `a(n) = n`.
    Identity,
    /// `a(n) = alpha * n + beta`.
    Affine { alpha: f64, beta: f64 },
    /// `a(n) = n^eps`, `eps > 0`.
    Power { eps: f64 },
    /// `a(n) = (log n)^p`, `p > 0`, with `a(1) = 0`.
    LogPower { p: f64 },
    /// `a(n) = n + log n`.
    NPlusLog,
    /// `a(n) = n - floor(sqrt n)^2`.
    SqrtResidue,
    /// `a(n) = exp(exp(floor(log n)))`; leaves the `f64` range from `n = 1097`.
    IteratedExp,
    /// An expression in the variable `n`, evaluated at integers.
    Custom(Expr),
    /// `outer(inner(n))`, with `outer` written in the variable `x`.
    Composed { inner: Box<SequenceSpec>, outer: Expr },
    /// `sum_i w_i a_i(n)`.
    LinearCombo(Vec<(f64, SequenceSpec)>),
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceSpec::Affine { alpha, beta } if !(alpha.is_finite() && beta.is_finite()) => {
                Err(Error::param("affine coefficients must be finite"))
            }
            SequenceSpec::Power { eps } if !(*eps > 0.0 && eps.is_finite()) => {
                Err(Error::param(format!("power exponent must be positive, got {eps}")))
            }
            SequenceSpec::LogPower { p } if !(*p > 0.0 && p.is_finite()) => {
                Err(Error::param(format!("log-power exponent must be positive, got {p}")))
            }
            SequenceSpec::Composed { inner, .. } => inner.validate(),
            SequenceSpec::LinearCombo(parts) => {
                if parts.is_empty() || parts.iter().all(|(w, _)| *w == 0.0) {
                    return Err(Error::param("linear combination needs a nonzero weight"));
                }
                for (w, s) in parts {
                    if !w.is_finite() {
                        return Err(Error::param("linear combination weights must be finite"));
                    }
                    s.validate()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `a(n)` in double precision. May be infinite for [`SequenceSpec::IteratedExp`].
    pub fn value(&self, n: u64) -> Result<f64> {
        assert!(n >= 1, "sequences are indexed from 1");
        let nf = n as f64;
        Ok(match self {
            SequenceSpec::Identity => nf,
            SequenceSpec::Affine { alpha, beta } => alpha * nf + beta,
            SequenceSpec::Power { eps } => nf.powf(*eps),
            SequenceSpec::LogPower { p } => {
                if n == 1 {
                    0.0
                } else {
                    nf.ln().powf(*p)
                }
            }
            SequenceSpec::NPlusLog => nf + nf.ln(),
            SequenceSpec::SqrtResidue => {
                let r = isqrt(n);
                (n - r * r) as f64
            }
            SequenceSpec::IteratedExp => iterated_exp_log2(n).exp2(),
            SequenceSpec::Custom(e) => e.eval(nf)?,
            SequenceSpec::Composed { inner, outer } => outer.eval(inner.value(n)?)?,
            SequenceSpec::LinearCombo(parts) => {
                let mut acc = 0.0;
                for (w, s) in parts {
                    if *w != 0.0 {
                        acc += w * s.value(n)?;
                    }
                }
                acc
            }
        })
    }

    /// `a(n)` with an unbounded exponent.
    pub fn value_ext(&self, n: u64) -> Result<ExtFloat> {
        match self {
            SequenceSpec::IteratedExp => Ok(ExtFloat::from_log2(iterated_exp_log2(n))),
            SequenceSpec::LinearCombo(parts) => {
                let mut acc = ExtFloat::ZERO;
                for (w, s) in parts {
                    if *w != 0.0 {
                        acc = acc.add(s.value_ext(n)?.scale(*w));
                    }
                }
                Ok(acc)
            }
            _ => {
                let v = self.value(n)?;
                if !v.is_finite() {
                    return Err(Error::Domain {
                        node: self.to_string(),
                        arg: n as f64,
                    });
                }
                Ok(ExtFloat::from_f64(v))
            }
        }
    }

    /// Values `a(1), ..., a(n_max)`.
    pub fn samples(&self, n_max: usize) -> Result<SampleSet> {
        let plain: Vec<f64> = (1..=n_max as u64)
            .into_par_iter()
            .map(|n| self.value(n))
            .collect::<Result<_>>()?;
        if plain.iter().all(|v| v.is_finite()) {
            return Ok(SampleSet::Plain(plain));
        }
        let ext = (1..=n_max as u64)
            .into_par_iter()
            .map(|n| self.value_ext(n))
            .collect::<Result<_>>()?;
        Ok(SampleSet::Extended(ext))
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `log2 exp(exp(floor(ln n)))`.
fn iterated_exp_log2(n: u64) -> f64 {
    let j = (n as f64).ln().floor();
    j.exp() / std::f64::consts::LN_2
}

/// Validated sequence evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    spec: SequenceSpec,
}

impl Sequence {
    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    pub fn value(&self, n: u64) -> Result<f64> {
        self.spec.value(n)
    }

    pub fn value_ext(&self, n: u64) -> Result<ExtFloat> {
        self.spec.value_ext(n)
    }

    pub fn samples(&self, n_max: usize) -> Result<SampleSet> {
        self.spec.samples(n_max)
    }
}

pub fn make_sequence(spec: SequenceSpec) -> Result<Sequence> {
    spec.validate()?;
    Ok(Sequence { spec })
}

/// Materialized values `a(1), ..., a(N)`, stored with an extended exponent
/// when some value overflows `f64`.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSet {
    Plain(Vec<f64>),
    Extended(Vec<ExtFloat>),
}

impl SampleSet {
    pub fn len(&self) -> usize {
        match self {
            SampleSet::Plain(v) => v.len(),
            SampleSet::Extended(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|a(i+1) - a(j+1)|` for zero-based positions.
    #[inline]
    pub fn abs_diff(&self, i: usize, j: usize) -> f64 {
        match self {
            SampleSet::Plain(v) => (v[i] - v[j]).abs(),
            SampleSet::Extended(v) => v[i].abs_diff(v[j]),
        }
    }

    /// First `n` samples.
    pub fn prefix(&self, n: usize) -> SampleSet {
        match self {
            SampleSet::Plain(v) => SampleSet::Plain(v[..n].to_vec()),
            SampleSet::Extended(v) => SampleSet::Extended(v[..n].to_vec()),
        }
    }

    /// Samples sorted ascending.
    pub fn sorted(&self) -> SampleSet {
        match self {
            SampleSet::Plain(v) => {
                let mut v = v.clone();
                v.sort_by(f64::total_cmp);
                SampleSet::Plain(v)
            }
            SampleSet::Extended(v) => {
                let mut v = v.clone();
                v.sort_by(ExtFloat::total_cmp);
                SampleSet::Extended(v)
            }
        }
    }

    pub fn from_values(values: Vec<f64>) -> SampleSet {
        SampleSet::Plain(values)
    }
}

/// Result of [`compose`]: the composed spec and whether `|P'| > c` for
/// `|x| > 1/c` held at the sampled inner values.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionCheck {
    pub spec: SequenceSpec,
    pub derivative_bounded_below: bool,
    /// The constant `c` the condition was tested with.
    pub c: f64,
    pub sampled: usize,
}

/// Number of inner-sequence values probed by [`compose`].
pub const COMPOSITION_SAMPLES: usize = 64;

/// Composes `outer` after `inner` and probes the derivative condition that
/// makes composition preserve scatteredness.
///
/// The inner sequence is sampled at 64 indices spread geometrically up to
/// about `1.4^63`. With `c = 1 / max(median |a|, 1)`, the condition holds if
/// every sample with `|a(n)| > 1/c` has `|P'(a(n))| > c`. A `false` flag is a
/// diagnostic only: the condition is sufficient, not necessary.
pub fn compose(inner: SequenceSpec, outer: Expr) -> Result<CompositionCheck> {
    inner.validate()?;
    let indices: Vec<u64> = (0..COMPOSITION_SAMPLES as i32)
        .map(|i| i as u64 + 1.4f64.powi(i).floor() as u64)
        .collect();
    let mut points = Vec::with_capacity(indices.len());
    for &n in &indices {
        let a = inner.value(n)?;
        let slope = outer.eval_jet(a, 1)?.get(1);
        points.push((a, slope));
    }
    let mut mags: Vec<f64> = points.iter().map(|(a, _)| a.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let median = mags[mags.len() / 2];
    let c = 1.0 / median.max(1.0);
    let derivative_bounded_below = points
        .iter()
        .filter(|(a, _)| a.abs() > 1.0 / c)
        .all(|(_, s)| s.abs() > c)
        && median.is_finite();
    Ok(CompositionCheck {
        spec: SequenceSpec::Composed {
            inner: Box::new(inner),
            outer,
        },
        derivative_bounded_below,
        c,
        sampled: points.len(),
    })
}

/// `sum_i w_i a_i`. Zero weights are dropped; all-zero weights are an error.
pub fn linear_combination(parts: Vec<(f64, SequenceSpec)>) -> Result<SequenceSpec> {
    let kept: Vec<(f64, SequenceSpec)> = parts.into_iter().filter(|(w, _)| *w != 0.0).collect();
    let spec = SequenceSpec::LinearCombo(kept);
    spec.validate()?;
    Ok(spec)
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Identity => f.write_str("identity"),
            SequenceSpec::Affine { alpha, beta } => write!(f, "affine:alpha={alpha:?},beta={beta:?}"),
            SequenceSpec::Power { eps } => write!(f, "power:eps={eps:?}"),
            SequenceSpec::LogPower { p } => write!(f, "logpow:p={p:?}"),
            SequenceSpec::NPlusLog => f.write_str("nplog"),
            SequenceSpec::SqrtResidue => f.write_str("sqrtres"),
            SequenceSpec::IteratedExp => f.write_str("iterexp"),
            SequenceSpec::Custom(e) => write!(f, "custom:{}", e.to_string_in("n")),
            SequenceSpec::Composed { inner, outer } => write!(f, "compose:{outer}|{inner}"),
            SequenceSpec::LinearCombo(parts) => {
                f.write_str("combo:")?;
                for (i, (w, s)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{w:?}*{s}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::param(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("bad number `{v}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn param(params: &[(String, f64)], key: &str, default: Option<f64>) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .or(default)
        .ok_or_else(|| Error::param(format!("missing parameter `{key}`")))
}

/// Splits a combo body at commas that start a new `weight*` term.
fn split_combo(body: &str) -> Vec<String> {
    let starts_term = |s: &str| {
        s.split_once('*')
            .map(|(w, _)| w.trim().parse::<f64>().is_ok())
            .unwrap_or(false)
    };
    let mut parts: Vec<String> = Vec::new();
    for frag in body.split(',') {
        match parts.last_mut() {
            Some(last) if !starts_term(frag) => {
                last.push(',');
                last.push_str(frag);
            }
            _ => parts.push(frag.to_string()),
        }
    }
    parts
}

impl FromStr for SequenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s.split_once(':').unwrap_or((s, ""));
        let spec = match head.trim() {
            "identity" => SequenceSpec::Identity,
            "affine" => {
                let p = parse_params(body)?;
                SequenceSpec::Affine {
                    alpha: param(&p, "alpha", None)?,
                    beta: param(&p, "beta", Some(0.0))?,
                }
            }
            "power" => SequenceSpec::Power {
                eps: param(&parse_params(body)?, "eps", None)?,
            },
            "logpow" | "log-power" => SequenceSpec::LogPower {
                p: param(&parse_params(body)?, "p", None)?,
            },
            "nplog" | "n-plus-log" => SequenceSpec::NPlusLog,
            "sqrtres" | "sqrt-residue" => SequenceSpec::SqrtResidue,
            "iterexp" | "iterated-exp" => SequenceSpec::IteratedExp,
            "custom" => SequenceSpec::Custom(parse_expr_in(body, "n")?),
            "compose" => {
                let (outer, inner) = body
                    .split_once('|')
                    .ok_or_else(|| Error::param("compose expects `P(x)|inner`"))?;
                SequenceSpec::Composed {
                    inner: Box::new(inner.parse()?),
                    outer: parse_expr(outer)?,
                }
            }
            "combo" => {
                let mut parts = Vec::new();
                for term in split_combo(body) {
                    let (w, spec) = term
                        .split_once('*')
                        .ok_or_else(|| Error::param(format!("combo term `{term}` lacks `weight*`")))?;
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::param(format!("bad weight `{w}`")))?;
                    parts.push((w, spec.parse()?));
                }
                SequenceSpec::LinearCombo(parts)
            }
            other => return Err(Error::param(format!("unknown sequence family `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(spec: &str, n: u64) -> f64 {
        spec.parse::<SequenceSpec>().unwrap().value(n).unwrap()
    }

    #[test]
    fn family_values() {
        assert_eq!(v("power:eps=0.5", 4), 2.0);
        assert_eq!(v("sqrtres", 9), 0.0);
        assert_eq!(v("sqrtres", 10), 1.0);
        assert_eq!(v("nplog", 1), 1.0);
        assert_eq!(v("logpow:p=2", 1), 0.0);
        assert_eq!(v("affine:alpha=2,beta=-1", 5), 9.0);
        assert_eq!(v("custom:n^2 + 1", 3), 10.0);
    }

    #[test]
    fn sqrt_residue_prefix() {
        let got: Vec<f64> = (1..=17).map(|n| v("sqrtres", n)).collect();
        let want = [0., 1., 2., 0., 1., 2., 3., 4., 0., 1., 2., 3., 4., 5., 6., 0., 1.];
        assert_eq!(got, want);
    }

    #[test]
    fn sqrt_residue_vanishes_on_squares() {
        let s = SequenceSpec::SqrtResidue;
        for m in 1..=1000u64 {
            assert_eq!(s.value(m * m).unwrap(), 0.0);
        }
    }

    #[test]
    fn iterated_exp_is_block_constant() {
        let s = SequenceSpec::IteratedExp;
        for j in 0..8 {
            let lo = (j as f64).exp().ceil() as u64;
            let hi = ((j + 1) as f64).exp().ceil() as u64;
            let first = s.value_ext(lo.max(1)).unwrap();
            for n in lo.max(1)..hi {
                assert_eq!(s.value_ext(n).unwrap(), first, "n = {n}");
            }
        }
        let samples = s.samples(2000).unwrap();
        assert!(matches!(samples, SampleSet::Extended(_)));
        // a(1096) and a(1097) are in different blocks, both out of f64 range for the latter.
        assert!(samples.abs_diff(1095, 1096).is_infinite());
        assert_eq!(samples.abs_diff(1500, 1999), 0.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(make_sequence(SequenceSpec::Power { eps: 0.0 }).is_err());
        assert!(make_sequence(SequenceSpec::LogPower { p: -1.0 }).is_err());
        assert!("power:eps=abc".parse::<SequenceSpec>().is_err());
        assert!("wobble".parse::<SequenceSpec>().is_err());
    }

    #[test]
    fn composition_examples() {
        let sq = compose(SequenceSpec::Identity, parse_expr("x^2").unwrap()).unwrap();
        assert_eq!(sq.spec.value(3).unwrap(), 9.0);
        assert!(sq.derivative_bounded_below);
        let shift = compose(SequenceSpec::Identity, parse_expr("x + 1").unwrap()).unwrap();
        assert_eq!(shift.spec.value(5).unwrap(), 6.0);
        assert!(shift.derivative_bounded_below);
        let lg = compose(SequenceSpec::Power { eps: 0.5 }, parse_expr("log(x)").unwrap()).unwrap();
        assert!(!lg.derivative_bounded_below);
        assert!((lg.spec.value(4).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(lg.sampled, COMPOSITION_SAMPLES);
        assert!(compose(SequenceSpec::SqrtResidue, parse_expr("log(x)").unwrap()).is_err());
    }

    #[test]
    fn linear_combination_examples() {
        let c = linear_combination(vec![(1.0, SequenceSpec::Identity), (1.0, SequenceSpec::LogPower { p: 1.0 })]).unwrap();
        assert!((c.value(3).unwrap() - (3.0 + 3f64.ln())).abs() < 1e-15);
        let z = linear_combination(vec![(1.0, SequenceSpec::Identity), (-1.0, SequenceSpec::Identity)]).unwrap();
        assert!((1..100).all(|n| z.value(n).unwrap() == 0.0));
        let p = linear_combination(vec![(2.0, SequenceSpec::Power { eps: 0.5 })]).unwrap();
        assert_eq!(p.value(9).unwrap(), 6.0);
        assert!(linear_combination(vec![(0.0, SequenceSpec::Identity)]).is_err());
        assert!(linear_combination(vec![]).is_err());
    }

    #[test]
    fn single_unit_weight_is_identity_map() {
        for spec in ["identity", "power:eps=0.3", "logpow:p=2", "sqrtres", "nplog"] {
            let inner: SequenceSpec = spec.parse().unwrap();
            let c = linear_combination(vec![(1.0, inner.clone())]).unwrap();
            for n in 1..500 {
                assert_eq!(c.value(n).unwrap(), inner.value(n).unwrap());
            }
        }
    }

    #[test]
    fn text_round_trip() {
        for s in [
            "identity",
            "affine:alpha=2.0,beta=0.5",
            "power:eps=0.5",
            "logpow:p=2.0",
            "custom:n + sin(n)/n",
            "compose:x^2|power:eps=0.5",
            "combo:1*identity,-1*logpow:p=2",
            "combo:2*affine:alpha=1,beta=3,-0.5*power:eps=0.25",
        ] {
            let spec: SequenceSpec = s.parse().unwrap();
            let again: SequenceSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, again, "{s}");
        }
        let c: SequenceSpec = "combo:2*affine:alpha=1,beta=3,-0.5*power:eps=0.25".parse().unwrap();
        assert_eq!(c.value(4).unwrap(), 2.0 * 7.0 - 0.5 * 4f64.powf(0.25));
    }
}
