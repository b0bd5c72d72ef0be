use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seeding::derived_rng;
use crate::sequences::{SampleSet, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthVerdict {
    Pass,
    Fail,
}

/// A pair `n < m` beyond the separation threshold whose values are within `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub n: u64,
    pub m: u64,
    pub gap: f64,
}

impl Witness {
    /// Re-evaluates both defining inequalities from scratch.
    pub fn holds(&self, seq: &Sequence, eps: f64, g: f64) -> Result<bool> {
        let beyond = self.n >= 2 && (self.m as f64) > threshold(self.n, eps);
        let gap = seq.value_ext(self.m)?.abs_diff(seq.value_ext(self.n)?);
        Ok(beyond && gap <= g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coverage {
    Exhaustive { pairs: u64 },
    Sampled { boundary: u64, random: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub eps: f64,
    pub g: f64,
    pub n: u64,
    pub verdict: GrowthVerdict,
    pub witness: Option<Witness>,
    pub coverage: Coverage,
}

/// `n + n / (log n)^(1 + eps)`.
fn threshold(n: u64, eps: f64) -> f64 {
    let n = n as f64;
    n + n / n.ln().powf(1.0 + eps)
}

/// Smallest `m` strictly above the threshold.
fn first_partner(n: u64, eps: f64) -> u64 {
    let t = threshold(n, eps);
    let mut m = t.floor() as u64 + 1;
    while m > n + 1 && (m - 1) as f64 > t {
        m -= 1;
    }
    m
}

/// Scans pairs `2 <= n < m <= N` with `m > n + n/(log n)^(1+eps)` for
/// `|a(m) - a(n)| <= g`. All such pairs are checked when there are at most
/// `budget` of them; otherwise every boundary pair and `budget` random pairs
/// drawn from `seed`.
pub fn weyl_growth_check(seq: &Sequence, n_max: u64, eps: f64, g: f64, budget: u64, seed: u64) -> Result<GrowthReport> {
    if n_max < 8 {
        return Err(Error::param(format!("need N >= 8, got {n_max}")));
    }
    if !(eps > 0.0 && eps.is_finite()) || !(g > 0.0 && g.is_finite()) {
        return Err(Error::param("eps and g must be positive"));
    }
    let samples = seq.samples(n_max as usize)?;
    let starts: Vec<(u64, u64)> = (2..n_max)
        .map(|n| (n, first_partner(n, eps)))
        .filter(|&(_, m0)| m0 <= n_max)
        .collect();
    let pairs: u64 = starts.iter().map(|&(_, m0)| n_max - m0 + 1).sum();
    let close = |n: u64, m: u64| samples_gap(&samples, n, m) <= g;

    let (hit, coverage) = if pairs <= budget {
        let hit = starts
            .par_iter()
            .find_map_first(|&(n, m0)| (m0..=n_max).find(|&m| close(n, m)).map(|m| (n, m)));
        (hit, Coverage::Exhaustive { pairs })
    } else {
        let mut hit = starts.iter().find(|&&(n, m0)| close(n, m0)).copied();
        if hit.is_none() {
            let mut rng = derived_rng(seed, 0);
            for _ in 0..budget {
                let (n, m0) = starts[rng.random_range(0..starts.len())];
                let m = rng.random_range(m0..=n_max);
                if close(n, m) {
                    hit = Some((n, m));
                    break;
                }
            }
        }
        (
            hit,
            Coverage::Sampled {
                boundary: starts.len() as u64,
                random: budget,
            },
        )
    };

    let witness = hit
        .map(|(n, m)| -> Result<Witness> {
            Ok(Witness {
                n,
                m,
                gap: seq.value_ext(m)?.abs_diff(seq.value_ext(n)?),
            })
        })
        .transpose()?;
    Ok(GrowthReport {
        eps,
        g,
        n: n_max,
        verdict: if witness.is_some() { GrowthVerdict::Fail } else { GrowthVerdict::Pass },
        witness,
        coverage,
    })
}

fn samples_gap(samples: &SampleSet, n: u64, m: u64) -> f64 {
    samples.abs_diff(m as usize - 1, n as usize - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::make_sequence;

    fn seq(s: &str) -> Sequence {
        make_sequence(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn identity_passes() {
        let r = weyl_growth_check(&seq("identity"), 1000, 1.0, 0.5, u64::MAX, 0).unwrap();
        assert_eq!(r.verdict, GrowthVerdict::Pass);
        assert!(matches!(r.coverage, Coverage::Exhaustive { .. }));
    }

    #[test]
    fn sqrt_residue_fails_with_first_witness() {
        let q = seq("sqrtres");
        let r = weyl_growth_check(&q, 100, 0.1, 0.5, u64::MAX, 0).unwrap();
        assert_eq!(r.verdict, GrowthVerdict::Fail);
        let w = r.witness.unwrap();
        // a(2) = a(5) = 1 and 5 > 2 + 2/(log 2)^1.1 ~ 4.98.
        assert_eq!((w.n, w.m), (2, 5));
        assert!(w.holds(&q, 0.1, 0.5).unwrap());
        let other = Witness { n: 4, m: 9, gap: 0.0 };
        assert!(other.holds(&q, 0.1, 0.5).unwrap());
    }

    #[test]
    fn partner_threshold_is_strict() {
        for n in 2..500u64 {
            for eps in [0.1, 0.4, 1.0] {
                let m = first_partner(n, eps);
                assert!(m as f64 > threshold(n, eps));
                assert!((m - 1) as f64 <= threshold(n, eps));
            }
        }
    }

    #[test]
    fn sampled_mode_is_seeded() {
        let q = seq("sqrtres");
        let a = weyl_growth_check(&q, 2000, 0.5, 0.1, 50, 9).unwrap();
        let b = weyl_growth_check(&q, 2000, 0.5, 0.1, 50, 9).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a.coverage, Coverage::Sampled { random: 50, .. }));
        assert_eq!(a.verdict, GrowthVerdict::Fail);
    }

    #[test]
    fn rejects_bad_parameters() {
        let q = seq("identity");
        assert!(weyl_growth_check(&q, 7, 1.0, 1.0, 10, 0).is_err());
        assert!(weyl_growth_check(&q, 100, 0.0, 1.0, 10, 0).is_err());
        assert!(weyl_growth_check(&q, 100, 1.0, -1.0, 10, 0).is_err());
    }
}
