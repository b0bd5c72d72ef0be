use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Increasing families of finite index sets `S_1, S_2, ...` used as
/// averaging windows.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexSetFamily {
    /// `S_N = {1, ..., N}`.
    Prefixes,
    /// `S_N = {1, ..., ceil(rho^N)}`, `rho > 1`. Nesting is strict for
    /// every `N` only when `rho >= 2`; smaller ratios repeat early sets.
    Geometric { rho: f64 },
    /// `S_N = {c, 2c, ..., Nc}`.
    Strided { c: u64 },
    /// Explicit sets, each a strictly larger superset of the previous one.
    CustomNested(Vec<Vec<u64>>),
}

impl IndexSetFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            IndexSetFamily::Prefixes => Ok(()),
            IndexSetFamily::Geometric { rho } => {
                if *rho > 1.0 && rho.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param(format!("geometric ratio must exceed 1, got {rho}")))
                }
            }
            IndexSetFamily::Strided { c } => {
                if *c >= 1 {
                    Ok(())
                } else {
                    Err(Error::param("stride must be at least 1"))
                }
            }
            IndexSetFamily::CustomNested(sets) => {
                if sets.is_empty() {
                    return Err(Error::param("nested family needs at least one set"));
                }
                for (i, s) in sets.iter().enumerate() {
                    if s.is_empty() || s[0] == 0 || s.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::param(format!(
                            "set {} must be a non-empty strictly increasing list of positive indices",
                            i + 1
                        )));
                    }
                    if i > 0 {
                        let prev = &sets[i - 1];
                        let nested = prev.iter().all(|x| s.binary_search(x).is_ok());
                        if !nested || s.len() <= prev.len() {
                            return Err(Error::param(format!("set {} is not a proper superset of set {}", i + 1, i)));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// `|S_N|` without materializing the set.
    pub fn size(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Err(Error::param("index sets are numbered from 1"));
        }
        match self {
            IndexSetFamily::Prefixes | IndexSetFamily::Strided { .. } => Ok(n as u64),
            IndexSetFamily::Geometric { rho } => {
                let len = rho.powi(n as i32).ceil();
                if len >= u64::MAX as f64 {
                    return Err(Error::param(format!("|S_{n}| overflows for rho = {rho}")));
                }
                Ok(len as u64)
            }
            IndexSetFamily::CustomNested(sets) => sets
                .get(n - 1)
                .map(|s| s.len() as u64)
                .ok_or_else(|| Error::param(format!("nested family has only {} sets", sets.len()))),
        }
    }
}

/// One member `S_N` of a family.
#[derive(Debug, Clone)]
pub struct IndexSet<'a> {
    family: &'a IndexSetFamily,
    pub n: usize,
    pub len: u64,
    /// `sum_{M <= N} 1 / |S_M|`.
    pub reciprocal_partial_sum: f64,
}

impl IndexSet<'_> {
    /// Elements of `S_N` in increasing order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match self.family {
            IndexSetFamily::Prefixes | IndexSetFamily::Geometric { .. } => Box::new(1..=self.len),
            IndexSetFamily::Strided { c } => {
                let c = *c;
                Box::new((1..=self.len).map(move |i| i * c))
            }
            IndexSetFamily::CustomNested(sets) => Box::new(sets[self.n - 1].iter().copied()),
        }
    }

    /// Largest element of `S_N`.
    pub fn max(&self) -> u64 {
        match self.family {
            IndexSetFamily::Strided { c } => self.len * c,
            IndexSetFamily::CustomNested(sets) => *sets[self.n - 1].last().expect("validated non-empty"),
            _ => self.len,
        }
    }
}

pub fn index_sets(family: &IndexSetFamily, n: usize) -> Result<IndexSet<'_>> {
    family.validate()?;
    let len = family.size(n)?;
    let mut reciprocal_partial_sum = 0.0;
    for m in 1..=n {
        reciprocal_partial_sum += 1.0 / family.size(m)? as f64;
    }
    Ok(IndexSet {
        family,
        n,
        len,
        reciprocal_partial_sum,
    })
}

impl fmt::Display for IndexSetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSetFamily::Prefixes => f.write_str("prefixes"),
            IndexSetFamily::Geometric { rho } => write!(f, "geometric:rho={rho:?}"),
            IndexSetFamily::Strided { c } => write!(f, "strided:c={c}"),
            IndexSetFamily::CustomNested(sets) => {
                f.write_str("nested:")?;
                let body: Vec<String> = sets
                    .iter()
                    .map(|s| s.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
                    .collect();
                f.write_str(&body.join(";"))
            }
        }
    }
}

impl FromStr for IndexSetFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, body) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let value = |key: &str| -> Result<&str> {
            body.split(',')
                .find_map(|kv| kv.split_once('=').filter(|(k, _)| k.trim() == key).map(|(_, v)| v.trim()))
                .ok_or_else(|| Error::param(format!("missing `{key}=`")))
        };
        let family = match head {
            "prefixes" => IndexSetFamily::Prefixes,
            "geometric" => IndexSetFamily::Geometric {
                rho: value("rho")?.parse().map_err(|_| Error::param("bad rho"))?,
            },
            "strided" => IndexSetFamily::Strided {
                c: value("c")?.parse().map_err(|_| Error::param("bad stride"))?,
            },
            "nested" => IndexSetFamily::CustomNested(
                body.split(';')
                    .map(|set| {
                        set.split(',')
                            .map(|x| x.trim().parse::<u64>().map_err(|_| Error::param(format!("bad index `{x}`"))))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?,
            ),
            other => return Err(Error::param(format!("unknown index-set family `{other}`"))),
        };
        family.validate()?;
        Ok(family)
    }
}
