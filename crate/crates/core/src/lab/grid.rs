//! Textual `N`-grid specifications.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weyl::{sublacunary_grid, MAX_TABLE_LEN};

/// An increasing list of sample sizes.
///
/// ```text
/// pow2:8..14                 2^8, 2^9, ..., 2^14
/// list:100,300,1000
/// linear:100:1000:100        start:stop:step, stop included when hit
/// geom:64:1.5:10             start:ratio:count, rounded and deduplicated
/// sublacunary:0.5:200:20000  eps:r_max[:cap], cap appended as the last point
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GridSpec {
    Pow2 { from: u32, to: u32 },
    List(Vec<usize>),
    Linear { start: usize, stop: usize, step: usize },
    Geometric { start: f64, ratio: f64, count: usize },
    Sublacunary { eps: f64, r_max: usize, cap: Option<usize> },
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<usize>> {
        let pts: Vec<usize> = match self {
            GridSpec::Pow2 { from, to } => {
                if from > to || *to >= 63 {
                    return Err(Error::param(format!("bad power range {from}..{to}")));
                }
                (*from..=*to).map(|e| 1usize << e).collect()
            }
            GridSpec::List(v) => v.clone(),
            GridSpec::Linear { start, stop, step } => {
                if *step == 0 {
                    return Err(Error::param("linear grid step must be positive"));
                }
                (*start..=*stop).step_by(*step).collect()
            }
            GridSpec::Geometric { start, ratio, count } => {
                if !(*start >= 1.0 && *ratio > 1.0 && start.is_finite() && ratio.is_finite()) {
                    return Err(Error::param("geometric grid needs start >= 1 and ratio > 1"));
                }
                let mut out: Vec<usize> = Vec::with_capacity(*count);
                for i in 0..*count {
                    let v = (start * ratio.powi(i as i32)).round();
                    if v > MAX_TABLE_LEN as f64 {
                        break;
                    }
                    if out.last() != Some(&(v as usize)) {
                        out.push(v as usize);
                    }
                }
                out
            }
            GridSpec::Sublacunary { eps, r_max, cap } => {
                let mut out = sublacunary_grid(*eps, *r_max)?;
                if let Some(cap) = *cap {
                    out.retain(|&n| n < cap);
                    out.push(cap);
                }
                out
            }
        };
        if pts.is_empty() || pts[0] == 0 || pts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(format!("grid `{self}` is not a positive increasing list")));
        }
        if *pts.last().expect("non-empty") > MAX_TABLE_LEN {
            return Err(Error::param(format!("grid exceeds the table cap of {MAX_TABLE_LEN}")));
        }
        Ok(pts)
    }
}

fn num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::param(format!("bad {what} `{s}` in grid spec")))
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::param(format!("grid spec `{s}` lacks a `kind:` prefix")))?;
        let fields: Vec<&str> = body.split(':').collect();
        let arity = |lo: usize, hi: usize| {
            if fields.len() < lo || fields.len() > hi {
                Err(Error::param(format!("grid spec `{s}` has the wrong number of fields")))
            } else {
                Ok(())
            }
        };
        match head {
            "pow2" => {
                let (a, b) = body
                    .split_once("..")
                    .ok_or_else(|| Error::param("pow2 grid expects `from..to`"))?;
                Ok(GridSpec::Pow2 {
                    from: num(a, "exponent")?,
                    to: num(b, "exponent")?,
                })
            }
            "list" => Ok(GridSpec::List(
                body.split(',').map(|v| num(v, "grid point")).collect::<Result<_>>()?,
            )),
            "linear" => {
                arity(3, 3)?;
                Ok(GridSpec::Linear {
                    start: num(fields[0], "start")?,
                    stop: num(fields[1], "stop")?,
                    step: num(fields[2], "step")?,
                })
            }
            "geom" => {
                arity(3, 3)?;
                Ok(GridSpec::Geometric {
                    start: num(fields[0], "start")?,
                    ratio: num(fields[1], "ratio")?,
                    count: num(fields[2], "count")?,
                })
            }
            "sublacunary" => {
                arity(2, 3)?;
                Ok(GridSpec::Sublacunary {
                    eps: num(fields[0], "exponent")?,
                    r_max: num(fields[1], "r_max")?,
                    cap: fields.get(2).map(|c| num(c, "cap")).transpose()?,
                })
            }
            other => Err(Error::param(format!("unknown grid kind `{other}`"))),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Pow2 { from, to } => write!(f, "pow2:{from}..{to}"),
            GridSpec::List(v) => {
                let v: Vec<String> = v.iter().map(usize::to_string).collect();
                write!(f, "list:{}", v.join(","))
            }
            GridSpec::Linear { start, stop, step } => write!(f, "linear:{start}:{stop}:{step}"),
            GridSpec::Geometric { start, ratio, count } => write!(f, "geom:{start}:{ratio}:{count}"),
            GridSpec::Sublacunary { eps, r_max, cap } => {
                write!(f, "sublacunary:{eps}:{r_max}")?;
                if let Some(c) = cap {
                    write!(f, ":{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl TryFrom<String> for GridSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(s: &str) -> Vec<usize> {
        s.parse::<GridSpec>().unwrap().points().unwrap()
    }

    #[test]
    fn kinds() {
        assert_eq!(pts("pow2:8..10"), vec![256, 512, 1024]);
        assert_eq!(pts("list:3,5,9"), vec![3, 5, 9]);
        assert_eq!(pts("linear:10:40:10"), vec![10, 20, 30, 40]);
        assert_eq!(pts("geom:10:2:3"), vec![10, 20, 40]);
        let s = pts("sublacunary:0.5:200:20000");
        assert_eq!(*s.last().unwrap(), 20000);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn round_trip_and_errors() {
        for s in ["pow2:8..14", "list:1,2", "linear:1:9:2", "geom:64:1.5:10", "sublacunary:0.5:90:5000"] {
            assert_eq!(s.parse::<GridSpec>().unwrap().to_string(), s);
        }
        for s in ["pow2:9..8", "list:5,3", "list:0,1", "linear:1:5:0", "nope:1", "geom:0.5:2:3", "list"] {
            assert!(s.parse::<GridSpec>().and_then(|g| g.points()).is_err(), "{s}");
        }
    }
}
