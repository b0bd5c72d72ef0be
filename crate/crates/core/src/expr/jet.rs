//! Taylor-mode derivatives.
//!
//! Every node propagates a truncated Taylor series (normalized coefficients
//! `f^(j)(x) / j!`) with the classical recurrences; the series is converted
//! to raw derivatives only at the end. Coefficient `j` of any node depends on
//! coefficients `<= j` of its children alone, so truncating a jet of order
//! `d` to `d' < d` reproduces the order-`d'` jet bit for bit.

use super::Expr;
use crate::error::{Error, Result};
use crate::Real;

/// Highest derivative order served by [`Expr::eval_jet`].
pub const MAX_JET_ORDER: usize = 16;

/// Raw derivatives `f(x), f'(x), ..., f^(d)(x)` at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorJet<T> {
    pub x: T,
    pub derivatives: Vec<T>,
}

impl<T: Real> TaylorJet<T> {
    pub fn order(&self) -> usize {
        self.derivatives.len() - 1
    }

    pub fn value(&self) -> T {
        self.derivatives[0]
    }

    /// Derivative of order `j`.
    pub fn get(&self, j: usize) -> T {
        self.derivatives[j]
    }

    /// Jet of lower order with the same base point.
    pub fn truncate(&self, order: usize) -> Self {
        Self {
            x: self.x,
            derivatives: self.derivatives[..=order.min(self.order())].to_vec(),
        }
    }
}

impl Expr {
    /// Raw derivatives up to order `d` at `x`.
    pub fn eval_jet<T: Real>(&self, x: T, d: usize) -> Result<TaylorJet<T>> {
        if d > MAX_JET_ORDER {
            return Err(Error::OrderCap {
                requested: d,
                cap: MAX_JET_ORDER,
            });
        }
        let mut coeffs = self.series(x, d)?;
        let mut factorial = T::one();
        for (j, c) in coeffs.iter_mut().enumerate().skip(1) {
            factorial = factorial * T::from_count(j);
            *c = *c * factorial;
        }
        Ok(TaylorJet { x, derivatives: coeffs })
    }

    /// Normalized Taylor coefficients of length `d + 1`.
    fn series<T: Real>(&self, x: T, d: usize) -> Result<Vec<T>> {
        let n = d + 1;
        Ok(match self {
            Expr::Const(c) => {
                let mut s = vec![T::zero(); n];
                s[0] = T::lit(*c);
                s
            }
            Expr::Var => {
                let mut s = vec![T::zero(); n];
                s[0] = x;
                if d >= 1 {
                    s[1] = T::one();
                }
                s
            }
            Expr::Add(a, b) => zip(&a.series(x, d)?, &b.series(x, d)?, |u, v| u + v),
            Expr::Sub(a, b) => zip(&a.series(x, d)?, &b.series(x, d)?, |u, v| u - v),
            Expr::Mul(a, b) => mul(&a.series(x, d)?, &b.series(x, d)?),
            Expr::Div(a, b) => {
                let den = b.series(x, d)?;
                if den[0] == T::zero() {
                    return Err(self.domain(den[0]));
                }
                div(&a.series(x, d)?, &den)
            }
            Expr::PowInt(a, p) => {
                let base = a.series(x, d)?;
                if *p < 0 && base[0] == T::zero() {
                    return Err(self.domain(base[0]));
                }
                let pos = powi(&base, p.unsigned_abs());
                if *p < 0 {
                    let mut one = vec![T::zero(); n];
                    one[0] = T::one();
                    div(&one, &pos)
                } else {
                    pos
                }
            }
            Expr::PowReal(a, p) => {
                let base = a.series(x, d)?;
                if base[0] <= T::zero() {
                    return Err(self.domain(base[0]));
                }
                powf(&base, T::lit(*p))
            }
            Expr::Exp(a) => exp(&a.series(x, d)?),
            Expr::Log(a) => {
                let arg = a.series(x, d)?;
                if arg[0] <= T::zero() {
                    return Err(self.domain(arg[0]));
                }
                log(&arg)
            }
            Expr::Sin(a) => sin_cos(&a.series(x, d)?).0,
            Expr::Cos(a) => sin_cos(&a.series(x, d)?).1,
            Expr::Sqrt(a) => {
                let arg = a.series(x, d)?;
                let bad = if d == 0 { arg[0] < T::zero() } else { arg[0] <= T::zero() };
                if bad {
                    return Err(self.domain(arg[0]));
                }
                sqrt(&arg)
            }
        })
    }
}

fn zip<T: Real>(a: &[T], b: &[T], op: impl Fn(T, T) -> T) -> Vec<T> {
    a.iter().zip(b).map(|(&u, &v)| op(u, v)).collect()
}

fn mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    (0..a.len())
        .map(|k| (0..=k).fold(T::zero(), |acc, j| acc + a[j] * b[k - j]))
        .collect()
}

fn div<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut q = Vec::with_capacity(a.len());
    for k in 0..a.len() {
        let s = (1..=k).fold(a[k], |acc, j| acc - b[j] * q[k - j]);
        q.push(s / b[0]);
    }
    q
}

fn powi<T: Real>(a: &[T], mut p: u32) -> Vec<T> {
    let mut result = vec![T::zero(); a.len()];
    result[0] = T::one();
    let mut base = a.to_vec();
    while p > 0 {
        if p & 1 == 1 {
            result = mul(&result, &base);
        }
        p >>= 1;
        if p > 0 {
            base = mul(&base, &base);
        }
    }
    result
}

fn powf<T: Real>(a: &[T], alpha: T) -> Vec<T> {
    let mut p = Vec::with_capacity(a.len());
    p.push(a[0].powf(alpha));
    for k in 1..a.len() {
        let kt = T::from_count(k);
        let s = (1..=k).fold(T::zero(), |acc, j| {
            let jt = T::from_count(j);
            acc + ((alpha + T::one()) * jt - kt) * a[j] * p[k - j]
        });
        p.push(s / (kt * a[0]));
    }
    p
}

fn exp<T: Real>(a: &[T]) -> Vec<T> {
    let mut e = Vec::with_capacity(a.len());
    e.push(a[0].exp());
    for k in 1..a.len() {
        let s = (1..=k).fold(T::zero(), |acc, j| acc + T::from_count(j) * a[j] * e[k - j]);
        e.push(s / T::from_count(k));
    }
    e
}

fn log<T: Real>(a: &[T]) -> Vec<T> {
    let mut l = Vec::with_capacity(a.len());
    l.push(a[0].ln());
    for k in 1..a.len() {
        let s = (1..k).fold(T::zero(), |acc, j| acc + T::from_count(j) * l[j] * a[k - j]);
        l.push((a[k] - s / T::from_count(k)) / a[0]);
    }
    l
}

fn sin_cos<T: Real>(a: &[T]) -> (Vec<T>, Vec<T>) {
    let mut s = Vec::with_capacity(a.len());
    let mut c = Vec::with_capacity(a.len());
    s.push(a[0].sin());
    c.push(a[0].cos());
    for k in 1..a.len() {
        let kt = T::from_count(k);
        let (ds, dc) = (1..=k).fold((T::zero(), T::zero()), |(ds, dc), j| {
            let w = T::from_count(j) * a[j];
            (ds + w * c[k - j], dc + w * s[k - j])
        });
        s.push(ds / kt);
        c.push(-dc / kt);
    }
    (s, c)
}

fn sqrt<T: Real>(a: &[T]) -> Vec<T> {
    let mut r = Vec::with_capacity(a.len());
    r.push(a[0].sqrt());
    let two = T::lit(2.0);
    for k in 1..a.len() {
        let s = (1..k).fold(T::zero(), |acc, j| acc + r[j] * r[k - j]);
        r.push((a[k] - s) / (two * r[0]));
    }
    r
}

#[cfg(test)]
mod tests {
    use crate::expr::parse_expr;
    use crate::Error;

    fn jet(s: &str, x: f64, d: usize) -> Vec<f64> {
        parse_expr(s).unwrap().eval_jet(x, d).unwrap().derivatives
    }

    #[test]
    fn worked_examples() {
        assert_eq!(jet("x^2", 3.0, 3), vec![9.0, 6.0, 2.0, 0.0]);
        assert_eq!(jet("exp(x)", 0.0, 2), vec![1.0, 1.0, 1.0]);
        assert_eq!(jet("log(x)", 1.0, 2), vec![0.0, 1.0, -1.0]);
    }

    #[test]
    fn polynomial_tail_is_exactly_zero() {
        let j = jet("3*x^4 - 2*x^3 + x - 7", 1.37, 10);
        assert!(j[5..].iter().all(|&v| v == 0.0));
        assert!((j[4] - 72.0).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_and_powers() {
        // d^k/dx^k x^-1 = (-1)^k k! x^-(k+1)
        let j = jet("x^(-1)", 2.0, 4);
        let expected = [0.5, -0.25, 0.25, -0.375, 0.75];
        for (a, b) in j.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        let j = jet("sqrt(x)", 4.0, 2);
        assert!((j[1] - 0.25).abs() < 1e-15);
        assert!((j[2] + 1.0 / 32.0).abs() < 1e-15);
        let j = jet("x^1.5", 4.0, 2);
        assert!((j[1] - 3.0).abs() < 1e-14);
        assert!((j[2] - 0.375).abs() < 1e-14);
    }

    #[test]
    fn trig_cycle() {
        let x = 0.3_f64;
        let j = jet("sin(x)", x, 4);
        let expected = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()];
        for (a, b) in j.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn order_cap_and_domain() {
        let e = parse_expr("x").unwrap();
        assert!(matches!(e.eval_jet(1.0, 17), Err(Error::OrderCap { requested: 17, cap: 16 })));
        assert!(e.eval_jet(1.0, 16).is_ok());
        let s = parse_expr("sqrt(x)").unwrap();
        assert!(s.eval_jet(0.0, 0).is_ok());
        assert!(s.eval_jet(0.0, 1).is_err());
        assert!(parse_expr("log(x)").unwrap().eval_jet(0.0, 0).is_err());
    }
}
