//! Closed-form analytic expressions in one real variable.
//!
//! Expressions are parsed from a small infix grammar, evaluated in any
//! [`Real`](crate::Real) scalar, differentiated to finite order by Taylor-mode
//! propagation, and tested for linear independence as function families.

mod eval;
mod independence;
mod jet;
mod parse;

use std::fmt;

pub use independence::{check_linear_independence, IndependenceReport, Verdict, DEFAULT_INDEPENDENCE_THRESHOLD};
pub use jet::{TaylorJet, MAX_JET_ORDER};
pub use parse::{parse_expr, parse_expr_in};

/// Expression tree. Leaves are real constants or the single free variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power; defined for every base except zero with a negative exponent.
    PowInt(Box<Expr>, i32),
    /// Real power with a non-integer exponent; defined for positive bases only.
    PowReal(Box<Expr>, f64),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var() -> Self {
        Expr::Var
    }

    /// `base^exponent`, stored as an integer power whenever the exponent is
    /// integral and fits an `i32`.
    pub fn pow(base: Expr, exponent: f64) -> Self {
        if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
            Expr::PowInt(Box::new(base), exponent as i32)
        } else {
            Expr::PowReal(Box::new(base), exponent)
        }
    }

    /// Whether the tree mentions the variable.
    pub fn has_var(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.has_var() || b.has_var(),
            Expr::PowInt(a, _) | Expr::PowReal(a, _) => a.has_var(),
            Expr::Exp(a) | Expr::Log(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Sqrt(a) => a.has_var(),
        }
    }

    /// Whether the tree is built from the variable and constants by sums,
    /// products, non-negative integer powers and division by constants.
    pub fn is_polynomial(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_polynomial() && b.is_polynomial(),
            Expr::Div(a, b) => a.is_polynomial() && !b.has_var(),
            Expr::PowInt(a, k) => *k >= 0 && a.is_polynomial(),
            Expr::PowReal(a, _) | Expr::Exp(a) | Expr::Log(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Sqrt(a) => {
                !a.has_var()
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Var => 0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.size() + b.size(),
            Expr::PowInt(a, _) | Expr::PowReal(a, _) => a.size(),
            Expr::Exp(a) | Expr::Log(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Sqrt(a) => a.size(),
        }
    }

    /// Serializes with the given variable name. The output re-parses to an
    /// identical tree under [`parse_expr_in`] with the same name.
    pub fn to_string_in(&self, var: &str) -> String {
        let mut out = String::new();
        self.write_in(&mut out, var);
        out
    }

    fn write_in(&self, out: &mut String, var: &str) {
        use std::fmt::Write as _;
        match self {
            Expr::Const(c) => write_number(out, *c),
            Expr::Var => out.push_str(var),
            Expr::Add(a, b) => write_binary(out, var, a, " + ", b),
            Expr::Sub(a, b) => write_binary(out, var, a, " - ", b),
            Expr::Mul(a, b) => write_binary(out, var, a, " * ", b),
            Expr::Div(a, b) => write_binary(out, var, a, " / ", b),
            Expr::PowInt(a, n) => {
                out.push('(');
                a.write_in(out, var);
                out.push_str(")^");
                if *n < 0 {
                    let _ = write!(out, "({n})");
                } else {
                    let _ = write!(out, "{n}");
                }
            }
            Expr::PowReal(a, p) => {
                out.push('(');
                a.write_in(out, var);
                out.push_str(")^");
                write_number(out, *p);
            }
            Expr::Exp(a) => write_call(out, var, "exp", a),
            Expr::Log(a) => write_call(out, var, "log", a),
            Expr::Sin(a) => write_call(out, var, "sin", a),
            Expr::Cos(a) => write_call(out, var, "cos", a),
            Expr::Sqrt(a) => write_call(out, var, "sqrt", a),
        }
    }
}

fn write_number(out: &mut String, c: f64) {
    // Debug formatting is the shortest round-trip representation.
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        out.push_str(&format!("({c:?})"));
    } else {
        out.push_str(&format!("{c:?}"));
    }
}

fn write_binary(out: &mut String, var: &str, a: &Expr, op: &str, b: &Expr) {
    out.push('(');
    a.write_in(out, var);
    out.push_str(op);
    b.write_in(out, var);
    out.push(')');
}

fn write_call(out: &mut String, var: &str, name: &str, a: &Expr) {
    out.push_str(name);
    out.push('(');
    a.write_in(out, var);
    out.push(')');
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_in("x"))
    }
}

impl std::str::FromStr for Expr {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_shapes() {
        for s in ["x", "3*x^2 - x/2 + 1", "(x+1)^3", "sqrt(2)*x"] {
            assert!(parse_expr(s).unwrap().is_polynomial(), "{s}");
        }
        for s in ["sin(x)", "1/x", "x^(-1)", "x^0.5", "exp(x)"] {
            assert!(!parse_expr(s).unwrap().is_polynomial(), "{s}");
        }
    }
}
