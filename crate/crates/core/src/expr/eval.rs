use super::Expr;
use crate::error::{Error, Result};
use crate::Real;

impl Expr {
    /// Evaluates the expression at `x` in the scalar type `T`.
    ///
    /// Logarithms, square roots and real powers need a positive argument
    /// (`sqrt(0)` is allowed), division needs a non-zero denominator and an
    /// integer power with a negative exponent needs a non-zero base.
    pub fn eval<T: Real>(&self, x: T) -> Result<T> {
        Ok(match self {
            Expr::Const(c) => T::lit(*c),
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den == T::zero() {
                    return Err(self.domain(den));
                }
                num / den
            }
            Expr::PowInt(a, n) => {
                let base = a.eval(x)?;
                if *n < 0 && base == T::zero() {
                    return Err(self.domain(base));
                }
                base.powi(*n)
            }
            Expr::PowReal(a, p) => {
                let base = a.eval(x)?;
                if base <= T::zero() {
                    return Err(self.domain(base));
                }
                base.powf(T::lit(*p))
            }
            Expr::Exp(a) => a.eval(x)?.exp(),
            Expr::Log(a) => {
                let arg = a.eval(x)?;
                if arg <= T::zero() {
                    return Err(self.domain(arg));
                }
                arg.ln()
            }
            Expr::Sin(a) => a.eval(x)?.sin(),
            Expr::Cos(a) => a.eval(x)?.cos(),
            Expr::Sqrt(a) => {
                let arg = a.eval(x)?;
                if arg < T::zero() {
                    return Err(self.domain(arg));
                }
                arg.sqrt()
            }
        })
    }

    pub(crate) fn domain<T: Real>(&self, arg: T) -> Error {
        Error::Domain {
            node: self.to_string(),
            arg: arg.to_f64_lossy(),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse_expr;
    use crate::Error;

    #[test]
    fn basic_values() {
        assert_eq!(parse_expr("x^2").unwrap().eval(3.0).unwrap(), 9.0);
        assert_eq!(parse_expr("log(x)").unwrap().eval(1.0).unwrap(), 0.0);
        let id = parse_expr("sin(x)^2 + cos(x)^2").unwrap().eval(0.7_f64).unwrap();
        assert!((id - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn generic_in_f32() {
        let v: f32 = parse_expr("sqrt(x) * 2").unwrap().eval(4.0_f32).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn domain_errors_name_the_node() {
        match parse_expr("1 + log(x - 2)").unwrap().eval(1.0) {
            Err(Error::Domain { node, arg }) => {
                assert_eq!(node, "log((x - 2.0))");
                assert_eq!(arg, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_expr("x^0.5").unwrap().eval(0.0).is_err());
        assert!(parse_expr("x^(-2)").unwrap().eval(0.0).is_err());
        assert!(parse_expr("1/x").unwrap().eval(0.0).is_err());
        assert!(parse_expr("sqrt(x)").unwrap().eval(-1e-9).is_err());
        assert_eq!(parse_expr("sqrt(x)").unwrap().eval(0.0).unwrap(), 0.0);
        assert_eq!(parse_expr("x^(-2)").unwrap().eval(-2.0).unwrap(), 0.25);
    }
}
