//! Closed-form profile functions `f(s)`.
//!
//! An [`Expr`] is an immutable tree over the single variable `s`. Trees are
//! produced by [`parse`], evaluated in IEEE double precision by
//! [`Expr::eval`], and differentiated symbolically by
//! [`Expr::differentiate`]. The [`Display`](std::fmt::Display) output is
//! canonical and re-parses to a tree with bit-identical evaluation.

mod diff;
mod parse;

use std::fmt;

use thiserror::Error;

pub use parse::{parse, ParseError, ParseErrorKind};

/// Binary operators, in the grammar's precedence order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Unary functions accepted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Tanh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(EvalError::domain("log", x));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(EvalError::domain("sqrt", x));
                }
                x.sqrt()
            }
            Func::Tanh => x.tanh(),
            Func::Abs => x.abs(),
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(EvalError::overflow(self.name(), x))
        }
    }
}

/// Named constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Expression tree in the variable `s`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    /// Argument outside the function's domain (log of a non-positive number,
    /// division by zero, ...).
    Domain,
    /// The result is not a finite double.
    Overflow,
}

/// Evaluation failure. Kept distinct from [`ParseError`].
#[derive(Clone, Copy, Debug, Error, PartialEq)]
#[error("{kind:?} error in `{op}` at argument {arg}")]
pub struct EvalError {
    pub op: &'static str,
    pub arg: f64,
    pub kind: EvalErrorKind,
}

impl EvalError {
    fn domain(op: &'static str, arg: f64) -> Self {
        EvalError {
            op,
            arg,
            kind: EvalErrorKind::Domain,
        }
    }

    fn overflow(op: &'static str, arg: f64) -> Self {
        EvalError {
            op,
            arg,
            kind: EvalErrorKind::Overflow,
        }
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn call(func: Func, a: Expr) -> Expr {
        Expr::Call(func, Box::new(a))
    }

    /// True when the tree does not mention `s`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Const(_) | Expr::Var => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Evaluates the tree at `s`.
    pub fn eval(&self, s: f64) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var => Ok(s),
            Expr::Const(c) => Ok(c.value()),
            Expr::Neg(a) => Ok(-a.eval(s)?),
            Expr::Call(func, a) => func.apply(a.eval(s)?),
            Expr::Binary(op, a, b) => {
                let x = a.eval(s)?;
                let y = b.eval(s)?;
                let r = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::domain("/", x));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        let r = x.powf(y);
                        if r.is_nan() {
                            return Err(EvalError::domain("^", x));
                        }
                        r
                    }
                };
                if r.is_finite() {
                    Ok(r)
                } else {
                    Err(EvalError::overflow(op.symbol(), x))
                }
            }
        }
    }

    /// Exact symbolic derivative with respect to `s`.
    ///
    /// `abs` differentiates to `a/abs(a) * a'`, which evaluates to a domain
    /// error at the kink instead of silently returning a one-sided value.
    pub fn differentiate(&self) -> Expr {
        diff::differentiate(self)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let paren = self.precedence() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{:?}", -v)?;
                } else {
                    write!(f, "{v:?}")?;
                }
            }
            Expr::Var => f.write_str("s")?,
            Expr::Const(c) => f.write_str(c.name())?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 4)?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Binary(op, a, b) => {
                let (left, right) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                a.fmt_at(f, left)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_at(f, right)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Expr {
        parse(text).unwrap()
    }

    #[test]
    fn variable_node() {
        assert_eq!(p("s"), Expr::Var);
    }

    #[test]
    fn cubic_vanishes_at_its_roots() {
        let f = p("s^3 - s");
        for s in [1.0, 0.0, -1.0] {
            assert_eq!(f.eval(s).unwrap(), 0.0);
        }
    }

    #[test]
    fn spot_values() {
        assert_eq!(p("cos(s)").eval(0.0).unwrap(), 1.0);
        assert_eq!(p("s^(2*1)").eval(2.0).unwrap(), 4.0);
        assert_eq!(p("cos(s)").eval(std::f64::consts::PI).unwrap(), -1.0);
        let v = p("s^3 - s").eval(-std::f64::consts::SQRT_2).unwrap();
        assert!((v + std::f64::consts::SQRT_2).abs() < 1e-14, "{v}");
    }

    #[test]
    fn domain_errors_are_distinct() {
        let err = p("log(s)").eval(0.0).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::Domain);
        assert_eq!(err.op, "log");
        assert_eq!(p("sqrt(s)").eval(-1.0).unwrap_err().kind, EvalErrorKind::Domain);
        assert_eq!(p("1/s").eval(0.0).unwrap_err().kind, EvalErrorKind::Domain);
        assert_eq!(p("s^0.5").eval(-2.0).unwrap_err().kind, EvalErrorKind::Domain);
        assert_eq!(p("exp(s)").eval(1e3).unwrap_err().kind, EvalErrorKind::Overflow);
    }

    #[test]
    fn derivative_spot_values() {
        assert_eq!(p("s").differentiate(), Expr::Num(1.0));
        assert_eq!(p("2.5").differentiate(), Expr::Num(0.0));
        assert_eq!(p("s^3 - s").differentiate().eval(1.0).unwrap(), 2.0);
        assert_eq!(p("cos(s)").differentiate().eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn abs_kink_is_a_domain_error() {
        let d = p("abs(s)").differentiate();
        assert_eq!(d.eval(0.0).unwrap_err().kind, EvalErrorKind::Domain);
        assert_eq!(d.eval(-3.0).unwrap(), -1.0);
    }

    #[test]
    fn display_respects_precedence() {
        assert_eq!(p("s^3 - s").to_string(), "s ^ 3.0 - s");
        assert_eq!(p("-(s+1)^2").to_string(), "-(s + 1.0) ^ 2.0");
        assert_eq!(p("(s-1)-(s-2)").to_string(), "s - 1.0 - (s - 2.0)");
        assert_eq!(p("2^3^2").to_string(), "2.0 ^ 3.0 ^ 2.0");
        assert_eq!(p("(2^3)^2").to_string(), "(2.0 ^ 3.0) ^ 2.0");
        assert_eq!(p("s^-1").to_string(), "s ^ -1.0");
    }

    #[test]
    fn negative_literals_print_reparseably() {
        let e = Expr::binary(BinOp::Pow, Expr::Num(-2.0), Expr::Num(-0.5));
        let back = p(&e.to_string());
        assert_eq!(back.eval(0.0).unwrap_err(), e.eval(0.0).unwrap_err());
        let e = Expr::binary(BinOp::Mul, Expr::Num(-3.0), Expr::Var);
        assert_eq!(p(&e.to_string()).eval(1.5).unwrap(), -4.5);
    }
}
