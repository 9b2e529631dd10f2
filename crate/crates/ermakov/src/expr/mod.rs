//! Symbolic expressions in the single time variable `t`.
//!
//! This module provides the small expression language used throughout the
//! crate for time-dependent coefficients: oscillator frequencies, damping
//! profiles, coupling strengths, and gauge factors. Expressions are immutable
//! trees built from numeric constants, the variable `t`, the named constants
//! `pi` and `e`, arithmetic (`+`, `-`, `*`, `/`, `^`), and the elementary
//! functions `sin`, `cos`, `tan`, `exp`, `log`, `sqrt`, `sinh`, `cosh`,
//! `tanh`.
//!
//! Three operations matter downstream:
//!
//! * [`parse_expr`] turns source text into an [`Expr`],
//! * [`Expr::eval`] evaluates at a given `t`, reporting domain violations
//!   (division by zero, `log` of a non-positive value, `sqrt` of a negative
//!   value, `0^negative`, overflow) as errors instead of silent NaNs,
//! * [`Expr::derivative`] differentiates with respect to `t` by structural
//!   recursion. No simplification is performed; the derivative of `t^2` is
//!   represented literally as `2*t^(2-1)*1`.
//!
//! Printing an expression with `Display` produces source text that parses
//! back to a structurally identical tree.
//!
//! ```
//! use ermakov::expr::parse_expr;
//!
//! let omega = parse_expr("sqrt(1 + 0.1*sin(t))").unwrap();
//! let value = omega.eval(0.0).unwrap();
//! assert!((value - 1.0).abs() < 1e-15);
//!
//! let rate = parse_expr("exp(-0.5*t^2)").unwrap().derivative();
//! assert!((rate.eval(1.0).unwrap() + 0.6065306597126334).abs() < 1e-15);
//! ```

mod parse;

pub use parse::{parse_expr, ParseError};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Binary arithmetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Elementary functions of one argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Function {
    /// The name used in source text, e.g. `"sin"`.
    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Sinh => "sinh",
            Function::Cosh => "cosh",
            Function::Tanh => "tanh",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Function> {
        Some(match name {
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "tan" => Function::Tan,
            "exp" => Function::Exp,
            "log" => Function::Log,
            "sqrt" => Function::Sqrt,
            "sinh" => Function::Sinh,
            "cosh" => Function::Cosh,
            "tanh" => Function::Tanh,
            _ => return None,
        })
    }
}

/// An immutable expression tree in the variable `t`.
///
/// Subtrees are shared through [`Arc`], so cloning is cheap and a tree can be
/// evaluated concurrently from several threads. The parser only ever produces
/// non-negative [`Expr::Const`] leaves (a leading minus becomes
/// [`Expr::Neg`]); constructors accept any finite value.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// A finite numeric literal.
    Const(f64),
    /// The time variable `t`.
    Time,
    /// The circle constant.
    Pi,
    /// Euler's number.
    E,
    /// Unary negation.
    Neg(Arc<Expr>),
    /// A binary operation.
    Bin(BinOp, Arc<Expr>, Arc<Expr>),
    /// An elementary function applied to an argument.
    Call(Function, Arc<Expr>),
}

/// What went wrong while evaluating a subexpression.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainIssue {
    /// Denominator evaluated to exactly zero.
    DivisionByZero,
    /// `log` applied to a non-positive value.
    LogNonPositive(f64),
    /// `sqrt` applied to a negative value.
    SqrtNegative(f64),
    /// `0^e` with a negative exponent.
    ZeroToNegative(f64),
    /// Negative base raised to a non-integer exponent.
    NegativeBaseFractionalPower { base: f64, exponent: f64 },
    /// The operation overflowed to an infinity.
    Overflow,
}

impl fmt::Display for DomainIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainIssue::DivisionByZero => write!(f, "division by zero"),
            DomainIssue::LogNonPositive(v) => write!(f, "log of non-positive value {v}"),
            DomainIssue::SqrtNegative(v) => write!(f, "sqrt of negative value {v}"),
            DomainIssue::ZeroToNegative(e) => write!(f, "zero raised to negative exponent {e}"),
            DomainIssue::NegativeBaseFractionalPower { base, exponent } => {
                write!(f, "negative base {base} raised to non-integer exponent {exponent}")
            }
            DomainIssue::Overflow => write!(f, "result overflowed"),
        }
    }
}

/// Evaluation failure, reporting the offending subexpression and the time.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot evaluate `{expr}` at t = {t}: {issue}")]
pub struct EvalError {
    /// Rendered source of the subexpression that failed.
    pub expr: String,
    /// The evaluation time.
    pub t: f64,
    /// The specific domain violation.
    pub issue: DomainIssue,
}

impl Expr {
    /// A numeric literal. `value` must be finite.
    ///
    /// # Panics
    ///
    /// Panics if `value` is NaN or infinite.
    pub fn constant(value: f64) -> Expr {
        assert!(value.is_finite(), "expression constants must be finite, got {value}");
        Expr::Const(value)
    }

    /// The time variable `t`.
    pub fn time() -> Expr {
        Expr::Time
    }

    /// The named constant `pi`.
    pub fn pi() -> Expr {
        Expr::Pi
    }

    /// The named constant `e`.
    pub fn euler() -> Expr {
        Expr::E
    }

    /// Zero as a literal.
    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    /// One as a literal.
    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    /// `self` raised to `exponent`.
    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Bin(BinOp::Pow, Arc::new(self), Arc::new(exponent))
    }

    /// `self` squared.
    pub fn squared(self) -> Expr {
        self.pow(Expr::Const(2.0))
    }

    pub fn sin(self) -> Expr {
        Expr::Call(Function::Sin, Arc::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Call(Function::Cos, Arc::new(self))
    }

    pub fn tan(self) -> Expr {
        Expr::Call(Function::Tan, Arc::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Call(Function::Exp, Arc::new(self))
    }

    /// Natural logarithm.
    pub fn log(self) -> Expr {
        Expr::Call(Function::Log, Arc::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Call(Function::Sqrt, Arc::new(self))
    }

    pub fn sinh(self) -> Expr {
        Expr::Call(Function::Sinh, Arc::new(self))
    }

    pub fn cosh(self) -> Expr {
        Expr::Call(Function::Cosh, Arc::new(self))
    }

    pub fn tanh(self) -> Expr {
        Expr::Call(Function::Tanh, Arc::new(self))
    }

    /// Whether any leaf of the tree is the time variable.
    pub fn depends_on_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Const(_) | Expr::Pi | Expr::E => false,
            Expr::Neg(inner) => inner.depends_on_time(),
            Expr::Bin(_, lhs, rhs) => lhs.depends_on_time() || rhs.depends_on_time(),
            Expr::Call(_, arg) => arg.depends_on_time(),
        }
    }

    /// Evaluates the expression at time `t`.
    ///
    /// Deterministic and total: every call returns either a finite value or
    /// an [`EvalError`] naming the offending subexpression. NaNs and
    /// infinities never propagate silently.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let fail = |issue: DomainIssue| EvalError { expr: self.to_string(), t, issue };
        let value = match self {
            Expr::Const(v) => *v,
            Expr::Time => t,
            Expr::Pi => std::f64::consts::PI,
            Expr::E => std::f64::consts::E,
            Expr::Neg(inner) => -inner.eval(t)?,
            Expr::Bin(op, lhs, rhs) => {
                let a = lhs.eval(t)?;
                let b = rhs.eval(t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(fail(DomainIssue::DivisionByZero));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(fail(DomainIssue::ZeroToNegative(b)));
                        }
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(fail(DomainIssue::NegativeBaseFractionalPower {
                                base: a,
                                exponent: b,
                            }));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(func, arg) => {
                let x = arg.eval(t)?;
                match func {
                    Function::Sin => x.sin(),
                    Function::Cos => x.cos(),
                    Function::Tan => x.tan(),
                    Function::Exp => x.exp(),
                    Function::Log => {
                        if x <= 0.0 {
                            return Err(fail(DomainIssue::LogNonPositive(x)));
                        }
                        x.ln()
                    }
                    Function::Sqrt => {
                        if x < 0.0 {
                            return Err(fail(DomainIssue::SqrtNegative(x)));
                        }
                        x.sqrt()
                    }
                    Function::Sinh => x.sinh(),
                    Function::Cosh => x.cosh(),
                    Function::Tanh => x.tanh(),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(fail(DomainIssue::Overflow))
        }
    }

    /// The exact derivative with respect to `t`, by structural recursion.
    ///
    /// Sum, product, quotient, chain, and power rules are applied literally
    /// and the result is never simplified. A power `u^v` with a `t`-free
    /// exponent differentiates as `v*u^(v-1)*u'`, so integer powers of
    /// negative quantities stay inside the evaluation domain; a `t`-dependent
    /// exponent uses the general rule `u^v*(v'*log(u) + v*u'/u)`.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Pi | Expr::E => Expr::Const(0.0),
            Expr::Time => Expr::Const(1.0),
            Expr::Neg(inner) => Expr::Neg(Arc::new(inner.derivative())),
            Expr::Bin(op, lhs, rhs) => {
                let u = lhs.as_ref();
                let v = rhs.as_ref();
                let du = u.derivative();
                let dv = v.derivative();
                match op {
                    BinOp::Add => bin(BinOp::Add, du, dv),
                    BinOp::Sub => bin(BinOp::Sub, du, dv),
                    BinOp::Mul => bin(
                        BinOp::Add,
                        bin(BinOp::Mul, du, v.clone()),
                        bin(BinOp::Mul, u.clone(), dv),
                    ),
                    BinOp::Div => bin(
                        BinOp::Div,
                        bin(
                            BinOp::Sub,
                            bin(BinOp::Mul, du, v.clone()),
                            bin(BinOp::Mul, u.clone(), dv),
                        ),
                        bin(BinOp::Pow, v.clone(), Expr::Const(2.0)),
                    ),
                    BinOp::Pow => {
                        if !v.depends_on_time() {
                            // v * u^(v-1) * u'
                            bin(
                                BinOp::Mul,
                                bin(
                                    BinOp::Mul,
                                    v.clone(),
                                    bin(
                                        BinOp::Pow,
                                        u.clone(),
                                        bin(BinOp::Sub, v.clone(), Expr::Const(1.0)),
                                    ),
                                ),
                                du,
                            )
                        } else {
                            // u^v * (v'*log(u) + v*u'/u)
                            bin(
                                BinOp::Mul,
                                bin(BinOp::Pow, u.clone(), v.clone()),
                                bin(
                                    BinOp::Add,
                                    bin(BinOp::Mul, dv, u.clone().log()),
                                    bin(BinOp::Div, bin(BinOp::Mul, v.clone(), du), u.clone()),
                                ),
                            )
                        }
                    }
                }
            }
            Expr::Call(func, arg) => {
                let u = arg.as_ref();
                let du = u.derivative();
                let outer = match func {
                    Function::Sin => u.clone().cos(),
                    Function::Cos => Expr::Neg(Arc::new(u.clone().sin())),
                    Function::Tan => bin(
                        BinOp::Div,
                        Expr::Const(1.0),
                        u.clone().cos().pow(Expr::Const(2.0)),
                    ),
                    Function::Exp => u.clone().exp(),
                    Function::Log => bin(BinOp::Div, Expr::Const(1.0), u.clone()),
                    Function::Sqrt => bin(
                        BinOp::Div,
                        Expr::Const(1.0),
                        bin(BinOp::Mul, Expr::Const(2.0), u.clone().sqrt()),
                    ),
                    Function::Sinh => u.clone().cosh(),
                    Function::Cosh => u.clone().sinh(),
                    Function::Tanh => bin(
                        BinOp::Div,
                        Expr::Const(1.0),
                        u.clone().cosh().pow(Expr::Const(2.0)),
                    ),
                };
                bin(BinOp::Mul, outer, du)
            }
        }
    }
}

fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr::Bin(op, Arc::new(lhs), Arc::new(rhs))
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        bin(BinOp::Add, self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        bin(BinOp::Sub, self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        bin(BinOp::Mul, self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        bin(BinOp::Div, self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Arc::new(self))
    }
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

// Printing precedence levels: Add/Sub = 1, Mul/Div = 2, Neg = 3, Pow = 4,
// atoms = 5. Chosen so that printed text reparses to the identical tree.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add, ..) | Expr::Bin(BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul, ..) | Expr::Bin(BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn group(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "(")?;
                write!(f, "{e}")?;
                write!(f, ")")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(v) => write!(f, "{v:?}"),
            Expr::Time => write!(f, "t"),
            Expr::Pi => write!(f, "pi"),
            Expr::E => write!(f, "e"),
            Expr::Neg(inner) => {
                write!(f, "-")?;
                group(f, inner, precedence(inner) < 3)
            }
            Expr::Bin(op, lhs, rhs) => match op {
                BinOp::Add | BinOp::Sub => {
                    group(f, lhs, false)?;
                    write!(f, "{}", if *op == BinOp::Add { "+" } else { "-" })?;
                    group(f, rhs, precedence(rhs) <= 1 || matches!(rhs.as_ref(), Expr::Neg(_)))
                }
                BinOp::Mul | BinOp::Div => {
                    group(f, lhs, precedence(lhs) < 2)?;
                    write!(f, "{}", if *op == BinOp::Mul { "*" } else { "/" })?;
                    group(f, rhs, precedence(rhs) <= 2)
                }
                BinOp::Pow => {
                    group(f, lhs, precedence(lhs) <= 4)?;
                    write!(f, "^")?;
                    // The exponent slot accepts a full unary, so `t^-2` and
                    // `t^x^y` print without parentheses.
                    group(f, rhs, precedence(rhs) <= 2)
                }
            },
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
