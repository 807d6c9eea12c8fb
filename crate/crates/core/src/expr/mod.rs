//! Scalar expressions over `x1..xn`: parsing, evaluation, forward-mode
//! gradients and structural affinity detection.
//!
//! Text grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt
//! ident  := x[1-9][0-9]*
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so
//! `-x1^2` is `-(x1^2)` and `x1^2^3` is `x1^(2^3)`.

mod affine;
mod dual;
mod parse;

use std::fmt;

pub use affine::AffineForm;
pub use parse::parse;

use dual::{Dual, Scalar};

/// Errors raised while parsing or evaluating an [`Expr`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("variable x{} out of range for dimension {n}", .index + 1)]
    VariableOutOfRange { index: usize, n: usize },
    #[error("point has dimension {got}, expression expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain error: {op} undefined at {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("non-finite result from {op}")]
    NonFinite { op: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree. Variables are zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Largest variable index referenced plus one (0 for constant trees).
    pub fn min_dimension(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Unary(_, a) => a.min_dimension(),
            Expr::Binary(_, a, b) => a.min_dimension().max(b.min_dimension()),
        }
    }

    pub fn has_variables(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Unary(_, a) => a.has_variables(),
            Expr::Binary(_, a, b) => a.has_variables() || b.has_variables(),
        }
    }

    /// Checks that every variable index is below `n`.
    pub fn check_dimension(&self, n: usize) -> Result<(), ExprError> {
        match self {
            Expr::Const(_) => Ok(()),
            Expr::Var(i) if *i >= n => Err(ExprError::VariableOutOfRange { index: *i, n }),
            Expr::Var(_) => Ok(()),
            Expr::Unary(_, a) => a.check_dimension(n),
            Expr::Binary(_, a, b) => {
                a.check_dimension(n)?;
                b.check_dimension(n)
            }
        }
    }

    /// Evaluates the expression at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        self.check_dimension(x.len())?;
        walk(self, &|i| x[i])
    }

    /// Value and gradient at `x`, one forward tangent pass per coordinate.
    pub fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
        self.check_dimension(x.len())?;
        let mut value = if x.is_empty() { walk(self, &|i| x[i])? } else { 0.0 };
        let mut grad = Vec::with_capacity(x.len());
        for seed in 0..x.len() {
            let out = walk(self, &|i| Dual::new(x[i], if i == seed { 1.0 } else { 0.0 }))?;
            value = out.re;
            grad.push(out.eps);
        }
        Ok((value, grad))
    }

    /// Exact gradient at `x` by forward-mode differentiation.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.value_and_grad(x).map(|(_, g)| g)
    }

    /// Affine form `x -> <a, x> + b` if the tree is structurally affine after
    /// constant folding, `None` otherwise.
    pub fn as_affine(&self, n: usize) -> Option<AffineForm> {
        affine::as_affine(self, n)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Binary(BinaryOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn walk<T: Scalar>(e: &Expr, load: &dyn Fn(usize) -> T) -> Result<T, ExprError> {
    let out = match e {
        Expr::Const(c) => T::from_f64(*c),
        Expr::Var(i) => load(*i),
        Expr::Unary(op, a) => {
            let a = walk(a, load)?;
            match op {
                UnaryOp::Neg => a.neg(),
                UnaryOp::Sin => a.sin(),
                UnaryOp::Cos => a.cos(),
                UnaryOp::Exp => a.exp(),
                UnaryOp::Log => {
                    if a.value() <= 0.0 {
                        return Err(ExprError::Domain { op: "log", value: a.value() });
                    }
                    a.ln()
                }
                UnaryOp::Sqrt => {
                    if a.value() < 0.0 {
                        return Err(ExprError::Domain { op: "sqrt", value: a.value() });
                    }
                    a.sqrt()
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let lhs = walk(a, load)?;
            match op {
                BinaryOp::Add => lhs.add(walk(b, load)?),
                BinaryOp::Sub => lhs.sub(walk(b, load)?),
                BinaryOp::Mul => lhs.mul(walk(b, load)?),
                BinaryOp::Div => {
                    let rhs = walk(b, load)?;
                    if rhs.value() == 0.0 {
                        return Err(ExprError::Domain { op: "division", value: 0.0 });
                    }
                    lhs.div(rhs)
                }
                BinaryOp::Pow => power(lhs, b, load)?,
            }
        }
    };
    if !out.is_finite() {
        return Err(ExprError::NonFinite { op: op_name(e) });
    }
    Ok(out)
}

// Constant integer exponents become repeated multiplication (any base);
// everything else goes through exp(e ln b) and needs a positive base.
fn power<T: Scalar>(base: T, exponent: &Expr, load: &dyn Fn(usize) -> T) -> Result<T, ExprError> {
    if !exponent.has_variables() {
        let k = walk::<f64>(exponent, &|_| 0.0)?;
        if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 {
            let k = k as i32;
            if k < 0 && base.value() == 0.0 {
                return Err(ExprError::Domain { op: "negative power", value: 0.0 });
            }
            return Ok(base.powi(k));
        }
    }
    let k = walk(exponent, load)?;
    if base.value() <= 0.0 {
        return Err(ExprError::Domain { op: "real power", value: base.value() });
    }
    Ok(base.ln().mul(k).exp())
}

fn op_name(e: &Expr) -> &'static str {
    match e {
        Expr::Const(_) => "constant",
        Expr::Var(_) => "variable",
        Expr::Unary(op, _) => op.name(),
        Expr::Binary(BinaryOp::Add, ..) => "addition",
        Expr::Binary(BinaryOp::Sub, ..) => "subtraction",
        Expr::Binary(BinaryOp::Mul, ..) => "multiplication",
        Expr::Binary(BinaryOp::Div, ..) => "division",
        Expr::Binary(BinaryOp::Pow, ..) => "power",
    }
}

/// Prints in the input grammar with the minimum parentheses needed to
/// re-parse to the same tree. The parser never yields negative constants;
/// if one is built by hand it prints as `(-c)`, which re-parses as a negation.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", -c)
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinaryOp::Add => " + ",
                    BinaryOp::Sub => " - ",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    BinaryOp::Pow => "^",
                };
                if *op == BinaryOp::Pow {
                    wrap(f, a, a.precedence() <= p)?;
                    f.write_str(sym)?;
                    wrap(f, b, b.precedence() < 3)
                } else {
                    wrap(f, a, a.precedence() < p)?;
                    f.write_str(sym)?;
                    wrap(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}
