use serde::{Deserialize, Serialize};

use super::{walk, BinaryOp, Expr, UnaryOp};

/// `x -> <a, x> + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffineForm {
    fn constant(n: usize, b: f64) -> AffineForm {
        AffineForm { a: vec![0.0; n], b }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b
    }

    fn scale(mut self, s: f64) -> AffineForm {
        self.a.iter_mut().for_each(|a| *a *= s);
        self.b *= s;
        self
    }

    fn combine(mut self, other: AffineForm, sign: f64) -> AffineForm {
        self.a.iter_mut().zip(&other.a).for_each(|(a, o)| *a += sign * o);
        self.b += sign * other.b;
        self
    }
}

// Variable-free subtrees are folded to their value; the only products kept
// are constant * affine, and a zero constant annihilates its cofactor.
pub(super) fn as_affine(e: &Expr, n: usize) -> Option<AffineForm> {
    if e.check_dimension(n).is_err() {
        return None;
    }
    if !e.has_variables() {
        return fold(e).map(|b| AffineForm::constant(n, b));
    }
    match e {
        Expr::Var(i) => {
            let mut a = vec![0.0; n];
            a[*i] = 1.0;
            Some(AffineForm { a, b: 0.0 })
        }
        Expr::Unary(UnaryOp::Neg, arg) => as_affine(arg, n).map(|f| f.scale(-1.0)),
        Expr::Binary(BinaryOp::Add, l, r) => Some(as_affine(l, n)?.combine(as_affine(r, n)?, 1.0)),
        Expr::Binary(BinaryOp::Sub, l, r) => Some(as_affine(l, n)?.combine(as_affine(r, n)?, -1.0)),
        Expr::Binary(BinaryOp::Mul, l, r) => {
            let (k, other) = if !l.has_variables() {
                (fold(l)?, r)
            } else if !r.has_variables() {
                (fold(r)?, l)
            } else {
                return None;
            };
            if k == 0.0 {
                return Some(AffineForm::constant(n, 0.0));
            }
            as_affine(other, n).map(|f| f.scale(k))
        }
        Expr::Binary(BinaryOp::Div, l, r) if !r.has_variables() => {
            let k = fold(r)?;
            if k == 0.0 {
                return None;
            }
            as_affine(l, n).map(|f| f.scale(1.0 / k))
        }
        Expr::Binary(BinaryOp::Pow, base, exponent) if !exponent.has_variables() => match fold(exponent)? {
            1.0 => as_affine(base, n),
            0.0 => Some(AffineForm::constant(n, 1.0)),
            _ => None,
        },
        _ => None,
    }
}

fn fold(e: &Expr) -> Option<f64> {
    walk::<f64>(e, &|_| 0.0).ok()
}
