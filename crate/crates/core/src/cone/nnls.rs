//! Lawson–Hanson active-set nonnegative least squares.

use nalgebra::{DMatrix, DVector};

use crate::linalg::lstsq;

#[derive(Debug, Clone)]
pub(crate) struct NnlsOutcome {
    pub x: DVector<f64>,
    /// Exceeds `max_iter` when the cap stopped the iteration.
    pub iterations: usize,
}

/// `argmin ‖a x - b‖ s.t. x >= 0`. Columns may be linearly dependent; the
/// passive-set subproblems use minimum-norm least squares.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> NnlsOutcome {
    let k = a.ncols();
    let mut x = DVector::zeros(k);
    let mut passive = vec![false; k];
    // columns whose entry was immediately undone by round-off; cleared
    // whenever x moves
    let mut blocked = vec![false; k];
    let col_max = (0..k).map(|j| a.column(j).norm()).fold(0.0f64, f64::max);
    let tol_w = 1e-12 * (1.0 + col_max * b.norm());
    let mut iterations = 0;

    loop {
        let w = a.transpose() * (b - a * &x);
        let entering =
            (0..k).filter(|&j| !passive[j] && !blocked[j] && w[j] > tol_w).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = entering else {
            return NnlsOutcome { x, iterations };
        };
        passive[j] = true;

        let mut first = true;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return NnlsOutcome { x, iterations };
            }
            let cols: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let sub = a.select_columns(&cols);
            let s = lstsq(&sub, b);
            if cols.iter().zip(s.iter()).all(|(_, &v)| v > 0.0) {
                for (&i, &v) in cols.iter().zip(s.iter()) {
                    x[i] = v;
                }
                blocked.iter_mut().for_each(|f| *f = false);
                break;
            }
            if first {
                let pos = cols.iter().position(|&i| i == j).expect("entering column is passive");
                if s[pos] <= 0.0 {
                    passive[j] = false;
                    blocked[j] = true;
                    break;
                }
            }
            first = false;
            // step from x toward s until the first coefficient hits zero
            let (mut alpha, mut hit) = (f64::INFINITY, cols[0]);
            for (&i, &v) in cols.iter().zip(s.iter()) {
                if v <= 0.0 {
                    let ratio = x[i] / (x[i] - v);
                    if ratio < alpha {
                        alpha = ratio;
                        hit = i;
                    }
                }
            }
            for (&i, &v) in cols.iter().zip(s.iter()) {
                x[i] += alpha * (v - x[i]);
            }
            x[hit] = 0.0;
            for &i in &cols {
                if x[i] <= 0.0 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            blocked.iter_mut().for_each(|f| *f = false);
        }
    }
}
