//! Shared generators and independent oracles for the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use optcert::problem::{check_feasible, Problem};
use optcert::Expr;
use rand::Rng;

/// Random expression text over `x1..xn` from the parser's grammar. Domain
/// restricted operations get arguments bounded away from their
/// singularities so central differences stay well conditioned.
pub fn random_expr_text<R: Rng>(rng: &mut R, n: usize, depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.7) {
            format!("x{}", rng.random_range(1..=n))
        } else {
            format!("{:.3}", rng.random_range(-3.0..3.0))
        };
    }
    let sub = |rng: &mut R| random_expr_text(rng, n, depth - 1);
    match rng.random_range(0..12) {
        0 => format!("({} + {})", sub(rng), sub(rng)),
        1 => format!("({} - {})", sub(rng), sub(rng)),
        2 => format!("({} * {})", sub(rng), sub(rng)),
        3 => format!("{} / (1.5 + ({})^2)", sub(rng), sub(rng)),
        4 => format!("({})^{}", sub(rng), rng.random_range(2..=3)),
        5 => format!("-({})", sub(rng)),
        6 => format!("sin({})", sub(rng)),
        7 => format!("cos({})", sub(rng)),
        8 => format!("exp(0.3 * sin({}))", sub(rng)),
        9 => format!("log(1 + ({})^2)", sub(rng)),
        10 => format!("sqrt(2 + cos({}))", sub(rng)),
        _ => format!("(1.5 + sin({}))^{:.2}", sub(rng), rng.random_range(0.3..2.5)),
    }
}

/// Central difference of `e` at `x` along coordinate `i` with step `h`.
pub fn central_difference(e: &Expr, x: &[f64], i: usize, h: f64) -> Option<f64> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    Some((e.eval(&xp).ok()? - e.eval(&xm).ok()?) / (2.0 * h))
}

/// Finite-difference gradient, or `None` when two step sizes disagree (the
/// oracle itself is unreliable there).
pub fn fd_gradient(e: &Expr, x: &[f64]) -> Option<Vec<f64>> {
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * (1.0 + x[i].abs());
            let a = central_difference(e, x, i, h)?;
            let b = central_difference(e, x, i, h / 2.0)?;
            ((a - b).abs() <= 1e-7 * (1.0 + b.abs())).then_some((4.0 * b - a) / 3.0)
        })
        .collect()
}

pub fn rank(cols: &[Vec<f64>], n: usize) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let s = m.svd(false, false).singular_values;
    let max = s.iter().fold(0.0f64, |a, &b| a.max(b));
    s.iter().filter(|&&v| v > 1e-10 * max).count()
}

/// Least-squares coefficients of `g` on linearly independent `cols`.
fn independent_ls(cols: &[Vec<f64>], g: &[f64]) -> (Vec<f64>, f64) {
    let n = g.len();
    let a = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let b = DVector::from_column_slice(g);
    let x = (a.transpose() * &a).lu().solve(&(a.transpose() * &b)).expect("independent columns");
    let r = (&a * &x - b).norm();
    (x.iter().copied().collect(), r)
}

fn subsets(k: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for size in 1..=max_size.min(k) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            let Some(pos) = (0..size).rev().find(|&p| idx[p] < k - size + p) else { break };
            idx[pos] += 1;
            for q in pos + 1..size {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    out
}

/// Exact distance from `g` to the cone of `gens` (nonnegative combinations):
/// the projection lies in the relative interior of a face spanned by an
/// independent subset with a nonnegative least-squares solution, so the
/// minimum over such subsets is the distance.
pub fn brute_force_distance(gens: &[Vec<f64>], g: &[f64]) -> f64 {
    let n = g.len();
    let mut best = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    for s in subsets(gens.len(), n) {
        if s.is_empty() {
            continue;
        }
        let cols: Vec<Vec<f64>> = s.iter().map(|&i| gens[i].clone()).collect();
        if rank(&cols, n) < s.len() {
            continue;
        }
        let (x, r) = independent_ls(&cols, g);
        if x.iter().all(|&v| v >= 0.0) {
            best = best.min(r);
        }
    }
    best
}

/// Smallest cardinality of an independent subset whose nonnegative span
/// contains `x` (residual `<= tol`), by exhaustive enumeration.
pub fn brute_force_min_support(gens: &[Vec<f64>], x: &[f64], tol: f64) -> Option<usize> {
    let n = x.len();
    for s in subsets(gens.len(), n) {
        let cols: Vec<Vec<f64>> = s.iter().map(|&i| gens[i].clone()).collect();
        if s.is_empty() {
            if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol {
                return Some(0);
            }
            continue;
        }
        if rank(&cols, n) < s.len() {
            continue;
        }
        let (c, r) = independent_ls(&cols, x);
        if c.iter().all(|&v| v >= -1e-12) && r <= tol {
            return Some(s.len());
        }
    }
    None
}

/// Seeded feasible points near `center`: equalities must be affine and are
/// kept exact by moving in the null space of their gradients; inequalities
/// are enforced by rejection.
pub fn feasible_samples<R: Rng>(p: &Problem, center: &[f64], count: usize, radius: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let n = p.n();
    let rows: Vec<Vec<f64>> = p.eq().values().map(|c| c.as_affine(n).expect("affine equality").a).collect();
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let z = optcert::linalg::null_space_basis(&a, 1e-10).expect("independent equalities");
    let mut out = Vec::new();
    for _ in 0..10_000 * count {
        if out.len() == count {
            break;
        }
        let u = DVector::from_fn(z.ncols(), |_, _| rng.random_range(-radius..radius));
        let step = &z * u;
        let x: Vec<f64> = center.iter().zip(step.iter()).map(|(c, s)| c + s).collect();
        if check_feasible(p, &x, 1e-8).is_ok_and(|r| r.feasible) {
            out.push(x);
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
