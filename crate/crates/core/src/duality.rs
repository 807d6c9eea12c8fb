//! Lagrangian dual objective `q(λ, μ) = inf_x L(x, λ, μ)` over extended
//! reals, weak duality checks, and dual optimality of KKT multipliers in the
//! convex case.
//!
//! The infimum is approximated by gradient descent with Armijo
//! backtracking. `-inf` is reported when the iterates escape a large ball
//! while the Lagrangian keeps dropping; that is a detection, not a proof.

use std::cmp::Ordering;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kkt::{check_kkt, Tolerances, Verdict};
use crate::linalg::{axpy, dot, norm, norm_inf};
use crate::problem::{check_feasible, lagrangian, lagrangian_grad, Multipliers, Problem, DEFAULT_TOL_FEAS};
use crate::{Error, Result};

/// `-inf < Finite(a) < +inf`; `Finite` always holds a finite float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtendedReal {
    /// Maps `±inf` to the infinite variants; `None` for NaN.
    pub fn from_f64(v: f64) -> Option<ExtendedReal> {
        match v {
            v if v.is_nan() => None,
            f64::NEG_INFINITY => Some(ExtendedReal::NegInf),
            f64::INFINITY => Some(ExtendedReal::PosInf),
            v => Some(ExtendedReal::Finite(v)),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInf => f64::NEG_INFINITY,
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_f64().total_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInf => f.write_str("-inf"),
            ExtendedReal::PosInf => f.write_str("inf"),
            ExtendedReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStatus {
    Converged,
    UnboundedBelowDetected,
    /// Iteration budget exhausted or line search stalled; the value is the
    /// best Lagrangian value seen and is not certified.
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualEval {
    pub value: ExtendedReal,
    /// Final iterate for `Converged` and `IterationCap`.
    pub argmin: Option<Vec<f64>>,
    pub status: DualStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualOptions {
    /// Start of the inner minimization; the origin when `None`.
    pub x0: Option<Vec<f64>>,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub initial_step: f64,
    /// `R`: escape radius for unboundedness detection.
    pub divergence_radius: f64,
    /// `D`: required drop of the Lagrangian below its starting value.
    pub divergence_drop: f64,
    /// Seed of the midpoint-convexity guard.
    pub guard_seed: u64,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            x0: None,
            max_iters: 10_000,
            armijo_c: 1e-4,
            initial_step: 1.0,
            divergence_radius: 1e6,
            divergence_drop: 1e8,
            guard_seed: 0,
        }
    }
}

/// Evaluates `q(λ, μ)`; any sign of `μ` is accepted.
///
/// Converged when `‖∇ₓL‖∞ <= 1e-8 (1 + |L|)` inside the escape ball
/// `‖x‖ <= R`. Each accepted step doubles the
/// trial step; each rejected trial halves it.
pub fn dual_objective(p: &Problem, m: &Multipliers, opts: &DualOptions) -> Result<DualEval> {
    m.check_keys(p)?;
    let mut x = opts.x0.clone().unwrap_or_else(|| vec![0.0; p.n()]);
    p.check_point(&x)?;
    let mut l = lagrangian(p, &x, m)?;
    let l0 = l;
    let mut g = lagrangian_grad(p, &x, m)?;
    let mut step = opts.initial_step;

    for k in 0..opts.max_iters {
        // the relative stationarity test loosens as |L| grows, so it is not
        // trusted outside the escape ball
        let escaped = norm(&x) > opts.divergence_radius;
        if escaped && l0 - l > opts.divergence_drop {
            return Ok(DualEval {
                value: ExtendedReal::NegInf,
                argmin: None,
                status: DualStatus::UnboundedBelowDetected,
                iterations: k,
            });
        }
        if !escaped && norm_inf(&g) <= 1e-8 * (1.0 + l.abs()) {
            return Ok(DualEval {
                value: ExtendedReal::Finite(l),
                argmin: Some(x),
                status: DualStatus::Converged,
                iterations: k,
            });
        }
        let gg = dot(&g, &g);
        let mut accepted = None;
        while step > 0.0 && step.is_finite() {
            let trial = axpy(&x, -step, &g);
            if let Ok(lt) = lagrangian(p, &trial, m) {
                if lt <= l - opts.armijo_c * step * gg {
                    accepted = Some((trial, lt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, lt)) = accepted else { break };
        let gnext = match lagrangian_grad(p, &next, m) {
            Ok(g) => g,
            Err(_) => break,
        };
        x = next;
        l = lt;
        g = gnext;
        step *= 2.0;
    }
    Ok(DualEval {
        value: ExtendedReal::Finite(l),
        argmin: Some(x),
        status: DualStatus::IterationCap,
        iterations: opts.max_iters,
    })
}

/// Checks on `trials` seeded multiplier pairs (`λ ∈ [-5, 5]`, `μ ∈ [0, 5]`)
/// that `q` is never `+inf`. True by construction, since `q <= L(x0)`.
pub fn dual_value_never_posinf(p: &Problem, trials: usize, seed: u64, opts: &DualOptions) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut m = Multipliers::zeros(p);
        m.lambda.values_mut().for_each(|v| *v = rng.random_range(-5.0..=5.0));
        m.mu.values_mut().for_each(|v| *v = rng.random_range(0.0..=5.0));
        if dual_objective(p, &m, opts)?.value == ExtendedReal::PosInf {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_nonnegative(m: &Multipliers) -> Result<()> {
    match m.mu.iter().find(|(_, &v)| !(v >= 0.0)) {
        Some((&id, &value)) => Err(Error::NegativeMultiplier { id, value }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakDualityReport {
    /// `worst_gap >= -tol`.
    pub holds: bool,
    /// `min f(x) - q(λ, μ)` over checked pairs; `+inf` when none were checked.
    pub worst_gap: ExtendedReal,
    /// `q` value per multiplier sample, in input order.
    pub dual_values: Vec<DualEval>,
    /// Multiplier samples whose evaluation hit the iteration cap.
    pub skipped: usize,
}

/// `q(λ, μ) <= f(x) + tol` for every multiplier sample with `μ >= 0` and
/// every sample `x` feasible at the default feasibility tolerance.
pub fn weak_duality_check(
    p: &Problem,
    multiplier_samples: &[Multipliers],
    feasible_samples: &[Vec<f64>],
    tol: f64,
    opts: &DualOptions,
) -> Result<WeakDualityReport> {
    for m in multiplier_samples {
        m.check_keys(p)?;
        check_nonnegative(m)?;
    }
    let mut f_min = f64::INFINITY;
    for (i, x) in feasible_samples.iter().enumerate() {
        if !check_feasible(p, x, DEFAULT_TOL_FEAS)?.feasible {
            return Err(Error::InfeasibleSample(i));
        }
        f_min = f_min.min(p.objective_value(x)?);
    }
    let mut worst = ExtendedReal::PosInf;
    let mut skipped = 0;
    let mut dual_values = Vec::with_capacity(multiplier_samples.len());
    for m in multiplier_samples {
        let q = dual_objective(p, m, opts)?;
        match q.value {
            _ if q.status == DualStatus::IterationCap => skipped += 1,
            ExtendedReal::Finite(v) if !feasible_samples.is_empty() => {
                worst = worst.min(ExtendedReal::from_f64(f_min - v).expect("finite difference"));
            }
            _ => {}
        }
        dual_values.push(q);
    }
    Ok(WeakDualityReport { holds: worst >= ExtendedReal::Finite(-tol), worst_gap: worst, dual_values, skipped })
}

/// Midpoint convexity of `f` and concavity of every inequality on 50 seeded
/// pairs from `[-5, 5]^n`, with slack `1e-10`. Pairs where an expression is
/// undefined are skipped.
pub fn convexity_guard(p: &Problem, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n();
    for _ in 0..50 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        let convex = |e: &crate::Expr, sign: f64| -> Option<bool> {
            let (fx, fy, fm) = (e.eval(&x).ok()?, e.eval(&y).ok()?, e.eval(&mid).ok()?);
            Some(sign * fm <= 0.5 * sign * fx + 0.5 * sign * fy + 1e-10)
        };
        if convex(p.objective(), 1.0) == Some(false) {
            return Err(Error::Convexity(format!("objective fails midpoint convexity at {x:?}, {y:?}")));
        }
        for (id, c) in p.ineq() {
            if convex(c, -1.0) == Some(false) {
                return Err(Error::Convexity(format!("inequality {id} fails midpoint concavity at {x:?}, {y:?}")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualOptimalityReport {
    /// `|q(μ̄) - f(x̄)| <= tol` and `q(μ) <= q(μ̄) + tol` for every checked sample.
    pub holds: bool,
    pub q_bar: ExtendedReal,
    pub f_bar: f64,
    /// `max q(μ) - q(μ̄)` over checked samples (`-inf` when none).
    pub max_excess: ExtendedReal,
    pub skipped: usize,
}

/// Dual optimality of KKT multipliers for a convex inequality-constrained
/// problem: zero gap at `(x̄, μ̄)` and no sampled `μ >= 0` with a larger
/// dual value. Convexity of `f` and concavity of the `c_i` must be declared
/// by the caller; the midpoint guard runs as a spot check.
pub fn kkt_dual_optimality_check(
    p: &Problem,
    x_bar: &[f64],
    m_bar: &Multipliers,
    mu_samples: &[Multipliers],
    tol: f64,
    convexity_declared: bool,
    opts: &DualOptions,
) -> Result<DualOptimalityReport> {
    if !p.eq().is_empty() {
        return Err(Error::EqualityConstraintsPresent);
    }
    let kkt = check_kkt(p, x_bar, m_bar, &Tolerances::default())?;
    if kkt.verdict != Verdict::Certified {
        return Err(Error::KktPrecondition(format!("check_kkt returned {}", kkt.verdict)));
    }
    if !convexity_declared {
        return Err(Error::Convexity("convexity of the problem is not declared".into()));
    }
    convexity_guard(p, opts.guard_seed)?;
    for m in mu_samples {
        m.check_keys(p)?;
        check_nonnegative(m)?;
    }

    let f_bar = p.objective_value(x_bar)?;
    let q_bar = dual_objective(p, m_bar, opts)?;
    let zero_gap =
        q_bar.status == DualStatus::Converged && q_bar.value.finite().is_some_and(|q| (q - f_bar).abs() <= tol);
    let mut max_excess = ExtendedReal::NegInf;
    let mut skipped = 0;
    for m in mu_samples {
        let q = dual_objective(p, m, opts)?;
        if q.status == DualStatus::IterationCap {
            skipped += 1;
            continue;
        }
        let excess = match (q.value, q_bar.value) {
            (ExtendedReal::NegInf, _) => ExtendedReal::NegInf,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a - b),
            _ => ExtendedReal::PosInf,
        };
        max_excess = max_excess.max(excess);
    }
    Ok(DualOptimalityReport {
        holds: zero_gap && max_excess <= ExtendedReal::Finite(tol),
        q_bar: q_bar.value,
        f_bar,
        max_excess,
        skipped,
    })
}
