//! Numerical tangent-cone membership: build a feasible sequence `z_k -> x`
//! with `(z_k - x)/t_k -> d`.
//!
//! Under LICQ the sequence solves `R(z, t) = 0` for
//! `R(z, t) = [c_A(z) - t A d ; Zᵀ(z - x - t d)]`, where `A` stacks the
//! active gradients at `x` and `Z` is an orthonormal null-space basis of
//! `A`. Under the linear CQ the sequence is the ray `x + (t̄/(k+1)) v`.
//!
//! A probe that fails is evidence against membership, never a proof.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cone::{project_onto_cone, ConeSpec};
use crate::cq::{assess_at, linearized_cone_at, LinearizedCone};
use crate::linalg::{axpy, norm, null_space_basis, DEFAULT_TOL_RANK};
use crate::problem::{active_set, check_feasible, Problem, DEFAULT_TOL_ACT, DEFAULT_TOL_FEAS};
use crate::{Error, Result};

pub const DEFAULT_TOL_TAN: f64 = 1e-4;

/// Tolerance at which a certified direction must lie in the linearized cone.
const CERTIFIED_CONE_TOL: f64 = 1e-6;

/// `t_k = t0 · rho^k` for `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t0: f64,
    pub rho: f64,
    pub steps: usize,
}

impl Schedule {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.t0 * self.rho.powi(k as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub max_iters: usize,
    pub tol_res: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iters: 50, tol_res: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// `None` picks `t0 = min(0.1, margin / (4 · max‖∇c_i‖ · ‖d‖))`,
    /// `rho = 0.5`, 12 halvings.
    pub schedule: Option<Schedule>,
    pub tol_tan: f64,
    pub newton: NewtonOptions,
    pub tol_act: f64,
    pub tol_feas: f64,
    pub tol_rank: f64,
    /// Tolerance of the `d ∈ F(x)` precondition.
    pub tol_cone: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            schedule: None,
            tol_tan: DEFAULT_TOL_TAN,
            newton: NewtonOptions::default(),
            tol_act: DEFAULT_TOL_ACT,
            tol_feas: DEFAULT_TOL_FEAS,
            tol_rank: DEFAULT_TOL_RANK,
            tol_cone: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStep {
    pub t: f64,
    pub z: Vec<f64>,
    pub feasible: bool,
    /// `‖(z - x)/t - d‖`.
    pub ratio_error: f64,
    /// `‖R(z, t)‖` at acceptance (0 on the linear path).
    pub residual: f64,
    /// Newton switched from the frozen matrix to the exact Jacobian.
    pub exact_jacobian: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentProbeResult {
    pub direction: Vec<f64>,
    pub certified: bool,
    pub steps: Vec<ProbeStep>,
    /// `(z_K - x)/t_K` of the last recorded step.
    pub limit_direction: Option<Vec<f64>>,
    pub failure_reason: Option<String>,
}

impl TangentProbeResult {
    pub fn final_ratio_error(&self) -> Option<f64> {
        self.steps.last().map(|s| s.ratio_error)
    }

    fn fail(mut self, reason: String) -> Self {
        self.certified = false;
        self.failure_reason = Some(reason);
        self
    }
}

/// `min c_i(x)` over inactive inequalities; `+inf` when there are none.
pub fn inactive_margin(p: &Problem, x: &[f64], tol_act: f64) -> Result<f64> {
    let act = active_set(p, x, tol_act)?;
    let mut margin = f64::INFINITY;
    for (id, c) in p.ineq() {
        if !act.active_ineq_ids.contains(id) {
            margin = margin.min(c.eval(x)?);
        }
    }
    Ok(margin)
}

fn max_constraint_gradient(p: &Problem, x: &[f64]) -> Result<f64> {
    let mut m = 0.0f64;
    for c in p.eq().values().chain(p.ineq().values()) {
        m = m.max(norm(&c.grad(x)?));
    }
    Ok(m)
}

/// Default schedule for probing `d` at `x`. The gradient bound covers every
/// constraint so that first-order decrease of an inactive constraint over
/// `t0 ‖d‖` stays below a quarter of the margin.
pub fn default_schedule(p: &Problem, x: &[f64], d: &[f64], tol_act: f64) -> Result<Schedule> {
    let margin = inactive_margin(p, x, tol_act)?;
    let scale = 4.0 * max_constraint_gradient(p, x)? * norm(d);
    let t0 = if scale > 0.0 { (margin / scale).min(0.1) } else { 0.1 };
    Ok(Schedule { t0, rho: 0.5, steps: 12 })
}

fn check_direction(lc: &LinearizedCone, d: &[f64], tol: f64) -> Result<()> {
    match lc.violation(d, tol) {
        Some((id, inner)) => Err(Error::NotLinearizedFeasible { id, inner }),
        None => Ok(()),
    }
}

struct ImplicitSystem<'a> {
    p: &'a Problem,
    ids: Vec<usize>,
    x: &'a [f64],
    d: &'a [f64],
    /// `A d`, one entry per active row.
    ad: Vec<f64>,
    zt: DMatrix<f64>,
    frozen: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> ImplicitSystem<'a> {
    fn new(p: &'a Problem, lc: &LinearizedCone, x: &'a [f64], d: &'a [f64], tol_rank: f64) -> Result<Self> {
        let a = lc.matrix();
        let z = null_space_basis(&a, tol_rank)?;
        let zt = z.transpose();
        let m = DMatrix::from_fn(p.n(), p.n(), |i, j| if i < a.nrows() { a[(i, j)] } else { zt[(i - a.nrows(), j)] });
        let ad = (&a * DVector::from_column_slice(d)).iter().copied().collect();
        Ok(ImplicitSystem { p, ids: lc.ids(), x, d, ad, zt, frozen: m.lu() })
    }

    fn residual(&self, z: &[f64], t: f64) -> Result<DVector<f64>> {
        let m = self.ids.len();
        let mut r = DVector::zeros(self.p.n());
        for (row, &id) in self.ids.iter().enumerate() {
            r[row] = self.p.constraint(id).expect("active id").eval(z)? - t * self.ad[row];
        }
        let shift = DVector::from_iterator(z.len(), (0..z.len()).map(|i| z[i] - self.x[i] - t * self.d[i]));
        r.rows_mut(m, self.p.n() - m).copy_from(&(&self.zt * shift));
        Ok(r)
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let (n, m) = (self.p.n(), self.ids.len());
        let mut j = DMatrix::zeros(n, n);
        for (row, &id) in self.ids.iter().enumerate() {
            let g = self.p.constraint(id).expect("active id").grad(z)?;
            j.row_mut(row).copy_from_slice(&g);
        }
        j.rows_mut(m, n - m).copy_from(&self.zt);
        Ok(j)
    }

    /// Newton on `R(., t) = 0` from `x + t d`: frozen matrix first, exact
    /// Jacobian if the frozen iteration stops contracting.
    fn solve(&self, t: f64, opts: &NewtonOptions) -> std::result::Result<(Vec<f64>, f64, bool), String> {
        let target = opts.tol_res * (1.0 + norm(self.d) * t);
        let start = axpy(self.x, t, self.d);
        let frozen = |_: &[f64]| Ok(None);
        match self.iterate(start.clone(), t, opts, target, &frozen) {
            Ok((z, r)) => Ok((z, r, false)),
            Err(_) => {
                let exact = |z: &[f64]| self.jacobian(z).map(Some);
                self.iterate(start, t, opts, target, &exact)
                    .map(|(z, r)| (z, r, true))
                    .map_err(|r| format!("Newton did not converge at t = {t:e} (residual {r:e})"))
            }
        }
    }

    fn iterate(
        &self,
        mut z: Vec<f64>,
        t: f64,
        opts: &NewtonOptions,
        target: f64,
        jac: &dyn Fn(&[f64]) -> Result<Option<DMatrix<f64>>>,
    ) -> std::result::Result<(Vec<f64>, f64), f64> {
        let mut r = self.residual(&z, t).map_err(|_| f64::INFINITY)?;
        let mut rn = r.norm();
        for _ in 0..opts.max_iters {
            if rn <= target {
                return Ok((z, rn));
            }
            let step = match jac(&z).map_err(|_| rn)? {
                None => self.frozen.solve(&r),
                Some(j) => j.lu().solve(&r),
            }
            .ok_or(rn)?;
            let next: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
            let Ok(rnext) = self.residual(&next, t) else { return Err(rn) };
            let nn = rnext.norm();
            if !(nn < rn) && nn > target {
                return Err(rn);
            }
            z = next;
            r = rnext;
            rn = nn;
        }
        if rn <= target {
            Ok((z, rn))
        } else {
            Err(rn)
        }
    }
}

fn ratio_error(x: &[f64], z: &[f64], t: f64, d: &[f64]) -> f64 {
    let e: Vec<f64> = (0..x.len()).map(|i| (z[i] - x[i]) / t - d[i]).collect();
    norm(&e)
}

/// Postcondition shared by both probes: a certified direction lies in the
/// linearized cone at `1e-6`, and the empirical limit direction, which is
/// within the ratio error of it, lies there at `tol_lim`.
fn finish(mut res: TangentProbeResult, lc: &LinearizedCone, x: &[f64], tol_lim: f64) -> TangentProbeResult {
    if let Some(last) = res.steps.last() {
        res.limit_direction = Some((0..x.len()).map(|i| (last.z[i] - x[i]) / last.t).collect());
    }
    if !res.certified {
        return res;
    }
    if let Some((id, inner)) = lc.violation(&res.direction, CERTIFIED_CONE_TOL) {
        return res.fail(format!("direction leaves the linearized cone at constraint {id} (inner product {inner:e})"));
    }
    if let Some((id, inner)) = res.limit_direction.as_ref().and_then(|l| lc.violation(l, tol_lim)) {
        return res
            .fail(format!("limit direction leaves the linearized cone at constraint {id} (inner product {inner:e})"));
    }
    res
}

/// Probes `d ∈ T(x)` under LICQ. Certified when every scheduled `t_k`
/// yields an accepted Newton solution that is feasible for all constraints,
/// the ratio error is non-increasing (up to `0.01 tol_tan`) and the final
/// ratio error is at most `tol_tan`.
pub fn probe_tangent_licq(p: &Problem, x: &[f64], d: &[f64], opts: &ProbeOptions) -> Result<TangentProbeResult> {
    p.check_point(d)?;
    if norm(d) == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let act = active_set(p, x, opts.tol_act)?;
    let lc = linearized_cone_at(p, &act)?;
    let cq = assess_at(p, &act, &lc, opts.tol_rank);
    if !cq.licq {
        return Err(Error::CqNotSatisfied(cq.note));
    }
    check_direction(&lc, d, opts.tol_cone)?;
    let schedule = match opts.schedule {
        Some(s) => s,
        None => default_schedule(p, x, d, opts.tol_act)?,
    };
    let system = ImplicitSystem::new(p, &lc, x, d, opts.tol_rank)?;

    let mut res = TangentProbeResult {
        direction: d.to_vec(),
        certified: true,
        steps: Vec::new(),
        limit_direction: None,
        failure_reason: None,
    };
    for t in schedule.times() {
        let (z, residual, exact_jacobian) = match system.solve(t, &opts.newton) {
            Ok(ok) => ok,
            Err(reason) => return Ok(finish(res.fail(reason), &lc, x, opts.tol_tan)),
        };
        let feasible = check_feasible(p, &z, opts.tol_feas).map(|r| r.feasible).unwrap_or(false);
        let step = ProbeStep { t, ratio_error: ratio_error(x, &z, t, d), z, feasible, residual, exact_jacobian };
        let prev = res.steps.last().map(|s| s.ratio_error);
        res.steps.push(step);
        if !feasible {
            return Ok(finish(res.fail(format!("z is infeasible at t = {t:e}")), &lc, x, opts.tol_tan));
        }
        let current = res.steps.last().expect("just pushed").ratio_error;
        if prev.is_some_and(|prev| current > prev + 0.01 * opts.tol_tan) {
            return Ok(finish(res.fail(format!("ratio error increased at t = {t:e}")), &lc, x, opts.tol_tan));
        }
    }
    let last = res.final_ratio_error().unwrap_or(f64::INFINITY);
    if !(last <= opts.tol_tan) {
        res = res.fail(format!("final ratio error {last:e} exceeds {:e}", opts.tol_tan));
    }
    Ok(finish(res, &lc, x, opts.tol_tan))
}

/// Probes `v ∈ T(x)` under the linear CQ with `z_k = x + (t̄/(k+1)) v`,
/// `k = 0..steps`. Certified iff every `z_k` is feasible. `v = 0` is
/// allowed and gives the constant sequence.
pub fn probe_tangent_linear(
    p: &Problem,
    x: &[f64],
    v: &[f64],
    t_bar: f64,
    steps: usize,
    opts: &ProbeOptions,
) -> Result<TangentProbeResult> {
    p.check_point(v)?;
    if !(t_bar > 0.0) || !t_bar.is_finite() {
        return Err(Error::InvalidInput(format!("t_bar must be positive and finite, got {t_bar}")));
    }
    let act = active_set(p, x, opts.tol_act)?;
    let lc = linearized_cone_at(p, &act)?;
    let cq = assess_at(p, &act, &lc, opts.tol_rank);
    if !cq.linear_cq {
        return Err(Error::CqNotSatisfied(cq.note));
    }
    check_direction(&lc, v, opts.tol_cone)?;

    let mut res = TangentProbeResult {
        direction: v.to_vec(),
        certified: true,
        steps: Vec::new(),
        limit_direction: None,
        failure_reason: None,
    };
    for k in 0..steps {
        let t = t_bar / (k + 1) as f64;
        let z = axpy(x, t, v);
        let report = check_feasible(p, &z, opts.tol_feas);
        let feasible = report.as_ref().is_ok_and(|r| r.feasible);
        res.steps.push(ProbeStep {
            t,
            ratio_error: ratio_error(x, &z, t, v),
            z,
            feasible,
            residual: 0.0,
            exact_jacobian: false,
        });
        if !feasible {
            let reason = match report {
                Ok(r) => {
                    let id = violated_id(p, &r, opts.tol_feas);
                    format!("t_bar = {t_bar:e} too large: constraint {id} violated at t = {t:e}")
                }
                Err(e) => format!("t_bar = {t_bar:e} too large: {e} at t = {t:e}"),
            };
            return Ok(finish(res.fail(reason), &lc, x, opts.tol_tan));
        }
    }
    Ok(finish(res, &lc, x, opts.tol_tan))
}

fn violated_id(p: &Problem, r: &crate::problem::FeasibilityReport, tol: f64) -> usize {
    let eq = p.eq().keys().find(|id| r.values[id].abs() > tol);
    let ineq = p.ineq().keys().find(|id| r.values[id] < -tol);
    *eq.or(ineq).expect("infeasible report has a violated constraint")
}

/// Initial `t̄` for the linear path: `min(1, margin / (2 · max‖∇c_i‖ · ‖v‖))`.
pub fn choose_t_bar(p: &Problem, x: &[f64], v: &[f64], tol_act: f64) -> Result<f64> {
    let margin = inactive_margin(p, x, tol_act)?;
    let scale = 2.0 * max_constraint_gradient(p, x)? * norm(v);
    Ok(if scale > 0.0 { (margin / scale).min(1.0) } else { 1.0 })
}

/// [`probe_tangent_linear`] with `t̄` from [`choose_t_bar`], halved after each
/// failed attempt (at most 40 attempts).
pub fn probe_tangent_linear_auto(
    p: &Problem,
    x: &[f64],
    v: &[f64],
    steps: usize,
    opts: &ProbeOptions,
) -> Result<TangentProbeResult> {
    let mut t_bar = choose_t_bar(p, x, v, opts.tol_act)?;
    let mut last = None;
    for _ in 0..40 {
        let res = probe_tangent_linear(p, x, v, t_bar, steps, opts)?;
        if res.certified {
            return Ok(res);
        }
        last = Some(res);
        t_bar *= 0.5;
    }
    Ok(last.expect("at least one attempt"))
}

/// `count` seeded directions of the linearized cone, each the Moreau
/// projection `r - Π_{K°}(r)` of a Gaussian `r` onto the cone (`K°` is
/// generated by `-∇c_i` for active inequalities and `±∇c_i` for
/// equalities), normalized and rescaled by a factor drawn from `[0.5, 2]`.
/// Projections hit faces with positive probability, so boundary rays are
/// sampled alongside interior ones. Returns fewer directions only when the
/// cone is `{0}`.
pub fn sample_linearized_directions(lc: &LinearizedCone, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n = lc.at_point.len();
    let polar = ConeSpec::new(
        n,
        lc.eq_gradients.values().cloned().collect(),
        lc.active_ineq_gradients.values().map(|g| g.iter().map(|v| -v).collect()).collect(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..20 * count.max(1) {
        if out.len() == count {
            break;
        }
        let r: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let proj = project_onto_cone(&polar, &r, 1e-10)?;
        let d: Vec<f64> = r.iter().zip(&proj.point).map(|(r, p)| r - p).collect();
        let len = norm(&d);
        if len <= 1e-8 * norm(&r) {
            continue;
        }
        let scale = rng.random_range(0.5..=2.0) / len;
        out.push(d.iter().map(|v| v * scale).collect());
    }
    Ok(out)
}
