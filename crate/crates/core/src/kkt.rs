//! KKT residuals, multiplier recovery through the Farkas dichotomy, and the
//! certify / refute / inconclusive verdict.

use serde::{Deserialize, Serialize};

use crate::cone::{farkas_decide, ConeSpec, FarkasCertificate};
use crate::cq::{assess_at, assess_cqs, linearized_cone_at, CqStatus, LinearizedCone};
use crate::linalg::{dot, norm, norm_inf, DEFAULT_TOL_RANK};
use crate::problem::{
    active_set, check_feasible, lagrangian_grad, sampled_local_min_check, ActiveSet, Multipliers, Problem,
    DEFAULT_TOL_ACT, DEFAULT_TOL_FEAS,
};
use crate::tangent::TangentProbeResult;
use crate::{Error, Result, VERSION};

/// Tolerance of the refutation soundness check on a returned direction.
const REFUTATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_feas: f64,
    pub tol_act: f64,
    pub tol_rank: f64,
    /// `None` means `1e-6 · (1 + ‖∇f(x)‖∞)`.
    pub tol_stat: Option<f64>,
    pub tol_dual: f64,
    pub tol_comp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_feas: DEFAULT_TOL_FEAS,
            tol_act: DEFAULT_TOL_ACT,
            tol_rank: DEFAULT_TOL_RANK,
            tol_stat: None,
            tol_dual: 1e-8,
            tol_comp: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn stationarity(&self, grad_f: &[f64]) -> f64 {
        self.tol_stat.unwrap_or(1e-6 * (1.0 + norm_inf(grad_f)))
    }

    fn validate(&self) -> Result<()> {
        let all = [self.tol_feas, self.tol_act, self.tol_rank, self.tol_dual, self.tol_comp];
        if let Some(&t) = all.iter().chain(self.tol_stat.as_ref()).find(|&&t| !(t > 0.0)) {
            return Err(Error::InvalidTolerance(t));
        }
        if self.tol_feas > self.tol_act {
            return Err(Error::InvalidInput(format!(
                "tol_feas ({:e}) must not exceed tol_act ({:e})",
                self.tol_feas, self.tol_act
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// All KKT residuals within tolerance and a CQ holds.
    Certified,
    /// A CQ holds and `direction` is a linearized feasible descent direction.
    Refuted,
    /// No CQ holds; `direction`, if present, is only a candidate.
    Inconclusive,
    /// Multipliers were supplied or recovered but a residual exceeds its
    /// tolerance.
    NotSatisfied,
    /// The point violates a constraint by more than `tol_feas`.
    Infeasible,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
            Verdict::NotSatisfied => "not_satisfied",
            Verdict::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KktReport {
    pub tool_version: String,
    pub problem: String,
    pub point: Vec<f64>,
    pub verdict: Verdict,
    /// Descent direction for `Refuted`, candidate direction for
    /// `Inconclusive`.
    pub direction: Option<Vec<f64>>,
    /// The separation came from a projection residual in `(tol, 10 tol)`.
    pub marginal: bool,
    pub feasible: bool,
    pub primal_eq_violation: f64,
    pub primal_ineq_violation: f64,
    /// `‖∇ₓL‖∞`.
    pub stationarity_residual: Option<f64>,
    /// `min_i μ_i`; absent without inequalities.
    pub dual_min: Option<f64>,
    /// `max_i |μ_i c_i(x)|`.
    pub complementarity_residual: Option<f64>,
    pub multipliers: Option<Multipliers>,
    pub cq: Option<CqStatus>,
    /// Stationarity tolerance in effect.
    pub tol_stat: f64,
    pub sampled_local_min: Option<bool>,
}

impl KktReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<KktReport> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report: {e}")))
    }

    /// Runs [`sampled_local_min_check`] at the report's point and records the
    /// outcome. Only meaningful for feasible points.
    pub fn attach_local_min_check(&mut self, p: &Problem, radius: f64, samples: usize, seed: u64) -> Result<()> {
        if self.feasible {
            self.sampled_local_min = Some(sampled_local_min_check(p, &self.point, radius, samples, seed)?);
        }
        Ok(())
    }
}

/// Either multipliers with `∇f = Σ λ_i ∇c_i + Σ μ_i ∇c_i`, `μ >= 0`, or a
/// direction `d` with `<∇f, d> < 0` in the linearized cone.
#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierOutcome {
    Multipliers(Multipliers),
    DescentDirection { d: Vec<f64>, g_dot_d: f64, marginal: bool },
}

fn multipliers_at(p: &Problem, act: &ActiveSet, lc: &LinearizedCone, tols: &Tolerances) -> Result<MultiplierOutcome> {
    let g = p.objective_grad(&act.at_point)?;
    let cone = ConeSpec::new(
        p.n(),
        lc.eq_gradients.values().cloned().collect(),
        lc.active_ineq_gradients.values().cloned().collect(),
    )?;
    Ok(match farkas_decide(&cone, &g, tols.stationarity(&g))? {
        FarkasCertificate::Membership { y, w, .. } => {
            let mut m = Multipliers::zeros(p);
            for (id, v) in act.eq_ids.iter().zip(w) {
                m.lambda.insert(*id, v);
            }
            for (id, v) in act.active_ineq_ids.iter().zip(y) {
                m.mu.insert(*id, v);
            }
            MultiplierOutcome::Multipliers(m)
        }
        FarkasCertificate::Separation { d, g_dot_d, marginal } => {
            MultiplierOutcome::DescentDirection { d, g_dot_d, marginal }
        }
    })
}

/// Decides membership of `∇f(x)` in the cone of active gradients (equalities
/// free, active inequalities nonnegative). Inactive inequalities get `μ = 0`.
pub fn solve_multipliers(p: &Problem, x: &[f64], tols: &Tolerances) -> Result<MultiplierOutcome> {
    tols.validate()?;
    let act = active_set(p, x, tols.tol_act)?;
    let lc = linearized_cone_at(p, &act)?;
    multipliers_at(p, &act, &lc, tols)
}

struct Residuals {
    feasible: bool,
    eq: f64,
    ineq: f64,
    stationarity: f64,
    dual_min: Option<f64>,
    complementarity: f64,
    tol_stat: f64,
}

impl Residuals {
    fn compute(p: &Problem, x: &[f64], m: &Multipliers, tols: &Tolerances) -> Result<Residuals> {
        let feas = check_feasible(p, x, tols.tol_feas)?;
        let grad = lagrangian_grad(p, x, m)?;
        let complementarity = m.mu.iter().map(|(id, mu)| (mu * feas.values[id]).abs()).fold(0.0, f64::max);
        Ok(Residuals {
            feasible: feas.feasible,
            eq: feas.max_eq_violation,
            ineq: feas.max_ineq_violation,
            stationarity: norm_inf(&grad),
            dual_min: m.mu.values().copied().reduce(f64::min),
            complementarity,
            tol_stat: tols.stationarity(&p.objective_grad(x)?),
        })
    }

    fn satisfied(&self, tols: &Tolerances) -> bool {
        self.feasible
            && self.stationarity <= self.tol_stat
            && self.dual_min.is_none_or(|v| v >= -tols.tol_dual)
            && self.complementarity <= tols.tol_comp
    }

    fn report(
        self,
        p: &Problem,
        x: &[f64],
        verdict: Verdict,
        m: Option<Multipliers>,
        cq: Option<CqStatus>,
    ) -> KktReport {
        KktReport {
            tool_version: VERSION.to_string(),
            problem: p.name().to_string(),
            point: x.to_vec(),
            verdict,
            direction: None,
            marginal: false,
            feasible: self.feasible,
            primal_eq_violation: self.eq,
            primal_ineq_violation: self.ineq,
            stationarity_residual: Some(self.stationarity),
            dual_min: self.dual_min,
            complementarity_residual: Some(self.complementarity),
            multipliers: m,
            cq,
            tol_stat: self.tol_stat,
            sampled_local_min: None,
        }
    }
}

/// All KKT residuals for given multipliers. The verdict is `Certified` iff
/// `x` is feasible at `tol_feas`, stationarity is within `tol_stat`,
/// `min μ >= -tol_dual` and complementarity is within `tol_comp`;
/// otherwise `Infeasible` or `NotSatisfied`.
pub fn check_kkt(p: &Problem, x: &[f64], m: &Multipliers, tols: &Tolerances) -> Result<KktReport> {
    tols.validate()?;
    m.check_keys(p)?;
    p.check_point(x)?;
    let r = Residuals::compute(p, x, m, tols)?;
    let verdict = match (r.feasible, r.satisfied(tols)) {
        (false, _) => Verdict::Infeasible,
        (true, true) => Verdict::Certified,
        (true, false) => Verdict::NotSatisfied,
    };
    let cq = if r.feasible { assess_cqs(p, x, tols.tol_act, tols.tol_rank).ok() } else { None };
    Ok(r.report(p, x, verdict, Some(m.clone()), cq))
}

/// Refutation soundness: `<∇f, d> < 0`, `<∇c_i, d> >= -1e-8` for active
/// inequalities and `|<∇c_i, d>| <= 1e-8` for equalities.
fn check_refutation(lc: &LinearizedCone, g: &[f64], d: &[f64]) -> Result<()> {
    let gd = dot(g, d);
    let ineq_ok = lc.active_ineq_gradients.values().all(|c| dot(c, d) >= -REFUTATION_TOL);
    let eq_ok = lc.eq_gradients.values().all(|c| dot(c, d).abs() <= REFUTATION_TOL);
    if gd < 0.0 && ineq_ok && eq_ok {
        Ok(())
    } else {
        Err(Error::Certificate(format!(
            "descent direction fails the refutation checks at {REFUTATION_TOL:e} (<g, d> = {gd:e})"
        )))
    }
}

/// Full pipeline: feasibility, active set, CQs, multipliers, residuals.
///
/// Without LICQ or the linear CQ the verdict is `Inconclusive` whatever the
/// multiplier search finds; its outcome is still reported. With a CQ, a
/// separating direction gives `Refuted`, recovered multipliers give
/// `Certified` or `NotSatisfied`.
pub fn certify_first_order(p: &Problem, x: &[f64], tols: &Tolerances) -> Result<KktReport> {
    tols.validate()?;
    p.check_point(x)?;
    let feas = check_feasible(p, x, tols.tol_feas)?;
    let g = p.objective_grad(x)?;
    if !feas.feasible {
        return Ok(KktReport {
            tool_version: VERSION.to_string(),
            problem: p.name().to_string(),
            point: x.to_vec(),
            verdict: Verdict::Infeasible,
            direction: None,
            marginal: false,
            feasible: false,
            primal_eq_violation: feas.max_eq_violation,
            primal_ineq_violation: feas.max_ineq_violation,
            stationarity_residual: None,
            dual_min: None,
            complementarity_residual: None,
            multipliers: None,
            cq: None,
            tol_stat: tols.stationarity(&g),
            sampled_local_min: None,
        });
    }
    let act = active_set(p, x, tols.tol_act)?;
    let lc = linearized_cone_at(p, &act)?;
    let cq = assess_at(p, &act, &lc, tols.tol_rank);
    match multipliers_at(p, &act, &lc, tols)? {
        MultiplierOutcome::Multipliers(m) => {
            let r = Residuals::compute(p, x, &m, tols)?;
            let verdict = match (cq.any(), r.satisfied(tols)) {
                (false, _) => Verdict::Inconclusive,
                (true, true) => Verdict::Certified,
                (true, false) => Verdict::NotSatisfied,
            };
            Ok(r.report(p, x, verdict, Some(m), Some(cq)))
        }
        MultiplierOutcome::DescentDirection { d, marginal, .. } => {
            let verdict = if cq.any() {
                check_refutation(&lc, &g, &d)?;
                Verdict::Refuted
            } else {
                Verdict::Inconclusive
            };
            Ok(KktReport {
                tool_version: VERSION.to_string(),
                problem: p.name().to_string(),
                point: x.to_vec(),
                verdict,
                direction: Some(d),
                marginal,
                feasible: true,
                primal_eq_violation: feas.max_eq_violation,
                primal_ineq_violation: feas.max_ineq_violation,
                stationarity_residual: None,
                dual_min: None,
                complementarity_residual: None,
                multipliers: None,
                cq: Some(cq),
                tol_stat: tols.stationarity(&g),
                sampled_local_min: None,
            })
        }
    }
}

/// `<∇f(x), d> >= -tol (1 + ‖∇f‖ ‖d‖)` for every supplied direction, each of
/// which must carry a certified tangent probe.
pub fn geometric_check(p: &Problem, x: &[f64], directions: &[TangentProbeResult], tol: f64) -> Result<bool> {
    if let Some(i) = directions.iter().position(|r| !r.certified) {
        return Err(Error::UncertifiedDirection(i));
    }
    let g = p.objective_grad(x)?;
    let gn = norm(&g);
    Ok(directions.iter().all(|r| dot(&g, &r.direction) >= -tol * (1.0 + gn * norm(&r.direction))))
}
