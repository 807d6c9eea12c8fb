//! Constrained problems `min f(x) s.t. c_i(x) = 0 (i in E), c_i(x) >= 0 (i in I)`
//! over all of `R^n`, with feasibility, active sets and the Lagrangian
//! `L(x, λ, μ) = f(x) - Σ λ_i c_i(x) - Σ μ_i c_i(x)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::expr::{parse, Expr};
use crate::linalg::{axpy, norm};
use crate::{Error, Result};

pub type ConstraintId = usize;

pub const DEFAULT_TOL_FEAS: f64 = 1e-8;
pub const DEFAULT_TOL_ACT: f64 = 1e-6;

/// A smooth constrained problem. Equality and inequality ids share one id
/// space; construction rejects any id used twice.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    name: String,
    n: usize,
    objective: Expr,
    eq: BTreeMap<ConstraintId, Expr>,
    ineq: BTreeMap<ConstraintId, Expr>,
}

impl Problem {
    pub fn new(name: impl Into<String>, n: usize, objective: Expr) -> Result<Problem> {
        objective.check_dimension(n)?;
        Ok(Problem { name: name.into(), n, objective, eq: BTreeMap::new(), ineq: BTreeMap::new() })
    }

    pub fn with_eq(mut self, id: ConstraintId, c: Expr) -> Result<Problem> {
        self.check_new(id, &c)?;
        self.eq.insert(id, c);
        Ok(self)
    }

    pub fn with_ineq(mut self, id: ConstraintId, c: Expr) -> Result<Problem> {
        self.check_new(id, &c)?;
        self.ineq.insert(id, c);
        Ok(self)
    }

    fn check_new(&self, id: ConstraintId, c: &Expr) -> Result<()> {
        if self.eq.contains_key(&id) || self.ineq.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        c.check_dimension(self.n)?;
        Ok(())
    }

    /// Builds a problem from expression text.
    pub fn parse(
        name: &str,
        n: usize,
        objective: &str,
        eq: &[(ConstraintId, &str)],
        ineq: &[(ConstraintId, &str)],
    ) -> Result<Problem> {
        let mut p = Problem::new(name, n, parse(objective, n)?)?;
        for &(id, text) in eq {
            p = p.with_eq(id, parse(text, n)?)?;
        }
        for &(id, text) in ineq {
            p = p.with_ineq(id, parse(text, n)?)?;
        }
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Problem {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn eq(&self) -> &BTreeMap<ConstraintId, Expr> {
        &self.eq
    }

    pub fn ineq(&self) -> &BTreeMap<ConstraintId, Expr> {
        &self.ineq
    }

    pub fn constraint(&self, id: ConstraintId) -> Option<&Expr> {
        self.eq.get(&id).or_else(|| self.ineq.get(&id))
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.objective.eval(x)?)
    }

    pub fn objective_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.objective.grad(x)?)
    }

    /// Reads the JSON problem file format.
    pub fn from_json(text: &str) -> Result<Problem> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::ProblemFile(e.to_string()))?;
        file.into_problem()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ProblemFile::from(self)).expect("problem file serializes")
    }
}

/// On-disk problem format:
/// `{"name", "n", "objective", "eq": [{"id", "expr"}], "ineq": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub n: usize,
    pub objective: String,
    #[serde(default)]
    pub eq: Vec<ConstraintEntry>,
    #[serde(default)]
    pub ineq: Vec<ConstraintEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntry {
    pub id: ConstraintId,
    pub expr: String,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<Problem> {
        let eq: Vec<_> = self.eq.iter().map(|c| (c.id, c.expr.as_str())).collect();
        let ineq: Vec<_> = self.ineq.iter().map(|c| (c.id, c.expr.as_str())).collect();
        Problem::parse(&self.name, self.n, &self.objective, &eq, &ineq)
    }
}

impl From<&Problem> for ProblemFile {
    fn from(p: &Problem) -> ProblemFile {
        let entries = |m: &BTreeMap<ConstraintId, Expr>| {
            m.iter().map(|(&id, e)| ConstraintEntry { id, expr: e.to_string() }).collect()
        };
        ProblemFile {
            name: p.name.clone(),
            n: p.n,
            objective: p.objective.to_string(),
            eq: entries(&p.eq),
            ineq: entries(&p.ineq),
        }
    }
}

/// Lagrange multipliers keyed by constraint id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: BTreeMap<ConstraintId, f64>,
    pub mu: BTreeMap<ConstraintId, f64>,
}

impl Multipliers {
    pub fn zeros(p: &Problem) -> Multipliers {
        Multipliers {
            lambda: p.eq.keys().map(|&id| (id, 0.0)).collect(),
            mu: p.ineq.keys().map(|&id| (id, 0.0)).collect(),
        }
    }

    /// Zero multipliers with the given entries overwritten; ids are routed to
    /// `lambda` or `mu` by the problem's constraint kind.
    pub fn from_pairs(p: &Problem, pairs: &[(ConstraintId, f64)]) -> Result<Multipliers> {
        let mut m = Multipliers::zeros(p);
        for &(id, v) in pairs {
            if let Some(slot) = m.lambda.get_mut(&id).or(m.mu.get_mut(&id)) {
                *slot = v;
            } else {
                return Err(Error::MultiplierKeys);
            }
        }
        Ok(m)
    }

    pub fn check_keys(&self, p: &Problem) -> Result<()> {
        if self.lambda.keys().eq(p.eq.keys()) && self.mu.keys().eq(p.ineq.keys()) {
            Ok(())
        } else {
            Err(Error::MultiplierKeys)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub max_eq_violation: f64,
    pub max_ineq_violation: f64,
    /// `c_i(x)` for every constraint.
    pub values: BTreeMap<ConstraintId, f64>,
}

pub fn check_feasible(p: &Problem, x: &[f64], tol_feas: f64) -> Result<FeasibilityReport> {
    if !(tol_feas > 0.0) {
        return Err(Error::InvalidTolerance(tol_feas));
    }
    p.check_point(x)?;
    let mut values = BTreeMap::new();
    let mut max_eq = 0.0f64;
    for (&id, c) in &p.eq {
        let v = c.eval(x)?;
        max_eq = max_eq.max(v.abs());
        values.insert(id, v);
    }
    let mut max_ineq = 0.0f64;
    for (&id, c) in &p.ineq {
        let v = c.eval(x)?;
        max_ineq = max_ineq.max(-v);
        values.insert(id, v);
    }
    Ok(FeasibilityReport {
        feasible: max_eq <= tol_feas && max_ineq <= tol_feas,
        max_eq_violation: max_eq,
        max_ineq_violation: max_ineq,
        values,
    })
}

/// `A(x)`: every equality plus the inequalities with `|c_i(x)| <= tol_act`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub eq_ids: Vec<ConstraintId>,
    pub active_ineq_ids: Vec<ConstraintId>,
    pub at_point: Vec<f64>,
    pub tol_act: f64,
}

impl ActiveSet {
    /// Equality ids then active inequality ids, each ascending.
    pub fn ids(&self) -> impl Iterator<Item = ConstraintId> + '_ {
        self.eq_ids.iter().chain(&self.active_ineq_ids).copied()
    }

    pub fn len(&self) -> usize {
        self.eq_ids.len() + self.active_ineq_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Active set at `x`. Feasibility is checked at `tol_act` itself, the
/// loosest tolerance consistent with `tol_feas <= tol_act`.
pub fn active_set(p: &Problem, x: &[f64], tol_act: f64) -> Result<ActiveSet> {
    let report = check_feasible(p, x, tol_act)?;
    if !report.feasible {
        return Err(Error::Infeasible { max_eq: report.max_eq_violation, max_ineq: report.max_ineq_violation });
    }
    Ok(ActiveSet {
        eq_ids: p.eq.keys().copied().collect(),
        active_ineq_ids: p.ineq.keys().copied().filter(|id| report.values[id].abs() <= tol_act).collect(),
        at_point: x.to_vec(),
        tol_act,
    })
}

fn multiplier_terms<'a>(p: &'a Problem, m: &'a Multipliers) -> impl Iterator<Item = (f64, &'a Expr)> + 'a {
    p.eq.iter().map(move |(id, c)| (m.lambda[id], c)).chain(p.ineq.iter().map(move |(id, c)| (m.mu[id], c)))
}

pub fn lagrangian(p: &Problem, x: &[f64], m: &Multipliers) -> Result<f64> {
    m.check_keys(p)?;
    let mut value = p.objective_value(x)?;
    for (weight, c) in multiplier_terms(p, m) {
        value -= weight * c.eval(x)?;
    }
    Ok(value)
}

/// `∇f(x) - Σ λ_i ∇c_i(x) - Σ μ_i ∇c_i(x)` by forward-mode AD.
pub fn lagrangian_grad(p: &Problem, x: &[f64], m: &Multipliers) -> Result<Vec<f64>> {
    m.check_keys(p)?;
    let mut g = p.objective_grad(x)?;
    for (weight, c) in multiplier_terms(p, m) {
        if weight != 0.0 {
            g = axpy(&g, -weight, &c.grad(x)?);
        }
    }
    Ok(g)
}

/// Heuristic falsifier for local minimality: samples `samples` points
/// uniformly from the ball of `radius` around `x` and reports `false` if a
/// feasible one (at [`DEFAULT_TOL_FEAS`]) improves the objective by more
/// than `1e-12`. Sample points where an expression is undefined are skipped.
/// A `true` result is not a proof.
pub fn sampled_local_min_check(p: &Problem, x: &[f64], radius: f64, samples: usize, seed: u64) -> Result<bool> {
    let report = check_feasible(p, x, DEFAULT_TOL_FEAS)?;
    if !report.feasible {
        return Err(Error::Infeasible { max_eq: report.max_eq_violation, max_ineq: report.max_ineq_violation });
    }
    let fx = p.objective_value(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n();
    for _ in 0..samples {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&dir);
        if len == 0.0 {
            continue;
        }
        let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
        let y = axpy(x, r / len, &dir);
        let Ok(rep) = check_feasible(p, &y, DEFAULT_TOL_FEAS) else { continue };
        if !rep.feasible {
            continue;
        }
        if let Ok(fy) = p.objective_value(&y) {
            if fy < fx - 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
