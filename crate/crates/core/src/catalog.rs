//! Analytic test problems with hand-derived minimizers, multipliers,
//! constraint-qualification status and dual values.
//!
//! Every number here comes from `scripts/derive_catalog.py` (symbolic KKT
//! solves and closed-form dual functions), never from this crate's output.

use crate::duality::ExtendedReal;
use crate::kkt::Verdict;
use crate::problem::{Multipliers, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedCq {
    pub licq: bool,
    pub linear_cq: bool,
}

/// Closed-form `q(λ, μ)`.
pub type DualFormula = fn(&Multipliers) -> ExtendedReal;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub problem: Problem,
    pub known_point: Vec<f64>,
    /// Absent for points that are not KKT points.
    pub known_multipliers: Option<Multipliers>,
    pub expected_cq: ExpectedCq,
    pub expected_verdict: Verdict,
    /// Expected unit descent direction for `Refuted` entries.
    pub expected_direction: Option<Vec<f64>>,
    /// Objective convex, inequalities concave, equalities affine.
    pub convexity_declared: bool,
    /// `q` at the known multipliers.
    pub known_dual_value: Option<f64>,
    pub dual_formula: Option<DualFormula>,
    pub provenance: &'static str,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        self.problem.name()
    }
}

fn problem(name: &str, n: usize, f: &str, eq: &[(usize, &str)], ineq: &[(usize, &str)]) -> Problem {
    Problem::parse(name, n, f, eq, ineq).expect("catalog problems parse")
}

fn mults(p: &Problem, pairs: &[(usize, f64)]) -> Option<Multipliers> {
    Some(Multipliers::from_pairs(p, pairs).expect("catalog multiplier ids exist"))
}

/// `q(μ) = -2μ - 1/(2μ)` for `μ > 0`, `-inf` otherwise.
fn disk_dual(s: f64) -> ExtendedReal {
    if s > 0.0 {
        ExtendedReal::Finite(-2.0 * s - 1.0 / (2.0 * s))
    } else {
        ExtendedReal::NegInf
    }
}

fn linear_over_disk() -> Problem {
    problem("linear-over-disk", 2, "x1 + x2", &[], &[(1, "2 - x1^2 - x2^2")])
}

fn quadratic_affine_eq(name: &str, ball: bool) -> Problem {
    let ineq: &[(usize, &str)] = if ball { &[(2, "4 - x1^2 - x2^2")] } else { &[] };
    problem(name, 2, "x1^2 + x2^2", &[(1, "x1 + x2 - 1")], ineq)
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();

    let p = linear_over_disk();
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, 0.5)]),
        problem: p,
        known_point: vec![-1.0, -1.0],
        expected_cq: ExpectedCq { licq: true, linear_cq: false },
        expected_verdict: Verdict::Certified,
        expected_direction: None,
        convexity_declared: true,
        known_dual_value: Some(-2.0),
        dual_formula: Some(|m| disk_dual(m.mu[&1])),
        provenance: "symbolic KKT solve: x = (-1,-1), mu = 1/2; q(mu) = -2 mu - 1/(2 mu)",
    });

    let p = quadratic_affine_eq("quadratic-affine-eq", false);
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, 1.0)]),
        problem: p,
        known_point: vec![0.5, 0.5],
        expected_cq: ExpectedCq { licq: true, linear_cq: true },
        expected_verdict: Verdict::Certified,
        expected_direction: None,
        convexity_declared: true,
        known_dual_value: Some(0.5),
        dual_formula: Some(|m| {
            let l = m.lambda[&1];
            ExtendedReal::Finite(l - l * l / 2.0)
        }),
        provenance: "symbolic KKT solve: x = (1/2,1/2), lambda = 1; q(lambda) = lambda - lambda^2/2",
    });

    let p = problem("scalar-bound", 1, "x1^2", &[], &[(1, "x1 - 1")]);
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, 2.0)]),
        problem: p,
        known_point: vec![1.0],
        expected_cq: ExpectedCq { licq: true, linear_cq: true },
        expected_verdict: Verdict::Certified,
        expected_direction: None,
        convexity_declared: true,
        known_dual_value: Some(1.0),
        dual_formula: Some(|m| {
            let u = m.mu[&1];
            ExtendedReal::Finite(u - u * u / 4.0)
        }),
        provenance: "calculus: x = 1, mu = 2; q(mu) = mu - mu^2/4",
    });

    let p = problem("lp-ray", 1, "x1", &[], &[(1, "x1")]);
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, 1.0)]),
        problem: p,
        known_point: vec![0.0],
        expected_cq: ExpectedCq { licq: true, linear_cq: true },
        expected_verdict: Verdict::Certified,
        expected_direction: None,
        convexity_declared: true,
        known_dual_value: Some(0.0),
        dual_formula: Some(|m| if m.mu[&1] == 1.0 { ExtendedReal::Finite(0.0) } else { ExtendedReal::NegInf }),
        provenance: "algebra: L = (1 - mu) x1 is bounded below only at mu = 1, where q = 0",
    });

    let p = problem("degenerate-duplicate", 2, "x1 + x2", &[], &[(1, "2 - x1^2 - x2^2"), (2, "2 - x1^2 - x2^2")]);
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, 0.25), (2, 0.25)]),
        problem: p,
        known_point: vec![-1.0, -1.0],
        expected_cq: ExpectedCq { licq: false, linear_cq: false },
        expected_verdict: Verdict::Inconclusive,
        expected_direction: None,
        convexity_declared: true,
        known_dual_value: Some(-2.0),
        dual_formula: Some(|m| disk_dual(m.mu[&1] + m.mu[&2])),
        provenance: "duplicated rows have rank 1; any split mu1 + mu2 = 1/2 is a multiplier, e.g. (1/4, 1/4)",
    });

    let p = linear_over_disk();
    out.push(CatalogEntry {
        problem: p.renamed("non-kkt-point"),
        known_point: vec![1.0, 1.0],
        known_multipliers: None,
        expected_cq: ExpectedCq { licq: true, linear_cq: false },
        expected_verdict: Verdict::Refuted,
        expected_direction: Some(vec![-s, -s]),
        convexity_declared: true,
        known_dual_value: None,
        dual_formula: Some(|m| disk_dual(m.mu[&1])),
        provenance: "projection of (1,1) onto cone{(-2,-2)} is 0, so d = -(1,1)/sqrt 2 with <g, d> = -sqrt 2",
    });

    let p = problem("unit-circle", 2, "x1", &[(1, "x1^2 + x2^2 - 1")], &[]);
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, -0.5)]),
        problem: p,
        known_point: vec![-1.0, 0.0],
        expected_cq: ExpectedCq { licq: true, linear_cq: false },
        expected_verdict: Verdict::Certified,
        expected_direction: None,
        convexity_declared: false,
        known_dual_value: None,
        dual_formula: None,
        provenance: "symbolic KKT solve: x = (-1,0), lambda = -1/2",
    });

    let p = quadratic_affine_eq("quadratic-affine-eq-ball", true);
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, 1.0), (2, 0.0)]),
        problem: p,
        known_point: vec![0.5, 0.5],
        expected_cq: ExpectedCq { licq: true, linear_cq: true },
        expected_verdict: Verdict::Certified,
        expected_direction: None,
        convexity_declared: true,
        known_dual_value: Some(0.5),
        dual_formula: Some(|m| {
            let (l, u) = (m.lambda[&1], m.mu[&2]);
            if u > -1.0 {
                ExtendedReal::Finite(-l * l / (2.0 * (1.0 + u)) + l - 4.0 * u)
            } else {
                ExtendedReal::NegInf
            }
        }),
        provenance: "quadratic-affine-eq plus 4 - x1^2 - x2^2 >= 0, which equals 7/2 at the minimizer (inactive)",
    });

    let p = problem("lp-corner-redundant", 2, "x1 + x2", &[], &[(1, "x1"), (2, "x2"), (3, "x1 + x2")]);
    out.push(CatalogEntry {
        known_multipliers: mults(&p, &[(1, 1.0), (2, 1.0), (3, 0.0)]),
        problem: p,
        known_point: vec![0.0, 0.0],
        expected_cq: ExpectedCq { licq: false, linear_cq: true },
        expected_verdict: Verdict::Certified,
        expected_direction: None,
        convexity_declared: true,
        known_dual_value: Some(0.0),
        dual_formula: Some(|m| {
            let (a, b, c) = (m.mu[&1], m.mu[&2], m.mu[&3]);
            if a + c == 1.0 && b + c == 1.0 {
                ExtendedReal::Finite(0.0)
            } else {
                ExtendedReal::NegInf
            }
        }),
        provenance:
            "three active affine constraints in R^2 (rank 2); mu = (1,1,0) solves (1,1) = mu1 e1 + mu2 e2 + mu3 (1,1)",
    });

    out
}

pub fn entry(name: &str) -> Option<CatalogEntry> {
    catalog_entries().into_iter().find(|e| e.name() == name)
}
