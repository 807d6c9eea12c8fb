//! Finitely generated cones `K = {B y + C w : y >= 0}`: projection, the
//! Farkas dichotomy with checkable certificates, and conic Carathéodory
//! reduction.
//!
//! Free generators are handled by splitting `w = w⁺ - w⁻`, so every
//! computation runs on the nonnegatively generated cone `[B, C, -C]`.

mod nnls;

use itertools::Itertools;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, from_columns, lstsq, norm, numerical_rank, smallest_right_singular_vector};
use crate::{Error, Result};

/// Upper bound on the generator count accepted by [`caratheodory_minimal`].
pub const CARATHEODORY_LIMIT: usize = 15;

/// Residual band `(tol, 10 tol)` in which a separation is flagged marginal.
const MARGINAL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    n: usize,
    free: Vec<Vec<f64>>,
    nonneg: Vec<Vec<f64>>,
}

impl ConeSpec {
    /// Every generator must have length `n` and finite entries.
    pub fn new(n: usize, free: Vec<Vec<f64>>, nonneg: Vec<Vec<f64>>) -> Result<ConeSpec> {
        for v in free.iter().chain(&nonneg) {
            if v.len() != n {
                return Err(Error::Dimension { expected: n, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("generator has a non-finite entry".into()));
            }
        }
        Ok(ConeSpec { n, free, nonneg })
    }

    /// Cone generated by nonnegative combinations of `gens` only.
    pub fn nonneg_only(n: usize, gens: Vec<Vec<f64>>) -> Result<ConeSpec> {
        ConeSpec::new(n, Vec::new(), gens)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Columns of `C`.
    pub fn free_generators(&self) -> &[Vec<f64>] {
        &self.free
    }

    /// Columns of `B`.
    pub fn nonneg_generators(&self) -> &[Vec<f64>] {
        &self.nonneg
    }

    /// `B y + C w`.
    pub fn combine(&self, y: &[f64], w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (v, &s) in self.nonneg.iter().zip(y).chain(self.free.iter().zip(w)) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += s * x);
        }
        out
    }

    /// `[B, C, -C]` as columns.
    fn split_generators(&self) -> Vec<Vec<f64>> {
        let neg = self.free.iter().map(|v| v.iter().map(|x| -x).collect());
        self.nonneg.iter().chain(&self.free).cloned().chain(neg).collect()
    }
}

/// Nearest point of the cone to `g`, with its coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    /// `‖point - g‖`.
    pub residual: f64,
    pub iterations: usize,
}

/// Euclidean projection of `g` onto `k`, accepted only once the optimality
/// conditions `<g - p, p> ≈ 0` and `<g - p, v> <= tol` for every generator
/// `v` of `[B, C, -C]` have been verified.
pub fn project_onto_cone(k: &ConeSpec, g: &[f64], tol: f64) -> Result<Projection> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if g.len() != k.n {
        return Err(Error::Dimension { expected: k.n, got: g.len() });
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("target vector has a non-finite entry".into()));
    }
    let gens = k.split_generators();
    let (nb, nc) = (k.nonneg.len(), k.free.len());
    let a = from_columns(&gens, k.n);
    let b = DVector::from_column_slice(g);
    let out = nnls::nnls(&a, &b, 50 * gens.len());

    let y = out.x.as_slice()[..nb].to_vec();
    let w: Vec<f64> = (0..nc).map(|j| out.x[nb + j] - out.x[nb + nc + j]).collect();
    let point = k.combine(&y, &w);
    let r: Vec<f64> = g.iter().zip(&point).map(|(g, p)| g - p).collect();

    let complementarity = dot(&r, &point);
    let max_gradient = gens.iter().map(|v| dot(&r, v)).fold(f64::NEG_INFINITY, f64::max);
    let gnorm = norm(g);
    if complementarity.abs() > 1e-8 * (1.0 + gnorm * gnorm) || max_gradient > tol {
        return Err(Error::Projection { iterations: out.iterations, complementarity, max_gradient });
    }
    Ok(Projection { residual: norm(&r), point, y, w, iterations: out.iterations })
}

/// Exactly one side of the dichotomy: `g ∈ K`, or a unit `d` with
/// `<g, d> < 0`, `<b_i, d> >= 0`, `<c_j, d> = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FarkasCertificate {
    Membership {
        y: Vec<f64>,
        w: Vec<f64>,
        /// `‖B y + C w - g‖`.
        reconstruction_residual: f64,
    },
    Separation {
        d: Vec<f64>,
        g_dot_d: f64,
        /// The projection residual fell in `(tol, 10 tol)`.
        marginal: bool,
    },
}

impl FarkasCertificate {
    pub fn is_membership(&self) -> bool {
        matches!(self, FarkasCertificate::Membership { .. })
    }

    /// Rechecks the certificate against `k` and `g` from scratch.
    pub fn verify(&self, k: &ConeSpec, g: &[f64], tol: f64) -> Result<()> {
        let fail = |msg: String| Err(Error::Certificate(msg));
        match self {
            FarkasCertificate::Membership { y, w, .. } => {
                if y.len() != k.nonneg.len() || w.len() != k.free.len() {
                    return fail("coefficient count does not match the generators".into());
                }
                if let Some(v) = y.iter().find(|&&v| !(v >= 0.0)) {
                    return fail(format!("nonnegative coefficient is {v}"));
                }
                let res = norm(&crate::linalg::sub(&k.combine(y, w), g));
                if !(res <= tol) {
                    return fail(format!("reconstruction residual {res:e} exceeds {tol:e}"));
                }
            }
            FarkasCertificate::Separation { d, g_dot_d, .. } => {
                if d.len() != k.n {
                    return fail("separating direction has the wrong length".into());
                }
                if !((norm(d) - 1.0).abs() <= 1e-12) {
                    return fail(format!("separating direction has norm {}", norm(d)));
                }
                let gd = dot(g, d);
                if !(gd < 0.0) || (gd - g_dot_d).abs() > 1e-12 * (1.0 + gd.abs()) {
                    return fail(format!("<g, d> = {gd:e} is not negative or mismatches the record"));
                }
                if let Some(v) = k.nonneg.iter().map(|b| dot(b, d)).find(|&v| !(v >= -tol)) {
                    return fail(format!("<b, d> = {v:e} below -{tol:e}"));
                }
                if let Some(v) = k.free.iter().map(|c| dot(c, d)).find(|&v| !(v.abs() <= tol)) {
                    return fail(format!("|<c, d>| = {:e} above {tol:e}", v.abs()));
                }
            }
        }
        Ok(())
    }
}

/// Decides `g ∈ K` by projecting: a residual `‖p - g‖ <= tol` yields the
/// projection coefficients, anything larger yields `d = (p - g)/‖p - g‖`.
/// The returned certificate has passed [`FarkasCertificate::verify`].
pub fn farkas_decide(k: &ConeSpec, g: &[f64], tol: f64) -> Result<FarkasCertificate> {
    let proj = project_onto_cone(k, g, tol)?;
    let cert = if proj.residual <= tol {
        FarkasCertificate::Membership { y: proj.y, w: proj.w, reconstruction_residual: proj.residual }
    } else {
        let d: Vec<f64> = proj.point.iter().zip(g).map(|(p, g)| (p - g) / proj.residual).collect();
        FarkasCertificate::Separation { g_dot_d: dot(g, &d), d, marginal: proj.residual < MARGINAL_FACTOR * tol }
    };
    cert.verify(k, g, tol)?;
    Ok(cert)
}

/// Nonnegative combination over a subset of the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSupport {
    /// Ascending generator indices.
    pub indices: Vec<usize>,
    /// Coefficient for each entry of `indices`, all `>= 0`.
    pub coeffs: Vec<f64>,
}

impl ConicSupport {
    pub fn reconstruct(&self, gens: &[Vec<f64>], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&i, &c) in self.indices.iter().zip(&self.coeffs) {
            out.iter_mut().zip(&gens[i]).for_each(|(o, v)| *o += c * v);
        }
        out
    }
}

fn ambient_dim(gens: &[Vec<f64>]) -> Result<usize> {
    let n = gens.first().map_or(0, Vec::len);
    match gens.iter().find(|v| v.len() != n) {
        Some(v) => Err(Error::Dimension { expected: n, got: v.len() }),
        None => Ok(n),
    }
}

fn independent(gens: &[Vec<f64>], idx: &[usize], n: usize, tol_rank: f64) -> bool {
    if idx.len() > n {
        return false;
    }
    let cols: Vec<Vec<f64>> = idx.iter().map(|&i| gens[i].clone()).collect();
    numerical_rank(&from_columns(&cols, n), tol_rank) == idx.len()
}

/// Greedy reduction of `Σ coeffs_i gens_i` to a linearly independent
/// support: while the support is dependent, move along a null vector until
/// a coefficient reaches zero and drop it. The result is not necessarily of
/// minimum cardinality.
pub fn caratheodory_reduce(gens: &[Vec<f64>], coeffs: &[f64], tol_rank: f64) -> Result<ConicSupport> {
    if gens.len() != coeffs.len() {
        return Err(Error::Dimension { expected: gens.len(), got: coeffs.len() });
    }
    if let Some(c) = coeffs.iter().find(|&&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(Error::InvalidInput(format!("coefficients must be finite and nonnegative, got {c}")));
    }
    let n = ambient_dim(gens)?;
    let target: Vec<f64> =
        ConicSupport { indices: (0..gens.len()).collect(), coeffs: coeffs.to_vec() }.reconstruct(gens, n);

    let mut support: Vec<usize> = (0..gens.len()).filter(|&i| coeffs[i] > 0.0).collect();
    let mut a: Vec<f64> = support.iter().map(|&i| coeffs[i]).collect();
    while !independent(gens, &support, n, tol_rank) {
        let cols: Vec<Vec<f64>> = support.iter().map(|&i| gens[i].clone()).collect();
        let mut v = smallest_right_singular_vector(&from_columns(&cols, n));
        if v.max() <= 0.0 {
            v = -v;
        }
        // largest step keeping every coefficient nonnegative
        let (drop, theta) = (0..support.len())
            .filter(|&j| v[j] > 0.0)
            .map(|j| (j, a[j] / v[j]))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("null vector has a positive entry");
        for j in 0..a.len() {
            a[j] -= theta * v[j];
        }
        a[drop] = 0.0;
        let keep: Vec<usize> = (0..support.len()).filter(|&j| a[j] > 0.0).collect();
        support = keep.iter().map(|&j| support[j]).collect();
        a = keep.iter().map(|&j| a[j]).collect();
    }

    // an independent support determines the coefficients uniquely; re-solve
    // to remove drift accumulated by the elimination steps
    if !support.is_empty() {
        let cols: Vec<Vec<f64>> = support.iter().map(|&i| gens[i].clone()).collect();
        let refined = lstsq(&from_columns(&cols, n), &DVector::from_column_slice(&target));
        if refined.iter().all(|&c| c >= 0.0) {
            a = refined.iter().copied().collect();
        }
    }
    Ok(ConicSupport { indices: support, coeffs: a })
}

/// Smallest linearly independent subset of `gens` whose cone contains `x`,
/// found by exhaustive search in ascending cardinality (lexicographic within
/// a cardinality). Membership of a subset means a projection residual
/// `<= tol`.
pub fn caratheodory_minimal(gens: &[Vec<f64>], x: &[f64], tol: f64, limit: usize) -> Result<ConicSupport> {
    let limit = limit.min(CARATHEODORY_LIMIT);
    if gens.len() > limit {
        return Err(Error::TooManyGenerators { count: gens.len(), limit });
    }
    let n = x.len();
    let cone = ConeSpec::nonneg_only(n, gens.to_vec())?;
    if let FarkasCertificate::Separation { .. } = farkas_decide(&cone, x, tol)? {
        return Err(Error::NotInCone(project_onto_cone(&cone, x, tol)?.residual));
    }
    for size in 0..=gens.len().min(n) {
        for subset in (0..gens.len()).combinations(size) {
            if !independent(gens, &subset, n, crate::linalg::DEFAULT_TOL_RANK) {
                continue;
            }
            let sub = ConeSpec::nonneg_only(n, subset.iter().map(|&i| gens[i].clone()).collect())?;
            let proj = project_onto_cone(&sub, x, tol)?;
            if proj.residual <= tol {
                return Ok(ConicSupport { indices: subset, coeffs: proj.y });
            }
        }
    }
    // unreachable when x is in the cone, by conic Carathéodory
    Err(Error::Certificate("no independent subset represents a member of the cone".into()))
}
