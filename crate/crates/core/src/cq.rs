//! Linearized feasible directions and the two constraint qualifications that
//! make them coincide with the tangent cone: LICQ and "all active
//! constraints affine".
//!
//! Active gradients are always stacked equality ids first, then active
//! inequality ids, each ascending.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, from_rows, norm, singular_values};
use crate::problem::{active_set, ActiveSet, ConstraintId, Problem};
use crate::{Error, Result};

pub use crate::linalg::null_space_basis;

/// `∇c_i(x)` for every equality and every active inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedCone {
    pub eq_gradients: BTreeMap<ConstraintId, Vec<f64>>,
    pub active_ineq_gradients: BTreeMap<ConstraintId, Vec<f64>>,
    pub at_point: Vec<f64>,
}

impl LinearizedCone {
    pub fn active_count(&self) -> usize {
        self.eq_gradients.len() + self.active_ineq_gradients.len()
    }

    /// Active ids in row order.
    pub fn ids(&self) -> Vec<ConstraintId> {
        self.eq_gradients.keys().chain(self.active_ineq_gradients.keys()).copied().collect()
    }

    /// Active gradients as the rows of an `m x n` matrix, in row order.
    pub fn matrix(&self) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> =
            self.eq_gradients.values().chain(self.active_ineq_gradients.values()).cloned().collect();
        from_rows(&rows, self.at_point.len())
    }

    /// Largest active gradient norm (0 without active constraints).
    pub fn max_gradient_norm(&self) -> f64 {
        self.eq_gradients.values().chain(self.active_ineq_gradients.values()).map(|g| norm(g)).fold(0.0, f64::max)
    }

    /// First constraint violating the membership test for `d`, with its
    /// inner product.
    pub fn violation(&self, d: &[f64], tol: f64) -> Option<(ConstraintId, f64)> {
        let dn = norm(d);
        let eq = self.eq_gradients.iter().find_map(|(&id, g)| {
            let ip = dot(g, d);
            (!(ip.abs() <= tol * (1.0 + norm(g) * dn))).then_some((id, ip))
        });
        eq.or_else(|| {
            self.active_ineq_gradients.iter().find_map(|(&id, g)| {
                let ip = dot(g, d);
                (!(ip >= -tol * (1.0 + norm(g) * dn))).then_some((id, ip))
            })
        })
    }
}

/// Gradients of the active constraints at a feasible `x`.
pub fn linearized_cone(p: &Problem, x: &[f64], tol_act: f64) -> Result<LinearizedCone> {
    let act = active_set(p, x, tol_act)?;
    linearized_cone_at(p, &act)
}

pub(crate) fn linearized_cone_at(p: &Problem, act: &ActiveSet) -> Result<LinearizedCone> {
    let grads = |ids: &[ConstraintId]| -> Result<BTreeMap<ConstraintId, Vec<f64>>> {
        ids.iter()
            .map(|&id| {
                let c = p.constraint(id).expect("active ids come from the problem");
                Ok((id, c.grad(&act.at_point)?))
            })
            .collect()
    };
    Ok(LinearizedCone {
        eq_gradients: grads(&act.eq_ids)?,
        active_ineq_gradients: grads(&act.active_ineq_ids)?,
        at_point: act.at_point.clone(),
    })
}

/// `|<∇c_i, d>| <= tol (1 + ‖∇c_i‖ ‖d‖)` for equalities and
/// `<∇c_i, d> >= -tol (1 + ‖∇c_i‖ ‖d‖)` for active inequalities.
pub fn in_linearized_cone(lc: &LinearizedCone, d: &[f64], tol: f64) -> bool {
    d.len() == lc.at_point.len() && lc.violation(d, tol).is_none()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LicqCheck {
    pub licq: bool,
    /// `σ_min` of the active-gradient matrix; 0 when `m > n`, `None` when
    /// nothing is active.
    pub smallest_singular_value: Option<f64>,
    pub active_count: usize,
}

/// Full row rank of the `m x n` active-gradient matrix `A`:
/// `m <= n` and `σ_min(A) > tol_rank · max(1, σ_max(A))`.
pub fn licq_of(lc: &LinearizedCone, tol_rank: f64) -> LicqCheck {
    let a = lc.matrix();
    let (m, n) = a.shape();
    if m == 0 {
        return LicqCheck { licq: true, smallest_singular_value: None, active_count: 0 };
    }
    let s = singular_values(&a);
    let smax = s[0];
    let smin = if m > n { 0.0 } else { *s.last().expect("m >= 1 and n >= m") };
    LicqCheck { licq: m <= n && smin > tol_rank * smax.max(1.0), smallest_singular_value: Some(smin), active_count: m }
}

pub fn check_licq(p: &Problem, x: &[f64], tol_act: f64, tol_rank: f64) -> Result<LicqCheck> {
    if !(tol_rank > 0.0) {
        return Err(Error::InvalidTolerance(tol_rank));
    }
    Ok(licq_of(&linearized_cone(p, x, tol_act)?, tol_rank))
}

/// Structural test: every active constraint is recognized as affine.
pub fn linear_cq_of(p: &Problem, act: &ActiveSet) -> bool {
    act.ids().all(|id| p.constraint(id).and_then(|c| c.as_affine(p.n())).is_some())
}

pub fn check_linear_cq(p: &Problem, x: &[f64], tol_act: f64) -> Result<bool> {
    Ok(linear_cq_of(p, &active_set(p, x, tol_act)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqStatus {
    pub licq: bool,
    pub licq_smallest_singular_value: Option<f64>,
    pub linear_cq: bool,
    pub active_count: usize,
    pub note: String,
}

impl CqStatus {
    /// Either qualification holds, so linearized and tangent cones agree.
    pub fn any(&self) -> bool {
        self.licq || self.linear_cq
    }
}

pub(crate) fn assess_at(p: &Problem, act: &ActiveSet, lc: &LinearizedCone, tol_rank: f64) -> CqStatus {
    let licq = licq_of(lc, tol_rank);
    let linear_cq = linear_cq_of(p, act);
    let n = p.n();
    let note = match (licq.licq, linear_cq) {
        (true, true) => "LICQ and linear CQ hold".to_string(),
        (true, false) => "LICQ holds".to_string(),
        (false, true) => "linear CQ holds; active gradients are dependent".to_string(),
        (false, false) if licq.active_count > n => {
            format!("no CQ: {} active constraints exceed dimension {n}", licq.active_count)
        }
        (false, false) => "no CQ: active gradients are dependent and some are nonlinear".to_string(),
    };
    CqStatus {
        licq: licq.licq,
        licq_smallest_singular_value: licq.smallest_singular_value,
        linear_cq,
        active_count: licq.active_count,
        note,
    }
}

/// Both qualifications at a feasible `x`.
pub fn assess_cqs(p: &Problem, x: &[f64], tol_act: f64, tol_rank: f64) -> Result<CqStatus> {
    if !(tol_rank > 0.0) {
        return Err(Error::InvalidTolerance(tol_rank));
    }
    let act = active_set(p, x, tol_act)?;
    let lc = linearized_cone_at(p, &act)?;
    Ok(assess_at(p, &act, &lc, tol_rank))
}
