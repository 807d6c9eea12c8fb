//! First-order optimality certificates for smooth constrained problems
//!
//! ```text
//! min f(x)  s.t.  c_i(x) = 0 (i in E),  c_i(x) >= 0 (i in I),  x in R^n
//! ```
//!
//! The crate decides whether a candidate point satisfies the KKT conditions
//! and backs every verdict with a checkable certificate: multipliers from a
//! cone-membership certificate, or a linearized feasible descent direction
//! from a separating hyperplane. The pieces underneath are usable directly:
//!
//! - [`expr`]: expression parsing, forward-mode gradients, affinity detection
//! - [`problem`]: problems, feasibility, active sets, the Lagrangian
//! - [`cone`]: cone projection, Farkas dichotomy, conic Carathéodory
//! - [`cq`]: linearized feasible directions, LICQ and linear CQ
//! - [`tangent`]: numerical tangent-cone membership via feasible sequences
//! - [`kkt`]: multiplier recovery, KKT residuals, verdicts
//! - [`duality`]: dual objective with extended reals, weak duality checks
//! - [`catalog`]: analytic test problems with hand-derived ground truth

// `!(a <= b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cone;
pub mod cq;
pub mod duality;
mod error;
pub mod expr;
pub mod kkt;
pub mod linalg;
pub mod problem;
pub mod tangent;

pub use error::{Error, Result};
pub use expr::{parse, AffineForm, Expr, ExprError};
pub use problem::{ConstraintId, Multipliers, Problem};

/// Version string embedded in serialized reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
