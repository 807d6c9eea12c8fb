use crate::expr::ExprError;
use crate::problem::ConstraintId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("constraint id {0} used more than once")]
    DuplicateId(ConstraintId),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("multiplier ids do not match the problem's constraint ids")]
    MultiplierKeys,
    #[error("point is infeasible (max equality violation {max_eq:e}, max inequality violation {max_ineq:e})")]
    Infeasible { max_eq: f64, max_ineq: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("matrix is rank deficient (rank {rank} < {required})")]
    RankDeficient { rank: usize, required: usize },
    #[error("cone projection did not reach optimality after {iterations} iterations (complementarity {complementarity:e}, max dual gradient {max_gradient:e})")]
    Projection { iterations: usize, complementarity: f64, max_gradient: f64 },
    #[error("internal certificate check failed: {0}")]
    Certificate(String),
    #[error("vector is not in the cone (distance {0:e})")]
    NotInCone(f64),
    #[error("{count} generators exceed the exhaustive-search limit {limit}")]
    TooManyGenerators { count: usize, limit: usize },
    #[error("constraint qualification not satisfied: {0}")]
    CqNotSatisfied(String),
    #[error("direction is not a linearized feasible direction (constraint {id}, inner product {inner:e})")]
    NotLinearizedFeasible { id: ConstraintId, inner: f64 },
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("tangent direction {0} is not certified")]
    UncertifiedDirection(usize),
    #[error("KKT precondition failed: {0}")]
    KktPrecondition(String),
    #[error("problem has equality constraints; only inequality-constrained problems are supported here")]
    EqualityConstraintsPresent,
    #[error("multiplier for inequality {id} is negative ({value})")]
    NegativeMultiplier { id: ConstraintId, value: f64 },
    #[error("sample point {0} is infeasible")]
    InfeasibleSample(usize),
    #[error("convexity guard failed: {0}")]
    Convexity(String),
    #[error("problem file: {0}")]
    ProblemFile(String),
}
