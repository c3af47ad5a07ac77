use thiserror::Error;

pub type Result<T> = std::result::Result<T, MprError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MprError {
    #[error("division by the zero function")]
    DivisionByZeroFunction,
    #[error("linear system is singular (determinant vanishes identically)")]
    SingularSystem,
    #[error("determinant vanishes at the evaluation point {0}")]
    DegenerateAtPoint(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("syntax error at line {line}, column {col}: {message}")]
    SyntaxError { line: usize, col: usize, message: String },
    #[error("moment sequence infeasible at t = {t}: Hankel minor {minor} is not positive")]
    MomentInfeasible { t: String, minor: usize },
    #[error("missing moment order g[{0}]")]
    MissingOrder(usize),
    #[error("moment order g[{0}] assigned twice")]
    DuplicateOrder(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("order {requested} out of range (available up to {available})")]
    OrderOutOfRange { requested: usize, available: usize },
    #[error("g[{0}] is not a polynomial in t")]
    NonPolynomialTime(usize),

    #[error("martingale certification failed at order {order}: residual {residual}")]
    CertificationFailed { order: usize, residual: String },
    #[error("moments of order {needed} required, model provides {available}")]
    InsufficientMoments { needed: usize, available: usize },
    #[error("time order violated: {0}")]
    TimeOrderViolation(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("recombination coefficient at order {order} is not constant: {coefficient}")]
    NotConstant { order: usize, coefficient: String },
    #[error("degenerate time triple: {0}")]
    DegenerateTriple(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}
