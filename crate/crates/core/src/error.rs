use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty statistics window")]
    EmptyWindow,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("double removal of node {0}")]
    DoubleRemoval(usize),
    #[error("node id {0} out of range")]
    NodeOutOfRange(usize),
    #[error("unknown strategy `{name}`; known strategies: {known}")]
    UnknownStrategy { name: String, known: String },
    #[error("unknown policy `{0}`; known policies: scale-sensitive, isometry-invariant")]
    UnknownPolicy(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("no feasible action")]
    NoFeasibleAction,
    #[error("infeasible instance: {0}")]
    InfeasibleInstance(String),
    #[error("exact solver size limit: {n} nodes exceeds {limit}")]
    ExactSizeLimit { n: usize, limit: usize },
    #[error("logit vectors have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("reference objective must be positive, got {0}")]
    NonPositiveReference(f64),
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("strategy generator failed: {0}")]
    Generator(String),
    #[error("wrong problem kind: expected {expected}")]
    WrongKind { expected: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
