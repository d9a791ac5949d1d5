use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("division by zero in the prime field")]
    DivisionByZero,
    #[error("value {value} is not a canonical residue modulo {q}")]
    NonCanonical { value: u64, q: u64 },
    #[error("duplicate evaluation point {0}")]
    DuplicateEvaluationPoint(u64),
    #[error("decoding failure: {0}")]
    DecodingFailure(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("embedded range overflow: {0}")]
    RangeOverflow(String),
    #[error("cannot split {len} columns into {parts} equal parts")]
    NonDivisiblePartition { len: usize, parts: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("{workers} workers need {workers} distinct points but the field has only {q} elements")]
    TooManyWorkersForField { workers: usize, q: u64 },
    #[error("invalid code parameters: {0}")]
    InvalidCodeParams(String),
    #[error("not enough results: have {have}, need {need}")]
    NotEnoughResults { have: usize, need: usize },
    #[error("{workers} workers cannot be split into {groups} groups of at least {m}")]
    NonDivisibleGroups { workers: usize, groups: usize, m: usize },
    #[error("responses do not form a decodable set")]
    NotDecodable,
    #[error("invalid product-code grid: {0}")]
    InvalidGrid(String),
    #[error("scheme needs at least {need} workers, got {have}")]
    InsufficientWorkers { have: usize, need: usize },
    #[error("degenerate problem: both inputs are wide (s={s}, r={r}, t={t})")]
    DegenerateShape { s: usize, r: usize, t: usize },
    #[error("harness timed out before a decodable set of results arrived")]
    HarnessTimeout,
    #[error("invalid latency model: {0}")]
    InvalidModelParams(String),
    #[error("scheme never becomes decodable on this sample")]
    NeverDecodable,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
