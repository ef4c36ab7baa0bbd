use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("size guard: {0}")]
    SizeGuard(String),
    #[error("unknown ball id {0}")]
    UnknownBall(usize),
    #[error("unknown atom {0}")]
    UnknownAtom(usize),
    #[error("empty set")]
    EmptySet,
    #[error("no ball contains ball {ball} together with atom {atom}")]
    NoContainingBall { atom: usize, ball: usize },
    #[error("basis is not doubling")]
    NotDoubling,
    #[error("basis is not a martingale filtration")]
    NotMartingale,
    #[error("exhaustive search over {size} atoms is too large")]
    OracleTooLarge { size: usize },
    #[error("regularity condition {condition} violated: {witness}")]
    RegularityViolation { condition: String, witness: String },
    #[error("family is not complete at atom {atom}: ball {ball} has no dominating member")]
    IncompleteFamily { atom: usize, ball: usize },
    #[error("sign missing for ball {0}")]
    MissingSign(usize),
    #[error("empty operator family")]
    EmptyFamily,
    #[error("ball {a} is not contained in ball {b}")]
    NotComparable { a: usize, b: usize },
    #[error("atom {atom} is not covered by the family")]
    NotACover { atom: usize },
    #[error("postcondition {condition} failed: {witness}")]
    PostconditionFailure { condition: String, witness: String },
    #[error("exceptional set of ball {ball} has relative measure {ratio} >= alpha = {alpha}")]
    AlphaViolated { ball: usize, ratio: f64, alpha: f64 },
    #[error("construction failed: {reason}")]
    ConstructionFailure { reason: String, transcript: Vec<String> },
    #[error("nesting violated: node {child} is not inside its parent {parent}")]
    NestingViolated { child: usize, parent: usize },
    #[error("no lambda up to {lambda} gave an admissible construction (last alpha {alpha})")]
    LambdaExhausted { lambda: f64, alpha: f64 },
    #[error("family is not restricted: {0}")]
    NotRestricted(String),
    #[error("beta = {0} outside (1/2, 1)")]
    BetaOutOfRange(f64),
    #[error("BMO norm is zero")]
    ZeroBmoNorm,
    #[error("infimum of g vanishes on ball {ball}")]
    InfZero { ball: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
