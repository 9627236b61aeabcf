use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Errors fall in three families: malformed input (`Input`-like variants),
/// resource limits (`Resource`), and internal contract violations
/// (`Contract`). An unsatisfiable instance is never an error.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown operation `{0}`")]
    UnknownOp(String),

    #[error("operation `{op}` takes {expected} argument(s), got {got}")]
    ArityMismatch {
        op: String,
        expected: usize,
        got: usize,
    },

    #[error("element {elem} is outside a universe of size {size}")]
    OutOfRange { elem: usize, size: usize },

    #[error("operation `{op}` is not idempotent: value at the diagonal of {elem} is {value}")]
    NotIdempotent { op: String, elem: usize, value: usize },

    #[error("malformed operation table for `{op}`: {reason}")]
    BadTable { op: String, reason: String },

    #[error("signature mismatch: {0}")]
    Signature(String),

    #[error("generating set is empty")]
    EmptySeed,

    #[error("not a congruence: {0}")]
    NotCongruence(String),

    #[error("not a subuniverse: {0}")]
    NotSubuniverse(String),

    #[error("relation is not invariant: {0}")]
    NotInvariant(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("internal contract violation: {0}")]
    Contract(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) => 3,
            Error::Contract(_) => 4,
            _ => 2,
        }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
