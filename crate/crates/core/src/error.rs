use thiserror::Error;

/// Errors raised by the toolkit. Pipeline failures of the shift method are
/// not errors; they are reported inside `ShiftOutcome`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sparsity of an empty family is undefined")]
    EmptyFamily,
    #[error("complement sparsity of a full family is undefined")]
    FullFamily,
    #[error("{what}: predicted size {predicted} exceeds the enumeration cap {cap}")]
    TooLarge {
        what: &'static str,
        predicted: u128,
        cap: u64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("extension length {length} exceeds ground size {n}")]
    LengthOverflow { length: u64, n: u32 },
    #[error("term is not in the DNF of the root")]
    NotInDnf,
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Upper bound on the number of objects an enumerative operation may produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub cap: u64,
}

pub const DEFAULT_CAP: u64 = 10_000_000;
pub const CAP_ENV: &str = "HAMMING_FORGE_CAP";

impl Default for Limits {
    fn default() -> Self {
        Limits { cap: DEFAULT_CAP }
    }
}

impl Limits {
    pub fn new(cap: u64) -> Self {
        Limits { cap }
    }

    /// Default cap, overridden by `HAMMING_FORGE_CAP` when it parses.
    pub fn from_env() -> Self {
        std::env::var(CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(Limits::new)
            .unwrap_or_default()
    }

    pub(crate) fn check(&self, what: &'static str, predicted: u128) -> Result<()> {
        if predicted > self.cap as u128 {
            Err(Error::TooLarge {
                what,
                predicted,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }
}
