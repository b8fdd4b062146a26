use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed PGM: {0}")]
    Parse(String),

    #[error("unsupported PGM depth: maxval {0} exceeds 255")]
    UnsupportedDepth(u32),

    /// A caller violated an operation's precondition (shape, range, size guard).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The matrix handed to an orthonormalization step does not have full
    /// column rank. `ratio` is sigma_min / sigma_max of the offending matrix.
    #[error("degenerate rank: singular-value ratio {ratio:e} ({hint})")]
    DegenerateRank { ratio: f64, hint: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! contract {
    ($cond:expr, $($arg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err($crate::Error::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use contract;
