//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors reported by the core algorithms.
///
/// Numeric routines never propagate NaN/Inf silently: a non-finite value in a
/// place that requires finite arithmetic surfaces as [`Error::NonFinite`].
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Vector or matrix dimensions do not line up.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A non-finite value appeared where finite arithmetic is required.
    NonFinite { what: &'static str },
    /// An operation that needs data received none (or too little).
    Empty(&'static str),
    /// A condition vector does not match the schema it is used with.
    SchemaMismatch(String),
    /// A categorical value outside the slot's vocabulary.
    UnknownCategory { slot: String, value: String },
    /// A parameter outside its documented domain (k > distinct count,
    /// k1 > k, max_lag >= series length, ...).
    InvalidParameter(String),
    /// A forward/backward cache used with a network it was not produced by.
    StaleCache,
    /// Training diverged: the loss became non-finite at the given epoch.
    Diverged { epoch: usize },
    /// Interpolation requested outside the stored condition range.
    OutOfRange { value: f64, min: f64, max: f64 },
    /// Extrapolation requested strictly inside the stored condition range.
    InRange { value: f64, min: f64, max: f64 },
    /// The two extreme condition values coincide; no extrapolation direction.
    DegenerateBracket,
    /// Extrapolating a nominal categorical condition has no defined order and
    /// is rejected rather than producing an incoherent latent.
    NominalExtrapolation { slot: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected dimension {expected}, got {got}"),
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::Empty(what) => write!(f, "{what} is empty"),
            Error::SchemaMismatch(msg) => write!(f, "schema mismatch: {msg}"),
            Error::UnknownCategory { slot, value } => {
                write!(f, "unknown category {value:?} for slot {slot:?}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::StaleCache => write!(f, "cache does not match the network it is used with"),
            Error::Diverged { epoch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}")
            }
            Error::OutOfRange { value, min, max } => {
                write!(f, "value {value} outside stored range [{min}, {max}]")
            }
            Error::InRange { value, min, max } => {
                write!(f, "value {value} inside stored range [{min}, {max}]")
            }
            Error::DegenerateBracket => write!(f, "extreme condition values coincide"),
            Error::NominalExtrapolation { slot } => write!(
                f,
                "cannot extrapolate nominal categorical slot {slot:?} beyond its vocabulary"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
