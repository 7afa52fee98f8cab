//! Error type shared by all simulator modules.

use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong while assembling or running an exchange.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration field violates its invariant. Carries the field name
    /// and a short description of the violated constraint.
    InvalidConfig {
        field: &'static str,
        reason: &'static str,
    },
    /// A bit or slot sequence does not match the layout it is applied to.
    LengthMismatch { expected: usize, got: usize },
    /// A time or index argument falls outside its valid range.
    OutOfRange(&'static str),
    /// Two buffers that must share a sample rate do not.
    SampleRateMismatch { left: f64, right: f64 },
    /// Buffers passed to `dechirp` do not overlap in time.
    NoOverlap,
    /// An energy detector was used before calibration.
    Uncalibrated,
    /// Preamble calibration found no energy to reference against.
    CalibrationFailure,
    /// The spectrum has no peak above the configured floor; no reflection
    /// is present.
    NoPeak,
    /// The prover's processing delay exceeds the slot period, so the
    /// response cannot latch by the slot boundary.
    ProcessingTooSlow { t_p: f64, t_b: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig { field, reason } => {
                write!(f, "invalid config: {field}: {reason}")
            }
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::OutOfRange(what) => write!(f, "out of range: {what}"),
            Error::SampleRateMismatch { left, right } => {
                write!(f, "sample rate mismatch: {left} vs {right}")
            }
            Error::NoOverlap => write!(f, "buffers do not overlap in time"),
            Error::Uncalibrated => write!(f, "energy detector is not calibrated"),
            Error::CalibrationFailure => write!(f, "calibration failed: no preamble energy"),
            Error::NoPeak => write!(f, "no spectral peak above floor"),
            Error::ProcessingTooSlow { t_p, t_b } => write!(
                f,
                "prover processing delay {t_p} s exceeds slot period {t_b} s"
            ),
        }
    }
}

impl core::error::Error for Error {}
