//! Core library for an OOK-FMCW distance-bounding simulator.
//!
//! The crate models the full physical layer of a chirp-based ranging and
//! rapid-bit-exchange system at complex baseband: FMCW chirp generation and
//! on-off-keyed framing ([`waveform`]), propagation legs and receiver noise
//! ([`channel`]), a low-power reflecting prover ([`prover`]), the verifier's
//! dechirp/range/demodulate/detect pipeline ([`verifier`]), and physical-layer
//! adversaries ([`attacks`]).
//!
//! Everything here is pure computation over sample buffers; the companion
//! `fmcwdb` crate adds the CLI, experiment runners, and file formats. The
//! crate is `no_std` (with `alloc`) so the signal path can be reused in
//! embedded or wasm hosts.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod attacks;
pub mod buffer;
pub mod channel;
pub mod error;
pub mod fft;
pub mod prover;
pub mod verifier;
pub mod waveform;

pub use buffer::{BitVector, WaveformBuffer};
pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Propagation speed used for all delay/distance conversions (m/s).
///
/// The round value (not the CODATA one) keeps derived quantities like the
/// range resolution at 80 MHz exactly 1.875 m.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
