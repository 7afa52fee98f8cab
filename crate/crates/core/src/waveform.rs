//! FMCW chirp generation, challenge/response slot layout, and on-off keying.
//!
//! Signals are complex baseband relative to the sweep start `f0`: the beat
//! frequency read by the verifier depends only on the sweep rate and the
//! round-trip delay, so carrying the 2.4 GHz carrier would only force a
//! multi-GS/s grid for nothing. `f0` stays in the config for reporting and
//! absolute-frequency queries.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use num_complex::Complex64;

use crate::buffer::{samples_for_duration, BitVector, WaveformBuffer};
use crate::error::{Error, Result};

/// Chirp sweep parameters.
///
/// The sweep rate is always derived as `bandwidth / duration`, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpConfig {
    /// Sweep start frequency (Hz). Metadata only at baseband.
    pub f0: f64,
    /// Swept bandwidth (Hz).
    pub bandwidth: f64,
    /// Chirp duration (s).
    pub duration: f64,
    /// Sample rate (samples/s).
    pub fs: f64,
}

impl ChirpConfig {
    pub fn new(f0: f64, bandwidth: f64, duration: f64, fs: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidConfig {
                field: "bandwidth",
                reason: "must be positive",
            });
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidConfig {
                field: "duration",
                reason: "must be positive",
            });
        }
        if !(fs.is_finite() && fs >= 2.0 * bandwidth) {
            return Err(Error::InvalidConfig {
                field: "fs",
                reason: "must be >= 2x bandwidth (complex-baseband Nyquist)",
            });
        }
        Ok(Self {
            f0,
            bandwidth,
            duration,
            fs,
        })
    }

    /// Config with the default oversampling of 4x the swept bandwidth.
    pub fn with_default_fs(f0: f64, bandwidth: f64, duration: f64) -> Result<Self> {
        Self::new(f0, bandwidth, duration, 4.0 * bandwidth)
    }

    /// Sweep rate `k` in Hz/s.
    pub fn sweep_rate(&self) -> f64 {
        self.bandwidth / self.duration
    }

    /// Number of samples in one chirp.
    pub fn n_samples(&self) -> usize {
        samples_for_duration(self.duration, self.fs)
    }

    /// Nominal maximum measurable distance, `c * T`. Reported for
    /// completeness only: the operational limits are the Nyquist band of
    /// the beat spectrum and the dechirp overlap, both enforced where they
    /// bind.
    pub fn nominal_max_distance(&self) -> f64 {
        crate::SPEED_OF_LIGHT * self.duration
    }
}

/// Absolute instantaneous frequency of the sweep at time `t`: `f0 + k t`.
pub fn instantaneous_frequency(cfg: &ChirpConfig, t: f64) -> Result<f64> {
    if !(0.0..=cfg.duration).contains(&t) {
        return Err(Error::OutOfRange("t outside [0, duration]"));
    }
    Ok(cfg.f0 + cfg.sweep_rate() * t)
}

/// Generate one unit-amplitude baseband chirp starting at t = 0.
///
/// The baseband phase is the integral of the sweep, `phi(t) = pi k t^2`, so
/// the instantaneous baseband frequency at time `t` is `k t` (absolute
/// `f0 + k t`).
pub fn generate_chirp(cfg: &ChirpConfig) -> WaveformBuffer {
    let k = cfg.sweep_rate();
    let n = cfg.n_samples();
    let samples: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64 / cfg.fs;
            let phase = PI * k * t * t;
            Complex64::new(libm::cos(phase), libm::sin(phase))
        })
        .collect();
    WaveformBuffer::new(samples, cfg.fs, 0.0)
}

/// Role of one slot in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    /// Synchronization/calibration slot carrying a fixed known bit.
    Preamble(usize),
    /// Challenge slot for round `i`.
    Challenge(usize),
    /// Response slot for round `i`.
    Response(usize),
}

/// Fixed preamble bit pattern, repeated cyclically over the preamble slots.
///
/// The first slot is always on so detector calibration has a known-on
/// reference; the embedded zero gives the sync correlator an edge.
pub const PREAMBLE_PATTERN: [bool; 4] = [true, false, true, true];

/// Bit carried by preamble slot `i`.
pub fn preamble_bit(i: usize) -> bool {
    PREAMBLE_PATTERN[i % PREAMBLE_PATTERN.len()]
}

/// Slot structure of one chirp frame.
///
/// The frame is `preamble_slots` preamble slots followed by alternating
/// challenge/response slots, one pair per rapid-bit-exchange round. Slot
/// edges are quantized to the nearest sample; the final slot absorbs any
/// remainder so every sample belongs to exactly one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    t_b: f64,
    preamble_slots: usize,
    pair_count: usize,
    slot_map: Vec<SlotRole>,
    /// `n_slots + 1` sample boundaries; slot `s` spans `[b[s], b[s+1])`.
    boundaries: Vec<usize>,
}

impl FrameLayout {
    /// Divide the chirp of `cfg` into slots of period `t_b`.
    ///
    /// `t_b` must tile the chirp duration to within one sample period, and
    /// the slots left after the preamble must form at least one whole
    /// challenge/response pair.
    pub fn new(cfg: &ChirpConfig, t_b: f64, preamble_slots: usize) -> Result<Self> {
        if !(t_b.is_finite() && t_b > 0.0) {
            return Err(Error::InvalidConfig {
                field: "t_b",
                reason: "must be positive",
            });
        }
        if t_b * cfg.fs < 1.0 {
            return Err(Error::InvalidConfig {
                field: "t_b",
                reason: "must span at least one sample",
            });
        }
        let n_slots = libm::round(cfg.duration / t_b) as usize;
        if n_slots == 0 || libm::fabs(n_slots as f64 * t_b - cfg.duration) > 1.0 / cfg.fs {
            return Err(Error::InvalidConfig {
                field: "t_b",
                reason: "must divide the chirp duration within one sample period",
            });
        }
        let data_slots = n_slots
            .checked_sub(preamble_slots)
            .ok_or(Error::InvalidConfig {
                field: "preamble_slots",
                reason: "exceeds the total slot count",
            })?;
        if data_slots < 2 || data_slots % 2 != 0 {
            return Err(Error::InvalidConfig {
                field: "preamble_slots",
                reason: "slots after the preamble must form at least one whole pair",
            });
        }
        let pair_count = data_slots / 2;

        let n_samples = cfg.n_samples();
        let mut boundaries: Vec<usize> = (0..n_slots)
            .map(|s| {
                let edge = libm::round(s as f64 * t_b * cfg.fs) as usize;
                edge.min(n_samples)
            })
            .collect();
        boundaries.push(n_samples);

        let mut slot_map = Vec::with_capacity(n_slots);
        for i in 0..preamble_slots {
            slot_map.push(SlotRole::Preamble(i));
        }
        for i in 0..pair_count {
            slot_map.push(SlotRole::Challenge(i));
            slot_map.push(SlotRole::Response(i));
        }

        Ok(Self {
            t_b,
            preamble_slots,
            pair_count,
            slot_map,
            boundaries,
        })
    }

    pub fn t_b(&self) -> f64 {
        self.t_b
    }

    pub fn n_slots(&self) -> usize {
        self.slot_map.len()
    }

    pub fn preamble_slots(&self) -> usize {
        self.preamble_slots
    }

    /// Number of challenge/response rounds.
    pub fn pair_count(&self) -> usize {
        self.pair_count
    }

    pub fn role(&self, slot: usize) -> SlotRole {
        self.slot_map[slot]
    }

    pub fn slot_map(&self) -> &[SlotRole] {
        &self.slot_map
    }

    /// Sample index range of slot `slot`.
    pub fn slot_range(&self, slot: usize) -> Range<usize> {
        self.boundaries[slot]..self.boundaries[slot + 1]
    }

    /// Total samples in the frame.
    pub fn n_samples(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    /// Slot index of challenge `i`.
    pub fn challenge_slot(&self, i: usize) -> usize {
        self.preamble_slots + 2 * i
    }

    /// Slot index of response `i`.
    pub fn response_slot(&self, i: usize) -> usize {
        self.preamble_slots + 2 * i + 1
    }

    /// Samples per nominal slot (`t_b * fs`, rounded).
    pub fn samples_per_slot(&self, fs: f64) -> usize {
        libm::round(self.t_b * fs) as usize
    }
}

/// Per-slot modulation directive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotBit {
    /// Carry the chirp at full amplitude (bit 1).
    On,
    /// Attenuate by the modulation index (bit 0).
    Off,
    /// Leave the slot untouched.
    Transparent,
}

impl SlotBit {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            SlotBit::On
        } else {
            SlotBit::Off
        }
    }
}

/// Apply on-off keying to a frame: slots marked `Off` are scaled by
/// `1 - modulation_index`, everything else passes through.
///
/// `modulation_index` of 1.0 is classic OOK (off slots are silent); smaller
/// values leave a residual carrier in off slots.
pub fn ook_modulate(
    frame: &WaveformBuffer,
    layout: &FrameLayout,
    slot_bits: &[SlotBit],
    modulation_index: f64,
) -> Result<WaveformBuffer> {
    if slot_bits.len() != layout.n_slots() {
        return Err(Error::LengthMismatch {
            expected: layout.n_slots(),
            got: slot_bits.len(),
        });
    }
    if !(modulation_index > 0.0 && modulation_index <= 1.0) {
        return Err(Error::InvalidConfig {
            field: "modulation_index",
            reason: "must lie in (0, 1]",
        });
    }
    if frame.len() != layout.n_samples() {
        return Err(Error::LengthMismatch {
            expected: layout.n_samples(),
            got: frame.len(),
        });
    }

    let mut out = frame.clone();
    let off_gain = 1.0 - modulation_index;
    for (slot, bit) in slot_bits.iter().enumerate() {
        if let SlotBit::Off = bit {
            for s in &mut out.samples_mut()[layout.slot_range(slot)] {
                *s *= off_gain;
            }
        }
    }
    Ok(out)
}

/// Per-slot bits of the verifier's interrogation: the fixed preamble
/// pattern, the challenge bits, and always-on response slots.
pub fn interrogation_slot_bits(layout: &FrameLayout, challenges: &BitVector) -> Vec<SlotBit> {
    layout
        .slot_map()
        .iter()
        .map(|role| match role {
            SlotRole::Preamble(i) => SlotBit::from_bit(preamble_bit(*i)),
            SlotRole::Challenge(i) => SlotBit::from_bit(challenges[*i]),
            SlotRole::Response(_) => SlotBit::On,
        })
        .collect()
}

/// Build the verifier's interrogation frame: preamble, OOK'd challenges, and
/// unmodulated chirp in the response slots for the prover to reflect.
pub fn build_interrogation(
    cfg: &ChirpConfig,
    layout: &FrameLayout,
    challenges: &BitVector,
    modulation_index: f64,
) -> Result<WaveformBuffer> {
    if challenges.len() != layout.pair_count() {
        return Err(Error::LengthMismatch {
            expected: layout.pair_count(),
            got: challenges.len(),
        });
    }
    let chirp = generate_chirp(cfg);
    let bits = interrogation_slot_bits(layout, challenges);
    ook_modulate(&chirp, layout, &bits, modulation_index)
}
