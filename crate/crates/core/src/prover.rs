//! The low-power prover: an always-on reflecting circuit plus a response
//! circuit built around a per-slot energy detector.
//!
//! The reflecting path is transparent (constant gain, zero added delay).
//! The response path demodulates each challenge by slot energy, computes the
//! response bit with a pluggable function, and load-modulates it onto the
//! reflected chirp in the matching response slot. Demodulation is pipelined
//! during the challenge slot, so the model requires `t_p <= t_b`: the
//! response decision must latch by the slot boundary, otherwise an honest
//! prover would look like a late-commit attacker.

use alloc::vec::Vec;

use crate::buffer::{BitVector, WaveformBuffer};
use crate::channel::{add_noise, NoiseSpec};
use crate::error::{Error, Result};
use crate::waveform::{preamble_bit, FrameLayout, SlotRole};

/// Energy threshold policy. One mode: threshold at 6 dB below the
/// calibrated energy of a '1' slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    SixDbBelowRef,
}

/// Slot-energy detector with its per-frame calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDetectorConfig {
    pub threshold_mode: ThresholdMode,
    /// Calibrated slot energy of a '1' bit; 0 means uncalibrated.
    pub reference_energy: f64,
}

impl EnergyDetectorConfig {
    pub fn uncalibrated() -> Self {
        Self {
            threshold_mode: ThresholdMode::SixDbBelowRef,
            reference_energy: 0.0,
        }
    }

    pub fn with_reference(reference_energy: f64) -> Self {
        Self {
            threshold_mode: ThresholdMode::SixDbBelowRef,
            reference_energy,
        }
    }

    /// Decision threshold: `reference_energy * 10^(-6/10)`.
    pub fn threshold(&self) -> Result<f64> {
        if self.reference_energy <= 0.0 {
            return Err(Error::Uncalibrated);
        }
        Ok(self.reference_energy * libm::pow(10.0, -0.6))
    }
}

/// Sum of |x|^2 over the samples of slot `slot`.
pub fn detect_slot_energy(w: &WaveformBuffer, layout: &FrameLayout, slot: usize) -> Result<f64> {
    if slot >= layout.n_slots() {
        return Err(Error::OutOfRange("slot index"));
    }
    let range = layout.slot_range(slot);
    if range.end > w.len() {
        return Err(Error::OutOfRange("slot extends past buffer"));
    }
    Ok(w.samples()[range].iter().map(|s| s.norm_sqr()).sum())
}

/// Threshold decision: 1 iff `energy >= reference * 10^(-0.6)`.
///
/// Ties demodulate as 1; under noise the tie is a measure-zero event, and a
/// deterministic rule keeps reruns reproducible.
pub fn demodulate_slot(energy: f64, det: &EnergyDetectorConfig) -> Result<bool> {
    Ok(energy >= det.threshold()?)
}

/// Calibrate a detector from the on-bits of the received preamble, taking
/// the maximum observed '1'-slot energy as the reference.
pub fn calibrate_detector(
    w: &WaveformBuffer,
    layout: &FrameLayout,
) -> Result<EnergyDetectorConfig> {
    let mut reference = 0.0f64;
    for slot in 0..layout.n_slots() {
        if let SlotRole::Preamble(i) = layout.role(slot) {
            if preamble_bit(i) {
                reference = reference.max(detect_slot_energy(w, layout, slot)?);
            }
        }
    }
    if reference <= 0.0 {
        return Err(Error::CalibrationFailure);
    }
    Ok(EnergyDetectorConfig::with_reference(reference))
}

/// Challenge-to-response mapping, with whatever secret state it needs.
///
/// Any processing function from the distance-bounding literature can slot in
/// here; the physical layer does not care which.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseFunction {
    /// r = NOT c.
    Invert,
    /// r_i = c_i XOR key_i.
    XorKey(BitVector),
    /// Hancke-Kuhn style register select: r_i = R0_i if c_i = 0 else R1_i.
    HkRegister { r0: BitVector, r1: BitVector },
}

impl ResponseFunction {
    /// Check the secret material covers `pair_count` rounds.
    pub fn validate(&self, pair_count: usize) -> Result<()> {
        let check = |bits: &BitVector| {
            if bits.len() == pair_count {
                Ok(())
            } else {
                Err(Error::LengthMismatch {
                    expected: pair_count,
                    got: bits.len(),
                })
            }
        };
        match self {
            ResponseFunction::Invert => Ok(()),
            ResponseFunction::XorKey(key) => check(key),
            ResponseFunction::HkRegister { r0, r1 } => {
                check(r0)?;
                check(r1)
            }
        }
    }

    /// Response bit for round `i` given challenge bit `c`.
    pub fn compute(&self, c: bool, i: usize) -> Result<bool> {
        match self {
            ResponseFunction::Invert => Ok(!c),
            ResponseFunction::XorKey(key) => {
                if i >= key.len() {
                    return Err(Error::OutOfRange("round index past key length"));
                }
                Ok(c ^ key[i])
            }
            ResponseFunction::HkRegister { r0, r1 } => {
                let reg = if c { r1 } else { r0 };
                if i >= reg.len() {
                    return Err(Error::OutOfRange("round index past register length"));
                }
                Ok(reg[i])
            }
        }
    }

    /// Responses for a whole challenge vector.
    pub fn apply_all(&self, challenges: &BitVector) -> Result<BitVector> {
        self.validate(challenges.len())?;
        challenges
            .iter()
            .enumerate()
            .map(|(i, c)| self.compute(c, i))
            .collect()
    }
}

/// Static prover parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProverConfig {
    /// Challenge processing delay (s). The measured prototype value is
    /// about 19.5 ns.
    pub t_p: f64,
    /// Gain of the reflecting circuit (dB).
    pub reflect_gain_db: f64,
    pub response_fn: ResponseFunction,
}

impl ProverConfig {
    /// Default prover: 19.5 ns processing delay, unity reflection, invert.
    pub fn invert() -> Self {
        Self {
            t_p: 19.5e-9,
            reflect_gain_db: 0.0,
            response_fn: ResponseFunction::Invert,
        }
    }

    pub fn with_response(response_fn: ResponseFunction) -> Self {
        Self {
            response_fn,
            ..Self::invert()
        }
    }
}

/// What the prover did during one frame.
#[derive(Debug, Clone)]
pub struct ProverTranscript {
    /// The load-modulated reflection sent back to the verifier.
    pub reflection: WaveformBuffer,
    /// Challenge bits as the prover's detector read them.
    pub demodulated_challenges: BitVector,
    /// Response bits it gated onto the response slots.
    pub responses: BitVector,
}

/// A prover committed to one exchange, holding its per-frame calibration.
#[derive(Debug, Clone)]
pub struct Prover {
    cfg: ProverConfig,
    detector: EnergyDetectorConfig,
}

impl Prover {
    /// Commit a prover to a layout. Rejects configurations whose processing
    /// delay cannot latch the response by the slot boundary.
    pub fn new(cfg: ProverConfig, layout: &FrameLayout) -> Result<Self> {
        if cfg.t_p > layout.t_b() {
            return Err(Error::ProcessingTooSlow {
                t_p: cfg.t_p,
                t_b: layout.t_b(),
            });
        }
        cfg.response_fn.validate(layout.pair_count())?;
        Ok(Self {
            cfg,
            detector: EnergyDetectorConfig::uncalibrated(),
        })
    }

    pub fn config(&self) -> &ProverConfig {
        &self.cfg
    }

    /// Detector state after the last `respond` (calibrated from that frame).
    pub fn detector(&self) -> &EnergyDetectorConfig {
        &self.detector
    }

    /// Process one received frame: reflect everything at the configured
    /// gain, demodulate the challenges, and gate the response slots with the
    /// computed response bits (full-index OOK).
    ///
    /// `front_end_noise` models the detector path's receiver noise. It only
    /// affects demodulation: the reflecting circuit is passive and bounces
    /// the incident wave, not the detector's noisy view of it.
    pub fn respond(
        &mut self,
        rx: &WaveformBuffer,
        layout: &FrameLayout,
        front_end_noise: &NoiseSpec,
        noise_reference_power: f64,
    ) -> Result<ProverTranscript> {
        if rx.len() != layout.n_samples() {
            return Err(Error::LengthMismatch {
                expected: layout.n_samples(),
                got: rx.len(),
            });
        }

        let detector_view = if front_end_noise.is_noiseless() {
            rx.clone()
        } else {
            add_noise(rx, front_end_noise, noise_reference_power)
        };

        self.detector = calibrate_detector(&detector_view, layout)?;
        let mut challenges = Vec::with_capacity(layout.pair_count());
        for i in 0..layout.pair_count() {
            let e = detect_slot_energy(&detector_view, layout, layout.challenge_slot(i))?;
            challenges.push(demodulate_slot(e, &self.detector)?);
        }
        let challenges = BitVector::new(challenges);

        let responses: BitVector = challenges
            .iter()
            .enumerate()
            .map(|(i, c)| self.cfg.response_fn.compute(c, i))
            .collect::<Result<_>>()?;

        let mut reflection = rx.clone();
        let gain = libm::pow(10.0, self.cfg.reflect_gain_db / 20.0);
        if gain != 1.0 {
            reflection.scale(gain);
        }
        for i in 0..layout.pair_count() {
            if !responses[i] {
                let range = layout.slot_range(layout.response_slot(i));
                for s in &mut reflection.samples_mut()[range] {
                    *s = num_complex::Complex64::new(0.0, 0.0);
                }
            }
        }

        Ok(ProverTranscript {
            reflection,
            demodulated_challenges: challenges,
            responses,
        })
    }
}
