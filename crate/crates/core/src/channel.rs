//! One-way propagation legs and receiver-referred additive noise.
//!
//! A leg delays a buffer by `distance / c + extra_delay` and applies an
//! explicit amplitude gain. The delay is carried exactly in the buffer's
//! time origin; fractional-sample resampling happens once, at the verifier
//! front-end, where buffers from different grids must be mixed (see
//! [`crate::verifier::dechirp`]). Path loss is not derived from distance:
//! the analysis only ever uses SNR, so gains are explicit.
//!
//! Noise is injected at receiving front-ends (the prover's detector input
//! and the verifier's receiver), never per-leg: a passive reflection does
//! not re-radiate the receiver's own noise.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::{BitVector, WaveformBuffer};
use crate::waveform::{preamble_bit, FrameLayout, SlotRole};
use crate::SPEED_OF_LIGHT;

/// One propagation leg: geometric distance plus any hardware latency
/// inserted on the path, and an explicit amplitude gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegParams {
    /// One-way distance (m).
    pub distance: f64,
    /// Amplitude gain (dB).
    pub gain_db: f64,
    /// Additional latency on this leg, e.g. relay hardware (s).
    pub extra_delay: f64,
}

impl LegParams {
    pub fn new(distance: f64) -> Self {
        Self {
            distance,
            gain_db: 0.0,
            extra_delay: 0.0,
        }
    }

    pub fn with_extra_delay(distance: f64, extra_delay: f64) -> Self {
        Self {
            distance,
            gain_db: 0.0,
            extra_delay,
        }
    }

    /// Total one-way delay of this leg (s).
    pub fn delay(&self) -> f64 {
        self.distance / SPEED_OF_LIGHT + self.extra_delay
    }

    /// Linear amplitude gain.
    pub fn amplitude_gain(&self) -> f64 {
        libm::pow(10.0, self.gain_db / 20.0)
    }
}

/// Propagate a buffer over one leg: advance its time origin by the leg
/// delay and scale by the leg gain.
///
/// The sample values themselves are not resampled, so the delay is exact
/// (no quantization to the sample grid) and legs compose exactly.
pub fn propagate(w: &WaveformBuffer, leg: &LegParams) -> WaveformBuffer {
    assert!(leg.distance >= 0.0, "leg distance must be nonnegative");
    assert!(leg.extra_delay >= 0.0, "extra delay must be nonnegative");
    let mut out = w.clone();
    out.set_t0(w.t0() + leg.delay());
    let gain = leg.amplitude_gain();
    if gain != 1.0 {
        out.scale(gain);
    }
    out
}

/// Receiver noise description: target SNR and the RNG seed that makes the
/// sample stream reproducible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Signal-to-noise ratio (dB). `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        Self { snr_db, seed }
    }

    /// Noise disabled.
    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }
}

/// One draw of a circularly-symmetric complex Gaussian with unit total
/// variance (each component N(0, 1/2)).
fn complex_gaussian<R: RngCore>(rng: &mut R) -> Complex64 {
    let uniform = |r: &mut R| {
        // (0, 1]: never feeds ln() a zero.
        1.0 - (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    };
    let radius = libm::sqrt(-libm::log(uniform(rng)));
    let theta = 2.0 * core::f64::consts::PI * uniform(rng);
    Complex64::new(radius * libm::cos(theta), radius * libm::sin(theta))
}

/// Add circularly-symmetric white Gaussian noise with per-sample variance
/// `reference_power / 10^(snr_db/10)`.
///
/// `reference_power` is the mean on-sample power of the clean signal at
/// this receiver (see [`on_slot_reference_power`]); OOK off-slots carry no
/// power and must not be averaged in, or the effective per-bit SNR silently
/// inflates.
pub fn add_noise(w: &WaveformBuffer, spec: &NoiseSpec, reference_power: f64) -> WaveformBuffer {
    if spec.is_noiseless() {
        return w.clone();
    }
    assert!(reference_power > 0.0, "reference power must be positive");
    let variance = reference_power / libm::pow(10.0, spec.snr_db / 10.0);
    let sigma = libm::sqrt(variance);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = w.clone();
    for s in out.samples_mut() {
        *s += complex_gaussian(&mut rng) * sigma;
    }
    out
}

/// Mean |x|^2 over the samples of the given slots.
pub fn mean_power_in_slots(w: &WaveformBuffer, layout: &FrameLayout, slots: &[usize]) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for &slot in slots {
        for s in &w.samples()[layout.slot_range(slot)] {
            acc += s.norm_sqr();
        }
        n += layout.slot_range(slot).len();
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

/// Slots of a clean exchange signal that carry chirp energy: on-bit preamble
/// slots, on-bit challenge slots, and response slots. When `responses` is
/// known (after the prover gates them), only on-bit response slots count;
/// before that, all response slots carry the unmodulated chirp.
pub fn on_slot_indices(
    layout: &FrameLayout,
    challenges: &BitVector,
    responses: Option<&BitVector>,
) -> alloc::vec::Vec<usize> {
    layout
        .slot_map()
        .iter()
        .enumerate()
        .filter(|(_, role)| match role {
            SlotRole::Preamble(i) => preamble_bit(*i),
            SlotRole::Challenge(i) => challenges[*i],
            SlotRole::Response(i) => responses.is_none_or(|r| r[*i]),
        })
        .map(|(slot, _)| slot)
        .collect()
}

/// SNR reference power at a receiver: mean power over the on-samples of the
/// clean signal arriving there.
pub fn on_slot_reference_power(
    w: &WaveformBuffer,
    layout: &FrameLayout,
    challenges: &BitVector,
    responses: Option<&BitVector>,
) -> f64 {
    mean_power_in_slots(w, layout, &on_slot_indices(layout, challenges, responses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{build_interrogation, generate_chirp, ChirpConfig};

    fn cfg() -> ChirpConfig {
        ChirpConfig::with_default_fs(2.4e9, 100e6, 10e-6).unwrap()
    }

    #[test]
    fn identity_leg_is_sample_identical() {
        let w = generate_chirp(&cfg());
        let out = propagate(&w, &LegParams::new(0.0));
        assert_eq!(out, w);
    }

    #[test]
    fn three_meters_is_ten_nanoseconds() {
        let leg = LegParams::new(3.0);
        assert!((leg.delay() - 10e-9).abs() < 1e-22);
    }

    #[test]
    fn round_trip_delay_composes() {
        let w = generate_chirp(&cfg());
        let leg = LegParams::new(3.0);
        let out = propagate(&propagate(&w, &leg), &leg);
        assert!((out.t0() - 20e-9).abs() < 1e-22);
        // Beat frequency this delay will produce: k * tau = 200 kHz.
        assert!((cfg().sweep_rate() * out.t0() - 200e3).abs() < 1e-6);
    }

    #[test]
    fn delay_composition_matches_single_leg() {
        let w = generate_chirp(&cfg());
        let a = LegParams {
            distance: 1.7,
            gain_db: -2.0,
            extra_delay: 3e-9,
        };
        let b = LegParams {
            distance: 4.1,
            gain_db: 1.0,
            extra_delay: 0.0,
        };
        let two = propagate(&propagate(&w, &a), &b);
        let one = propagate(
            &w,
            &LegParams {
                distance: a.distance + b.distance,
                gain_db: a.gain_db + b.gain_db,
                extra_delay: a.extra_delay + b.extra_delay,
            },
        );
        assert!((two.t0() - one.t0()).abs() <= 1e-9 * one.t0());
        for (x, y) in two.samples().iter().zip(one.samples()) {
            assert!((x - y).norm() <= 1e-9 * y.norm().max(1e-12));
        }
    }

    #[test]
    fn gain_scales_amplitude() {
        let w = generate_chirp(&cfg());
        let out = propagate(
            &w,
            &LegParams {
                distance: 0.0,
                gain_db: -6.0,
                extra_delay: 0.0,
            },
        );
        let expected = libm::pow(10.0, -6.0 / 20.0);
        assert!((out.samples()[100].norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn noiseless_flag_is_identity() {
        let w = generate_chirp(&cfg());
        let out = add_noise(&w, &NoiseSpec::noiseless(), 1.0);
        assert_eq!(out, w);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let w = generate_chirp(&cfg());
        let spec = NoiseSpec::new(10.0, 42);
        assert_eq!(add_noise(&w, &spec, 1.0), add_noise(&w, &spec, 1.0));
        assert_ne!(
            add_noise(&w, &spec, 1.0),
            add_noise(&w, &NoiseSpec::new(10.0, 43), 1.0)
        );
    }

    #[test]
    fn noise_power_calibrated_at_zero_db() {
        // 2^20 zero samples, SNR 0 dB, reference 1.0: the measured noise
        // power must land within 2% of the reference.
        let w = WaveformBuffer::zeros(1 << 20, 400e6, 0.0);
        let out = add_noise(&w, &NoiseSpec::new(0.0, 7), 1.0);
        let power = out.total_energy() / out.len() as f64;
        assert!((power - 1.0).abs() < 0.02, "noise power {power}");
    }

    #[test]
    fn empirical_snr_within_0p2_db() {
        let n = 1 << 20;
        let w = WaveformBuffer::new(alloc::vec![Complex64::new(1.0, 0.0); n], 400e6, 0.0);
        for &snr_db in &[0.0, 8.0, 15.0] {
            let out = add_noise(&w, &NoiseSpec::new(snr_db, 1234), 1.0);
            let noise_power: f64 = out
                .samples()
                .iter()
                .zip(w.samples())
                .map(|(y, x)| (y - x).norm_sqr())
                .sum::<f64>()
                / n as f64;
            let measured_db = -10.0 * libm::log10(noise_power);
            assert!(
                (measured_db - snr_db).abs() < 0.2,
                "snr {snr_db} dB measured {measured_db} dB"
            );
        }
    }

    #[test]
    fn noise_is_white() {
        let w = WaveformBuffer::zeros(1 << 20, 400e6, 0.0);
        let out = add_noise(&w, &NoiseSpec::new(0.0, 99), 1.0);
        let s = out.samples();
        let lag0: f64 = s.iter().map(|x| x.norm_sqr()).sum();
        for lag in 1..=4usize {
            let acf: Complex64 = s[..s.len() - lag]
                .iter()
                .zip(&s[lag..])
                .map(|(a, b)| a.conj() * b)
                .sum();
            assert!(
                acf.norm() < 0.01 * lag0,
                "lag {lag} autocorrelation {} vs lag0 {lag0}",
                acf.norm()
            );
        }
    }

    #[test]
    fn reference_power_counts_only_on_samples() {
        let cfg = cfg();
        let layout = crate::waveform::FrameLayout::new(&cfg, 100e-9, 4).unwrap();
        // Alternating challenge bits: half the challenge slots are silent.
        let challenges: BitVector = (0..layout.pair_count()).map(|i| i % 2 == 0).collect();
        let w = build_interrogation(&cfg, &layout, &challenges, 1.0).unwrap();
        let p = on_slot_reference_power(&w, &layout, &challenges, None);
        // Unit-amplitude chirp: on samples have power exactly 1.
        assert!((p - 1.0).abs() < 1e-12, "reference power {p}");
        // A naive whole-buffer mean would be dragged down by the off slots.
        let naive = w.total_energy() / w.len() as f64;
        assert!(naive < 0.85);
    }
}
