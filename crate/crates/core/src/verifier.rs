//! The verifier: dechirp the reflection against the transmitted reference,
//! read the distance bound off the beat-frequency peak, demodulate and check
//! the prover's responses, and run the frequency-bin late-commit detector.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::buffer::{BitVector, WaveformBuffer};
use crate::channel::{add_noise, on_slot_reference_power, propagate, LegParams, NoiseSpec};
use crate::error::{Error, Result};
use crate::fft::{fft_padded, fractional_shift};
use crate::prover::{
    calibrate_detector, demodulate_slot, detect_slot_energy, EnergyDetectorConfig, Prover,
    ProverConfig, ResponseFunction,
};
use crate::waveform::{build_interrogation, preamble_bit, ChirpConfig, FrameLayout, SlotRole};
use crate::SPEED_OF_LIGHT;

// ── Spectrum analysis ────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    None,
    Parabolic,
}

/// How the beat spectrum is computed and the peak refined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    /// Explicit FFT size (power of two, >= analyzed length). When `None`
    /// the size is the analyzed length times `zero_pad_factor`, rounded up
    /// to a power of two.
    pub fft_size: Option<usize>,
    pub zero_pad_factor: usize,
    pub window: Window,
    pub interpolation: Interpolation,
    /// Peak-to-median floor below which the spectrum counts as empty (dB).
    pub min_peak_snr_db: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            fft_size: None,
            zero_pad_factor: 4,
            window: Window::Hann,
            interpolation: Interpolation::Parabolic,
            min_peak_snr_db: 6.0,
        }
    }
}

impl SpectrumConfig {
    fn fft_len(&self, n: usize) -> Result<usize> {
        match self.fft_size {
            Some(size) => {
                if !size.is_power_of_two() || size < n {
                    return Err(Error::InvalidConfig {
                        field: "fft_size",
                        reason: "must be a power of two at least the buffer length",
                    });
                }
                Ok(size)
            }
            None => {
                if self.zero_pad_factor == 0 {
                    return Err(Error::InvalidConfig {
                        field: "zero_pad_factor",
                        reason: "must be at least 1",
                    });
                }
                Ok((n * self.zero_pad_factor).next_power_of_two())
            }
        }
    }
}

/// Beat-frequency readout with its spectral quality measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatEstimate {
    /// Peak frequency (Hz).
    pub frequency: f64,
    /// Peak magnitude over the median magnitude of the search band (dB).
    pub peak_snr_db: f64,
}

/// Range readout derived from the beat frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEstimate {
    /// Beat frequency (Hz).
    pub f_delta: f64,
    /// Distance bound (m): `c * f_delta * T / (2 * f_bw)`.
    pub distance: f64,
    /// Range resolution (m): `c / (2 * f_bw)`.
    pub resolution: f64,
    /// Spectral peak-to-median ratio (dB).
    pub peak_snr_db: f64,
}

/// How the verifier aligns the received buffer onto its own grid before
/// mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayMode {
    /// Band-limited fractional resampling (frequency-domain phase ramp).
    BandLimited,
    /// Round to the nearest sample. At 400 MS/s one sample is 0.375 m of
    /// one-way range, so this mode trades precision for speed.
    NearestSample,
}

/// Mix the received signal against the transmitted reference over their
/// overlap, producing the intermediate-frequency signal whose dominant tone
/// sits at the beat frequency `k * tau`.
///
/// At complex baseband the mix is pointwise `conj(rx) * tx`, which yields
/// the difference-frequency term directly (the sum term of a real mixer
/// never arises) with the delayed-signal tone at positive `k * tau`. The
/// received buffer generally sits a fractional sample off the reference
/// grid; it is resampled onto it here, band-limited by default.
pub fn dechirp(rx: &WaveformBuffer, tx_ref: &WaveformBuffer) -> Result<WaveformBuffer> {
    dechirp_with_mode(rx, tx_ref, DelayMode::BandLimited)
}

pub fn dechirp_with_mode(
    rx: &WaveformBuffer,
    tx_ref: &WaveformBuffer,
    mode: DelayMode,
) -> Result<WaveformBuffer> {
    if rx.fs() != tx_ref.fs() {
        return Err(Error::SampleRateMismatch {
            left: rx.fs(),
            right: tx_ref.fs(),
        });
    }
    let fs = rx.fs();
    // rx sample n sits at reference-grid position n + delta. Offsets within
    // a nano-sample of an integer are snapped so exact delays stay on the
    // slice path instead of round-tripping through a no-op resample.
    let delta = {
        let d = (rx.t0() - tx_ref.t0()) * fs;
        let nearest = libm::round(d);
        if libm::fabs(d - nearest) < 1e-9 {
            nearest
        } else {
            d
        }
    };

    // First reference index where the rx interpolant is defined.
    let m_start = libm::ceil(delta.max(0.0)) as usize;
    if m_start >= tx_ref.len() {
        return Err(Error::NoOverlap);
    }
    // rx fractional index corresponding to m_start.
    let r0 = m_start as f64 - delta;
    let (i0, frac) = match mode {
        DelayMode::BandLimited => {
            let i0 = libm::floor(r0) as usize;
            (i0, r0 - libm::floor(r0))
        }
        DelayMode::NearestSample => {
            let i0 = libm::round(r0) as usize;
            (i0.min(rx.len().saturating_sub(1)), 0.0)
        }
    };
    if i0 >= rx.len() {
        return Err(Error::NoOverlap);
    }
    let len = (tx_ref.len() - m_start).min(rx.len() - i0);
    if len == 0 {
        return Err(Error::NoOverlap);
    }

    let aligned = if frac == 0.0 {
        rx.samples()[i0..i0 + len].to_vec()
    } else {
        fractional_shift(&rx.samples()[i0..i0 + len], frac)
    };

    let mixed: Vec<Complex64> = aligned
        .iter()
        .zip(&tx_ref.samples()[m_start..m_start + len])
        .map(|(r, t)| r.conj() * t)
        .collect();

    Ok(WaveformBuffer::new(
        mixed,
        fs,
        tx_ref.t0() + m_start as f64 / fs,
    ))
}

/// Locate the dominant tone of the magnitude spectrum in (0, fs/2).
///
/// The coarse peak comes from a zero-padded FFT; when enabled, a three-point
/// parabolic fit on the log magnitude refines it to a fraction of a bin.
/// Flat spectra (peak below the configured floor over the band median)
/// report `NoPeak`: no reflection is present.
pub fn estimate_beat_frequency(
    if_sig: &WaveformBuffer,
    sc: &SpectrumConfig,
) -> Result<BeatEstimate> {
    if if_sig.is_empty() {
        return Err(Error::OutOfRange("empty IF buffer"));
    }
    let n = if_sig.len();
    let fft_len = sc.fft_len(n)?;

    let windowed: Vec<Complex64> = match sc.window {
        Window::Rectangular => if_sig.samples().to_vec(),
        Window::Hann => if_sig
            .samples()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let w = 0.5
                    * (1.0
                        - libm::cos(
                            2.0 * core::f64::consts::PI * i as f64 / (n - 1).max(1) as f64,
                        ));
                s * w
            })
            .collect(),
    };

    let spectrum = fft_padded(&windowed, fft_len);
    // Search strictly inside (0, fs/2).
    let search = &spectrum[1..fft_len / 2];
    let (peak_off, peak_mag) = search.iter().enumerate().map(|(i, s)| (i, s.norm())).fold(
        (0usize, 0.0f64),
        |best, cur| if cur.1 > best.1 { cur } else { best },
    );
    let peak_bin = peak_off + 1;

    let mut mags: Vec<f64> = search.iter().map(|s| s.norm()).collect();
    let mid = mags.len() / 2;
    let (_, median, _) = mags.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let median = *median;

    if peak_mag <= 0.0 {
        return Err(Error::NoPeak);
    }

    // A reflection at (effectively) zero delay puts all its energy in the
    // DC bin, and what the open-interval search finds is only that bin's
    // leakage shoulder. Report it as a zero beat rather than a phantom
    // fractional-bin tone.
    let dc_mag = spectrum[0].norm();
    if dc_mag >= peak_mag {
        let snr_db = if median > 0.0 {
            20.0 * libm::log10(dc_mag / median)
        } else {
            f64::INFINITY
        };
        if snr_db < sc.min_peak_snr_db {
            return Err(Error::NoPeak);
        }
        return Ok(BeatEstimate {
            frequency: 0.0,
            peak_snr_db: snr_db,
        });
    }

    let peak_snr_db = if median > 0.0 {
        20.0 * libm::log10(peak_mag / median)
    } else {
        f64::INFINITY
    };
    if peak_snr_db < sc.min_peak_snr_db {
        return Err(Error::NoPeak);
    }

    let refined = match sc.interpolation {
        Interpolation::None => peak_bin as f64,
        Interpolation::Parabolic => {
            let mag_at = |k: usize| spectrum[k].norm();
            if peak_bin == 0 || peak_bin + 1 >= fft_len {
                peak_bin as f64
            } else {
                let (a, b, g) = (mag_at(peak_bin - 1), peak_mag, mag_at(peak_bin + 1));
                if a > 0.0 && g > 0.0 {
                    let (la, lb, lg) = (libm::log(a), libm::log(b), libm::log(g));
                    let denom = la - 2.0 * lb + lg;
                    let delta = if libm::fabs(denom) < 1e-30 {
                        0.0
                    } else {
                        (0.5 * (la - lg) / denom).clamp(-0.5, 0.5)
                    };
                    peak_bin as f64 + delta
                } else {
                    peak_bin as f64
                }
            }
        }
    };

    Ok(BeatEstimate {
        frequency: refined * if_sig.fs() / fft_len as f64,
        peak_snr_db,
    })
}

/// Distance corresponding to a beat frequency: `c * f_delta * T / (2 f_bw)`.
pub fn beat_to_distance(f_delta: f64, cfg: &ChirpConfig) -> f64 {
    SPEED_OF_LIGHT * f_delta * cfg.duration / (2.0 * cfg.bandwidth)
}

/// Range resolution of the sweep: `c / (2 f_bw)`.
pub fn range_resolution(cfg: &ChirpConfig) -> f64 {
    SPEED_OF_LIGHT / (2.0 * cfg.bandwidth)
}

/// Full range readout from an IF signal.
pub fn estimate_range(
    if_sig: &WaveformBuffer,
    cfg: &ChirpConfig,
    sc: &SpectrumConfig,
) -> Result<RangeEstimate> {
    let beat = estimate_beat_frequency(if_sig, sc)?;
    Ok(RangeEstimate {
        f_delta: beat.frequency,
        distance: beat_to_distance(beat.frequency, cfg),
        resolution: range_resolution(cfg),
        peak_snr_db: beat.peak_snr_db,
    })
}

// ── Response demodulation ────────────────────────────────────────────

fn demodulate_role_slots(
    rx: &WaveformBuffer,
    layout: &FrameLayout,
    det: &EnergyDetectorConfig,
    slot_of: impl Fn(usize) -> usize,
) -> Result<BitVector> {
    (0..layout.pair_count())
        .map(|i| {
            let e = detect_slot_energy(rx, layout, slot_of(i))?;
            demodulate_slot(e, det)
        })
        .collect()
}

/// Energy-detect each response slot against the 6 dB-below-reference
/// threshold.
pub fn demodulate_responses(
    rx: &WaveformBuffer,
    layout: &FrameLayout,
    det: &EnergyDetectorConfig,
) -> Result<BitVector> {
    demodulate_role_slots(rx, layout, det, |i| layout.response_slot(i))
}

/// Energy-detect the reflected challenge slots. The verifier knows what it
/// sent; a mismatch here means the challenge signal was corrupted in
/// flight, e.g. by a prover gating its response early.
pub fn demodulate_reflected_challenges(
    rx: &WaveformBuffer,
    layout: &FrameLayout,
    det: &EnergyDetectorConfig,
) -> Result<BitVector> {
    demodulate_role_slots(rx, layout, det, |i| layout.challenge_slot(i))
}

// ── Frequency-bin late-commit detector ───────────────────────────────

/// Per-slot, per-bin energy readout of the IF signal.
///
/// Each slot of the chirp occupies a known frequency span (offset by the
/// beat frequency), so slicing the slot into `n_bins` sub-intervals of the
/// sweep is the same as binning it in frequency. The expected value of a
/// slot's bins is the slot's symbol: every bin of an on-slot should carry
/// energy, every bin of an off-slot should not.
#[derive(Debug, Clone)]
pub struct BinReport {
    /// Bins per slot (N).
    pub n_bins: usize,
    /// `energies[slot][bin]`.
    pub energies: Vec<Vec<f64>>,
    /// Expected symbol per slot (true = on). Constant across a slot's bins.
    pub expected_on: Vec<bool>,
    /// Whether the slot lies fully inside the analyzed buffer. The IF
    /// signal is truncated to the mix overlap, so trailing slots may be
    /// partial; the detector skips those.
    pub covered: Vec<bool>,
    /// Bin-level decision threshold: the slot threshold scaled by 1/N.
    pub bin_threshold: f64,
}

/// Bin energies of every slot of the IF signal, with expected on/off per
/// slot supplied by the caller (known challenge bits plus demodulated
/// responses).
pub fn frequency_bin_report(
    rx_if: &WaveformBuffer,
    layout: &FrameLayout,
    n_bins: usize,
    expected_on: &[bool],
    det: &EnergyDetectorConfig,
) -> Result<BinReport> {
    if n_bins < 1 {
        return Err(Error::InvalidConfig {
            field: "n_bins",
            reason: "must be at least 1",
        });
    }
    if expected_on.len() != layout.n_slots() {
        return Err(Error::LengthMismatch {
            expected: layout.n_slots(),
            got: expected_on.len(),
        });
    }
    let bin_threshold = det.threshold()? / n_bins as f64;

    let mut energies = Vec::with_capacity(layout.n_slots());
    let mut covered = Vec::with_capacity(layout.n_slots());
    for slot in 0..layout.n_slots() {
        let range = layout.slot_range(slot);
        covered.push(range.end <= rx_if.len());
        let len = range.len();
        let bins: Vec<f64> = (0..n_bins)
            .map(|j| {
                let lo = (range.start + j * len / n_bins).min(rx_if.len());
                let hi = (range.start + (j + 1) * len / n_bins).min(rx_if.len());
                rx_if.samples()[lo..hi].iter().map(|s| s.norm_sqr()).sum()
            })
            .collect();
        energies.push(bins);
    }

    Ok(BinReport {
        n_bins,
        energies,
        expected_on: expected_on.to_vec(),
        covered,
        bin_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LateCommitVerdict {
    Clean,
    LateCommitSuspected,
}

/// Slots showing the late-commit signature: an expected-on slot whose
/// leading bins are below the bin threshold while every trailing bin is
/// above it.
pub fn flagged_slots(rep: &BinReport) -> Vec<usize> {
    let mut flagged = Vec::new();
    for (slot, bins) in rep.energies.iter().enumerate() {
        if !rep.expected_on[slot] || !rep.covered[slot] {
            continue;
        }
        let first_on = bins.iter().position(|&e| e >= rep.bin_threshold);
        if let Some(j) = first_on {
            if j >= 1 && bins[j..].iter().all(|&e| e >= rep.bin_threshold) {
                flagged.push(slot);
            }
        }
    }
    flagged
}

/// Late-commit verdict: suspicious when at least `min_flagged_slots` slots
/// show the leading-bins-off signature. With a single bin the detector is
/// structurally blind.
pub fn detect_late_commit(rep: &BinReport, min_flagged_slots: usize) -> LateCommitVerdict {
    if rep.n_bins < 2 {
        return LateCommitVerdict::Clean;
    }
    if flagged_slots(rep).len() >= min_flagged_slots.max(1) {
        LateCommitVerdict::LateCommitSuspected
    } else {
        LateCommitVerdict::Clean
    }
}

// ── Rapid-bit-exchange runner ────────────────────────────────────────

/// Geometry and noise of one exchange.
#[derive(Debug, Clone)]
pub struct ExchangeSetup {
    pub chirp: ChirpConfig,
    pub layout: FrameLayout,
    /// OOK modulation index used by the verifier's transmitter.
    pub modulation_index: f64,
    pub leg_to_prover: LegParams,
    pub leg_from_prover: LegParams,
    /// Receiver noise at the prover's detector input.
    pub prover_noise: NoiseSpec,
    /// Receiver noise at the verifier's input.
    pub verifier_noise: NoiseSpec,
    pub spectrum: SpectrumConfig,
}

impl ExchangeSetup {
    /// Symmetric geometry at `distance` with the given receiver SNRs.
    pub fn symmetric(
        chirp: ChirpConfig,
        layout: FrameLayout,
        distance: f64,
        prover_noise: NoiseSpec,
        verifier_noise: NoiseSpec,
    ) -> Self {
        Self {
            chirp,
            layout,
            modulation_index: 1.0,
            leg_to_prover: LegParams::new(distance),
            leg_from_prover: LegParams::new(distance),
            prover_noise,
            verifier_noise,
            spectrum: SpectrumConfig::default(),
        }
    }
}

/// Acceptance policy: what the verifier checks a run against.
#[derive(Debug, Clone)]
pub struct VerifierPolicy {
    /// Distance bound for acceptance (m).
    pub max_distance: f64,
    /// The verifier's copy of the response function and secret.
    pub expected_response: ResponseFunction,
    /// Frequency bins per slot for the late-commit detector.
    pub n_bins: usize,
    /// Flagged-slot quorum before declaring a late commit.
    pub min_flagged_slots: usize,
}

impl VerifierPolicy {
    /// Default policy for a layout: invert responses, 4 bins per slot, and
    /// a flag quorum of one sixth of the rounds.
    pub fn new(
        max_distance: f64,
        expected_response: ResponseFunction,
        layout: &FrameLayout,
    ) -> Self {
        Self {
            max_distance,
            expected_response,
            n_bins: 4,
            min_flagged_slots: (layout.pair_count() / 6).max(1),
        }
    }
}

/// Everything the verifier concluded about one exchange.
#[derive(Debug, Clone)]
pub struct VerifierReport {
    pub range: RangeEstimate,
    /// Demodulated response bits.
    pub responses: BitVector,
    /// Response bits disagreeing with the expected response function.
    pub response_errors: usize,
    /// Reflected challenge slots disagreeing with what was transmitted
    /// (early response modulation corrupts these).
    pub challenge_errors: usize,
    pub lc_verdict: LateCommitVerdict,
    /// All checks passed: correct responses, intact challenges, clean
    /// late-commit verdict, and distance within the policy bound.
    pub accepted: bool,
}

/// Expected on/off per slot as the verifier sees it: the preamble pattern
/// and challenge bits are known, response slots follow the demodulated
/// response bits.
pub fn expected_slot_pattern(
    layout: &FrameLayout,
    challenges: &BitVector,
    responses: &BitVector,
) -> Vec<bool> {
    layout
        .slot_map()
        .iter()
        .map(|role| match role {
            SlotRole::Preamble(i) => preamble_bit(*i),
            SlotRole::Challenge(i) => challenges[*i],
            SlotRole::Response(i) => responses[*i],
        })
        .collect()
}

/// Verifier-side processing of a received frame against the transmitted
/// reference: range estimate, response/challenge verification, and the
/// late-commit detector. Factored out of [`run_rapid_bit_exchange`] so
/// attack simulations can feed adversarial waveforms through the exact
/// same receiver.
pub fn verify_reception(
    rx: &WaveformBuffer,
    tx: &WaveformBuffer,
    setup: &ExchangeSetup,
    policy: &VerifierPolicy,
    challenges: &BitVector,
) -> Result<VerifierReport> {
    let layout = &setup.layout;

    let det = calibrate_detector(rx, layout)?;
    let responses = demodulate_responses(rx, layout, &det)?;
    let reflected_challenges = demodulate_reflected_challenges(rx, layout, &det)?;

    let expected = policy.expected_response.apply_all(challenges)?;
    let response_errors = responses.hamming_distance(&expected);
    let challenge_errors = reflected_challenges.hamming_distance(challenges);

    let if_sig = dechirp(rx, tx)?;
    let range = estimate_range(&if_sig, &setup.chirp, &setup.spectrum)?;

    let pattern = expected_slot_pattern(layout, challenges, &responses);
    let rep = frequency_bin_report(&if_sig, layout, policy.n_bins, &pattern, &det)?;
    let lc_verdict = detect_late_commit(&rep, policy.min_flagged_slots);

    let accepted = response_errors == 0
        && challenge_errors == 0
        && lc_verdict == LateCommitVerdict::Clean
        && range.distance <= policy.max_distance;

    Ok(VerifierReport {
        range,
        responses,
        response_errors,
        challenge_errors,
        lc_verdict,
        accepted,
    })
}

/// Run one full honest rapid-bit exchange: build the interrogation, carry
/// it to the prover, reflect-and-respond, carry it back, add receiver
/// noise, and verify.
///
/// The distance estimate reflects the two-leg loop delay only; the prover's
/// processing delay never enters it, because ranging reads the beat
/// frequency of the always-on reflection rather than a response time.
///
/// ```
/// use fmcwdb_core::buffer::BitVector;
/// use fmcwdb_core::channel::NoiseSpec;
/// use fmcwdb_core::prover::{ProverConfig, ResponseFunction};
/// use fmcwdb_core::verifier::{run_rapid_bit_exchange, ExchangeSetup, VerifierPolicy};
/// use fmcwdb_core::waveform::{ChirpConfig, FrameLayout};
///
/// // 100 MHz sweep over 10 us, 100 ns slots, prover 3 m away, 15 dB SNR.
/// let chirp = ChirpConfig::with_default_fs(2.4e9, 100e6, 10e-6)?;
/// let layout = FrameLayout::new(&chirp, 100e-9, 4)?;
/// let setup = ExchangeSetup::symmetric(
///     chirp,
///     layout.clone(),
///     3.0,
///     NoiseSpec::new(15.0, 1),
///     NoiseSpec::new(15.0, 2),
/// );
/// let policy = VerifierPolicy::new(10.0, ResponseFunction::Invert, &layout);
/// let challenges = BitVector::from_u8(&[1; 48]);
///
/// let report = run_rapid_bit_exchange(&setup, &ProverConfig::invert(), &policy, &challenges)?;
/// assert!(report.accepted);
/// assert!((report.range.distance - 3.0).abs() < report.range.resolution / 10.0);
/// # Ok::<(), fmcwdb_core::Error>(())
/// ```
pub fn run_rapid_bit_exchange(
    setup: &ExchangeSetup,
    prover_cfg: &ProverConfig,
    policy: &VerifierPolicy,
    challenges: &BitVector,
) -> Result<VerifierReport> {
    let layout = &setup.layout;
    let tx = build_interrogation(&setup.chirp, layout, challenges, setup.modulation_index)?;

    let at_prover = propagate(&tx, &setup.leg_to_prover);
    let prover_reference = on_slot_reference_power(&at_prover, layout, challenges, None);
    let mut prover = Prover::new(prover_cfg.clone(), layout)?;
    let transcript = prover.respond(&at_prover, layout, &setup.prover_noise, prover_reference)?;

    let at_verifier = propagate(&transcript.reflection, &setup.leg_from_prover);
    let verifier_reference = on_slot_reference_power(
        &at_verifier,
        layout,
        challenges,
        Some(&transcript.responses),
    );
    let rx = add_noise(&at_verifier, &setup.verifier_noise, verifier_reference);

    verify_reception(&rx, &tx, setup, policy, challenges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::generate_chirp;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> ChirpConfig {
        ChirpConfig::with_default_fs(2.4e9, 100e6, 10e-6).unwrap()
    }

    fn layout(cfg: &ChirpConfig) -> FrameLayout {
        FrameLayout::new(cfg, 100e-9, 4).unwrap()
    }

    fn delayed(w: &WaveformBuffer, tau: f64) -> WaveformBuffer {
        let mut out = w.clone();
        out.set_t0(w.t0() + tau);
        out
    }

    #[test]
    fn dechirp_zero_delay_is_dc() {
        let chirp = generate_chirp(&cfg());
        let if_sig = dechirp(&chirp, &chirp).unwrap();
        assert_eq!(if_sig.len(), chirp.len());
        for s in if_sig.samples() {
            assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn dechirp_rejects_rate_mismatch() {
        let chirp = generate_chirp(&cfg());
        let mut other = chirp.clone();
        other = WaveformBuffer::new(other.into_samples(), 200e6, 0.0);
        assert!(matches!(
            dechirp(&chirp, &other),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn dechirp_tone_at_k_tau() {
        // 20 ns round trip at k = 1e13 Hz/s puts the beat at 200 kHz.
        let cfg = cfg();
        let chirp = generate_chirp(&cfg);
        let rx = delayed(&chirp, 20e-9);
        let if_sig = dechirp(&rx, &chirp).unwrap();
        let beat = estimate_beat_frequency(&if_sig, &SpectrumConfig::default()).unwrap();
        let bin = cfg.fs / (if_sig.len() * 4).next_power_of_two() as f64;
        assert!(
            (beat.frequency - 200e3).abs() < bin,
            "beat {} Hz",
            beat.frequency
        );
    }

    #[test]
    fn dechirp_tone_at_k_tau_wideband() {
        // 100 ns delay at k = 2e13 Hz/s (200 MHz over 10 us): 2 MHz beat.
        let cfg = ChirpConfig::with_default_fs(2.4e9, 200e6, 10e-6).unwrap();
        let chirp = generate_chirp(&cfg);
        let rx = delayed(&chirp, 100e-9);
        let if_sig = dechirp(&rx, &chirp).unwrap();
        let beat = estimate_beat_frequency(&if_sig, &SpectrumConfig::default()).unwrap();
        assert!(
            (beat.frequency - 2e6).abs() < 25e3,
            "beat {} Hz",
            beat.frequency
        );
    }

    #[test]
    fn nearest_sample_mode_quantizes_the_delay() {
        // Round trip of 23 ns is 9.2 samples at 400 MS/s. The fast mode
        // rounds to 9 samples; band-limited alignment keeps the fraction.
        let cfg = cfg();
        let chirp = generate_chirp(&cfg);
        let rx = delayed(&chirp, 23e-9);
        let sc = SpectrumConfig::default();

        let exact = dechirp_with_mode(&rx, &chirp, DelayMode::BandLimited).unwrap();
        let f_exact = estimate_beat_frequency(&exact, &sc).unwrap().frequency;
        let d_exact = beat_to_distance(f_exact, &cfg);
        assert!((d_exact - 3.45).abs() < 0.02, "band-limited: {d_exact} m");

        let fast = dechirp_with_mode(&rx, &chirp, DelayMode::NearestSample).unwrap();
        let f_fast = estimate_beat_frequency(&fast, &sc).unwrap().frequency;
        let d_fast = beat_to_distance(f_fast, &cfg);
        // 9 samples of round trip = 22.5 ns = 3.375 m.
        assert!((d_fast - 3.375).abs() < 0.02, "nearest-sample: {d_fast} m");
    }

    #[test]
    fn pure_tone_estimate_is_subbin() {
        // Synthetic 200 kHz tone, 10 us at 400 MS/s.
        let fs = 400e6;
        let n = 4000;
        let samples: Vec<Complex64> = (0..n)
            .map(|i| {
                let phase = 2.0 * core::f64::consts::PI * 200e3 * i as f64 / fs;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        let w = WaveformBuffer::new(samples, fs, 0.0);
        let est = estimate_beat_frequency(&w, &SpectrumConfig::default()).unwrap();
        // Half a pre-padding bin is 50 kHz; parabolic lands much closer.
        assert!(
            (est.frequency - 200e3).abs() < 5e3,
            "tone estimate {}",
            est.frequency
        );
    }

    #[test]
    fn flat_spectrum_reports_no_peak() {
        let w = WaveformBuffer::zeros(4000, 400e6, 0.0);
        assert_eq!(
            estimate_beat_frequency(&w, &SpectrumConfig::default()).unwrap_err(),
            Error::NoPeak
        );
    }

    #[test]
    fn zero_delay_reports_zero_beat() {
        // All the IF energy sits in the DC bin; the estimate must not
        // promote its leakage shoulder to a phantom tone.
        let chirp = generate_chirp(&cfg());
        let if_sig = dechirp(&chirp, &chirp).unwrap();
        let beat = estimate_beat_frequency(&if_sig, &SpectrumConfig::default()).unwrap();
        assert_eq!(beat.frequency, 0.0);
        assert_eq!(beat_to_distance(beat.frequency, &cfg()), 0.0);
    }

    #[test]
    fn distance_conversions() {
        let cfg = cfg();
        assert_eq!(beat_to_distance(0.0, &cfg), 0.0);
        assert!((beat_to_distance(200e3, &cfg) - 3.0).abs() < 1e-9);

        let wide = ChirpConfig::with_default_fs(2.4e9, 200e6, 10e-6).unwrap();
        assert!((beat_to_distance(2e6, &wide) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn resolution_matches_footnote_values() {
        let at =
            |bw: f64| range_resolution(&ChirpConfig::with_default_fs(2.4e9, bw, 10e-6).unwrap());
        assert!((at(80e6) - 1.875).abs() < 5e-4);
        assert!((at(150e6) - 1.0).abs() < 5e-4);
        assert!((at(200e6) - 0.75).abs() < 5e-4);
    }

    #[test]
    fn all_silent_response_slots_demodulate_to_zeros() {
        let cfg = cfg();
        let layout = layout(&cfg);
        // Keep the preamble for calibration, silence every response slot.
        let chirp = generate_chirp(&cfg);
        let mut w = chirp.clone();
        for i in 0..layout.pair_count() {
            for s in &mut w.samples_mut()[layout.slot_range(layout.response_slot(i))] {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        let det = calibrate_detector(&w, &layout).unwrap();
        let bits = demodulate_responses(&w, &layout, &det).unwrap();
        assert_eq!(bits, BitVector::zeros(layout.pair_count()));
    }

    #[test]
    fn bin_energies_partition_slot_energy() {
        let cfg = cfg();
        let layout = layout(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let challenges = BitVector::random(layout.pair_count(), &mut rng);
        let tx = build_interrogation(&cfg, &layout, &challenges, 1.0).unwrap();
        let if_sig = dechirp(&tx, &tx).unwrap();
        let det = EnergyDetectorConfig::with_reference(40.0);
        let expected = alloc::vec![true; layout.n_slots()];
        let rep = frequency_bin_report(&if_sig, &layout, 4, &expected, &det).unwrap();
        for slot in 0..layout.n_slots() {
            let total: f64 = rep.energies[slot].iter().sum();
            let direct = detect_slot_energy(&if_sig, &layout, slot).unwrap();
            assert!(
                (total - direct).abs() <= 1e-6 * direct.max(1e-12),
                "slot {slot}: {total} vs {direct}"
            );
        }
    }

    #[test]
    fn single_bin_detector_is_blind() {
        let cfg = cfg();
        let layout = layout(&cfg);
        let det = EnergyDetectorConfig::with_reference(40.0);
        // A half-committed on-slot: leading half silent.
        let chirp = generate_chirp(&cfg);
        let mut w = chirp.clone();
        let r = layout.slot_range(10);
        let mid = r.start + r.len() / 2;
        for s in &mut w.samples_mut()[r.start..mid] {
            *s = Complex64::new(0.0, 0.0);
        }
        let expected = alloc::vec![true; layout.n_slots()];

        let rep1 = frequency_bin_report(&w, &layout, 1, &expected, &det).unwrap();
        assert_eq!(detect_late_commit(&rep1, 1), LateCommitVerdict::Clean);

        let rep4 = frequency_bin_report(&w, &layout, 4, &expected, &det).unwrap();
        assert_eq!(flagged_slots(&rep4), alloc::vec![10]);
        assert_eq!(
            detect_late_commit(&rep4, 1),
            LateCommitVerdict::LateCommitSuspected
        );
    }

    #[test]
    fn half_committed_slots_show_two_off_bins() {
        // 50% late commit with N=4: bins 1-2 read off, bins 3-4 read on.
        let cfg = cfg();
        let layout = layout(&cfg);
        let det = EnergyDetectorConfig::with_reference(40.0);
        let chirp = generate_chirp(&cfg);
        let mut w = chirp.clone();
        for slot in 0..layout.n_slots() {
            let r = layout.slot_range(slot);
            let mid = r.start + r.len() / 2;
            for s in &mut w.samples_mut()[r.start..mid] {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        let expected = alloc::vec![true; layout.n_slots()];
        let rep = frequency_bin_report(&w, &layout, 4, &expected, &det).unwrap();
        for slot in 0..layout.n_slots() {
            let bins = &rep.energies[slot];
            assert!(bins[0] < rep.bin_threshold && bins[1] < rep.bin_threshold);
            assert!(bins[2] >= rep.bin_threshold && bins[3] >= rep.bin_threshold);
        }
        assert_eq!(flagged_slots(&rep).len(), layout.n_slots());
    }

    #[test]
    fn honest_noiseless_exchange_accepted_at_3m() {
        let cfg = cfg();
        let layout = layout(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let challenges = BitVector::random(layout.pair_count(), &mut rng);
        let setup = ExchangeSetup::symmetric(
            cfg,
            layout.clone(),
            3.0,
            NoiseSpec::noiseless(),
            NoiseSpec::noiseless(),
        );
        let policy = VerifierPolicy::new(10.0, ResponseFunction::Invert, &layout);
        let report =
            run_rapid_bit_exchange(&setup, &ProverConfig::invert(), &policy, &challenges).unwrap();

        assert_eq!(report.response_errors, 0);
        assert_eq!(report.challenge_errors, 0);
        assert_eq!(report.lc_verdict, LateCommitVerdict::Clean);
        assert!(report.accepted);
        assert!(
            (report.range.distance - 3.0).abs() < report.range.resolution / 10.0,
            "estimated {} m",
            report.range.distance
        );
    }

    #[test]
    fn wrong_key_is_rejected_with_response_errors() {
        let cfg = cfg();
        let layout = layout(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let challenges = BitVector::random(layout.pair_count(), &mut rng);
        let setup = ExchangeSetup::symmetric(
            cfg,
            layout.clone(),
            3.0,
            NoiseSpec::noiseless(),
            NoiseSpec::noiseless(),
        );
        // Prover XORs with an all-ones key; verifier expects all-zeros.
        let prover_cfg = ProverConfig::with_response(ResponseFunction::XorKey(BitVector::ones(
            layout.pair_count(),
        )));
        let policy = VerifierPolicy::new(
            10.0,
            ResponseFunction::XorKey(BitVector::zeros(layout.pair_count())),
            &layout,
        );
        let report = run_rapid_bit_exchange(&setup, &prover_cfg, &policy, &challenges).unwrap();
        assert!(report.response_errors > 0);
        assert!(!report.accepted);
    }

    #[test]
    fn acceptance_requires_all_three_checks() {
        // Truth table per the acceptance-soundness property: distance bound,
        // response errors, and the LC verdict each veto.
        let cfg = cfg();
        let layout = layout(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let challenges = BitVector::random(layout.pair_count(), &mut rng);
        let setup = ExchangeSetup::symmetric(
            cfg,
            layout.clone(),
            3.0,
            NoiseSpec::noiseless(),
            NoiseSpec::noiseless(),
        );
        // Bound tighter than the true distance: rejected on distance alone.
        let policy = VerifierPolicy::new(2.0, ResponseFunction::Invert, &layout);
        let report =
            run_rapid_bit_exchange(&setup, &ProverConfig::invert(), &policy, &challenges).unwrap();
        assert_eq!(report.response_errors, 0);
        assert_eq!(report.lc_verdict, LateCommitVerdict::Clean);
        assert!(!report.accepted);
    }

    #[test]
    fn processing_delay_never_moves_the_estimate() {
        // t_p affects nothing in the reflected waveform; assert literal
        // invariance of the pipeline output.
        let cfg = cfg();
        let layout = layout(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let challenges = BitVector::random(layout.pair_count(), &mut rng);
        let setup = ExchangeSetup::symmetric(
            cfg,
            layout.clone(),
            4.0,
            NoiseSpec::noiseless(),
            NoiseSpec::noiseless(),
        );
        let policy = VerifierPolicy::new(10.0, ResponseFunction::Invert, &layout);
        let mut estimates = Vec::new();
        for &t_p in &[0.0, 20e-9, 40e-9, 80e-9] {
            let mut pc = ProverConfig::invert();
            pc.t_p = t_p;
            let report = run_rapid_bit_exchange(&setup, &pc, &policy, &challenges).unwrap();
            estimates.push(report.range.distance);
        }
        for e in &estimates {
            assert_eq!(*e, estimates[0]);
        }
    }
}
