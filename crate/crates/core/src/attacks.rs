//! Physical-layer adversaries: distance fraud, amplify-forward and
//! early-detect/late-commit mafia fraud, and the colluding-prover special
//! case, both as closed-form time budgets and as waveform-level
//! simulations run through the real verifier pipeline.
//!
//! Timing conventions: `t_ed` is the attacker's early-detect latency,
//! incurred once for the challenge and once for the prover's response;
//! `t_hw` is the total attacker hardware latency over the relay round trip,
//! counted once. A demodulator that needs half a symbol's energy gives the
//! attacker until 50% into the response slot to commit, which is where the
//! `0.5 t_b` (trusted prover) and `1.5 t_b` (colluding prover) budgets come
//! from.

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::buffer::BitVector;
use crate::channel::{add_noise, on_slot_reference_power, propagate, LegParams, NoiseSpec};
use crate::error::Result;
use crate::prover::{Prover, ProverConfig, ResponseFunction};
use crate::verifier::{
    verify_reception, ExchangeSetup, LateCommitVerdict, SpectrumConfig, VerifierPolicy,
};
use crate::waveform::{build_interrogation, ChirpConfig, FrameLayout};
use crate::SPEED_OF_LIGHT;

// ── Closed-form budgets ──────────────────────────────────────────────

/// Fraction of a symbol the verifier's demodulator is assumed to need; a
/// commit later than this fails outright. Receiver dependent, so exposed
/// as a knob in [`mafia_time_budget_with_threshold`].
pub const DEFAULT_COMMIT_THRESHOLD: f64 = 0.5;

/// Time left for the attacker to cover relay propagation.
///
/// With a trusted prover the response only exists after the challenge slot,
/// leaving `0.5 t_b - 2 t_ed - t_hw`; a colluding prover answers as soon as
/// the relayed challenge reaches it, adding a full slot to the budget.
/// Negative budgets are returned as-is so infeasible regions plot
/// correctly; feasibility is the caller's separate flag.
pub fn mafia_time_budget(t_b: f64, t_ed: f64, t_hw: f64, prover_trusted: bool) -> f64 {
    mafia_time_budget_with_threshold(t_b, t_ed, t_hw, prover_trusted, DEFAULT_COMMIT_THRESHOLD)
}

/// Budget generalized over the demodulator's committed-fraction threshold:
/// the attacker may commit up to `commit_threshold * t_b` into the
/// response slot.
pub fn mafia_time_budget_with_threshold(
    t_b: f64,
    t_ed: f64,
    t_hw: f64,
    prover_trusted: bool,
    commit_threshold: f64,
) -> f64 {
    let slots = if prover_trusted {
        commit_threshold
    } else {
        1.0 + commit_threshold
    };
    slots * t_b - 2.0 * t_ed - t_hw
}

/// Maximum distance the attacker can shave off: `(c/2)` times the budget.
pub fn max_distance_gain(t_b: f64, t_ed: f64, t_hw: f64, prover_trusted: bool) -> f64 {
    SPEED_OF_LIGHT / 2.0 * mafia_time_budget(t_b, t_ed, t_hw, prover_trusted)
}

// ── Scenario plumbing ────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    AmplifyForward,
    EdLcMafia,
    TerroristSpecial,
    DistanceFraud,
}

/// Attacker timing and placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerConfig {
    /// Early-detect latency (s).
    pub t_ed: f64,
    /// Total attacker hardware latency over the relay round trip (s).
    pub t_hw: f64,
    /// Verifier-attacker distance (m). In distance-fraud mode this is the
    /// dishonest prover's own true distance.
    pub d_va: f64,
    /// Attacker-prover distance (m).
    pub d_ap: f64,
    pub mode: AttackMode,
}

/// What one simulated attack run produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackOutcome {
    /// Closed-form relay budget for this attacker (s).
    pub time_budget: f64,
    /// `time_budget >= 0`.
    pub feasible: bool,
    /// Distance the verifier measured (m).
    pub claimed_distance: f64,
    /// Actual verifier-prover distance (m).
    pub true_distance: f64,
    /// `true_distance - claimed_distance` (positive means the verifier was
    /// fooled toward "closer").
    pub distance_gain: f64,
    /// Response bits verified correct and the reflected challenges intact.
    pub responses_accepted: bool,
    pub lc_verdict: LateCommitVerdict,
}

impl AttackOutcome {
    /// The attack went completely undetected and actually shortened the
    /// measured distance.
    pub fn succeeded(&self) -> bool {
        self.responses_accepted
            && self.lc_verdict == LateCommitVerdict::Clean
            && self.distance_gain > 0.0
    }
}

/// Full description of one simulated attack run.
#[derive(Debug, Clone)]
pub struct AttackScenario {
    pub chirp: ChirpConfig,
    pub layout: FrameLayout,
    /// Response function shared by the honest prover and the verifier.
    pub response_fn: ResponseFunction,
    pub attacker: AttackerConfig,
    /// Straight-line verifier-prover distance (m). Relay legs bound it from
    /// above by the triangle inequality.
    pub direct_distance: f64,
    pub verifier_noise: NoiseSpec,
    pub spectrum: SpectrumConfig,
    /// Frequency bins per slot at the verifier's late-commit detector.
    pub n_bins: usize,
    /// Flagged-slot quorum; `None` means one sixth of the rounds.
    pub min_flagged_slots: Option<usize>,
    /// Seed for the challenge bits of this run.
    pub seed: u64,
}

impl AttackScenario {
    /// Scenario with collinear geometry (prover directly behind the
    /// attacker), invert responses, and no noise.
    pub fn new(
        chirp: ChirpConfig,
        layout: FrameLayout,
        attacker: AttackerConfig,
        seed: u64,
    ) -> Self {
        Self {
            chirp,
            layout,
            response_fn: ResponseFunction::Invert,
            direct_distance: attacker.d_va + attacker.d_ap,
            attacker,
            verifier_noise: NoiseSpec::noiseless(),
            spectrum: SpectrumConfig::default(),
            n_bins: 4,
            min_flagged_slots: None,
            seed,
        }
    }

    fn challenges(&self) -> BitVector {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        BitVector::random(self.layout.pair_count(), &mut rng)
    }

    /// Exchange view of this scenario for the verifier-side processing.
    /// Attack simulations never gate acceptance on the distance bound; the
    /// distance gain is accounted separately.
    fn verifier_view(&self) -> (ExchangeSetup, VerifierPolicy) {
        let setup = ExchangeSetup {
            chirp: self.chirp,
            layout: self.layout.clone(),
            modulation_index: 1.0,
            leg_to_prover: LegParams::new(0.0),
            leg_from_prover: LegParams::new(0.0),
            prover_noise: NoiseSpec::noiseless(),
            verifier_noise: self.verifier_noise,
            spectrum: self.spectrum,
        };
        let mut policy = VerifierPolicy::new(f64::INFINITY, self.response_fn.clone(), &self.layout);
        policy.n_bins = self.n_bins;
        policy.min_flagged_slots = self
            .min_flagged_slots
            .unwrap_or((self.layout.pair_count() / 6).max(1));
        (setup, policy)
    }
}

// ── Distance fraud ───────────────────────────────────────────────────

/// What a dishonest prover tries in a distance-fraud run.
#[derive(Debug, Clone)]
pub enum DistanceFraudStrategy {
    /// Speed up (or null out) the processing delay, otherwise behave.
    FastProcessing { t_p: f64 },
    /// Gate the response onto the challenge slot as well, committing the
    /// response before the challenge finished reflecting.
    EarlyResponseModulation,
    /// Ignore the challenges entirely and gate precomputed bits.
    PreloadedResponses(BitVector),
}

/// Run a distance-fraud attempt: a dishonest prover at its true distance
/// plays waveform games to look closer. The estimate never moves, because
/// it is pinned to the beat frequency of the reflection; early modulation
/// only corrupts the reflected challenges and gets the run rejected.
pub fn simulate_distance_fraud(
    scenario: &AttackScenario,
    strategy: &DistanceFraudStrategy,
) -> Result<AttackOutcome> {
    let layout = &scenario.layout;
    let challenges = scenario.challenges();
    let tx = build_interrogation(&scenario.chirp, layout, &challenges, 1.0)?;

    let distance = scenario.attacker.d_va;
    let at_prover = propagate(&tx, &LegParams::new(distance));

    let mut prover_cfg = ProverConfig::with_response(scenario.response_fn.clone());
    if let DistanceFraudStrategy::FastProcessing { t_p } = strategy {
        prover_cfg.t_p = *t_p;
    }
    let mut prover = Prover::new(prover_cfg, layout)?;
    let transcript = prover.respond(&at_prover, layout, &NoiseSpec::noiseless(), 1.0)?;

    let mut reflection = transcript.reflection;
    match strategy {
        DistanceFraudStrategy::FastProcessing { .. } => {}
        DistanceFraudStrategy::EarlyResponseModulation => {
            // Load modulation can only gate the reflection, so committing
            // early silences challenge slots whose response bit is 0.
            for i in 0..layout.pair_count() {
                if !transcript.responses[i] {
                    let range = layout.slot_range(layout.challenge_slot(i));
                    for s in &mut reflection.samples_mut()[range] {
                        *s = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        DistanceFraudStrategy::PreloadedResponses(bits) => {
            // Re-gate the response slots from scratch with the preloaded
            // pattern: slots the honest run silenced are lost anyway (the
            // reflection carries no energy there to un-gate), so only
            // on-slots can be turned off.
            for i in 0..layout.pair_count().min(bits.len()) {
                if transcript.responses[i] && !bits[i] {
                    let range = layout.slot_range(layout.response_slot(i));
                    for s in &mut reflection.samples_mut()[range] {
                        *s = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    let at_verifier = propagate(&reflection, &LegParams::new(distance));
    let reference = on_slot_reference_power(
        &at_verifier,
        layout,
        &challenges,
        Some(&transcript.responses),
    );
    let rx = add_noise(&at_verifier, &scenario.verifier_noise, reference.max(1e-12));

    let (setup, policy) = scenario.verifier_view();
    let report = verify_reception(&rx, &tx, &setup, &policy, &challenges)?;

    Ok(AttackOutcome {
        time_budget: 0.0,
        feasible: true,
        claimed_distance: report.range.distance,
        true_distance: distance,
        distance_gain: distance - report.range.distance,
        responses_accepted: report.response_errors == 0 && report.challenge_errors == 0,
        lc_verdict: report.lc_verdict,
    })
}

// ── Relay attacks ────────────────────────────────────────────────────

/// Plain amplify-and-forward relay: the attacker inserts itself on the path
/// and repeats everything verbatim. The loop now runs
/// verifier-attacker-prover and back, so the beat frequency can only move
/// the estimate outward; the distance gain is never positive.
pub fn simulate_amplify_forward(scenario: &AttackScenario) -> Result<AttackOutcome> {
    let layout = &scenario.layout;
    let a = &scenario.attacker;
    let challenges = scenario.challenges();
    let tx = build_interrogation(&scenario.chirp, layout, &challenges, 1.0)?;

    // Relay leg each way; the attacker hardware delay is split across the
    // two traversals (only the sum matters).
    let leg = LegParams::with_extra_delay(a.d_va + a.d_ap, a.t_hw / 2.0);
    let at_prover = propagate(&tx, &leg);

    let mut prover = Prover::new(
        ProverConfig::with_response(scenario.response_fn.clone()),
        layout,
    )?;
    let transcript = prover.respond(&at_prover, layout, &NoiseSpec::noiseless(), 1.0)?;

    let at_verifier = propagate(&transcript.reflection, &leg);
    let reference = on_slot_reference_power(
        &at_verifier,
        layout,
        &challenges,
        Some(&transcript.responses),
    );
    let rx = add_noise(&at_verifier, &scenario.verifier_noise, reference.max(1e-12));

    let (setup, policy) = scenario.verifier_view();
    let report = verify_reception(&rx, &tx, &setup, &policy, &challenges)?;

    let budget = mafia_time_budget(layout.t_b(), a.t_ed, a.t_hw, true);
    Ok(AttackOutcome {
        time_budget: budget,
        feasible: budget >= 0.0,
        claimed_distance: report.range.distance,
        true_distance: scenario.direct_distance,
        distance_gain: scenario.direct_distance - report.range.distance,
        responses_accepted: report.response_errors == 0 && report.challenge_errors == 0,
        lc_verdict: report.lc_verdict,
    })
}

/// Commit onset of each on-response, measured from the response slot start
/// of the frame that the attacker reflects from its own position.
///
/// The attacker's reflection point cancels out: what remains is the relay
/// round trip to the prover, two early-detects, and the hardware delay.
/// A trusted prover pins the response to its own response slot; a colluding
/// one answers a full slot earlier.
fn commit_onset(scenario: &AttackScenario, colluding: bool) -> f64 {
    let a = &scenario.attacker;
    let relay_rt = 2.0 * a.d_ap / SPEED_OF_LIGHT;
    let base = 2.0 * a.t_ed + a.t_hw + relay_rt;
    let onset = if colluding {
        base - scenario.layout.t_b()
    } else {
        base
    };
    onset.max(0.0)
}

fn simulate_lc_relay(scenario: &AttackScenario, colluding: bool) -> Result<AttackOutcome> {
    let layout = &scenario.layout;
    let a = &scenario.attacker;
    let challenges = scenario.challenges();
    let tx = build_interrogation(&scenario.chirp, layout, &challenges, 1.0)?;

    // The honest prover's bits reach the attacker over the relay; what the
    // relay costs is captured by the commit onset below.
    let responses = scenario.response_fn.apply_all(&challenges)?;

    let at_attacker = propagate(&tx, &LegParams::new(a.d_va));
    let onset = commit_onset(scenario, colluding);
    let fs = scenario.chirp.fs;
    let onset_samples = libm::round(onset * fs) as usize;

    let mut emission = at_attacker.clone();
    for i in 0..layout.pair_count() {
        let range = layout.slot_range(layout.response_slot(i));
        if responses[i] {
            let cut = (range.start + onset_samples).min(range.end);
            for s in &mut emission.samples_mut()[range.start..cut] {
                *s = Complex64::new(0.0, 0.0);
            }
        } else {
            for s in &mut emission.samples_mut()[range] {
                *s = Complex64::new(0.0, 0.0);
            }
        }
    }

    let at_verifier = propagate(&emission, &LegParams::new(a.d_va));
    // SNR reference from the slots the commit gating never touches
    // (preamble and challenge reflections), so the noise level does not
    // drift with the committed fraction.
    let no_responses = BitVector::zeros(layout.pair_count());
    let reference = on_slot_reference_power(&at_verifier, layout, &challenges, Some(&no_responses));
    let rx = add_noise(&at_verifier, &scenario.verifier_noise, reference.max(1e-12));

    let (setup, policy) = scenario.verifier_view();
    let report = verify_reception(&rx, &tx, &setup, &policy, &challenges)?;

    let budget = mafia_time_budget(layout.t_b(), a.t_ed, a.t_hw, !colluding);
    let true_distance = a.d_va + a.d_ap;
    Ok(AttackOutcome {
        time_budget: budget,
        feasible: budget >= 0.0,
        claimed_distance: report.range.distance,
        true_distance,
        distance_gain: true_distance - report.range.distance,
        responses_accepted: report.response_errors == 0 && report.challenge_errors == 0,
        lc_verdict: report.lc_verdict,
    })
}

/// Early-detect/late-commit mafia fraud: the attacker reflects the frame
/// from its own position next to the verifier (so the beat frequency reads
/// the attacker's distance) and fills each response slot from its commit
/// onset once the trusted prover's bit has made it over the relay.
pub fn simulate_ed_lc(scenario: &AttackScenario) -> Result<AttackOutcome> {
    simulate_lc_relay(scenario, false)
}

/// Terrorist-fraud special case: same relay structure, but the colluding
/// prover hands out its response bits immediately instead of waiting for
/// its response slot, buying the attacker exactly one slot period.
pub fn simulate_terrorist_special(scenario: &AttackScenario) -> Result<AttackOutcome> {
    simulate_lc_relay(scenario, true)
}

/// Convenience: run the scenario in whatever mode its attacker config says.
pub fn simulate(scenario: &AttackScenario) -> Result<AttackOutcome> {
    match scenario.attacker.mode {
        AttackMode::AmplifyForward => simulate_amplify_forward(scenario),
        AttackMode::EdLcMafia => simulate_ed_lc(scenario),
        AttackMode::TerroristSpecial => simulate_terrorist_special(scenario),
        AttackMode::DistanceFraud => simulate_distance_fraud(
            scenario,
            &DistanceFraudStrategy::FastProcessing { t_p: 0.0 },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ChirpConfig {
        ChirpConfig::with_default_fs(2.4e9, 100e6, 10e-6).unwrap()
    }

    fn layout_with_tb(cfg: &ChirpConfig, t_b: f64) -> FrameLayout {
        FrameLayout::new(cfg, t_b, 4).unwrap()
    }

    fn attacker(t_ed: f64, t_hw: f64, d_va: f64, d_ap: f64, mode: AttackMode) -> AttackerConfig {
        AttackerConfig {
            t_ed,
            t_hw,
            d_va,
            d_ap,
            mode,
        }
    }

    #[test]
    fn budget_formulas_match_hand_arithmetic() {
        // Zero crossing at 100 ns slots, 25 ns early detect, ideal
        // hardware: the trusted budget lands exactly at zero.
        assert_eq!(mafia_time_budget(100e-9, 25e-9, 0.0, true), 0.0);
        assert_eq!(max_distance_gain(100e-9, 25e-9, 0.0, true), 0.0);

        assert!((mafia_time_budget(200e-9, 10e-9, 10e-9, true) - 70e-9).abs() < 1e-18);
        assert!((max_distance_gain(200e-9, 10e-9, 10e-9, true) - 10.5).abs() < 1e-9);

        assert!((mafia_time_budget(100e-9, 25e-9, 5e-9, false) - 95e-9).abs() < 1e-18);
        assert!((max_distance_gain(100e-9, 25e-9, 5e-9, false) - 14.25).abs() < 1e-9);

        assert!((max_distance_gain(100e-9, 0.0, 0.0, false) - 22.5).abs() < 1e-9);

        // Negative budgets come back signed.
        assert!(mafia_time_budget(100e-9, 40e-9, 10e-9, true) < 0.0);
    }

    #[test]
    fn colluding_minus_trusted_is_exactly_one_slot() {
        for &t_b in &[50e-9, 100e-9, 250e-9, 500e-9] {
            for &t_ed in &[0.0, 10e-9, 25e-9, 40e-9] {
                for &t_hw in &[0.0, 10e-9] {
                    let diff = mafia_time_budget(t_b, t_ed, t_hw, false)
                        - mafia_time_budget(t_b, t_ed, t_hw, true);
                    assert!((diff - t_b).abs() < 1e-20);
                }
            }
        }
    }

    #[test]
    fn gain_is_affine_with_the_right_slopes() {
        let base = (100e-9, 20e-9, 5e-9);
        let h = 1e-9;
        let g = |t_b: f64, t_ed: f64, t_hw: f64, trusted: bool| {
            max_distance_gain(t_b, t_ed, t_hw, trusted)
        };
        let c = SPEED_OF_LIGHT;

        let slope_tb = (g(base.0 + h, base.1, base.2, true) - g(base.0, base.1, base.2, true)) / h;
        assert!((slope_tb - c / 4.0).abs() < 1e-3);
        let slope_tb_c =
            (g(base.0 + h, base.1, base.2, false) - g(base.0, base.1, base.2, false)) / h;
        assert!((slope_tb_c - 3.0 * c / 4.0).abs() < 1e-3);

        let slope_ted = (g(base.0, base.1 + h, base.2, true) - g(base.0, base.1, base.2, true)) / h;
        assert!((slope_ted + c).abs() < 1e-3);

        let slope_thw = (g(base.0, base.1, base.2 + h, true) - g(base.0, base.1, base.2, true)) / h;
        assert!((slope_thw + c / 2.0).abs() < 1e-3);
    }

    #[test]
    fn terrorist_budget_is_one_slot_more_than_mafia() {
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = attacker(25e-9, 5e-9, 1.0, 1.0, AttackMode::TerroristSpecial);
        let scenario = AttackScenario::new(cfg, layout.clone(), att, 3);
        let terrorist = simulate_terrorist_special(&scenario).unwrap();
        let mafia = simulate_ed_lc(&scenario).unwrap();
        assert!((terrorist.time_budget - mafia.time_budget - layout.t_b()).abs() < 1e-18);
        assert!((terrorist.time_budget - 95e-9).abs() < 1e-18);
    }

    #[test]
    fn terrorist_budget_zero_crossing_at_three_quarter_slot() {
        // Early detection of 0.75 t_b per symbol eats the whole colluding
        // budget; past it the attack is infeasible.
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = |t_ed| attacker(t_ed, 0.0, 1.0, 1.0, AttackMode::TerroristSpecial);

        let at_edge = AttackScenario::new(cfg, layout.clone(), att(75e-9), 5);
        let out = simulate_terrorist_special(&at_edge).unwrap();
        assert_eq!(out.time_budget, 0.0);

        let beyond = AttackScenario::new(cfg, layout, att(80e-9), 5);
        let out = simulate_terrorist_special(&beyond).unwrap();
        assert!(out.time_budget < 0.0);
        assert!(!out.feasible);
        assert!(!out.succeeded());
    }

    #[test]
    fn amplify_forward_collinear_reads_true_distance() {
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = attacker(0.0, 0.0, 2.0, 4.0, AttackMode::AmplifyForward);
        let scenario = AttackScenario::new(cfg, layout, att, 1);
        let out = simulate_amplify_forward(&scenario).unwrap();
        assert!(out.responses_accepted);
        assert_eq!(out.lc_verdict, LateCommitVerdict::Clean);
        assert!(
            (out.claimed_distance - 6.0).abs() < 0.15,
            "claimed {} m",
            out.claimed_distance
        );
        assert!(out.distance_gain <= 1e-6);
    }

    #[test]
    fn amplify_forward_triangle_geometry_loses_distance() {
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = attacker(0.0, 20e-9, 2.0, 4.0, AttackMode::AmplifyForward);
        let mut scenario = AttackScenario::new(cfg, layout, att, 2);
        scenario.direct_distance = 5.0;
        let out = simulate_amplify_forward(&scenario).unwrap();
        // Claimed = 6 m of legs plus c*t_hw/2 = 3 m of hardware delay.
        assert!(
            (out.claimed_distance - 9.0).abs() < 0.2,
            "claimed {} m",
            out.claimed_distance
        );
        assert!(out.distance_gain < 0.0);
    }

    #[test]
    fn ed_lc_with_slack_budget_succeeds_and_respects_gain_bound() {
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 500e-9);
        let att = attacker(25e-9, 10e-9, 1.0, 1.0, AttackMode::EdLcMafia);
        let scenario = AttackScenario::new(cfg, layout, att, 7);
        let out = simulate_ed_lc(&scenario).unwrap();
        assert!(out.feasible);
        assert!(out.responses_accepted, "responses should demodulate");
        assert_eq!(out.lc_verdict, LateCommitVerdict::Clean);
        assert!(
            (out.claimed_distance - 1.0).abs() < 0.15,
            "claimed {} m (attacker reflection point)",
            out.claimed_distance
        );
        let analytic = SPEED_OF_LIGHT / 2.0 * out.time_budget;
        assert!(out.distance_gain <= analytic + 1.5);
    }

    #[test]
    fn ed_lc_without_budget_is_caught() {
        // Negative budget (t_b = 100 ns, t_ed = 40 ns, t_hw = 10 ns): the
        // run must fail demodulation or trip the detector in at least 99
        // of 100 seeded trials.
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = attacker(40e-9, 10e-9, 1.0, 1.0, AttackMode::EdLcMafia);
        let mut caught = 0usize;
        let trials = 100u64;
        for seed in 0..trials {
            let mut scenario = AttackScenario::new(cfg, layout.clone(), att, seed);
            scenario.verifier_noise = NoiseSpec::new(15.0, seed ^ 0xBEEF);
            let out = simulate_ed_lc(&scenario).unwrap();
            assert!(!out.feasible);
            if !out.responses_accepted || out.lc_verdict == LateCommitVerdict::LateCommitSuspected {
                caught += 1;
            }
        }
        assert!(
            caught >= 99,
            "only {caught}/{trials} infeasible attacks were caught"
        );
    }

    #[test]
    fn ed_lc_at_zero_crossing_trips_the_bin_detector() {
        // t_b = 100 ns, t_ed = 25 ns, ideal hardware: the budget is
        // exactly zero, the commit lands half a slot late, and the N=4
        // bin detector sees two leading bins off.
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = attacker(25e-9, 0.0, 1.0, 0.0, AttackMode::EdLcMafia);
        let scenario = AttackScenario::new(cfg, layout, att, 9);
        let out = simulate_ed_lc(&scenario).unwrap();
        assert_eq!(out.lc_verdict, LateCommitVerdict::LateCommitSuspected);
        assert!(!out.succeeded());
    }

    #[test]
    fn degenerate_ed_lc_reduces_to_amplify_forward() {
        // No early detection, no hardware delay, prover co-located with the
        // attacker: honest timing, so the relay looks like amplify-forward.
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let ed = attacker(0.0, 0.0, 3.0, 0.0, AttackMode::EdLcMafia);
        let scenario_ed = AttackScenario::new(cfg, layout.clone(), ed, 4);
        let af = attacker(0.0, 0.0, 3.0, 0.0, AttackMode::AmplifyForward);
        let scenario_af = AttackScenario::new(cfg, layout, af, 4);

        let out_ed = simulate_ed_lc(&scenario_ed).unwrap();
        let out_af = simulate_amplify_forward(&scenario_af).unwrap();
        assert!((out_ed.claimed_distance - out_af.claimed_distance).abs() < 1e-9);
        assert_eq!(out_ed.responses_accepted, out_af.responses_accepted);
        assert_eq!(out_ed.lc_verdict, out_af.lc_verdict);
        assert_eq!(out_ed.lc_verdict, LateCommitVerdict::Clean);
    }

    #[test]
    fn distance_fraud_gains_nothing_from_fast_processing() {
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = attacker(0.0, 0.0, 4.0, 0.0, AttackMode::DistanceFraud);
        let scenario = AttackScenario::new(cfg, layout, att, 21);

        let mut estimates = Vec::new();
        for &t_p in &[0.0, 20e-9, 40e-9, 80e-9] {
            let out =
                simulate_distance_fraud(&scenario, &DistanceFraudStrategy::FastProcessing { t_p })
                    .unwrap();
            assert!(out.responses_accepted);
            estimates.push(out.claimed_distance);
        }
        let resolution = SPEED_OF_LIGHT / (2.0 * cfg.bandwidth);
        for e in &estimates {
            assert!((e - estimates[0]).abs() <= resolution / 10.0);
        }
        assert!((estimates[0] - 4.0).abs() < resolution / 10.0);
    }

    #[test]
    fn early_response_modulation_corrupts_challenges() {
        let cfg = cfg();
        let layout = layout_with_tb(&cfg, 100e-9);
        let att = attacker(0.0, 0.0, 4.0, 0.0, AttackMode::DistanceFraud);
        let scenario = AttackScenario::new(cfg, layout, att, 22);
        let out =
            simulate_distance_fraud(&scenario, &DistanceFraudStrategy::EarlyResponseModulation)
                .unwrap();
        assert!(
            !out.responses_accepted,
            "corrupted challenges must be flagged"
        );
        // And it still bought no distance.
        assert!(out.distance_gain.abs() < 0.5);
    }
}
