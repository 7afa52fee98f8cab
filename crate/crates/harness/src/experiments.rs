//! Seeded experiment runners: BER sweeps, ranging-precision sweeps, attack
//! gain curves, detector operating points, and single-exchange inspection.
//!
//! Trials are embarrassingly parallel. Each trial's seed is the base seed
//! plus a flat global trial index, so results do not depend on worker
//! count, list ordering, or scheduling; aggregation only ever sums and
//! averages per-point values in index order.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fmcwdb_core::attacks::{
    max_distance_gain, simulate_ed_lc, simulate_terrorist_special, AttackMode, AttackScenario,
    AttackerConfig,
};
use fmcwdb_core::buffer::BitVector;
use fmcwdb_core::channel::{add_noise, on_slot_reference_power, propagate, LegParams, NoiseSpec};
use fmcwdb_core::prover::{Prover, ProverConfig};
use fmcwdb_core::verifier::{
    dechirp, verify_reception, ExchangeSetup, LateCommitVerdict, VerifierPolicy,
};
use fmcwdb_core::waveform::build_interrogation;

use crate::capture::dump_waveform;
use crate::config::Config;
use crate::results::{ResultRow, ResultTable};

/// Runtime knobs from the CLI.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads; 0 lets rayon pick.
    pub jobs: usize,
    /// Where to dump waveform captures (simulate only).
    pub dump_dir: Option<PathBuf>,
}

/// Derived per-trial seeds: the trial's own seed is `base + index`; the
/// independent noise streams are fixed xor-tweaks of it.
fn trial_seed(base: u64, global_index: u64) -> u64 {
    base.wrapping_add(global_index)
}

const PROVER_NOISE_TWEAK: u64 = 0x9E37_79B9_7F4A_7C15;
const VERIFIER_NOISE_TWEAK: u64 = 0x6A09_E667_F3BC_C909;

fn run_indexed<T: Send>(jobs: usize, n: usize, f: impl Fn(usize) -> T + Sync) -> Result<Vec<T>> {
    let work = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
    if jobs == 0 {
        Ok(work())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .context("building worker pool")?;
        Ok(pool.install(work))
    }
}

/// Experiment column label: the config's `scenario` id when given, else
/// the subcommand name.
fn experiment_label<'a>(cfg: &'a Config, default: &'a str) -> &'a str {
    cfg.get_str("scenario").unwrap_or(default)
}

fn noise_pair(snr_db: f64, seed: u64) -> (NoiseSpec, NoiseSpec) {
    (
        NoiseSpec::new(snr_db, seed ^ PROVER_NOISE_TWEAK),
        NoiseSpec::new(snr_db, seed ^ VERIFIER_NOISE_TWEAK),
    )
}

struct HonestTrialResult {
    distance_error: f64,
    response_errors: usize,
    bits: usize,
    lc_suspected: bool,
}

/// One honest exchange at the given distance and SNR.
fn honest_trial(
    cfg: &Config,
    chirp: fmcwdb_core::waveform::ChirpConfig,
    layout: &fmcwdb_core::waveform::FrameLayout,
    distance: f64,
    snr_db: f64,
    n_bins: usize,
    seed: u64,
) -> Result<HonestTrialResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let challenges = BitVector::random(layout.pair_count(), &mut rng);
    let (prover_noise, verifier_noise) = noise_pair(snr_db, seed);
    let setup = ExchangeSetup {
        chirp,
        layout: layout.clone(),
        modulation_index: cfg.f64_or("mod_index", 1.0)?,
        leg_to_prover: LegParams::new(distance),
        leg_from_prover: LegParams::new(distance),
        prover_noise,
        verifier_noise,
        spectrum: Default::default(),
    };
    let response_fn = cfg.response_fn()?;
    let mut policy = VerifierPolicy::new(f64::INFINITY, response_fn.clone(), layout);
    policy.n_bins = n_bins;
    let mut prover_cfg = ProverConfig::with_response(response_fn);
    prover_cfg.t_p = cfg.f64_or("t_p", 19.5e-9)?;

    let report =
        fmcwdb_core::verifier::run_rapid_bit_exchange(&setup, &prover_cfg, &policy, &challenges)
            .map_err(|e| anyhow!("exchange failed: {e}"))?;
    Ok(HonestTrialResult {
        distance_error: report.range.distance - distance,
        response_errors: report.response_errors,
        bits: layout.pair_count(),
        lc_suspected: report.lc_verdict == LateCommitVerdict::LateCommitSuspected,
    })
}

// ── ber-sweep ────────────────────────────────────────────────────────

/// Bit error rate of the response stream over end-to-end exchanges, per
/// SNR point. Slot period fixed (100 ns unless configured), at least
/// `bits` response bits per point.
pub fn run_ber_sweep(cfg: &Config, opts: &RunOptions) -> Result<ResultTable> {
    let label = experiment_label(cfg, "ber-sweep");
    let chirp = cfg.chirp()?;
    let t_b = cfg.f64_or("t_b", 100e-9)?;
    let layout = cfg.layout(&chirp, t_b)?;
    let snr_list = cfg.list_f64_or("snr_list", &[0.0, 2.0, 4.0, 6.0, 8.0, 10.0])?;
    let bits_target = cfg.usize_or("bits", 10_000)?;
    let distance = cfg.f64_or("distance", 3.0)?;
    if bits_target == 0 {
        bail!("key `bits`: must be at least 1");
    }
    let frames = bits_target.div_ceil(layout.pair_count());

    let mut table = ResultTable::new();
    for (si, &snr_db) in snr_list.iter().enumerate() {
        let results = run_indexed(opts.jobs, frames, |i| {
            let seed = trial_seed(opts.seed, (si * frames + i) as u64);
            honest_trial(cfg, chirp, &layout, distance, snr_db, 4, seed)
        })?;
        let mut errors = 0usize;
        let mut bits = 0usize;
        for r in results {
            let r = r?;
            errors += r.response_errors;
            bits += r.bits;
        }
        let params = [
            ("snr_db", snr_db),
            ("t_b", t_b),
            ("f_bw", chirp.bandwidth),
            ("distance", distance),
        ];
        table.push(ResultRow::new(
            label,
            &params,
            "bit_errors",
            errors as f64,
            bits as u64,
            opts.seed,
        ))?;
        table.push(ResultRow::new(
            label,
            &params,
            "ber",
            errors as f64 / bits as f64,
            bits as u64,
            opts.seed,
        ))?;
    }
    Ok(table)
}

// ── range-sweep ──────────────────────────────────────────────────────

/// Mean absolute ranging error over randomly drawn distances, across the
/// (bandwidth, slot period) grid. The distance draws are shared across the
/// grid so curves are comparable point by point.
pub fn run_range_sweep(cfg: &Config, opts: &RunOptions) -> Result<ResultTable> {
    let label = experiment_label(cfg, "range-sweep");
    let f_bw_list = cfg.list_f64_or("f_bw_list", &[50e6, 100e6, 200e6])?;
    let t_b_list = cfg.list_f64_or("t_b_list", &[100e-9, 200e-9, 500e-9])?;
    let snr_db = cfg.f64_or("snr_db", 15.0)?;
    let n_distances = cfg.usize_or("n_distances", 100)?;
    if n_distances == 0 {
        bail!("key `n_distances`: must be at least 1");
    }
    let d_min = cfg.f64_or("d_min", 1.0)?;
    let d_max = cfg.f64_or("d_max", 15.0)?;
    if !(d_max > d_min && d_min > 0.0) {
        bail!("keys `d_min`/`d_max`: need 0 < d_min < d_max");
    }

    // Common random distances for every grid point.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let distances: Vec<f64> = (0..n_distances)
        .map(|_| d_min + (d_max - d_min) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
        .collect();

    let mut table = ResultTable::new();
    for (bi, &f_bw) in f_bw_list.iter().enumerate() {
        let chirp = cfg.chirp_with_bandwidth(f_bw)?;
        for (ti, &t_b) in t_b_list.iter().enumerate() {
            let layout = cfg.layout(&chirp, t_b)?;
            let point = bi * t_b_list.len() + ti;
            let results = run_indexed(opts.jobs, n_distances, |i| {
                let seed = trial_seed(opts.seed, (point * n_distances + i) as u64);
                honest_trial(cfg, chirp, &layout, distances[i], snr_db, 4, seed)
                    .map(|r| r.distance_error.abs())
            })?;
            let errs = results.into_iter().collect::<Result<Vec<f64>>>()?;
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let max = errs.iter().cloned().fold(0.0f64, f64::max);
            let params = [("f_bw", f_bw), ("t_b", t_b), ("snr_db", snr_db)];
            table.push(ResultRow::new(
                label,
                &params,
                "mean_abs_error_m",
                mean,
                n_distances as u64,
                opts.seed,
            ))?;
            table.push(ResultRow::new(
                label,
                &params,
                "max_abs_error_m",
                max,
                n_distances as u64,
                opts.seed,
            ))?;
        }
    }
    Ok(table)
}

// ── attack-sweep ─────────────────────────────────────────────────────

/// Analytic distance-gain curves over the (t_b, t_ed, t_hw) grid for both
/// the trusted-prover and colluding-prover budgets, with optional
/// waveform-level validation runs at each point.
pub fn run_attack_sweep(cfg: &Config, opts: &RunOptions) -> Result<ResultTable> {
    let label = experiment_label(cfg, "attack-sweep");
    let t_b_list = cfg.list_f64_or("t_b_list", &[50e-9, 100e-9, 200e-9, 250e-9, 500e-9])?;
    let t_ed_list = cfg.list_f64_or("t_ed_list", &[0.0, 10e-9, 25e-9, 40e-9])?;
    let t_hw_list = cfg.list_f64_or("t_hw_list", &[0.0, 10e-9])?;
    let simulate = cfg.u64_or("simulate_attacks", 1)? != 0;
    let d_va = cfg.f64_or("d_va", 2.0)?;
    let snr_db = cfg.f64_or("snr_db", f64::INFINITY)?;
    let chirp = cfg.chirp()?;

    let mut table = ResultTable::new();
    let mut point = 0usize;
    for &t_b in &t_b_list {
        for &t_ed in &t_ed_list {
            for &t_hw in &t_hw_list {
                for colluding in [false, true] {
                    let gain = max_distance_gain(t_b, t_ed, t_hw, !colluding);
                    let params = [
                        ("t_b", t_b),
                        ("t_ed", t_ed),
                        ("t_hw", t_hw),
                        ("colluding", colluding as u64 as f64),
                    ];
                    table.push(ResultRow::new(
                        label, &params, "d_gain_m", gain, 1, opts.seed,
                    ))?;

                    if simulate {
                        let layout = cfg.layout(&chirp, t_b)?;
                        // Place the prover at half the analytic reach (or a
                        // short hop when the budget is gone) and try it.
                        let d_ap = if gain > 0.0 {
                            (gain / 2.0).min(30.0)
                        } else {
                            0.5
                        };
                        let attacker = AttackerConfig {
                            t_ed,
                            t_hw,
                            d_va,
                            d_ap,
                            mode: if colluding {
                                AttackMode::TerroristSpecial
                            } else {
                                AttackMode::EdLcMafia
                            },
                        };
                        let mut scenario = AttackScenario::new(
                            chirp,
                            layout,
                            attacker,
                            trial_seed(opts.seed, point as u64),
                        );
                        scenario.response_fn = cfg.response_fn()?;
                        scenario.verifier_noise = NoiseSpec::new(
                            snr_db,
                            trial_seed(opts.seed, point as u64) ^ VERIFIER_NOISE_TWEAK,
                        );
                        let out = if colluding {
                            simulate_terrorist_special(&scenario)
                        } else {
                            simulate_ed_lc(&scenario)
                        }
                        .map_err(|e| anyhow!("attack simulation failed: {e}"))?;
                        table.push(ResultRow::new(
                            label,
                            &params,
                            "sim_gain_m",
                            out.distance_gain,
                            1,
                            opts.seed,
                        ))?;
                        table.push(ResultRow::new(
                            label,
                            &params,
                            "sim_success",
                            out.succeeded() as u64 as f64,
                            1,
                            opts.seed,
                        ))?;
                    }
                    point += 1;
                }
            }
        }
    }
    Ok(table)
}

// ── detector-roc ─────────────────────────────────────────────────────

/// Late-commit detector operating points: suspicion rate on attacks of a
/// given committed fraction, and false positives on honest traffic
/// (committed fraction 1).
pub fn run_detector_roc(cfg: &Config, opts: &RunOptions) -> Result<ResultTable> {
    let label = experiment_label(cfg, "detector-roc");
    let chirp = cfg.chirp()?;
    let t_b = cfg.f64_or("t_b", 100e-9)?;
    let layout = cfg.layout(&chirp, t_b)?;
    let commit_fractions = cfg.list_f64_or("commit_fraction_list", &[0.25, 0.5])?;
    let n_bins_list = cfg.list_usize_or("n_bins_list", &[1, 4])?;
    let snr_list = cfg.list_f64_or("snr_list", &[15.0])?;
    let attack_trials = cfg.usize_or("trials", 100)?;
    let honest_trials = cfg.usize_or("honest_trials", 1000)?;
    if attack_trials == 0 || honest_trials == 0 {
        bail!("keys `trials`/`honest_trials`: must be at least 1");
    }
    let d_va = cfg.f64_or("d_va", 2.0)?;
    let distance = cfg.f64_or("distance", 2.0)?;

    let mut table = ResultTable::new();
    let mut stream = 0usize;

    for (ni, &n_bins) in n_bins_list.iter().enumerate() {
        for (si, &snr_db) in snr_list.iter().enumerate() {
            // Attacks: committed fraction < 1 realized as a commit onset of
            // (1 - fraction) * t_b, split across the two early-detects.
            for &fraction in &commit_fractions {
                if !(0.0..1.0).contains(&fraction) {
                    bail!("key `commit_fraction_list`: fractions must lie in [0, 1)");
                }
                let onset = (1.0 - fraction) * t_b;
                let flags = run_indexed(opts.jobs, attack_trials, |i| {
                    let seed = trial_seed(opts.seed, (stream * attack_trials + i) as u64);
                    let attacker = AttackerConfig {
                        t_ed: onset / 2.0,
                        t_hw: 0.0,
                        d_va,
                        d_ap: 0.0,
                        mode: AttackMode::EdLcMafia,
                    };
                    let mut scenario = AttackScenario::new(chirp, layout.clone(), attacker, seed);
                    scenario.n_bins = n_bins;
                    scenario.verifier_noise = NoiseSpec::new(snr_db, seed ^ VERIFIER_NOISE_TWEAK);
                    simulate_ed_lc(&scenario).map(|out| {
                        let flagged = out.lc_verdict == LateCommitVerdict::LateCommitSuspected;
                        (flagged, flagged || !out.responses_accepted)
                    })
                })?;
                let outcomes = flags
                    .into_iter()
                    .collect::<fmcwdb_core::Result<Vec<(bool, bool)>>>()
                    .map_err(|e| anyhow!("attack simulation failed: {e}"))?;
                let detected = outcomes.iter().filter(|(flagged, _)| *flagged).count();
                let caught = outcomes.iter().filter(|(_, caught)| *caught).count();
                let params = [
                    ("commit_fraction", fraction),
                    ("n_bins", n_bins as f64),
                    ("snr_db", snr_db),
                ];
                table.push(ResultRow::new(
                    label,
                    &params,
                    "detection_rate",
                    detected as f64 / attack_trials as f64,
                    attack_trials as u64,
                    opts.seed,
                ))?;
                // Whether the verifier rejected the run at all: bin verdict
                // or plain response errors (partial commits can fail the
                // energy threshold outright).
                table.push(ResultRow::new(
                    label,
                    &params,
                    "caught_rate",
                    caught as f64 / attack_trials as f64,
                    attack_trials as u64,
                    opts.seed,
                ))?;
                stream += 1;
            }

            // Honest traffic: committed fraction 1.
            let honest_stream = (1000 + ni * snr_list.len() + si) * honest_trials;
            let flags = run_indexed(opts.jobs, honest_trials, |i| {
                let seed = trial_seed(opts.seed, (honest_stream + i) as u64);
                honest_trial(cfg, chirp, &layout, distance, snr_db, n_bins, seed)
                    .map(|r| r.lc_suspected)
            })?;
            let false_positives = flags
                .into_iter()
                .collect::<Result<Vec<bool>>>()?
                .iter()
                .filter(|&&d| d)
                .count();
            table.push(ResultRow::new(
                label,
                &[
                    ("commit_fraction", 1.0),
                    ("n_bins", n_bins as f64),
                    ("snr_db", snr_db),
                ],
                "false_positive_rate",
                false_positives as f64 / honest_trials as f64,
                honest_trials as u64,
                opts.seed,
            ))?;
        }
    }
    Ok(table)
}

// ── simulate ─────────────────────────────────────────────────────────

/// One honest exchange end to end, with optional waveform captures of the
/// interrogation, the received signal, and the dechirped IF signal.
pub fn run_simulate(cfg: &Config, opts: &RunOptions) -> Result<ResultTable> {
    let label = experiment_label(cfg, "simulate");
    let chirp = cfg.chirp()?;
    let t_b = cfg.require_f64("t_b")?;
    let layout = cfg.layout(&chirp, t_b)?;
    let distance = cfg.f64_or("distance", 3.0)?;
    let snr_db = cfg.f64_or("snr_db", 15.0)?;
    let max_distance = cfg.f64_or("max_distance", f64::INFINITY)?;
    let response_fn = cfg.response_fn()?;

    let seed = trial_seed(opts.seed, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let challenges = BitVector::random(layout.pair_count(), &mut rng);
    let (prover_noise, verifier_noise) = noise_pair(snr_db, seed);

    let setup = ExchangeSetup {
        chirp,
        layout: layout.clone(),
        modulation_index: cfg.f64_or("mod_index", 1.0)?,
        leg_to_prover: LegParams::new(distance),
        leg_from_prover: LegParams::new(distance),
        prover_noise,
        verifier_noise,
        spectrum: Default::default(),
    };
    let mut policy = VerifierPolicy::new(max_distance, response_fn.clone(), &layout);
    policy.n_bins = cfg.usize_or("n_bins", 4)?;
    if let Some(min_flagged) = cfg.get_str("min_flagged") {
        policy.min_flagged_slots = min_flagged
            .parse()
            .map_err(|_| anyhow!("key `min_flagged`: `{min_flagged}` is not an integer"))?;
    }
    let mut prover_cfg = ProverConfig::with_response(response_fn);
    prover_cfg.t_p = cfg.f64_or("t_p", 19.5e-9)?;

    // Step the pipeline by hand so the intermediate buffers are available
    // for capture.
    let tx = build_interrogation(&chirp, &layout, &challenges, setup.modulation_index)
        .map_err(|e| anyhow!("{e}"))?;
    let at_prover = propagate(&tx, &setup.leg_to_prover);
    let prover_reference = on_slot_reference_power(&at_prover, &layout, &challenges, None);
    let mut prover = Prover::new(prover_cfg, &layout).map_err(|e| anyhow!("{e}"))?;
    let transcript = prover
        .respond(&at_prover, &layout, &setup.prover_noise, prover_reference)
        .map_err(|e| anyhow!("{e}"))?;
    let at_verifier = propagate(&transcript.reflection, &setup.leg_from_prover);
    let verifier_reference = on_slot_reference_power(
        &at_verifier,
        &layout,
        &challenges,
        Some(&transcript.responses),
    );
    let rx = add_noise(&at_verifier, &setup.verifier_noise, verifier_reference);

    let report =
        verify_reception(&rx, &tx, &setup, &policy, &challenges).map_err(|e| anyhow!("{e}"))?;

    if let Some(dir) = &opts.dump_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create dump dir `{}`", dir.display()))?;
        dump_waveform(&tx, &dir.join("tx.iq"))?;
        dump_waveform(&rx, &dir.join("rx.iq"))?;
        let if_sig = dechirp(&rx, &tx).map_err(|e| anyhow!("{e}"))?;
        dump_waveform(&if_sig, &dir.join("if.iq"))?;
    }

    let params = [
        ("distance", distance),
        ("snr_db", snr_db),
        ("t_b", t_b),
        ("f_bw", chirp.bandwidth),
    ];
    let mut table = ResultTable::new();
    let metric =
        |name: &'static str, value: f64| ResultRow::new(label, &params, name, value, 1, opts.seed);
    table.push(metric("distance_m", report.range.distance))?;
    table.push(metric("f_delta_hz", report.range.f_delta))?;
    table.push(metric("resolution_m", report.range.resolution))?;
    table.push(metric(
        "nominal_max_distance_m",
        chirp.nominal_max_distance(),
    ))?;
    table.push(metric("peak_snr_db", report.range.peak_snr_db))?;
    table.push(metric("response_errors", report.response_errors as f64))?;
    table.push(metric("challenge_errors", report.challenge_errors as f64))?;
    table.push(metric(
        "lc_suspected",
        (report.lc_verdict == LateCommitVerdict::LateCommitSuspected) as u64 as f64,
    ))?;
    table.push(metric("accepted", report.accepted as u64 as f64))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_ber_is_zero() {
        let cfg = Config::parse("t_b=100e-9\nsnr_list=inf\nbits=500\n").unwrap();
        let opts = RunOptions {
            seed: 3,
            jobs: 1,
            dump_dir: None,
        };
        let table = run_ber_sweep(&cfg, &opts).unwrap();
        let ber = table
            .rows()
            .iter()
            .find(|r| r.metric == "ber")
            .map(|r| r.value)
            .unwrap();
        assert_eq!(ber, 0.0);
    }

    #[test]
    fn attack_sweep_layout_error_names_t_b() {
        // 170 ns does not tile the 10 us chirp.
        let cfg = Config::parse("t_b_list=170e-9\nsimulate_attacks=1\n").unwrap();
        let opts = RunOptions::default();
        let err = run_attack_sweep(&cfg, &opts).unwrap_err().to_string();
        assert!(err.contains("t_b"), "{err}");
    }
}
