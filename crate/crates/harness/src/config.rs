//! Flat `key=value` experiment configuration.
//!
//! One key per line, `#` comments, lists written `a,b,c`. No nesting: the
//! format stays diff-friendly and trivially parseable from any language.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fmcwdb_core::buffer::BitVector;
use fmcwdb_core::prover::ResponseFunction;
use fmcwdb_core::waveform::{ChirpConfig, FrameLayout};

/// Keys any experiment may use. Unknown keys are rejected so a typo cannot
/// silently fall back to a default.
const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "f0",
    "f_bw",
    "f_bw_list",
    "chirp_duration",
    "fs",
    "t_b",
    "t_b_list",
    "preamble_slots",
    "mod_index",
    "snr_db",
    "snr_list",
    "distance",
    "d_min",
    "d_max",
    "n_distances",
    "trials",
    "honest_trials",
    "bits",
    "seed",
    "response_fn",
    "key",
    "r0",
    "r1",
    "max_distance",
    "n_bins",
    "n_bins_list",
    "min_flagged",
    "t_p",
    "t_ed_list",
    "t_hw_list",
    "commit_fraction_list",
    "d_va",
    "d_ap",
    "direct_distance",
    "simulate_attacks",
    "out",
];

/// Parsed key=value file with typed, validated accessors.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", lineno + 1))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}`", lineno + 1);
            }
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                bail!("line {}: duplicate key `{key}`", lineno + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config `{}`", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config `{}`", path.display()))
    }

    /// Override or insert a value (used for CLI flags that trump the file).
    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn parse_f64(key: &str, raw: &str) -> Result<f64> {
        match raw {
            "inf" | "+inf" => Ok(f64::INFINITY),
            _ => raw
                .parse::<f64>()
                .map_err(|_| anyhow!("key `{key}`: `{raw}` is not a number")),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.values.get(key) {
            Some(raw) => Self::parse_f64(key, raw),
            None => Ok(default),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .values
            .get(key)
            .ok_or_else(|| anyhow!("missing required key `{key}`"))?;
        Self::parse_f64(key, raw)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.values.get(key) {
            Some(raw) => raw
                .parse::<u64>()
                .map_err(|_| anyhow!("key `{key}`: `{raw}` is not an unsigned integer")),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    pub fn list_f64_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.values.get(key) {
            Some(raw) => {
                let list: Result<Vec<f64>> = raw
                    .split(',')
                    .map(|item| Self::parse_f64(key, item.trim()))
                    .collect();
                let list = list?;
                if list.is_empty() {
                    bail!("key `{key}`: list must not be empty");
                }
                Ok(list)
            }
            None => Ok(default.to_vec()),
        }
    }

    pub fn list_usize_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        Ok(self
            .list_f64_or(key, &default.iter().map(|&v| v as f64).collect::<Vec<_>>())?
            .into_iter()
            .map(|v| v as usize)
            .collect())
    }

    fn bits(&self, key: &str) -> Result<BitVector> {
        let raw = self.values.get(key).ok_or_else(|| {
            anyhow!("missing required key `{key}` for the keyed response function")
        })?;
        if raw.is_empty() || !raw.chars().all(|c| c == '0' || c == '1') {
            bail!("key `{key}`: expected a 0/1 string");
        }
        Ok(raw.chars().map(|c| c == '1').collect())
    }

    /// Chirp parameters: `f0`, `f_bw`, `chirp_duration`, and `fs`
    /// (defaulting to 4x the bandwidth).
    pub fn chirp(&self) -> Result<ChirpConfig> {
        self.chirp_with_bandwidth(self.f64_or("f_bw", 100e6)?)
    }

    /// Same, with the bandwidth supplied by a sweep.
    pub fn chirp_with_bandwidth(&self, f_bw: f64) -> Result<ChirpConfig> {
        let f0 = self.f64_or("f0", 2.4e9)?;
        let duration = self.f64_or("chirp_duration", 10e-6)?;
        let fs = self.f64_or("fs", 4.0 * f_bw)?;
        ChirpConfig::new(f0, f_bw, duration, fs).map_err(|e| anyhow!("{e}"))
    }

    /// Slot layout for the configured (or supplied) slot period.
    pub fn layout(&self, chirp: &ChirpConfig, t_b: f64) -> Result<FrameLayout> {
        let preamble = self.usize_or("preamble_slots", 4)?;
        FrameLayout::new(chirp, t_b, preamble).map_err(|e| anyhow!("{e}"))
    }

    /// The response function both sides agree on. Keyed functions read
    /// their secret bits from `key` / `r0` / `r1`.
    pub fn response_fn(&self) -> Result<ResponseFunction> {
        match self.get_str("response_fn").unwrap_or("invert") {
            "invert" => Ok(ResponseFunction::Invert),
            "xor_key" => Ok(ResponseFunction::XorKey(self.bits("key")?)),
            "hk_register" => Ok(ResponseFunction::HkRegister {
                r0: self.bits("r0")?,
                r1: self.bits("r1")?,
            }),
            other => bail!("key `response_fn`: unknown function `{other}`"),
        }
    }

    /// Canonical text form (sorted keys), used to echo the effective config.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_lists_and_comments() {
        let cfg =
            Config::parse("# comment\nt_b = 100e-9\nsnr_list = 0, 5, 10\nresponse_fn=invert\n\n")
                .unwrap();
        assert_eq!(cfg.require_f64("t_b").unwrap(), 100e-9);
        assert_eq!(
            cfg.list_f64_or("snr_list", &[]).unwrap(),
            vec![0.0, 5.0, 10.0]
        );
        assert!(matches!(
            cfg.response_fn().unwrap(),
            ResponseFunction::Invert
        ));
    }

    #[test]
    fn missing_required_key_names_the_key() {
        let cfg = Config::parse("snr_db=10\n").unwrap();
        let err = cfg.require_f64("t_b").unwrap_err().to_string();
        assert!(err.contains("t_b"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Config::parse("t_bee=1\n").unwrap_err().to_string();
        assert!(err.contains("t_bee"), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(Config::parse("t_b=1\nt_b=2\n").is_err());
    }

    #[test]
    fn infinity_spelled_inf() {
        let cfg = Config::parse("snr_db=inf\n").unwrap();
        assert_eq!(cfg.require_f64("snr_db").unwrap(), f64::INFINITY);
    }

    #[test]
    fn keyed_function_requires_secret() {
        let cfg = Config::parse("response_fn=xor_key\n").unwrap();
        let err = cfg.response_fn().unwrap_err().to_string();
        assert!(err.contains("key"), "{err}");

        let cfg = Config::parse("response_fn=xor_key\nkey=0110\n").unwrap();
        assert!(matches!(
            cfg.response_fn().unwrap(),
            ResponseFunction::XorKey(_)
        ));
    }
}
