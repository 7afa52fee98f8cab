//! Waveform capture files: a 32-byte text header followed by interleaved
//! little-endian f32 I/Q samples. Parseable from anywhere with a one-line
//! header read and a raw float load.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fmcwdb_core::WaveformBuffer;

/// Header is exactly this many bytes, newline included.
pub const HEADER_LEN: usize = 32;

fn header(w: &WaveformBuffer) -> Result<String> {
    let mut line = format!("fs={:.2e} t0={:.5e} n={}", w.fs(), w.t0(), w.len());
    if line.len() > HEADER_LEN - 1 {
        bail!("capture header does not fit 32 bytes: `{line}`");
    }
    while line.len() < HEADER_LEN - 1 {
        line.push(' ');
    }
    line.push('\n');
    Ok(line)
}

/// Write a buffer to `path` in the capture format.
pub fn dump_waveform(w: &WaveformBuffer, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * w.len());
    bytes.extend_from_slice(header(w)?.as_bytes());
    for s in w.samples() {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("cannot create capture `{}`", path.display()))?;
    f.write_all(&bytes)?;
    Ok(())
}
