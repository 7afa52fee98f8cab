//! Radix-2 FFT and band-limited fractional resampling.
//!
//! The transform sizes in this crate are a few thousand to a few tens of
//! thousands of samples, so a plain iterative Cooley-Tukey with a precomputed
//! twiddle table is plenty and keeps the crate `no_std`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

fn bit_reverse(x: usize, log2n: u32) -> usize {
    let mut out = 0usize;
    let mut v = x;
    for _ in 0..log2n {
        out = (out << 1) | (v & 1);
        v >>= 1;
    }
    out
}

fn transform(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "FFT size must be a power of two");
    if n <= 1 {
        return;
    }
    let log2n = n.trailing_zeros();

    for i in 0..n {
        let j = bit_reverse(i, log2n);
        if i < j {
            buf.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|j| {
            let angle = sign * 2.0 * PI * j as f64 / n as f64;
            Complex64::new(libm::cos(angle), libm::sin(angle))
        })
        .collect();

    let mut size = 2usize;
    while size <= n {
        let half = size / 2;
        let stride = n / size;
        for start in (0..n).step_by(size) {
            for j in 0..half {
                let w = twiddles[j * stride];
                let u = buf[start + j];
                let t = w * buf[start + j + half];
                buf[start + j] = u + t;
                buf[start + j + half] = u - t;
            }
        }
        size <<= 1;
    }

    if inverse {
        let scale = 1.0 / n as f64;
        for s in buf.iter_mut() {
            *s *= scale;
        }
    }
}

/// In-place forward FFT. Length must be a power of two.
pub fn fft_in_place(buf: &mut [Complex64]) {
    transform(buf, false);
}

/// In-place inverse FFT (includes the 1/N scale).
pub fn ifft_in_place(buf: &mut [Complex64]) {
    transform(buf, true);
}

/// Forward FFT of `samples` zero-padded to `n` (power of two, >= len).
pub fn fft_padded(samples: &[Complex64], n: usize) -> Vec<Complex64> {
    assert!(n.is_power_of_two() && n >= samples.len());
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); n];
    buf[..samples.len()].copy_from_slice(samples);
    fft_in_place(&mut buf);
    buf
}

/// Signed bin frequency index for bin `k` of an `n`-point FFT.
#[inline]
fn signed_bin(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Evaluate the band-limited interpolant of `samples` at positions
/// `i + shift` for every sample index `i`.
///
/// Positive `shift` advances the sequence (`y[i] = x(i + shift)`). Implemented
/// as a linear phase ramp over a zero-padded FFT, which is exact for signals
/// band-limited below Nyquist; only samples near the buffer edges see the
/// circular wrap of the padding region.
pub fn fractional_shift(samples: &[Complex64], shift: f64) -> Vec<Complex64> {
    if shift == 0.0 || samples.is_empty() {
        return samples.to_vec();
    }
    let len = samples.len();
    let n = len.next_power_of_two();
    let mut buf = fft_padded(samples, n);
    for (k, s) in buf.iter_mut().enumerate() {
        let angle = 2.0 * PI * signed_bin(k, n) * shift / n as f64;
        *s *= Complex64::new(libm::cos(angle), libm::sin(angle));
    }
    ifft_in_place(&mut buf);
    buf.truncate(len);
    buf
}
