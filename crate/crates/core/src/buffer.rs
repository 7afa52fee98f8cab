//! Sample buffers and bit sequences passed between pipeline blocks.

use alloc::vec::Vec;
use core::ops::Index;

use num_complex::Complex64;
use rand_core::RngCore;

/// A complex-baseband sample sequence with its sample rate and the absolute
/// time of its first sample.
///
/// Every signal in the pipeline (the interrogation, the signal at the prover,
/// the reflection, the IF signal after dechirping) travels in one of these.
/// Propagation updates `t0`; samples stay on the emitter's grid until the
/// verifier front-end aligns them.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformBuffer {
    samples: Vec<Complex64>,
    fs: f64,
    t0: f64,
}

impl WaveformBuffer {
    /// Wrap a sample vector. `fs` must be positive.
    pub fn new(samples: Vec<Complex64>, fs: f64, t0: f64) -> Self {
        assert!(fs > 0.0, "sample rate must be positive");
        Self { samples, fs, t0 }
    }

    /// All-zero buffer of `n` samples.
    pub fn zeros(n: usize, fs: f64, t0: f64) -> Self {
        Self::new(alloc::vec![Complex64::new(0.0, 0.0); n], fs, t0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Time of the first sample (s).
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn set_t0(&mut self, t0: f64) {
        self.t0 = t0;
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Buffer duration in seconds (`len / fs`).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Sum of |x|^2 over all samples.
    pub fn total_energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Scale every sample by a real gain factor.
    pub fn scale(&mut self, gain: f64) {
        for s in &mut self.samples {
            *s *= gain;
        }
    }
}

/// Number of samples spanning `duration` at rate `fs`.
///
/// `duration * fs` that lands within 1e-6 samples of an integer is snapped to
/// it, so a 10 us buffer at 400 MS/s is 4000 samples and not 4001 when the
/// product rounds up in binary. Otherwise the count is rounded up to cover
/// the full duration.
pub fn samples_for_duration(duration: f64, fs: f64) -> usize {
    let exact = duration * fs;
    let nearest = libm::round(exact);
    if libm::fabs(exact - nearest) < 1e-6 {
        nearest as usize
    } else {
        libm::ceil(exact) as usize
    }
}

/// An ordered sequence of bits, used for challenges, responses, and keys.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Build from 0/1 integers; anything nonzero is a 1.
    pub fn from_u8(bits: &[u8]) -> Self {
        Self {
            bits: bits.iter().map(|&b| b != 0).collect(),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            bits: alloc::vec![false; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        Self {
            bits: alloc::vec![true; len],
        }
    }

    /// Uniformly random bits from the supplied generator.
    pub fn random<R: RngCore>(len: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..len).map(|_| rng.next_u32() & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Number of positions where the two vectors disagree.
    ///
    /// Panics if the lengths differ.
    pub fn hamming_distance(&self, other: &BitVector) -> usize {
        assert_eq!(self.len(), other.len(), "bit vector length mismatch");
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Bitwise complement.
    pub fn invert(&self) -> BitVector {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

impl Index<usize> for BitVector {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.bits[i]
    }
}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duration_rounding_snaps_to_integer() {
        // 10 us at 400 MS/s: the f64 product is 4000.0000000000005.
        assert_eq!(samples_for_duration(10e-6, 400e6), 4000);
        assert_eq!(samples_for_duration(1e-5, 2e8), 2000);
        // A genuinely fractional span rounds up.
        assert_eq!(samples_for_duration(1.25e-8, 4e8), 5);
        assert_eq!(samples_for_duration(1.3e-8, 4e8), 6);
    }

    #[test]
    fn bitvector_roundtrip_and_distance() {
        let a = BitVector::from_u8(&[1, 0, 1, 0]);
        let b = a.invert();
        assert_eq!(b, BitVector::from_u8(&[0, 1, 0, 1]));
        assert_eq!(a.hamming_distance(&b), 4);
        assert_eq!(a.hamming_distance(&a), 0);
    }

    #[test]
    fn random_bits_deterministic_per_seed() {
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(
            BitVector::random(64, &mut r1),
            BitVector::random(64, &mut r2)
        );
    }

    #[test]
    fn buffer_energy_and_scale() {
        let mut w = WaveformBuffer::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
            100.0,
            0.0,
        );
        assert_eq!(w.total_energy(), 5.0);
        w.scale(0.5);
        assert!((w.total_energy() - 1.25).abs() < 1e-12);
    }
}
