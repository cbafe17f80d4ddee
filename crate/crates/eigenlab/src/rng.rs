//! Counter-based random streams: every example index gets an independent
//! generator keyed by (seed, index, lane), so samples can be produced in any
//! order, in parallel, with bit-identical results.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distinguishes independent stream families that share the same (seed, index).
#[derive(Debug, Clone, Copy)]
pub enum Lane {
    Matrix,
    Spectrum,
    Model,
}

impl Lane {
    fn tag(self) -> u64 {
        match self {
            Lane::Matrix => 0x6d61_7472,
            Lane::Spectrum => 0x7370_6563,
            Lane::Model => 0x6d6f_6465,
        }
    }
}

pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    /// Derives an independent stream from a 128-bit mix of (seed, index) plus
    /// a lane tag.
    pub fn derive(seed: u64, index: u64, lane: Lane) -> Stream {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&index.to_le_bytes());
        key[16..24].copy_from_slice(&lane.tag().to_le_bytes());
        key[24..32].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
        Stream {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval (0, 1); safe for logs.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.uniform() * (hi - lo)
    }

    /// Fills `out` with Normal(0, sd²) draws via Box–Muller pairs.
    pub fn fill_normal(&mut self, sd: f64, out: &mut [f64]) {
        let mut i = 0;
        while i < out.len() {
            let u1 = self.uniform_open();
            let u2 = self.uniform();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = std::f64::consts::TAU * u2;
            out[i] = sd * r * theta.cos();
            i += 1;
            if i < out.len() {
                out[i] = sd * r * theta.sin();
                i += 1;
            }
        }
    }

    /// Laplace(0, scale) by inverse CDF.
    pub fn laplace(&mut self, scale: f64) -> f64 {
        let u = self.uniform_open() - 0.5;
        -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}
