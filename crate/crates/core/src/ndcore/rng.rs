use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::Matrix;
use crate::{Error, Result};

/// Seeded random stream.
///
/// Backed by ChaCha8 (`rand_chacha`), seeded through `SeedableRng::seed_from_u64`.
/// Every draw goes through [`RngState::next_u64`]; floating-point values are
/// derived from those integers afterwards, so the stream itself never depends
/// on floating-point state.
///
/// * `uniform()` consumes one `u64` and returns `(x >> 11) * 2^-53` in `[0, 1)`.
/// * Gaussian samples use Box-Muller on two uniforms and produce two normals;
///   filling `n` values consumes `2 * ceil(n / 2)` words (an odd tail discards
///   the spare).
#[derive(Debug, Clone, PartialEq)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream `stream` for the same seed (ChaCha stream id).
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Derives a child stream seeded from the next word of this one.
    pub fn fork(&mut self) -> RngState {
        RngState::new(self.next_u64())
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` by rejection on the top bits (unbiased).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `count` indices drawn with replacement from `0..n`.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        (0..count).map(|_| self.below(n)).collect()
    }

    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut chunks = out.chunks_mut(2);
        for pair in &mut chunks {
            // 1 - u keeps the log argument in (0, 1].
            let u1 = 1.0 - self.uniform();
            let u2 = self.uniform();
            let r = libm::sqrt(-2.0 * libm::log(u1));
            let t = core::f64::consts::TAU * u2;
            pair[0] = r * libm::cos(t);
            if pair.len() > 1 {
                pair[1] = r * libm::sin(t);
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        let mut v = [0.0];
        self.fill_standard_normal(&mut v);
        v[0]
    }
}

/// `rows x cols` matrix of i.i.d. `N(0, sigma^2)` draws.
///
/// `sigma == 0` still advances the stream by the same number of words so
/// that downstream draws do not shift.
pub fn sample_gaussian(rng: &mut RngState, rows: usize, cols: usize, sigma: f64) -> Result<Matrix> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", "must be finite and non-negative"));
    }
    let mut m = Matrix::zeros(rows, cols);
    rng.fill_standard_normal(m.data_mut());
    if sigma == 0.0 {
        m.data_mut().iter_mut().for_each(|v| *v = 0.0);
    } else {
        m.data_mut().iter_mut().for_each(|v| *v *= sigma);
    }
    Ok(m)
}
