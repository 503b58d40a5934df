//! Reproducible random streams.
//!
//! Every stream is a ChaCha20 generator keyed by `seed_from_u64(seed)` and
//! positioned on ChaCha stream `stream_id`. Streams with the same seed and
//! different ids are disjoint, so chain `m` of a run uses `(seed, m)` and its
//! draws do not depend on how many other chains exist or how they are scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn std_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// A fresh, independent stream derived from this one.
    pub fn split(&mut self) -> RngStream {
        let seed = self.inner.next_u64();
        RngStream::new(seed, 0)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// `n` independent standard normal draws.
pub fn draw_std_normal_vector(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.std_normal()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_has_requested_length() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(draw_std_normal_vector(&mut rng, 3).len(), 3);
    }

    #[test]
    fn clones_reproduce() {
        let mut a = RngStream::new(42, 7);
        let _ = a.uniform();
        let mut b = a.clone();
        assert_eq!(
            draw_std_normal_vector(&mut a, 16),
            draw_std_normal_vector(&mut b, 16)
        );
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngStream::new(2024, 3);
        let n = 1_000_000;
        let x = draw_std_normal_vector(&mut rng, n);
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / 1000.0, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = RngStream::new(5, 5);
        for _ in 0..10_000 {
            let w = rng.uniform();
            assert!((0.0..1.0).contains(&w));
        }
    }
}
