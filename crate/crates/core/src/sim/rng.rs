use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded simulation RNG (ChaCha8 stream cipher, seeded via
/// `SeedableRng::seed_from_u64`). Equal seeds give equal streams on every
/// platform.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in (0, 1].
    pub fn unit_open_closed(&mut self) -> f64 {
        1.0 - self.inner.gen::<f64>()
    }

    /// Inverse-CDF exponential draw: `mean * -ln(u)` with `u` in (0, 1].
    pub fn exponential(&mut self, mean: f64) -> Result<f64> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::input(format!(
                "exponential mean must be positive, got {mean}"
            )));
        }
        Ok(-mean * self.unit_open_closed().ln())
    }

    /// Uniform integer in `[0, max]`.
    pub fn uniform_slots(&mut self, max: u32) -> u32 {
        self.inner.gen_range(0..=max)
    }

    /// Uniform real in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        self.inner.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SimRng::new(42);
        let mut b = SimRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.exponential(1.0).unwrap(), b.exponential(1.0).unwrap());
            assert_eq!(a.uniform_slots(31), b.uniform_slots(31));
        }
    }

    #[test]
    fn exponential_mean_and_median() {
        let mut r = SimRng::new(7);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| r.exponential(1.0).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((0.98..=1.02).contains(&mean), "mean {mean}");
        let below = draws.iter().filter(|&&x| x < std::f64::consts::LN_2).count() as f64 / n as f64;
        assert!((0.49..=0.51).contains(&below), "below-median fraction {below}");
        assert!(draws.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn exponential_rejects_non_positive_mean() {
        let mut r = SimRng::new(1);
        assert!(r.exponential(0.0).is_err());
        assert!(r.exponential(-2.0).is_err());
    }

    #[test]
    fn uniform_slots_covers_inclusive_range() {
        let mut r = SimRng::new(3);
        let mut seen = [false; 4];
        for _ in 0..1000 {
            seen[r.uniform_slots(3) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
