//! Deterministic sample-point and coefficient generation.
//!
//! Equivalence and flatness checks evaluate coefficient fields at pseudo
//! random points. The stream is seeded so every report is reproducible;
//! rational points use small fixed denominators so exact-mode evaluation
//! stays cheap.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Field;

/// Denominator used for rational sample coordinates.
const DENOM: i64 = 64;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A rational coordinate in the open interval (0, 1).
    pub fn unit_rational(&mut self) -> BigRational {
        let k = self.rng.gen_range(1..DENOM);
        BigRational::new(BigInt::from(k), BigInt::from(DENOM))
    }

    /// A rational coefficient in [-2, 2] with denominator 8.
    pub fn coeff_rational(&mut self) -> BigRational {
        let k = self.rng.gen_range(-16..=16);
        BigRational::new(BigInt::from(k), BigInt::from(8))
    }

    /// A point in (0,1)^n with rational coordinates.
    pub fn unit_point(&mut self, n: usize) -> Vec<BigRational> {
        (0..n).map(|_| self.unit_rational()).collect()
    }

    /// `count` points in (0,1)^n, in the generic field.
    pub fn unit_points<F: Field>(&mut self, n: usize, count: usize) -> Vec<Vec<F>> {
        (0..count)
            .map(|_| {
                (0..n)
                    .map(|_| F::from_rational(&self.unit_rational()))
                    .collect()
            })
            .collect()
    }

    /// A uniform float in [lo, hi].
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..=hi)
    }
}

/// The default 20 deterministic sample points used by verdict operations.
pub fn default_sample_points<F: Field>(seed: u64, n: usize) -> Vec<Vec<F>> {
    Sampler::new(seed).unit_points(n, 20)
}
