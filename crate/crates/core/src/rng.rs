//! Seeded test-vector generator.
//!
//! The generator is SplitMix64 seeded with `SPECINT_SEED` (default 0). Each
//! vector component is drawn as a uniform real in `[-1, 1)`; for complex
//! fields the imaginary part is drawn immediately after the real part. The
//! vector is then normalized to unit length.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::operator::ScalarField;
use crate::{Scalar, Vector};

pub const SEED_ENV: &str = "SPECINT_SEED";

/// Reads `SPECINT_SEED`, falling back to 0 when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

pub struct VectorGenerator {
    rng: SplitMix64,
    field: ScalarField,
}

impl VectorGenerator {
    pub fn new(seed: u64, field: ScalarField) -> Self {
        Self {
            rng: SplitMix64::seed_from_u64(seed),
            field,
        }
    }

    pub fn raw(&mut self, n: usize) -> Vector {
        Vector::from_iterator(
            n,
            (0..n).map(|_| {
                let re = self.rng.random_range(-1.0..1.0);
                let im = match self.field {
                    ScalarField::Real => 0.0,
                    ScalarField::Complex => self.rng.random_range(-1.0..1.0),
                };
                Scalar::new(re, im)
            }),
        )
    }

    pub fn unit(&mut self, n: usize) -> Vector {
        loop {
            let v = self.raw(n);
            let norm = v.norm();
            if norm > 1e-3 {
                return v.unscale(norm);
            }
        }
    }

    pub fn units(&mut self, n: usize, count: usize) -> Vec<Vector> {
        (0..count).map(|_| self.unit(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_vectors() {
        let a = VectorGenerator::new(7, ScalarField::Complex).units(5, 3);
        let b = VectorGenerator::new(7, ScalarField::Complex).units(5, 3);
        assert_eq!(a, b);
        for v in &a {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn real_field_has_no_imaginary_parts() {
        let v = VectorGenerator::new(0, ScalarField::Real).unit(16);
        assert!(v.iter().all(|z| z.im == 0.0));
    }
}
