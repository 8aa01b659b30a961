//! Seeded random numbers with Box–Muller normals.
//!
//! ChaCha8 is used so that streams are identical across platforms and runs
//! for a given seed.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{ComplexField, DualField};

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform sample in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform sample in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.inner.random_range(0..len)
    }

    /// Standard normal sample.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 − U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || self.normal())
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || self.uniform_in(lo, hi))
    }

    /// Field with i.i.d. standard normal real and imaginary parts.
    pub fn normal_field(&mut self, rows: usize, cols: usize) -> ComplexField {
        let u = self.normal_matrix(rows, cols);
        let v = self.normal_matrix(rows, cols);
        ComplexField::from_parts(u, v)
    }

    /// Dual field with i.i.d. standard normal entries.
    pub fn normal_dual(&mut self, rows: usize, cols: usize) -> DualField {
        let mut q = DualField::zeros(rows, cols);
        for block in [&mut q.u1, &mut q.u2, &mut q.v1, &mut q.v2] {
            block.mapv_inplace(|_| self.normal());
        }
        q
    }
}
