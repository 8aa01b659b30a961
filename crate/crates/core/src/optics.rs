//! Angular-spectrum free-space propagation and the amplitude-fidelity term.
//!
//! The propagator applies `H(fx, fy) = exp(i·(2π/λ)·d·√(1 − (λfx)² − (λfy)²))`
//! to the spectrum of the field. Frequencies with a negative radicand are
//! evanescent and are zeroed, so `|H| ∈ {0, 1}` and the adjoint is the same
//! filter conjugated (equivalently, propagation by `−d`). Both transform
//! directions are normalized by `1/√(mn)`, which makes the transform pair
//! unitary.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::ComplexField;

/// Guard for the unit-phase factor `ξ/|ξ|` at (near) zero modulus.
pub const MODULUS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    /// Illumination wavelength in meters.
    pub wavelength: f64,
    /// Propagation distance in meters; negative values back-propagate.
    pub distance: f64,
    /// Sampling pitch in meters (same in both directions).
    pub pixel_pitch: f64,
    pub rows: usize,
    pub cols: usize,
}

impl PropagatorConfig {
    pub fn new(wavelength: f64, distance: f64, pixel_pitch: f64, rows: usize, cols: usize) -> Self {
        Self {
            wavelength,
            distance,
            pixel_pitch,
            rows,
            cols,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::invalid(format!("wavelength must be positive, got {}", self.wavelength)));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(Error::invalid(format!("pixel pitch must be positive, got {}", self.pixel_pitch)));
        }
        if !self.distance.is_finite() {
            return Err(Error::invalid("propagation distance must be finite"));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::EmptyField);
        }
        Ok(())
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn with_distance(mut self, distance: f64) -> Self {
        self.distance = distance;
        self
    }
}

/// Spatial frequency of FFT bin `index` for a length-`len` axis, i.e. the
/// centered grid `(k − ⌊N/2⌋)/(N·pitch)` read in unshifted order.
pub fn frequency(index: usize, len: usize, pitch: f64) -> f64 {
    let signed = if index < len - len / 2 {
        index as f64
    } else {
        index as f64 - len as f64
    };
    signed / (len as f64 * pitch)
}

/// Measured intensity `|A(x)|²`; non-negative by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Intensity(Array2<f64>);

impl Intensity {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyField);
        }
        if !values.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("intensity"));
        }
        if values.iter().any(|&x| x < 0.0) {
            return Err(Error::invalid("intensity values must be non-negative"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }

    pub fn amplitude(&self) -> Array2<f64> {
        self.0.mapv(f64::sqrt)
    }
}

/// Precomputed transfer function and FFT plans for one configuration.
#[derive(Clone)]
pub struct Propagator {
    config: PropagatorConfig,
    transfer: Array2<Complex64>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Propagator {
    pub fn new(config: PropagatorConfig) -> Result<Self> {
        config.validate()?;
        let (m, n) = config.dim();
        let mut planner = FftPlanner::new();
        let k = 2.0 * PI / config.wavelength;
        let transfer = Array2::from_shape_fn((m, n), |(j, l)| {
            let fy = frequency(j, m, config.pixel_pitch);
            let fx = frequency(l, n, config.pixel_pitch);
            let radicand = 1.0 - (config.wavelength * fx).powi(2) - (config.wavelength * fy).powi(2);
            if radicand < 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, k * config.distance * radicand.sqrt())
            }
        });
        Ok(Self {
            config,
            transfer,
            row_fwd: planner.plan_fft_forward(n),
            row_inv: planner.plan_fft_inverse(n),
            col_fwd: planner.plan_fft_forward(m),
            col_inv: planner.plan_fft_inverse(m),
        })
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.config
    }

    /// Transfer function in unshifted FFT order.
    pub fn transfer(&self) -> &Array2<Complex64> {
        &self.transfer
    }

    fn check_shape(&self, dim: (usize, usize)) {
        assert_eq!(dim, self.config.dim(), "field shape does not match propagator grid");
    }

    fn fft2(&self, data: &mut Array2<Complex64>, inverse: bool) {
        let (m, n) = data.dim();
        let (row_plan, col_plan) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        let mut scratch = vec![Complex64::default(); row_plan.get_inplace_scratch_len().max(col_plan.get_inplace_scratch_len())];
        let mut buf = vec![Complex64::default(); m.max(n)];
        for mut row in data.rows_mut() {
            let line = &mut buf[..n];
            for (dst, src) in line.iter_mut().zip(row.iter()) {
                *dst = *src;
            }
            row_plan.process_with_scratch(line, &mut scratch);
            for (dst, src) in row.iter_mut().zip(line.iter()) {
                *dst = *src;
            }
        }
        for mut col in data.columns_mut() {
            let line = &mut buf[..m];
            for (dst, src) in line.iter_mut().zip(col.iter()) {
                *dst = *src;
            }
            col_plan.process_with_scratch(line, &mut scratch);
            for (dst, src) in col.iter_mut().zip(line.iter()) {
                *dst = *src;
            }
        }
        let norm = 1.0 / ((m * n) as f64).sqrt();
        data.mapv_inplace(|z| z * norm);
    }

    fn apply(&self, mut field: Array2<Complex64>, conjugate: bool) -> Array2<Complex64> {
        self.check_shape(field.dim());
        self.fft2(&mut field, false);
        Zip::from(&mut field).and(&self.transfer).for_each(|z, &h| {
            *z *= if conjugate { h.conj() } else { h };
        });
        self.fft2(&mut field, true);
        field
    }

    /// `A(x)` on complex samples.
    pub fn forward_complex(&self, field: Array2<Complex64>) -> Array2<Complex64> {
        self.apply(field, false)
    }

    /// `A*(w)` on complex samples.
    pub fn adjoint_complex(&self, field: Array2<Complex64>) -> Array2<Complex64> {
        self.apply(field, true)
    }

    /// Propagates `x` by the configured distance.
    pub fn propagate(&self, x: &ComplexField) -> ComplexField {
        ComplexField::from_complex_unchecked(self.forward_complex(x.to_complex()))
    }

    /// Adjoint propagation (conjugate transfer); the inverse of
    /// [`propagate`](Self::propagate) on the propagating band.
    pub fn adjoint(&self, x: &ComplexField) -> ComplexField {
        ComplexField::from_complex_unchecked(self.adjoint_complex(x.to_complex()))
    }

    /// `y = |A(x)|²`.
    pub fn forward_intensity(&self, x: &ComplexField) -> Intensity {
        Intensity(self.forward_complex(x.to_complex()).mapv(|z| z.norm_sqr()))
    }

    /// `F(x) = ½·Σ(|A(x)| − √y)²`.
    pub fn fidelity_value(&self, x: &ComplexField, y: &Intensity) -> f64 {
        self.check_shape(y.dim());
        let xi = self.forward_complex(x.to_complex());
        0.5 * Zip::from(&xi)
            .and(y.values())
            .fold(0.0, |acc, z, &y| {
                let r = z.norm() - y.sqrt();
                acc + r * r
            })
    }

    /// Gradient of [`fidelity_value`](Self::fidelity_value) with respect to
    /// the real pair `(u, v)`: `A*[(ξ/|ξ|)·(|ξ| − √y)]` with `ξ = A(x)`.
    pub fn fidelity_gradient(&self, x: &ComplexField, y: &Intensity) -> ComplexField {
        self.fidelity_value_and_gradient(x, y).1
    }

    /// Value and gradient sharing one forward propagation.
    pub fn fidelity_value_and_gradient(&self, x: &ComplexField, y: &Intensity) -> (f64, ComplexField) {
        self.check_shape(y.dim());
        let mut xi = self.forward_complex(x.to_complex());
        let mut value = 0.0;
        Zip::from(&mut xi).and(y.values()).for_each(|z, &y| {
            let modulus = z.norm();
            let residual = modulus - y.sqrt();
            value += residual * residual;
            *z *= residual / modulus.max(MODULUS_EPS);
        });
        let grad = ComplexField::from_complex_unchecked(self.adjoint_complex(xi));
        (0.5 * value, grad)
    }

    /// One modulus replacement: keep the phase of `A(x)`, impose amplitude
    /// `√y`, and propagate back.
    pub fn replace_modulus(&self, x: &ComplexField, y: &Intensity) -> ComplexField {
        self.check_shape(y.dim());
        let mut xi = self.forward_complex(x.to_complex());
        Zip::from(&mut xi).and(y.values()).for_each(|z, &y| {
            *z *= y.sqrt() / z.norm().max(MODULUS_EPS);
        });
        ComplexField::from_complex_unchecked(self.adjoint_complex(xi))
    }
}

pub fn propagate(x: &ComplexField, config: &PropagatorConfig) -> Result<ComplexField> {
    check_dims(x.dim(), config)?;
    Ok(Propagator::new(*config)?.propagate(x))
}

pub fn forward_intensity(x: &ComplexField, config: &PropagatorConfig) -> Result<Intensity> {
    check_dims(x.dim(), config)?;
    Ok(Propagator::new(*config)?.forward_intensity(x))
}

pub fn fidelity_value(x: &ComplexField, y: &Intensity, config: &PropagatorConfig) -> Result<f64> {
    check_dims(x.dim(), config)?;
    check_dims(y.dim(), config)?;
    Ok(Propagator::new(*config)?.fidelity_value(x, y))
}

pub fn fidelity_gradient(x: &ComplexField, y: &Intensity, config: &PropagatorConfig) -> Result<ComplexField> {
    check_dims(x.dim(), config)?;
    check_dims(y.dim(), config)?;
    Ok(Propagator::new(*config)?.fidelity_gradient(x, y))
}

fn check_dims(dim: (usize, usize), config: &PropagatorConfig) -> Result<()> {
    if dim != config.dim() {
        return Err(Error::ShapeMismatch {
            expected: config.dim(),
            found: dim,
        });
    }
    Ok(())
}
