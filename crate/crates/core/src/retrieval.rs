//! Single-intensity phase retrieval: measurement simulation, back-propagated
//! initialization, TV-regularized proximal-gradient reconstruction, the
//! alternating-projection baseline, and the phase error metric.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::constraint::ConstraintSet;
use crate::denoise::{denoise, DenoiseParams, DualMode};
use crate::error::{Error, Result};
use crate::field::{ComplexField, DualField};
use crate::optics::{Intensity, Propagator, MODULUS_EPS};
use crate::prox::{LineSearch, ProxGradient, ProxOperator, SmoothObjective};
use crate::rng::SeededRng;
use crate::tv::TvVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Fista,
    Ista,
    /// Alternating projections onto the measured modulus and the unit disk.
    Ip,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fista" => Ok(Algorithm::Fista),
            "ista" => Ok(Algorithm::Ista),
            "ip" => Ok(Algorithm::Ip),
            other => Err(Error::invalid(format!("unknown retrieval algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Fista => "fista",
            Algorithm::Ista => "ista",
            Algorithm::Ip => "ip",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RetrievalParams {
    /// TV weight `τ` (ignored by [`Algorithm::Ip`]).
    pub tau: f64,
    pub variant: TvVariant,
    pub constraint: ConstraintSet,
    pub outer_iters: usize,
    /// FGP iterations per proximal step.
    pub inner_iters: usize,
    pub algorithm: Algorithm,
    /// Reuse the previous dual iterate as the start of each proximal step.
    pub warm_start_dual: bool,
    pub line_search: LineSearch,
    pub seed: u64,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self {
            tau: 3e-3,
            variant: TvVariant::Type1Anisotropic,
            constraint: ConstraintSet::UnitDisk,
            outer_iters: 150,
            inner_iters: 10,
            algorithm: Algorithm::Fista,
            warm_start_dual: true,
            line_search: LineSearch::default(),
            seed: 0,
        }
    }
}

impl RetrievalParams {
    fn validate(&self) -> Result<()> {
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::invalid("iteration counts must be at least 1"));
        }
        if self.algorithm != Algorithm::Ip && !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        self.variant.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    /// Additive Gaussian noise on the intensity with standard deviation
    /// `level · mean(y)`, clipped at zero.
    IntensityGaussian { level: f64 },
    /// Gaussian perturbation of the object phase (radians) before propagation.
    PhaseGaussian { sigma: f64 },
}

#[derive(Debug, Clone)]
pub struct RetrievalReport {
    pub x_hat: ComplexField,
    /// Phase RMSE of each iterate against the reference, starting with the
    /// initial guess; empty when no reference was given.
    pub rmse_trace: Vec<f64>,
    /// Objective of each iterate, starting with the initial guess.
    pub objective_trace: Vec<f64>,
    /// Distance of each iterate from the constraint set.
    pub infeasibility_trace: Vec<f64>,
    pub wall_time: f64,
}

/// Adds i.i.d. Gaussian phase noise of standard deviation `sigma` to `x`.
pub fn add_phase_noise(x: &ComplexField, sigma: f64, rng: &mut SeededRng) -> ComplexField {
    let (m, n) = x.dim();
    let noise = rng.normal_matrix(m, n);
    let z = Zip::from(&x.to_complex())
        .and(&noise)
        .map_collect(|&z, &e| z * Complex64::from_polar(1.0, sigma * e));
    ComplexField::from_complex_unchecked(z)
}

/// Forward intensity of `x_true` with the requested noise, deterministic in `seed`.
pub fn simulate_measurement(
    x_true: &ComplexField,
    propagator: &Propagator,
    noise: NoiseModel,
    seed: u64,
) -> Result<Intensity> {
    if x_true.dim() != propagator.config().dim() {
        return Err(Error::ShapeMismatch {
            expected: propagator.config().dim(),
            found: x_true.dim(),
        });
    }
    let mut rng = SeededRng::new(seed);
    match noise {
        NoiseModel::None => Ok(propagator.forward_intensity(x_true)),
        NoiseModel::IntensityGaussian { level } => {
            if !(level >= 0.0 && level.is_finite()) {
                return Err(Error::invalid(format!("noise level must be non-negative, got {level}")));
            }
            let clean = propagator.forward_intensity(x_true).into_inner();
            let sigma = level * clean.mean().unwrap_or(0.0);
            let (m, n) = clean.dim();
            let noise = rng.normal_matrix(m, n);
            Intensity::new(Zip::from(&clean).and(&noise).map_collect(|&y, &e| (y + sigma * e).max(0.0)))
        }
        NoiseModel::PhaseGaussian { sigma } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::invalid(format!("phase noise must be non-negative, got {sigma}")));
            }
            Ok(propagator.forward_intensity(&add_phase_noise(x_true, sigma, &mut rng)))
        }
    }
}

/// Sensor-plane field `√y` (zero phase) propagated back to the object plane.
pub fn backpropagate_init(y: &Intensity, propagator: &Propagator) -> ComplexField {
    let amplitude = y.amplitude();
    let zeros = Array2::zeros(amplitude.dim());
    propagator.adjoint(&ComplexField::from_parts(amplitude, zeros))
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let w = angle.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Phase RMSE after removing the best global phase offset.
///
/// The offset is `arg Σ x̂·conj(x_ref)`; pixels where either field has zero
/// modulus carry no phase and are left out of the mean.
pub fn phase_rmse(x_hat: &ComplexField, x_ref: &ComplexField) -> Result<f64> {
    if x_hat.dim() != x_ref.dim() {
        return Err(Error::ShapeMismatch {
            expected: x_ref.dim(),
            found: x_hat.dim(),
        });
    }
    let a = x_hat.to_complex();
    let b = x_ref.to_complex();
    let correlation = Zip::from(&a).and(&b).fold(Complex64::new(0.0, 0.0), |acc, &p, &q| acc + p * q.conj());
    let offset = correlation.arg();
    let (sum, count) = Zip::from(&a).and(&b).fold((0.0, 0usize), |(sum, count), &p, &q| {
        if p.norm() < MODULUS_EPS || q.norm() < MODULUS_EPS {
            (sum, count)
        } else {
            let d = wrap_phase(p.arg() - q.arg() - offset);
            (sum + d * d, count + 1)
        }
    });
    if count == 0 {
        return Err(Error::NoValidPixels);
    }
    Ok((sum / count as f64).sqrt())
}

/// Amplitude fidelity `½‖|A(x)| − √y‖²` as a [`SmoothObjective`].
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeFidelity<'a> {
    pub propagator: &'a Propagator,
    pub intensity: &'a Intensity,
}

impl SmoothObjective for AmplitudeFidelity<'_> {
    fn value(&self, x: &ComplexField) -> Result<f64> {
        Ok(self.propagator.fidelity_value(x, self.intensity))
    }

    fn gradient(&self, x: &ComplexField) -> Result<ComplexField> {
        Ok(self.propagator.fidelity_gradient(x, self.intensity))
    }

    fn value_and_gradient(&self, x: &ComplexField) -> Result<(f64, ComplexField)> {
        Ok(self.propagator.fidelity_value_and_gradient(x, self.intensity))
    }
}

/// `prox_{γR}` for `R = τ·TV + I_C`, evaluated by FGP denoising with `λ = τγ`.
#[derive(Debug, Clone)]
pub struct TvProx {
    pub tau: f64,
    pub variant: TvVariant,
    pub constraint: ConstraintSet,
    pub inner_iters: usize,
    pub warm_start: bool,
    dual: Option<DualField>,
}

impl TvProx {
    pub fn new(tau: f64, variant: TvVariant, constraint: ConstraintSet, inner_iters: usize, warm_start: bool) -> Self {
        Self {
            tau,
            variant,
            constraint,
            inner_iters,
            warm_start,
            dual: None,
        }
    }

    /// Dual iterate kept from the last call (only when warm starting).
    pub fn dual(&self) -> Option<&DualField> {
        self.dual.as_ref()
    }
}

impl ProxOperator for TvProx {
    fn prox(&mut self, x: &ComplexField, step: f64) -> Result<ComplexField> {
        let params = DenoiseParams {
            lambda: self.tau * step,
            variant: self.variant,
            constraint: self.constraint,
            iterations: self.inner_iters,
            mode: DualMode::Fgp,
            warm_start: if self.warm_start { self.dual.take() } else { None },
        };
        let result = denoise(x, &params)?;
        if self.warm_start {
            self.dual = Some(result.q);
        }
        Ok(result.x)
    }

    fn penalty(&self, x: &ComplexField) -> f64 {
        self.tau * self.variant.seminorm(x)
    }

    fn infeasibility(&self, x: &ComplexField) -> f64 {
        self.constraint.distance(x)
    }
}

fn check_inputs(y: &Intensity, propagator: &Propagator, reference: Option<&ComplexField>) -> Result<()> {
    let grid = propagator.config().dim();
    if y.dim() != grid {
        return Err(Error::ShapeMismatch {
            expected: grid,
            found: y.dim(),
        });
    }
    if let Some(r) = reference {
        if r.dim() != grid {
            return Err(Error::ShapeMismatch {
                expected: grid,
                found: r.dim(),
            });
        }
    }
    Ok(())
}

/// Reconstructs the object from one intensity image, starting from the
/// back-propagated field. `reference`, when given, is used only to record the
/// phase RMSE of every iterate.
pub fn retrieve(
    y: &Intensity,
    propagator: &Propagator,
    params: &RetrievalParams,
    reference: Option<&ComplexField>,
) -> Result<RetrievalReport> {
    params.validate()?;
    if params.algorithm == Algorithm::Ip {
        return ip_retrieve(y, propagator, params.outer_iters, reference);
    }
    check_inputs(y, propagator, reference)?;
    let start = Instant::now();
    let x0 = backpropagate_init(y, propagator);
    let objective = AmplitudeFidelity {
        propagator,
        intensity: y,
    };
    let mut prox = TvProx::new(
        params.tau,
        params.variant,
        params.constraint,
        params.inner_iters,
        params.warm_start_dual,
    );
    let solver = ProxGradient {
        iterations: params.outer_iters,
        line_search: params.line_search,
        accelerated: params.algorithm == Algorithm::Fista,
    };

    let mut rmse_trace = Vec::new();
    if let Some(r) = reference {
        rmse_trace.push(phase_rmse(&x0, r)?);
    }
    let mut rmse_error = None;
    let state = solver.solve(&x0, &objective, &mut prox, |s| {
        if let Some(r) = reference {
            match phase_rmse(&s.x_curr, r) {
                Ok(v) => rmse_trace.push(v),
                Err(e) => {
                    rmse_error.get_or_insert(e);
                }
            }
        }
    })?;
    if let Some(e) = rmse_error {
        return Err(e);
    }
    Ok(RetrievalReport {
        x_hat: state.x_curr,
        rmse_trace,
        objective_trace: state.objective_trace,
        infeasibility_trace: state.infeasibility_trace,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Alternating projections: impose the measured modulus at the sensor plane,
/// propagate back, and project onto the unit disk.
pub fn ip_retrieve(
    y: &Intensity,
    propagator: &Propagator,
    iters: usize,
    reference: Option<&ComplexField>,
) -> Result<RetrievalReport> {
    let x0 = backpropagate_init(y, propagator);
    ip_retrieve_from(&x0, y, propagator, iters, reference)
}

/// [`ip_retrieve`] from an explicit starting point.
pub fn ip_retrieve_from(
    x0: &ComplexField,
    y: &Intensity,
    propagator: &Propagator,
    iters: usize,
    reference: Option<&ComplexField>,
) -> Result<RetrievalReport> {
    check_inputs(y, propagator, reference)?;
    if x0.dim() != propagator.config().dim() {
        return Err(Error::ShapeMismatch {
            expected: propagator.config().dim(),
            found: x0.dim(),
        });
    }
    if iters == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    let start = Instant::now();
    let constraint = ConstraintSet::UnitDisk;
    let mut x = x0.clone();
    let mut objective_trace = vec![propagator.fidelity_value(&x, y)];
    let mut infeasibility_trace = vec![constraint.distance(&x)];
    let mut rmse_trace = Vec::new();
    if let Some(r) = reference {
        rmse_trace.push(phase_rmse(&x, r)?);
    }
    for _ in 0..iters {
        x = propagator.replace_modulus(&x, y);
        constraint.project_in_place(&mut x);
        objective_trace.push(propagator.fidelity_value(&x, y));
        infeasibility_trace.push(constraint.distance(&x));
        if let Some(r) = reference {
            rmse_trace.push(phase_rmse(&x, r)?);
        }
    }
    Ok(RetrievalReport {
        x_hat: x,
        rmse_trace,
        objective_trace,
        infeasibility_trace,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
