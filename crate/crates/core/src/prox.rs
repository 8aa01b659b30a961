//! Proximal-gradient solvers for `min F(x) + R(x)` with smooth `F`.
//!
//! `F` is supplied through [`SmoothObjective`] (value and gradient) and `R`
//! only through its proximity operator ([`ProxOperator`]). Both ISTA and
//! FISTA share one loop; FISTA evaluates the gradient at the extrapolated
//! point `z_k` and updates the momentum scalar by
//! `t_{k+1} = (1 + √(1 + 4t_k²))/2`.
//!
//! Step sizes come from [`LineSearch`]. With backtracking, a trial step `γ`
//! is accepted once `x⁺ = prox_{γR}(z − γ∇F(z))` satisfies the quadratic
//! majorizer test
//!
//! ```text
//! F(x⁺) ≤ F(z) + ⟨∇F(z), x⁺ − z⟩ + ‖x⁺ − z‖²/(2γ)
//! ```
//!
//! and is halved otherwise. The accepted step is carried to the next outer
//! iteration and doubled once before being tried again.

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::rng::SeededRng;

/// Halving factor applied to rejected trial steps.
pub const STEP_SHRINK: f64 = 0.5;
/// Backtracking gives up below this step size.
pub const MIN_STEP: f64 = 1e-12;
/// Relative rounding allowance in the majorizer test.
pub const MAJORIZER_SLACK: f64 = 1e-12;

/// The smooth term `F`.
pub trait SmoothObjective {
    fn value(&self, x: &ComplexField) -> Result<f64>;

    fn gradient(&self, x: &ComplexField) -> Result<ComplexField>;

    fn value_and_gradient(&self, x: &ComplexField) -> Result<(f64, ComplexField)> {
        Ok((self.value(x)?, self.gradient(x)?))
    }
}

/// The nonsmooth term `R`, accessed through `prox_{γR}`.
///
/// `prox` takes `&mut self` so that implementations may keep state between
/// calls, such as a dual warm start.
pub trait ProxOperator {
    fn prox(&mut self, x: &ComplexField, step: f64) -> Result<ComplexField>;

    /// Finite part of `R(x)` used in objective traces.
    fn penalty(&self, _x: &ComplexField) -> f64 {
        0.0
    }

    /// Distance of `x` from the domain of `R` (zero when feasible); reported
    /// next to the objective instead of adding an infinite indicator.
    fn infeasibility(&self, _x: &ComplexField) -> f64 {
        0.0
    }
}

/// `R = 0`; the prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoPenalty;

impl ProxOperator for NoPenalty {
    fn prox(&mut self, x: &ComplexField, _step: f64) -> Result<ComplexField> {
        Ok(x.clone())
    }
}

/// A smooth objective assembled from two closures.
pub struct SmoothFn<V, G> {
    value: V,
    gradient: G,
}

impl<V, G> SmoothFn<V, G>
where
    V: Fn(&ComplexField) -> f64,
    G: Fn(&ComplexField) -> ComplexField,
{
    pub fn new(value: V, gradient: G) -> Self {
        Self { value, gradient }
    }
}

impl<V, G> SmoothObjective for SmoothFn<V, G>
where
    V: Fn(&ComplexField) -> f64,
    G: Fn(&ComplexField) -> ComplexField,
{
    fn value(&self, x: &ComplexField) -> Result<f64> {
        Ok((self.value)(x))
    }

    fn gradient(&self, x: &ComplexField) -> Result<ComplexField> {
        Ok((self.gradient)(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    /// Constant step `γ`.
    Fixed(f64),
    /// Backtracking from `initial`, halving on rejection.
    Backtracking { initial: f64 },
}

impl LineSearch {
    fn initial(&self) -> f64 {
        match *self {
            LineSearch::Fixed(g) | LineSearch::Backtracking { initial: g } => g,
        }
    }
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch::Backtracking { initial: 1.0 }
    }
}

/// Outcome of one proximal-gradient step.
#[derive(Debug, Clone)]
pub struct Step {
    pub x: ComplexField,
    pub gamma: f64,
    /// `F(x)` at the accepted point.
    pub value: f64,
}

fn majorizer_holds(f_next: f64, f_z: f64, grad: &ComplexField, z: &ComplexField, x_next: &ComplexField, gamma: f64) -> bool {
    let diff = x_next.sub(z);
    let bound = f_z + grad.dot(&diff) + diff.norm_sq() / (2.0 * gamma);
    f_next <= bound + MAJORIZER_SLACK * (1.0 + f_z.abs())
}

fn backtrack_from<F: SmoothObjective, P: ProxOperator>(
    z: &ComplexField,
    f_z: f64,
    grad: &ComplexField,
    f: &F,
    prox: &mut P,
    gamma_init: f64,
) -> Result<Step> {
    let mut gamma = gamma_init;
    while gamma >= MIN_STEP {
        let x = prox.prox(&z.add_scaled(-gamma, grad), gamma)?;
        let value = f.value(&x)?;
        if majorizer_holds(value, f_z, grad, z, &x, gamma) {
            return Ok(Step { x, gamma, value });
        }
        gamma *= STEP_SHRINK;
    }
    Err(Error::LineSearchFailed { gamma: MIN_STEP })
}

/// Backtracking proximal-gradient step from `z`: the first `γ` in
/// `gamma_init·0.5^i` passing the majorizer test.
pub fn backtrack_step<F: SmoothObjective, P: ProxOperator>(
    z: &ComplexField,
    f: &F,
    prox: &mut P,
    gamma_init: f64,
) -> Result<Step> {
    if !(gamma_init.is_finite() && gamma_init > 0.0) {
        return Err(Error::invalid(format!("initial step must be positive, got {gamma_init}")));
    }
    let (f_z, grad) = f.value_and_gradient(z)?;
    backtrack_from(z, f_z, &grad, f, prox, gamma_init)
}

/// Iteration state, exposed to monitors and returned at the end.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x_prev: ComplexField,
    pub x_curr: ComplexField,
    /// Point at which the next gradient is evaluated.
    pub z: ComplexField,
    /// Momentum scalar (stays 1 for ISTA).
    pub t: f64,
    /// Most recently accepted step.
    pub gamma: f64,
    /// Completed iterations.
    pub k: usize,
    /// `F(x_k) + R(x_k)` for `k = 0..=K`, with `R` taken from
    /// [`ProxOperator::penalty`].
    pub objective_trace: Vec<f64>,
    /// [`ProxOperator::infeasibility`] of each `x_k`.
    pub infeasibility_trace: Vec<f64>,
    /// Accepted step of each iteration.
    pub step_trace: Vec<f64>,
}

/// Momentum update `t_{k+1} = (1 + √(1 + 4t_k²))/2`.
pub fn next_momentum(t: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
}

/// Proximal-gradient driver.
#[derive(Debug, Clone, Copy)]
pub struct ProxGradient {
    pub iterations: usize,
    pub line_search: LineSearch,
    /// FISTA momentum when true, plain ISTA otherwise.
    pub accelerated: bool,
}

impl ProxGradient {
    pub fn ista(iterations: usize, line_search: LineSearch) -> Self {
        Self {
            iterations,
            line_search,
            accelerated: false,
        }
    }

    pub fn fista(iterations: usize, line_search: LineSearch) -> Self {
        Self {
            iterations,
            line_search,
            accelerated: true,
        }
    }

    /// Runs the solver from `x0`, calling `monitor` after every iteration.
    pub fn solve<F, P, M>(&self, x0: &ComplexField, f: &F, prox: &mut P, mut monitor: M) -> Result<SolverState>
    where
        F: SmoothObjective,
        P: ProxOperator,
        M: FnMut(&SolverState),
    {
        if self.iterations == 0 {
            return Err(Error::invalid("iteration count must be at least 1"));
        }
        let gamma0 = self.line_search.initial();
        if !(gamma0.is_finite() && gamma0 > 0.0) {
            return Err(Error::invalid(format!("step size must be positive, got {gamma0}")));
        }

        let f0 = f.value(x0)?;
        let mut state = SolverState {
            x_prev: x0.clone(),
            x_curr: x0.clone(),
            z: x0.clone(),
            t: 1.0,
            gamma: gamma0,
            k: 0,
            objective_trace: vec![f0 + prox.penalty(x0)],
            infeasibility_trace: vec![prox.infeasibility(x0)],
            step_trace: Vec::with_capacity(self.iterations),
        };

        for k in 1..=self.iterations {
            let step = match self.line_search {
                LineSearch::Fixed(gamma) => {
                    let grad = f.gradient(&state.z)?;
                    let x = prox.prox(&state.z.add_scaled(-gamma, &grad), gamma)?;
                    let value = f.value(&x)?;
                    Step { x, gamma, value }
                }
                LineSearch::Backtracking { .. } => {
                    let trial = if k == 1 { state.gamma } else { 2.0 * state.gamma };
                    let (f_z, grad) = f.value_and_gradient(&state.z)?;
                    backtrack_from(&state.z, f_z, &grad, f, prox, trial)?
                }
            };

            let x_prev = std::mem::replace(&mut state.x_curr, step.x);
            state.x_prev = x_prev;
            state.gamma = step.gamma;
            state.z = if self.accelerated {
                let t_next = next_momentum(state.t);
                let beta = (state.t - 1.0) / t_next;
                state.t = t_next;
                let delta = state.x_curr.sub(&state.x_prev);
                state.x_curr.add_scaled(beta, &delta)
            } else {
                state.x_curr.clone()
            };
            state.k = k;
            state.objective_trace.push(step.value + prox.penalty(&state.x_curr));
            state.infeasibility_trace.push(prox.infeasibility(&state.x_curr));
            state.step_trace.push(step.gamma);
            monitor(&state);
        }
        Ok(state)
    }
}

/// Plain proximal-gradient iteration `x_{k+1} = prox_{γR}(x_k − γ∇F(x_k))`.
pub fn ista<F: SmoothObjective, P: ProxOperator>(
    x0: &ComplexField,
    f: &F,
    prox: &mut P,
    iterations: usize,
    line_search: LineSearch,
) -> Result<SolverState> {
    ProxGradient::ista(iterations, line_search).solve(x0, f, prox, |_| {})
}

/// Accelerated proximal-gradient iteration (FISTA).
pub fn fista<F: SmoothObjective, P: ProxOperator>(
    x0: &ComplexField,
    f: &F,
    prox: &mut P,
    iterations: usize,
    line_search: LineSearch,
) -> Result<SolverState> {
    ProxGradient::fista(iterations, line_search).solve(x0, f, prox, |_| {})
}

/// Compares `f.gradient(x)` with central differences of `f.value` at
/// `samples` randomly chosen coordinates. Returns
/// `‖g_fd − g‖ / max(‖g_fd‖, ‖g‖)` over the sampled coordinates.
pub fn gradient_check<F: SmoothObjective>(
    f: &F,
    x: &ComplexField,
    samples: usize,
    h: f64,
    rng: &mut SeededRng,
) -> Result<f64> {
    let grad = f.gradient(x)?;
    let (m, n) = x.dim();
    let (mut diff_sq, mut fd_sq, mut an_sq) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let (j, k, imag) = (rng.index(m), rng.index(n), rng.index(2) == 1);
        let probe = |delta: f64| -> Result<f64> {
            let (mut u, mut v) = x.clone().into_parts();
            if imag {
                v[[j, k]] += delta;
            } else {
                u[[j, k]] += delta;
            }
            f.value(&ComplexField::new(u, v)?)
        };
        let fd = (probe(h)? - probe(-h)?) / (2.0 * h);
        let analytic = if imag { grad.v()[[j, k]] } else { grad.u()[[j, k]] };
        diff_sq += (fd - analytic).powi(2);
        fd_sq += fd * fd;
        an_sq += analytic * analytic;
    }
    let scale = fd_sq.sqrt().max(an_sq.sqrt());
    Ok(if scale == 0.0 { diff_sq.sqrt() } else { diff_sq.sqrt() / scale })
}
