//! Constrained TV denoising of complex images via the dual problem.
//!
//! Solves `min_{x ∈ C} ½‖x − b‖² + λ·TV(x)` by minimizing the smooth dual
//!
//! ```text
//! h(q) = ‖w‖² − ‖w − P_C(w)‖²,   w = b − λ·Lᵀ(q),
//! ```
//!
//! over the product of balls `S` attached to the chosen TV variant, with
//! gradient `∇h(q) = −2λ·L(P_C(w))` (Lipschitz constant at most `16λ²`).
//! The primal estimate is recovered as `x = P_C(b − λ·Lᵀ(q))`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Zip};

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::field::{adjoint_diff_into, forward_diff_into, ComplexField, DualField};
use crate::tv::TvVariant;

/// Dual iteration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualMode {
    /// Fast gradient projection (Nesterov/FISTA momentum on the dual).
    #[default]
    Fgp,
    /// Plain gradient projection.
    Gp,
}

impl FromStr for DualMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fgp" => Ok(DualMode::Fgp),
            "gp" => Ok(DualMode::Gp),
            other => Err(Error::invalid(format!("unknown dual mode `{other}`"))),
        }
    }
}

impl fmt::Display for DualMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DualMode::Fgp => "fgp",
            DualMode::Gp => "gp",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DenoiseParams {
    /// Regularization weight `λ > 0`.
    pub lambda: f64,
    pub variant: TvVariant,
    pub constraint: ConstraintSet,
    /// Number of dual iterations `K ≥ 1`; there is no early exit.
    pub iterations: usize,
    pub mode: DualMode,
    /// Starting dual iterate; `None` starts from zero.
    pub warm_start: Option<DualField>,
}

impl DenoiseParams {
    pub fn new(lambda: f64, variant: TvVariant, constraint: ConstraintSet, iterations: usize) -> Self {
        Self {
            lambda,
            variant,
            constraint,
            iterations,
            mode: DualMode::Fgp,
            warm_start: None,
        }
    }

    pub fn with_mode(mut self, mode: DualMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_warm_start(mut self, q: DualField) -> Self {
        self.warm_start = Some(q);
        self
    }
}

#[derive(Debug, Clone)]
pub struct DenoiseResult {
    /// Primal estimate, always inside the constraint set.
    pub x: ComplexField,
    /// Final dual iterate.
    pub q: DualField,
    /// `h(q_k)` for `k = 1..=K` (the additive constant `‖b‖²/2λ` is not included).
    pub dual_objective_trace: Vec<f64>,
}

/// Scales `values` jointly so that their Euclidean norm does not exceed `radius`.
#[inline]
fn shrink_factor(norm_sq: f64, radius: f64) -> f64 {
    let norm = norm_sq.sqrt();
    if norm > radius {
        radius / norm
    } else {
        1.0
    }
}

fn clamp_block(block: &mut Array2<f64>, radius: f64) {
    block.mapv_inplace(|x| x.clamp(-radius, radius));
}

/// Joint ball projection of corresponding entries of two blocks of equal shape.
fn ball_pairs(a: &mut Array2<f64>, b: &mut Array2<f64>, radius: f64) {
    Zip::from(a).and(b).for_each(|x, y| {
        let f = shrink_factor(*x * *x + *y * *y, radius);
        *x *= f;
        *y *= f;
    });
}

/// Isotropic projection of one real channel: `(d1, d2)` pairs in the interior,
/// scalar clamps on the last column of `d1` and last row of `d2`.
fn isotropic_channel(d1: &mut Array2<f64>, d2: &mut Array2<f64>, radius: f64) {
    let (m, n) = (d2.nrows(), d1.ncols());
    for j in 0..m.saturating_sub(1) {
        for k in 0..n.saturating_sub(1) {
            let (a, b) = (d1[[j, k]], d2[[j, k]]);
            let f = shrink_factor(a * a + b * b, radius);
            d1[[j, k]] = a * f;
            d2[[j, k]] = b * f;
        }
        let last = &mut d1[[j, n - 1]];
        *last = last.clamp(-radius, radius);
    }
    for k in 0..n.saturating_sub(1) {
        let last = &mut d2[[m - 1, k]];
        *last = last.clamp(-radius, radius);
    }
}

fn type1_isotropic(q: &mut DualField) {
    let (m, n) = q.source_dim();
    for j in 0..m.saturating_sub(1) {
        for k in 0..n.saturating_sub(1) {
            let (a, b, c, d) = (q.u1[[j, k]], q.u2[[j, k]], q.v1[[j, k]], q.v2[[j, k]]);
            let f = shrink_factor(a * a + b * b + c * c + d * d, 1.0);
            q.u1[[j, k]] = a * f;
            q.u2[[j, k]] = b * f;
            q.v1[[j, k]] = c * f;
            q.v2[[j, k]] = d * f;
        }
        let (a, c) = (q.u1[[j, n - 1]], q.v1[[j, n - 1]]);
        let f = shrink_factor(a * a + c * c, 1.0);
        q.u1[[j, n - 1]] = a * f;
        q.v1[[j, n - 1]] = c * f;
    }
    for k in 0..n.saturating_sub(1) {
        let (b, d) = (q.u2[[m - 1, k]], q.v2[[m - 1, k]]);
        let f = shrink_factor(b * b + d * d, 1.0);
        q.u2[[m - 1, k]] = b * f;
        q.v2[[m - 1, k]] = d * f;
    }
}

/// Euclidean projection onto the dual set `S` of `variant`, in place.
pub fn project_dual_in_place(q: &mut DualField, variant: TvVariant) {
    match variant {
        TvVariant::Type1Isotropic => type1_isotropic(q),
        TvVariant::Type1Anisotropic => {
            ball_pairs(&mut q.u1, &mut q.v1, 1.0);
            ball_pairs(&mut q.u2, &mut q.v2, 1.0);
        }
        TvVariant::Type2Isotropic { alpha } => {
            isotropic_channel(&mut q.u1, &mut q.u2, alpha);
            isotropic_channel(&mut q.v1, &mut q.v2, 1.0 - alpha);
        }
        TvVariant::Type2Anisotropic { alpha } => {
            clamp_block(&mut q.u1, alpha);
            clamp_block(&mut q.u2, alpha);
            clamp_block(&mut q.v1, 1.0 - alpha);
            clamp_block(&mut q.v2, 1.0 - alpha);
        }
    }
}

/// Euclidean projection onto the dual set `S` of `variant`.
pub fn project_dual(q: &DualField, variant: TvVariant) -> DualField {
    let mut out = q.clone();
    project_dual_in_place(&mut out, variant);
    out
}

/// Largest amount by which `q` violates the norm bounds of `variant`'s dual
/// set (zero when feasible). Bounds are compared on norms, not squared norms.
pub fn dual_violation(q: &DualField, variant: TvVariant) -> f64 {
    let (m, n) = q.source_dim();
    let mut worst: f64 = 0.0;
    let mut check = |norm: f64, radius: f64| worst = worst.max(norm - radius);
    match variant {
        TvVariant::Type1Isotropic => {
            for j in 0..m.saturating_sub(1) {
                for k in 0..n.saturating_sub(1) {
                    let s = q.u1[[j, k]].powi(2) + q.u2[[j, k]].powi(2) + q.v1[[j, k]].powi(2) + q.v2[[j, k]].powi(2);
                    check(s.sqrt(), 1.0);
                }
                check(q.u1[[j, n - 1]].hypot(q.v1[[j, n - 1]]), 1.0);
            }
            for k in 0..n.saturating_sub(1) {
                check(q.u2[[m - 1, k]].hypot(q.v2[[m - 1, k]]), 1.0);
            }
        }
        TvVariant::Type1Anisotropic => {
            for (a, b) in q.u1.iter().zip(q.v1.iter()).chain(q.u2.iter().zip(q.v2.iter())) {
                check(a.hypot(*b), 1.0);
            }
        }
        TvVariant::Type2Isotropic { alpha } => {
            for (d1, d2, radius) in [(&q.u1, &q.u2, alpha), (&q.v1, &q.v2, 1.0 - alpha)] {
                for j in 0..m.saturating_sub(1) {
                    for k in 0..n.saturating_sub(1) {
                        check(d1[[j, k]].hypot(d2[[j, k]]), radius);
                    }
                    check(d1[[j, n - 1]].abs(), radius);
                }
                for k in 0..n.saturating_sub(1) {
                    check(d2[[m - 1, k]].abs(), radius);
                }
            }
        }
        TvVariant::Type2Anisotropic { alpha } => {
            for (block, radius) in [(&q.u1, alpha), (&q.u2, alpha), (&q.v1, 1.0 - alpha), (&q.v2, 1.0 - alpha)] {
                for x in block.iter() {
                    check(x.abs(), radius);
                }
            }
        }
    }
    worst
}

/// Scratch buffers reused across dual iterations.
struct Workspace {
    w: ComplexField,
    grad: DualField,
}

impl Workspace {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            w: ComplexField::zeros(rows, cols),
            grad: DualField::zeros(rows, cols),
        }
    }

    /// `w ← b − λ·Lᵀ(q)`.
    fn shifted(&mut self, q: &DualField, b: &ComplexField, lambda: f64) {
        adjoint_diff_into(q, &mut self.w);
        let (wu, wv) = self.w.parts_mut();
        Zip::from(wu).and(b.u()).for_each(|w, &b| *w = b - lambda * *w);
        Zip::from(wv).and(b.v()).for_each(|w, &b| *w = b - lambda * *w);
    }

    /// `grad ← ∇h(q)`.
    fn gradient(&mut self, q: &DualField, b: &ComplexField, lambda: f64, set: ConstraintSet) {
        self.shifted(q, b, lambda);
        set.project_in_place(&mut self.w);
        forward_diff_into(&self.w, &mut self.grad);
        let scale = -2.0 * lambda;
        for block in [&mut self.grad.u1, &mut self.grad.u2, &mut self.grad.v1, &mut self.grad.v2] {
            block.mapv_inplace(|x| scale * x);
        }
    }

    fn objective(&mut self, q: &DualField, b: &ComplexField, lambda: f64, set: ConstraintSet) -> f64 {
        self.shifted(q, b, lambda);
        let total = self.w.norm_sq();
        let excess = set.distance(&self.w);
        total - excess * excess
    }
}

/// `h(q) = ‖w‖² − ‖w − P_C(w)‖²` with `w = b − λ·Lᵀ(q)`.
pub fn dual_objective(q: &DualField, b: &ComplexField, lambda: f64, set: ConstraintSet) -> f64 {
    let (m, n) = b.dim();
    Workspace::new(m, n).objective(q, b, lambda, set)
}

/// `∇h(q) = −2λ·L(P_C(b − λ·Lᵀ(q)))`.
pub fn dual_gradient(q: &DualField, b: &ComplexField, lambda: f64, set: ConstraintSet) -> DualField {
    let (m, n) = b.dim();
    let mut ws = Workspace::new(m, n);
    ws.gradient(q, b, lambda, set);
    ws.grad
}

/// `P_S(q − ∇h(q)/(16λ²))`, written into `out`.
fn projected_step(
    ws: &mut Workspace,
    q: &DualField,
    out: &mut DualField,
    b: &ComplexField,
    params: &DenoiseParams,
) {
    let lambda = params.lambda;
    ws.gradient(q, b, lambda, params.constraint);
    let step = 1.0 / (16.0 * lambda * lambda);
    for (dst, (src, g)) in [&mut out.u1, &mut out.u2, &mut out.v1, &mut out.v2]
        .into_iter()
        .zip([(&q.u1, &ws.grad.u1), (&q.u2, &ws.grad.u2), (&q.v1, &ws.grad.v1), (&q.v2, &ws.grad.v2)])
    {
        Zip::from(dst).and(src).and(g).for_each(|d, &s, &g| *d = s - step * g);
    }
    project_dual_in_place(out, params.variant);
}

fn validate(b: &ComplexField, params: &DenoiseParams) -> Result<()> {
    if !(params.lambda.is_finite() && params.lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive and finite, got {}", params.lambda)));
    }
    if params.iterations == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    params.variant.validate()?;
    if !b.is_finite() {
        return Err(Error::NonFinite("observation"));
    }
    if let Some(q) = &params.warm_start {
        if q.source_dim() != b.dim() {
            return Err(Error::ShapeMismatch {
                expected: b.dim(),
                found: q.source_dim(),
            });
        }
        if !q.is_finite() {
            return Err(Error::NonFinite("dual warm start"));
        }
    }
    Ok(())
}

/// Runs `params.iterations` steps of gradient projection (or its accelerated
/// version) on the dual and returns the primal estimate.
pub fn denoise(b: &ComplexField, params: &DenoiseParams) -> Result<DenoiseResult> {
    validate(b, params)?;
    let (m, n) = b.dim();
    let mut ws = Workspace::new(m, n);
    let mut q = params.warm_start.clone().unwrap_or_else(|| DualField::zeros(m, n));
    let mut trace = Vec::with_capacity(params.iterations);

    match params.mode {
        DualMode::Gp => {
            let mut next = q.clone();
            for _ in 0..params.iterations {
                projected_step(&mut ws, &q, &mut next, b, params);
                std::mem::swap(&mut q, &mut next);
                trace.push(ws.objective(&q, b, params.lambda, params.constraint));
            }
        }
        DualMode::Fgp => {
            let mut extrapolated = q.clone();
            let mut prev = q.clone();
            let mut t = 1.0_f64;
            for _ in 0..params.iterations {
                projected_step(&mut ws, &extrapolated, &mut q, b, params);
                let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
                let beta = (t - 1.0) / t_next;
                for (r, (cur, old)) in [
                    &mut extrapolated.u1,
                    &mut extrapolated.u2,
                    &mut extrapolated.v1,
                    &mut extrapolated.v2,
                ]
                .into_iter()
                .zip([(&q.u1, &prev.u1), (&q.u2, &prev.u2), (&q.v1, &prev.v1), (&q.v2, &prev.v2)])
                {
                    Zip::from(r).and(cur).and(old).for_each(|r, &c, &o| *r = c + beta * (c - o));
                }
                prev.clone_from(&q);
                t = t_next;
                trace.push(ws.objective(&q, b, params.lambda, params.constraint));
            }
        }
    }

    ws.shifted(&q, b, params.lambda);
    let mut x = ws.w;
    params.constraint.project_in_place(&mut x);
    Ok(DenoiseResult {
        x,
        q,
        dual_objective_trace: trace,
    })
}
