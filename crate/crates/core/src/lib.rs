//! Constrained total-variation denoising for complex-valued images and its
//! use as the proximal step of TV-regularized phase retrieval.
//!
//! * [`field`]: complex images as `(u, v)` pairs and the finite-difference map.
//! * [`tv`]: type-I / type-II, isotropic / anisotropic complex TV seminorms.
//! * [`constraint`]: object-domain constraint sets.
//! * [`denoise`]: dual (fast) gradient projection for constrained TV denoising.
//! * [`prox`]: ISTA / FISTA with backtracking.
//! * [`optics`]: angular-spectrum propagation and the amplitude fidelity.
//! * [`retrieval`]: end-to-end phase retrieval and evaluation.
//! * [`io`]: field files, PGM images, run configs, CSV traces.

pub mod constraint;
pub mod denoise;
pub mod error;
pub mod field;
pub mod io;
pub mod optics;
pub mod phantom;
pub mod prox;
pub mod retrieval;
pub mod rng;
pub mod tv;

pub use constraint::{project_constraint, ConstraintSet};
pub use denoise::{
    denoise, dual_gradient, dual_objective, dual_violation, project_dual, DenoiseParams, DenoiseResult, DualMode,
};
pub use error::{Error, Result};
pub use field::{adjoint_diff, forward_diff, ComplexField, DiffField, DualField};
pub use optics::{Intensity, Propagator, PropagatorConfig};
pub use prox::{backtrack_step, fista, ista, LineSearch, ProxGradient, ProxOperator, SmoothObjective, SolverState};
pub use retrieval::{
    backpropagate_init, ip_retrieve, phase_rmse, retrieve, simulate_measurement, Algorithm, NoiseModel,
    RetrievalParams, RetrievalReport,
};
pub use rng::SeededRng;
pub use tv::{tv_seminorm, TvKind, TvVariant};
