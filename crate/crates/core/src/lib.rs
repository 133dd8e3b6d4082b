//! Numerical solver for SO(3)-invariant Kähler-Einstein metrics on the
//! projective plane with a cone singularity of angle 2πβ along a smooth conic.
//!
//! The metric `dt² + a²σ₁² + b²σ₂² + c²σ₃²` is reduced to a two-component
//! first-order system in the auxiliary coordinate `r ∈ (-∞, 0)`:
//!
//! ```text
//! f_r = h
//! h_r = 12 f h + 2 coth(2r) h - h² / f
//! ```
//!
//! with `f = ab`, `a/b = -tanh r` and `h = -c²`. The boundary datum
//! `τ = -1/h(0)` is shot from a Taylor seed just left of the singular point
//! `r = 0`, and the far-field value `f(-∞) = α² = (1 + 2β)/6` gives the cone
//! angle.
//!
//! Modules:
//! - [`reference`]: closed-form metrics used as oracles.
//! - [`ode`]: right-hand side and the adaptive Dormand-Prince integrator.
//! - [`shooting`]: seeding, shooting, τ sweeps and the β → τ inversion.
//! - [`geometry`]: geodesic reparametrisation and the two degeneration limits.
//! - [`cli`]: command-line frontend and file formats.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod ode;
pub mod reference;
pub mod shooting;

pub use error::{Error, Result};
pub use geometry::{
    bubble_errors, bubble_rescale, build_profile, compare_to_p114, compare_to_reference,
    compute_t_of_r, resample_profile_in_t, BubbleErrors, BubblePoint, ComparisonReport,
    MetricProfile, ProfileRow, ResampledPoint,
};
pub use ode::{integrate, rhs, PhaseState, StepControl, TerminationStatus, Trajectory};
pub use reference::{
    eval_abc_of_t, eval_bubble_targets, eval_f_of_r, MetricCoefficients, ReferenceModel,
};
pub use shooting::{
    alpha_sq_from_beta, beta_from_alpha_sq, find_tau_for_beta, seed_state, shoot, sweep,
    BetaInversion, ShootingConfig, ShootingResult, SweepRecord,
};
