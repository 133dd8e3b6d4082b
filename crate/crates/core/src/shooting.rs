//! Shooting from the singular end `r = 0` and the τ ↔ β map.
//!
//! The boundary datum `τ = -1/h(0) = 1/b(t*)²` is imposed through the
//! first-order Taylor seed `(f, h)(r₀) = (-r₀/τ, -1/τ)`. The far-field value
//! `f(r_end)` approximates `α² = (1 + 2β)/6`. α² decreases monotonically in
//! τ toward 1/4, so every β > 1/4 is reached at exactly one τ.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::compute_t_of_r;
use crate::ode::{integrate, PhaseState, StepControl, TerminationStatus, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingConfig {
    pub tau: f64,
    pub r0: f64,
    pub r_end: f64,
    pub control: StepControl,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            tau: 1.0,
            r0: -1e-5,
            r_end: -500.0,
            control: StepControl::default(),
        }
    }
}

impl ShootingConfig {
    pub fn with_tau(tau: f64) -> Self {
        ShootingConfig { tau, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::domain("tau must be positive and finite", self.tau));
        }
        if !(self.r0 < 0.0) {
            return Err(Error::domain("r0 must be negative", self.r0));
        }
        if !(self.r_end < self.r0) || !self.r_end.is_finite() {
            return Err(Error::domain("r_end must be finite and below r0", self.r_end));
        }
        self.control.validate()
    }
}

/// `α² = (1 + 2β)/6`.
pub fn alpha_sq_from_beta(beta: f64) -> f64 {
    (1.0 + 2.0 * beta) / 6.0
}

/// `β = (6α² - 1)/2`.
pub fn beta_from_alpha_sq(alpha_sq: f64) -> f64 {
    (6.0 * alpha_sq - 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingResult {
    pub tau: f64,
    pub trajectory: Trajectory,
    /// `f(r_end)`, present only when the trajectory reached `r_end`.
    pub alpha_sq: Option<f64>,
    pub beta: Option<f64>,
}

impl ShootingResult {
    pub fn status(&self) -> TerminationStatus {
        self.trajectory.status
    }

    /// Borrow the trajectory, or report why it failed.
    pub fn successful(&self) -> Result<&Trajectory> {
        if self.trajectory.status.is_success() {
            Ok(&self.trajectory)
        } else {
            Err(Error::Trajectory(self.trajectory.status))
        }
    }
}

/// Taylor seed `(r₀, -r₀/τ, -1/τ)`.
pub fn seed_state(config: &ShootingConfig) -> Result<PhaseState> {
    config.validate()?;
    Ok(PhaseState::new(config.r0, -config.r0 / config.tau, -1.0 / config.tau))
}

/// Integrate from the seed to `r_end`. Failed trajectories come back with
/// their status and no α²; only an invalid config is an error.
pub fn shoot(config: &ShootingConfig) -> Result<ShootingResult> {
    let seed = seed_state(config)?;
    let trajectory = integrate(seed, config.r_end, &config.control)?;
    let alpha_sq = trajectory
        .status
        .is_success()
        .then(|| trajectory.last().f);
    Ok(ShootingResult {
        tau: config.tau,
        beta: alpha_sq.map(beta_from_alpha_sq),
        alpha_sq,
        trajectory,
    })
}

/// One row of a τ sweep. Numeric fields are `None` for failed shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub tau: f64,
    pub alpha_sq: Option<f64>,
    pub beta: Option<f64>,
    pub t_max: Option<f64>,
    /// `|f(r_end) - f(r_end/2)|`: how flat the far field has become.
    pub stabilization_residual: Option<f64>,
    pub status: TerminationStatus,
}

impl SweepRecord {
    fn from_result(result: &ShootingResult, r_end: f64) -> Self {
        let traj = &result.trajectory;
        let (t_max, residual) = match result.alpha_sq {
            Some(alpha_sq) => (
                compute_t_of_r(&traj.samples).ok().map(|(_, t_max)| t_max),
                traj.f_at(0.5 * r_end).map(|f| (alpha_sq - f).abs()),
            ),
            None => (None, None),
        };
        SweepRecord {
            tau: result.tau,
            alpha_sq: result.alpha_sq,
            beta: result.beta,
            t_max,
            stabilization_residual: residual,
            status: traj.status,
        }
    }
}

/// Shoot every τ independently (in parallel), returning records in input order.
pub fn sweep(tau_values: &[f64], base: &ShootingConfig) -> Result<Vec<SweepRecord>> {
    let configs = tau_values
        .iter()
        .map(|&tau| {
            let config = ShootingConfig { tau, ..*base };
            config.validate().map(|_| config)
        })
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .map(|config| shoot(config).map(|res| SweepRecord::from_result(&res, config.r_end)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaInversion {
    pub tau: f64,
    /// β actually achieved at `tau`.
    pub beta: f64,
    pub evaluations: usize,
}

/// Largest β accepted by [`find_tau_for_beta`].
pub const BETA_TARGET_MAX: f64 = 1.5;
const TAU_BRACKET_LO: f64 = 0.5;
const TAU_BRACKET_HI: f64 = 1e4;
const TAU_EXPANSION_CAP: f64 = 1e8;
const MAX_BISECTIONS: usize = 200;

/// Find τ with `|β(τ) - beta_target| < tol` by bisection on the decreasing
/// map τ ↦ β. The bracket starts at `[0.5, 10⁴]` and its upper end grows
/// tenfold (up to 10⁸) until it encloses the target.
pub fn find_tau_for_beta(beta_target: f64, base: &ShootingConfig, tol: f64) -> Result<BetaInversion> {
    if !(beta_target > 0.25) {
        return Err(Error::BelowThreshold(beta_target));
    }
    if beta_target > BETA_TARGET_MAX {
        return Err(Error::domain("beta target above the supported maximum 1.5", beta_target));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive", tol));
    }
    let mut evaluations = 0usize;
    let mut beta_at = |tau: f64| -> Result<f64> {
        evaluations += 1;
        let res = shoot(&ShootingConfig { tau, ..*base })?;
        res.beta.ok_or(Error::Trajectory(res.status()))
    };

    let mut lo = TAU_BRACKET_LO;
    let mut hi = TAU_BRACKET_HI;
    let beta_lo = beta_at(lo)?;
    if (beta_lo - beta_target).abs() < tol {
        return Ok(BetaInversion { tau: lo, beta: beta_lo, evaluations });
    }
    let mut beta_hi = beta_at(hi)?;
    while beta_hi > beta_target && hi < TAU_EXPANSION_CAP {
        lo = hi;
        hi *= 10.0;
        beta_hi = beta_at(hi)?;
    }
    if !(beta_lo > beta_target && beta_hi <= beta_target) {
        return Err(Error::NoBracket {
            target: beta_target,
            tau_lo: TAU_BRACKET_LO,
            tau_hi: hi,
            beta_lo_tau: beta_lo,
            beta_hi_tau: beta_hi,
        });
    }
    if (beta_hi - beta_target).abs() < tol {
        return Ok(BetaInversion { tau: hi, beta: beta_hi, evaluations });
    }

    // The bracket can span decades, so bisect in log τ.
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        let beta_mid = beta_at(mid)?;
        if (beta_mid - beta_target).abs() < tol {
            return Ok(BetaInversion { tau: mid, beta: beta_mid, evaluations });
        }
        if beta_mid > beta_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::NoConvergence { tol, iterations: MAX_BISECTIONS })
}
