//! Reduced Kähler-Einstein system and its adaptive integrator.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// One point `(r, f, h)` of the reduced system, with `f = ab` and `h = f_r = -c²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub r: f64,
    pub f: f64,
    pub h: f64,
}

impl PhaseState {
    pub fn new(r: f64, f: f64, h: f64) -> Self {
        PhaseState { r, f, h }
    }

    fn is_finite(&self) -> bool {
        self.r.is_finite() && self.f.is_finite() && self.h.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            h_min: 1e-13,
            // Step nodes double as quadrature nodes for t(r); see `geometry`.
            h_max: 0.01,
            max_steps: 10_000_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::domain("rel_tol must be positive", self.rel_tol));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::domain("abs_tol must be positive", self.abs_tol));
        }
        if !(self.h_min > 0.0) {
            return Err(Error::domain("h_min must be positive", self.h_min));
        }
        if !(self.h_max >= self.h_min) || !self.h_max.is_finite() {
            return Err(Error::domain("h_max must be finite and >= h_min", self.h_max));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Why an integration stopped. `ReachedEnd` is the only success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TerminationStatus {
    ReachedEnd,
    FWentNonpositive,
    HWentNonnegative,
    StepUnderflow,
    StepBudgetExhausted,
    NonFinite,
}

impl TerminationStatus {
    pub fn is_success(self) -> bool {
        self == TerminationStatus::ReachedEnd
    }

    pub fn name(self) -> &'static str {
        match self {
            TerminationStatus::ReachedEnd => "ReachedEnd",
            TerminationStatus::FWentNonpositive => "FWentNonpositive",
            TerminationStatus::HWentNonnegative => "HWentNonnegative",
            TerminationStatus::StepUnderflow => "StepUnderflow",
            TerminationStatus::StepBudgetExhausted => "StepBudgetExhausted",
            TerminationStatus::NonFinite => "NonFinite",
        }
    }
}

impl fmt::Display for TerminationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepted integrator nodes in decreasing `r`, plus how the run ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<PhaseState>,
    pub status: TerminationStatus,
    /// Sum over accepted steps of the larger embedded local error estimate
    /// of `f` and `h`; errors in `h` feed into `f` one step later.
    pub error_estimate: f64,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &PhaseState {
        self.samples.last().expect("trajectory always holds its start")
    }

    /// Linear interpolation of `f` at `r`, `None` outside the sampled range.
    pub fn f_at(&self, r: f64) -> Option<f64> {
        let s = &self.samples;
        let first = s.first()?;
        if r > first.r || r < self.last().r {
            return None;
        }
        // Samples are strictly decreasing in r.
        let idx = s.partition_point(|p| p.r > r);
        if idx == 0 || s[idx].r == r {
            return Some(s[idx].f);
        }
        let (p, q) = (&s[idx - 1], &s[idx]);
        let w = (r - p.r) / (q.r - p.r);
        Some(p.f + w * (q.f - p.f))
    }
}

/// Right-hand side `(f_r, h_r) = (h, 12fh + 2coth(2r)h - h²/f)`.
///
/// Rejects `r >= 0` and `f == 0`.
pub fn rhs(state: PhaseState) -> Result<(f64, f64)> {
    if !(state.r < 0.0) {
        return Err(Error::domain("rhs needs r < 0", state.r));
    }
    if state.f == 0.0 || state.f.is_nan() {
        return Err(Error::domain("rhs needs f != 0", state.f));
    }
    let [df, dh] = reduced_rhs(state.r, [state.f, state.h]);
    Ok((df, dh))
}

#[inline]
fn reduced_rhs(r: f64, y: [f64; 2]) -> [f64; 2] {
    let [f, h] = y;
    // coth via 1/tanh: cosh/sinh overflow past |2r| ≈ 710.
    let coth = 1.0 / (2.0 * r).tanh();
    [h, 12.0 * f * h + 2.0 * coth * h - h * h / f]
}

/// Integrate the reduced system from `start` down to `r_target < start.r`.
///
/// Every accepted step is kept. After each accepted step the state is
/// checked for non-finite values, `f <= 0`, and `h > 0`. An exact `h == 0`
/// is tolerated: it is the underflow of the exponentially decaying tail,
/// not a sign change.
pub fn integrate(start: PhaseState, r_target: f64, control: &StepControl) -> Result<Trajectory> {
    control.validate()?;
    if !(start.r < 0.0) {
        return Err(Error::domain("integration must start at r < 0", start.r));
    }
    if !(r_target < start.r) || !r_target.is_finite() {
        return Err(Error::domain(
            "integration runs toward decreasing r; target must lie below the start",
            r_target,
        ));
    }
    if !start.is_finite() {
        return Err(Error::domain("start state must be finite", start.f));
    }
    let monitor = |s: &PhaseState| {
        if !s.is_finite() {
            Some(TerminationStatus::NonFinite)
        } else if s.f <= 0.0 {
            Some(TerminationStatus::FWentNonpositive)
        } else if s.h > 0.0 {
            Some(TerminationStatus::HWentNonnegative)
        } else {
            None
        }
    };
    Ok(dopri5(reduced_rhs, start, r_target, control, monitor))
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller exponents for a fifth-order pair.
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type State = [f64; 2];

#[inline]
fn axpy(y: State, terms: &[(f64, &State)]) -> State {
    let mut out = y;
    for (w, k) in terms {
        out[0] += w * k[0];
        out[1] += w * k[1];
    }
    out
}

fn error_ratio(err: &State, y0: &State, y1: &State, control: &StepControl) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let scale = control
            .abs_tol
            .max(control.rel_tol * y0[i].abs().max(y1[i].abs()));
        let q = err[i].abs() / scale;
        if q.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(q);
    }
    worst
}

fn initial_step<F>(rhs: &F, r0: f64, y0: &State, k1: &State, dir: f64, span: f64, c: &StepControl) -> f64
where
    F: Fn(f64, State) -> State,
{
    let scale = |i: usize| c.abs_tol.max(c.rel_tol * y0[i].abs());
    let norm = |v: &State| (0..2).map(|i| (v[i] / scale(i)).abs()).fold(0.0, f64::max);
    let d0 = norm(y0);
    let d1 = norm(k1);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(c.h_max).min(span);
    let y1 = axpy(*y0, &[(dir * h0, k1)]);
    let k2 = rhs(r0 + dir * h0, y1);
    let diff = [k2[0] - k1[0], k2[1] - k1[1]];
    let d2 = norm(&diff) / h0;
    let dmax = d1.max(d2);
    let h1 = if !(dmax > 1e-15) {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    (100.0 * h0).min(h1).min(c.h_max).min(span).max(c.h_min)
}

/// Adaptive Dormand-Prince 5(4) with PI step control on a two-component
/// system, stepping from `start.r` toward `r_target` in either direction.
fn dopri5<F, M>(rhs: F, start: PhaseState, r_target: f64, control: &StepControl, monitor: M) -> Trajectory
where
    F: Fn(f64, State) -> State,
    M: Fn(&PhaseState) -> Option<TerminationStatus>,
{
    let dir = (r_target - start.r).signum();
    let mut r = start.r;
    let mut y: State = [start.f, start.h];
    let mut samples = vec![start];
    let mut k1 = rhs(r, y);
    let mut step = initial_step(&rhs, r, &y, &k1, dir, (r_target - r).abs(), control);
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;
    let mut accepted = 0usize;
    let mut rejected_steps = 0usize;
    let mut error_estimate = 0.0;

    let status = loop {
        if r == r_target {
            break TerminationStatus::ReachedEnd;
        }
        if accepted >= control.max_steps {
            break TerminationStatus::StepBudgetExhausted;
        }
        let remaining = (r_target - r).abs();
        let last = step >= remaining;
        if last {
            step = remaining;
        } else if step < control.h_min {
            break TerminationStatus::StepUnderflow;
        }
        let dr = dir * step;

        let k2 = rhs(r + C2 * dr, axpy(y, &[(dr * A21, &k1)]));
        let k3 = rhs(r + C3 * dr, axpy(y, &[(dr * A31, &k1), (dr * A32, &k2)]));
        let k4 = rhs(
            r + C4 * dr,
            axpy(y, &[(dr * A41, &k1), (dr * A42, &k2), (dr * A43, &k3)]),
        );
        let k5 = rhs(
            r + C5 * dr,
            axpy(y, &[(dr * A51, &k1), (dr * A52, &k2), (dr * A53, &k3), (dr * A54, &k4)]),
        );
        let r_new = if last { r_target } else { r + dr };
        let k6 = rhs(
            r + dr,
            axpy(
                y,
                &[(dr * A61, &k1), (dr * A62, &k2), (dr * A63, &k3), (dr * A64, &k4), (dr * A65, &k5)],
            ),
        );
        let y_new = axpy(
            y,
            &[(dr * A71, &k1), (dr * A73, &k3), (dr * A74, &k4), (dr * A75, &k5), (dr * A76, &k6)],
        );
        let k7 = rhs(r_new, y_new);
        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] = dr * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let ratio = error_ratio(&err, &y, &y_new, control);

        if ratio.is_finite() && ratio <= 1.0 {
            accepted += 1;
            error_estimate += err[0].abs().max(err[1].abs());
            r = r_new;
            y = y_new;
            k1 = k7;
            let state = PhaseState::new(r, y[0], y[1]);
            samples.push(state);
            if let Some(stop) = monitor(&state) {
                break stop;
            }
            let q = ratio.max(1e-10);
            let mut factor = SAFETY * q.powf(-ALPHA) * err_prev.powf(BETA);
            factor = factor.clamp(FAC_MIN, FAC_MAX);
            if rejected_last {
                factor = factor.min(1.0);
            }
            step = (step * factor).min(control.h_max);
            err_prev = q.max(1e-4);
            rejected_last = false;
        } else {
            rejected_steps += 1;
            let factor = if ratio.is_finite() {
                (SAFETY * ratio.powf(-0.2)).max(FAC_MIN)
            } else {
                FAC_MIN
            };
            step *= factor;
            rejected_last = true;
            if step < control.h_min {
                break TerminationStatus::StepUnderflow;
            }
        }
    };

    Trajectory {
        samples,
        status,
        error_estimate,
        rejected_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2_seed() -> PhaseState {
        PhaseState::new(-1e-5, 1e-5, -1.0)
    }

    #[test]
    fn rhs_matches_closed_form_derivative() {
        // P² closed form at r = -1; reference h_r = 4 sech²(2r) tanh(2r)
        // evaluated at 40 digits.
        let s = PhaseState::new(-1.0, 0.482_013_790_037_908_44, -0.070_650_824_853_164_466);
        let (df, dh) = rhs(s).unwrap();
        assert_eq!(df, s.h);
        assert!((dh - -0.272_437_374_854_226_08).abs() < 1e-14);

        // Rounded inputs; 30-digit reference at exactly these inputs.
        let (df, dh) = rhs(PhaseState::new(-1.0, 0.4820138, -0.0706508)).unwrap();
        assert_eq!(df, -0.0706508);
        assert!((dh - -0.272_437_283_606_779_9).abs() < 1e-12);
    }

    #[test]
    fn rhs_far_field_linearizes() {
        let (df, dh) = rhs(PhaseState::new(-50.0, 1.0 / 3.0, -1e-40)).unwrap();
        assert_eq!(df, -1e-40);
        assert!((dh - -2e-40).abs() < 1e-52);
    }

    #[test]
    fn rhs_near_singular_point_cancels() {
        // 40-digit reference: -1.0666666666670222e-4.
        let (df, dh) = rhs(p2_seed()).unwrap();
        assert_eq!(df, -1.0);
        assert!(dh.abs() < 10.0);
        assert!((dh - -1.066_666_666_670_222_2e-4).abs() < 1e-9, "{dh}");
    }

    #[test]
    fn rhs_rejects_bad_points() {
        assert!(rhs(PhaseState::new(0.0, 1.0, -1.0)).is_err());
        assert!(rhs(PhaseState::new(0.3, 1.0, -1.0)).is_err());
        assert!(rhs(PhaseState::new(-1.0, 0.0, -1.0)).is_err());
    }

    #[test]
    fn rhs_finite_deep_in_far_field() {
        let (_, dh) = rhs(PhaseState::new(-600.0, 0.3, -1e-200)).unwrap();
        assert!(dh.is_finite());
    }

    #[test]
    fn step_control_validation() {
        assert!(StepControl::default().validate().is_ok());
        let bad = [
            StepControl { rel_tol: 0.0, ..Default::default() },
            StepControl { abs_tol: -1.0, ..Default::default() },
            StepControl { h_min: 0.0, ..Default::default() },
            StepControl { h_max: 1e-14, ..Default::default() },
            StepControl { max_steps: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn p2_trajectory_matches_closed_form() {
        let traj = integrate(p2_seed(), -10.0, &StepControl::default()).unwrap();
        assert_eq!(traj.status, TerminationStatus::ReachedEnd);
        assert_eq!(traj.last().r, -10.0);
        assert!((traj.last().f - 0.5).abs() < 1e-6);
        let worst = traj
            .samples
            .iter()
            .map(|s| (s.f + 0.5 * (2.0 * s.r).tanh()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "sup error {worst}");
    }

    #[test]
    fn p1xp1_trajectory_matches_closed_form() {
        let start = PhaseState::new(-1e-5, 1e-5 / 3.0, -1.0 / 3.0);
        let traj = integrate(start, -10.0, &StepControl::default()).unwrap();
        assert_eq!(traj.status, TerminationStatus::ReachedEnd);
        let worst = traj
            .samples
            .iter()
            .map(|s| (s.f + s.r.tanh() / 3.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "sup error {worst}");
    }

    #[test]
    fn wrong_direction_is_rejected() {
        assert!(integrate(p2_seed(), -1e-6, &StepControl::default()).is_err());
        assert!(integrate(PhaseState::new(0.0, 1.0, -1.0), -1.0, &StepControl::default()).is_err());
    }

    #[test]
    fn samples_strictly_decreasing_and_signed() {
        let traj = integrate(p2_seed(), -500.0, &StepControl::default()).unwrap();
        assert!(traj.status.is_success());
        for w in traj.samples.windows(2) {
            assert!(w[1].r < w[0].r);
        }
        for s in &traj.samples {
            assert!(s.f > 0.0);
            assert!(s.h <= 0.0);
            // Before the decaying tail can underflow, h is strictly negative.
            if s.r > -150.0 {
                assert!(s.h < 0.0, "{s:?}");
            }
        }
    }

    #[test]
    fn step_budget_is_reported() {
        let control = StepControl { max_steps: 10, ..Default::default() };
        let traj = integrate(p2_seed(), -10.0, &control).unwrap();
        assert_eq!(traj.status, TerminationStatus::StepBudgetExhausted);
        assert_eq!(traj.samples.len(), 11);
    }

    #[test]
    fn step_underflow_is_reported() {
        // Tolerances the seed cannot meet at any admissible step.
        let control = StepControl {
            rel_tol: 1e-30,
            abs_tol: 1e-30,
            h_min: 1e-3,
            h_max: 1e-2,
            ..Default::default()
        };
        let traj = integrate(PhaseState::new(-0.5, 0.3, -0.5), -10.0, &control).unwrap();
        assert_eq!(traj.status, TerminationStatus::StepUnderflow);
    }

    #[test]
    fn sign_monitors_fire() {
        // Positive h drives f upward: the h monitor must trip immediately.
        let traj = integrate(PhaseState::new(-1.0, 0.3, 0.2), -5.0, &StepControl::default()).unwrap();
        assert_eq!(traj.status, TerminationStatus::HWentNonnegative);

        // Negative f violates the interior sign on the first accepted step.
        let traj = integrate(PhaseState::new(-1.0, -0.3, -0.2), -5.0, &StepControl::default()).unwrap();
        assert_eq!(traj.status, TerminationStatus::FWentNonpositive);
    }

    #[test]
    fn engine_integrates_exponential() {
        // y' = y backward from 0 to -5, exact e^r.
        let control = StepControl { h_max: 0.5, ..Default::default() };
        let traj = dopri5(
            |_, y| [y[0], -y[1]],
            PhaseState::new(0.0, 1.0, 1.0),
            -5.0,
            &control,
            |_| None,
        );
        assert!(traj.status.is_success());
        let last = traj.last();
        assert!((last.f - (-5f64).exp()).abs() < 1e-10);
        assert!((last.h - 5f64.exp()).abs() < 1e-6 * 5f64.exp());
    }

    #[test]
    fn f_at_interpolates() {
        let traj = integrate(p2_seed(), -3.0, &StepControl::default()).unwrap();
        let exact = -0.5 * (2.0f64 * -1.234).tanh();
        assert!((traj.f_at(-1.234).unwrap() - exact).abs() < 1e-5);
        assert_eq!(traj.f_at(-3.0), Some(traj.last().f));
        assert_eq!(traj.f_at(-3.5), None);
        assert_eq!(traj.f_at(0.0), None);
    }
}
