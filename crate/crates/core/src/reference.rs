//! Closed-form reference metrics.
//!
//! Four explicit solutions bracket the family of conical metrics:
//!
//! | model          | β   | data                                               |
//! |----------------|-----|----------------------------------------------------|
//! | `P2`           | 1   | Fubini-Study, `t ∈ [0, π/4]`                       |
//! | `P1xP1`        | 1/2 | product metric on the double cover, `t ∈ [0, π/(2√3)]` |
//! | `P114`         | 1/4 | orbifold metric on the weighted plane, `t ∈ [0, π/2]` |
//! | `EguchiHanson` | -   | Z₂ quotient of the bubble, parameter `s = -r ≥ 0`  |
//!
//! All functions are pure and evaluated in double precision.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Geodesic length of the P¹×P¹ profile, π/(2√3).
pub const P1XP1_T_MAX: f64 = FRAC_PI_2 / SQRT_3;

/// Beyond this |r| (or s) the hyperbolic functions overflow `f64`.
pub const HYPERBOLIC_OVERFLOW: f64 = 710.475_860_073_943_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ReferenceModel {
    P2,
    P1xP1,
    P114,
    EguchiHanson,
}

impl ReferenceModel {
    pub const ALL: [ReferenceModel; 4] = [
        ReferenceModel::P2,
        ReferenceModel::P1xP1,
        ReferenceModel::P114,
        ReferenceModel::EguchiHanson,
    ];

    /// Command-line spelling.
    pub fn name(self) -> &'static str {
        match self {
            ReferenceModel::P2 => "p2",
            ReferenceModel::P1xP1 => "p1xp1",
            ReferenceModel::P114 => "p114",
            ReferenceModel::EguchiHanson => "eguchi-hanson",
        }
    }

    /// Upper end of the parameter range. The Eguchi-Hanson parameter `s` is
    /// unbounded in principle; its cap is the overflow threshold.
    pub fn param_max(self) -> f64 {
        match self {
            ReferenceModel::P2 => FRAC_PI_4,
            ReferenceModel::P1xP1 => P1XP1_T_MAX,
            ReferenceModel::P114 => FRAC_PI_2,
            ReferenceModel::EguchiHanson => HYPERBOLIC_OVERFLOW,
        }
    }

    /// `true` for the models parametrised by geodesic distance from P¹.
    pub fn is_geodesic(self) -> bool {
        !matches!(self, ReferenceModel::EguchiHanson)
    }

    /// Far-field value `f(t = 0) = α²`, where defined.
    pub fn alpha_sq(self) -> Option<f64> {
        match self {
            ReferenceModel::P2 => Some(0.5),
            ReferenceModel::P1xP1 => Some(1.0 / 3.0),
            ReferenceModel::P114 => Some(0.25),
            ReferenceModel::EguchiHanson => None,
        }
    }

    /// Closed-form `(f, ratio, c²)` as functions of geodesic `t`, the
    /// quantities a numerical profile is compared against.
    pub fn geodesic_data(self, t: f64) -> Result<(f64, f64, f64)> {
        if !self.is_geodesic() {
            return Err(Error::Unsupported {
                model: self.name(),
                quantity: "geodesic profile",
            });
        }
        let m = eval_abc_of_t(self, t)?;
        let ratio = match self {
            // a = b identically; the quotient is 0/0 only at the collapsed point.
            ReferenceModel::P114 => 1.0,
            ReferenceModel::P2 => (FRAC_PI_4 - t.min(FRAC_PI_4)).tan(),
            _ => m.a / m.b,
        };
        Ok((m.a * m.b, ratio, m.c * m.c))
    }
}

impl fmt::Display for ReferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReferenceModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p2" => Ok(ReferenceModel::P2),
            "p1xp1" => Ok(ReferenceModel::P1xP1),
            "p114" => Ok(ReferenceModel::P114),
            "eguchi-hanson" | "eh" => Ok(ReferenceModel::EguchiHanson),
            other => Err(format!(
                "unknown model '{other}' (expected p2, p1xp1, p114 or eguchi-hanson)"
            )),
        }
    }
}

/// Metric coefficients `(a, b, c)` at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `f(r)` for the two models whose reduced solution is known in `r`:
/// `-½ tanh 2r` for P² and `-⅓ tanh r` for P¹×P¹.
pub fn eval_f_of_r(model: ReferenceModel, r: f64) -> Result<f64> {
    check_interior_r(r)?;
    match model {
        ReferenceModel::P2 => Ok(-0.5 * (2.0 * r).tanh()),
        ReferenceModel::P1xP1 => Ok(-r.tanh() / 3.0),
        _ => Err(Error::Unsupported {
            model: model.name(),
            quantity: "f(r)",
        }),
    }
}

/// Closed-form `(f, h, dh/dr)` for P² and P¹×P¹, with the derivatives
/// written out by hand: for P², `h = -sech² 2r`, `h_r = 4 sech² 2r tanh 2r`;
/// for P¹×P¹, `h = -⅓ sech² r`, `h_r = ⅔ sech² r tanh r`.
pub fn closed_form_state(model: ReferenceModel, r: f64) -> Result<(f64, f64, f64)> {
    let f = eval_f_of_r(model, r)?;
    Ok(match model {
        ReferenceModel::P2 => {
            let sech2 = (2.0 * r).cosh().powi(-2);
            (f, -sech2, 4.0 * sech2 * (2.0 * r).tanh())
        }
        _ => {
            let sech2 = r.cosh().powi(-2);
            (f, -sech2 / 3.0, 2.0 * sech2 * r.tanh() / 3.0)
        }
    })
}

/// `(a, b, c)` as functions of geodesic distance `t` from P¹, or of `s` for
/// the Eguchi-Hanson quotient.
pub fn eval_abc_of_t(model: ReferenceModel, t: f64) -> Result<MetricCoefficients> {
    if !(t >= 0.0) {
        return Err(Error::domain("parameter must be nonnegative", t));
    }
    let t_max = model.param_max();
    if t > t_max * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::domain("parameter beyond the model's range", t));
    }
    let t = t.min(t_max);
    let m = match model {
        ReferenceModel::P2 => MetricCoefficients {
            a: (FRAC_PI_4 - t).sin(),
            b: (t + FRAC_PI_4).sin(),
            c: (2.0 * t).sin(),
        },
        ReferenceModel::P1xP1 => {
            let b = 1.0 / SQRT_3;
            MetricCoefficients {
                a: b * (SQRT_3 * t).cos().max(0.0),
                b,
                c: b * (SQRT_3 * t).sin(),
            }
        }
        ReferenceModel::P114 => {
            let half_cos = 0.5 * t.cos();
            MetricCoefficients {
                a: half_cos,
                b: half_cos,
                c: 0.25 * (2.0 * t).sin(),
            }
        }
        ReferenceModel::EguchiHanson => {
            let s = t;
            let b = s.cosh().sqrt();
            MetricCoefficients {
                a: (s.sinh() * s.tanh()).sqrt(),
                b,
                c: b,
            }
        }
    };
    if !(m.a.is_finite() && m.b.is_finite() && m.c.is_finite()) {
        return Err(Error::domain("closed form overflowed", t));
    }
    Ok(m)
}

/// Rescaled limits of `(fτ, hτ)` as τ → ∞: `(-sinh r, -cosh r)`.
///
/// Overflows for `r < -HYPERBOLIC_OVERFLOW` (about -710.48), reported as a
/// domain error.
pub fn eval_bubble_targets(r: f64) -> Result<(f64, f64)> {
    if !(r <= 0.0) {
        return Err(Error::domain("bubble targets need r <= 0", r));
    }
    let (f, h) = (-r.sinh(), -r.cosh());
    if !(f.is_finite() && h.is_finite()) {
        return Err(Error::domain("sinh/cosh overflow", r));
    }
    Ok((f, h))
}

fn check_interior_r(r: f64) -> Result<()> {
    if r < 0.0 {
        Ok(())
    } else {
        Err(Error::domain("r must be strictly negative", r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{rhs, PhaseState};

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn f_of_r_values() {
        // -½ tanh(-2), 40-digit evaluation.
        let v = eval_f_of_r(ReferenceModel::P2, -1.0).unwrap();
        assert!(close(v, 0.482_013_790_037_908_44, 1e-15));
        let far = eval_f_of_r(ReferenceModel::P1xP1, -50.0).unwrap();
        assert!((far - 1.0 / 3.0).abs() < 1e-12);
        assert!(eval_f_of_r(ReferenceModel::P2, -1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn f_of_r_is_positive_inside() {
        for r in [-1e-6, -0.3, -4.0, -40.0] {
            for m in [ReferenceModel::P2, ReferenceModel::P1xP1] {
                assert!(eval_f_of_r(m, r).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn f_of_r_rejects() {
        assert!(eval_f_of_r(ReferenceModel::P2, 0.0).is_err());
        assert!(eval_f_of_r(ReferenceModel::P2, 0.5).is_err());
        assert!(eval_f_of_r(ReferenceModel::P2, f64::NAN).is_err());
        assert!(matches!(
            eval_f_of_r(ReferenceModel::P114, -1.0),
            Err(Error::Unsupported { .. })
        ));
        assert!(eval_f_of_r(ReferenceModel::EguchiHanson, -1.0).is_err());
    }

    #[test]
    fn abc_values() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = eval_abc_of_t(ReferenceModel::P2, 0.0).unwrap();
        assert!(close(m.a, h, 1e-15) && close(m.b, h, 1e-15) && m.c == 0.0);

        let m = eval_abc_of_t(ReferenceModel::P1xP1, P1XP1_T_MAX).unwrap();
        let s = 1.0 / SQRT_3;
        assert!(close(m.a, 0.0, 1e-15));
        assert!(close(m.b, s, 1e-15) && close(m.c, s, 1e-15));

        // ½cos(π/4) = √2/4 = 0.35355339059327376, ¼ sin(π/2) = ¼.
        let m = eval_abc_of_t(ReferenceModel::P114, FRAC_PI_4).unwrap();
        assert!(close(m.a, 0.353_553_390_593_273_76, 1e-15));
        assert!(close(m.b, 0.353_553_390_593_273_76, 1e-15));
        assert!(close(m.c, 0.25, 1e-15));
    }

    #[test]
    fn abc_rejects_out_of_range() {
        assert!(eval_abc_of_t(ReferenceModel::P2, -0.1).is_err());
        assert!(eval_abc_of_t(ReferenceModel::P2, 0.8).is_err());
        assert!(eval_abc_of_t(ReferenceModel::P1xP1, 1.0).is_err());
        assert!(eval_abc_of_t(ReferenceModel::P114, 1.6).is_err());
        assert!(eval_abc_of_t(ReferenceModel::EguchiHanson, 800.0).is_err());
        assert!(eval_abc_of_t(ReferenceModel::P114, f64::NAN).is_err());
    }

    #[test]
    fn endpoint_compatibility() {
        for model in [ReferenceModel::P2, ReferenceModel::P1xP1, ReferenceModel::P114] {
            let start = eval_abc_of_t(model, 0.0).unwrap();
            assert!(close(start.a, start.b, 1e-15), "{model}");
            assert_eq!(start.c, 0.0);
            let end = eval_abc_of_t(model, model.param_max()).unwrap();
            assert!(close(end.a, 0.0, 1e-15), "{model}");
            assert!(close(end.b, end.c, 1e-15), "{model}");
        }
        let end = eval_abc_of_t(ReferenceModel::P114, FRAC_PI_2).unwrap();
        assert!(end.b.abs() < 1e-15 && end.c.abs() < 1e-15);
    }

    #[test]
    fn far_field_matches_cone_angle() {
        // α² = (1 + 2β)/6 at β = 1 and β = 1/2.
        let p2 = eval_f_of_r(ReferenceModel::P2, -40.0).unwrap();
        let pp = eval_f_of_r(ReferenceModel::P1xP1, -40.0).unwrap();
        assert!(close(p2, 3.0 / 6.0, 1e-15));
        assert!(close(pp, 2.0 / 6.0, 1e-15));
        assert_eq!(ReferenceModel::P114.alpha_sq(), Some(1.5 / 6.0));
    }

    #[test]
    fn bubble_target_values() {
        assert_eq!(eval_bubble_targets(0.0).unwrap(), (0.0, -1.0));
        let (f, h) = eval_bubble_targets(-2.0).unwrap();
        assert!(close(f, 3.626_860_407_847_019, 1e-14));
        assert!(close(h, -3.762_195_691_083_631_5, 1e-14));
        let (f, h) = eval_bubble_targets(-1.0).unwrap();
        assert!(close(f, 1.175_201_193_643_801_5, 1e-14));
        assert!(close(h, -1.543_080_634_815_243_7, 1e-14));
        assert!(eval_bubble_targets(0.1).is_err());
        assert!(eval_bubble_targets(-800.0).is_err());
        assert!(eval_bubble_targets(-700.0).is_ok());
    }

    #[test]
    fn eguchi_hanson_product_is_sinh() {
        for i in 0..200 {
            let s = i as f64 * 0.05;
            let m = eval_abc_of_t(ReferenceModel::EguchiHanson, s).unwrap();
            let want = s.sinh();
            assert!((m.a * m.b - want).abs() <= 1e-12 * want.max(1.0), "s = {s}");
            assert_eq!(m.b, m.c);
        }
    }

    #[test]
    fn geodesic_data_consistent_with_abc() {
        for model in [ReferenceModel::P2, ReferenceModel::P1xP1, ReferenceModel::P114] {
            for i in 0..50 {
                let t = model.param_max() * i as f64 / 50.0;
                let m = eval_abc_of_t(model, t).unwrap();
                let (f, ratio, c_sq) = model.geodesic_data(t).unwrap();
                assert!(close(f, m.a * m.b, 1e-15));
                assert!(close(ratio * m.b, m.a, 1e-14), "{model} t={t}");
                assert!(close(c_sq, m.c * m.c, 1e-15));
            }
        }
        assert!(ReferenceModel::EguchiHanson.geodesic_data(1.0).is_err());
    }

    #[test]
    fn p114_c_sq_is_sixteenth_of_sin_sq() {
        // c = ¼ sin 2t, so c² = sin²(2t)/16.
        for i in 0..20 {
            let t = FRAC_PI_2 * i as f64 / 20.0;
            let (_, _, c_sq) = ReferenceModel::P114.geodesic_data(t).unwrap();
            assert!(close(c_sq, (2.0 * t).sin().powi(2) / 16.0, 1e-16));
        }
    }

    #[test]
    fn model_parsing() {
        for m in ReferenceModel::ALL {
            assert_eq!(m.name().parse::<ReferenceModel>().unwrap(), m);
        }
        assert!("p3".parse::<ReferenceModel>().is_err());
    }

    /// Substituting the closed forms into the reduced system reproduces the
    /// hand-written second derivative.
    #[test]
    fn closed_forms_solve_the_reduced_system() {
        for model in [ReferenceModel::P2, ReferenceModel::P1xP1] {
            for i in 0..=400 {
                let r = -1e-3 - (10.0 - 1e-3) * i as f64 / 400.0;
                let (f, h, dh) = closed_form_state(model, r).unwrap();
                let (df_dr, dh_dr) = rhs(PhaseState { r, f, h }).unwrap();
                assert_eq!(df_dr, h);
                assert!(
                    (dh_dr - dh).abs() <= 1e-10 * dh.abs(),
                    "{model} r={r}: {dh_dr} vs {dh}"
                );
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn closed_forms_solve_the_reduced_system_at_random_r(r in -10.0f64..-1e-3) {
            for model in [ReferenceModel::P2, ReferenceModel::P1xP1] {
                let (f, h, dh) = closed_form_state(model, r).unwrap();
                let (_, dh_dr) = rhs(PhaseState { r, f, h }).unwrap();
                proptest::prop_assert!((dh_dr - dh).abs() <= 1e-10 * dh.abs());
            }
        }

        #[test]
        fn geodesic_abc_stay_nonnegative(u in 0.0f64..=1.0) {
            for model in [ReferenceModel::P2, ReferenceModel::P1xP1, ReferenceModel::P114] {
                let m = eval_abc_of_t(model, u * model.param_max()).unwrap();
                proptest::prop_assert!(m.a >= 0.0 && m.b > 0.0 && m.c >= -1e-15);
                proptest::prop_assert!(m.a <= m.b + 1e-15);
            }
        }
    }
}
