//! Geometric reconstruction along a shot and the two degeneration limits.
//!
//! From a phase trajectory the metric coefficients follow pointwise:
//! `R = a/b = -tanh r`, `a = √(fR)`, `b = √(f/R)`, `c = √(-h)`, and the
//! geodesic distance from the P¹ end is `t(r) = ∫ √(-h) dr` since
//! `dr/dt = 1/c`. The far end of the trajectory stands in for `r = -∞`,
//! so `t(r_end) = 0`; the neglected tail decays like `e^{r_end}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::PhaseState;
use crate::reference::{eval_bubble_targets, ReferenceModel};

/// Left edge of the window in which rescaled shots are compared with the bubble.
pub const BUBBLE_WINDOW_MIN: f64 = -12.0;

/// Geodesic coordinate at every sample, plus `t_max = t(r₀)`.
///
/// Samples are in integration order (decreasing `r`); the returned `t`
/// values follow the same order, so `t[0] = t_max` and the last entry is 0.
/// Composite trapezoid rule on the integrator's own nodes.
pub fn compute_t_of_r(samples: &[PhaseState]) -> Result<(Vec<f64>, f64)> {
    if samples.is_empty() {
        return Err(Error::Config("empty trajectory".into()));
    }
    for s in samples {
        // h == 0 is the underflowed far-field tail and contributes nothing.
        if !(s.h <= 0.0) {
            return Err(Error::domain("geodesic distance needs h <= 0", s.h));
        }
    }
    for w in samples.windows(2) {
        if !(w[1].r < w[0].r) {
            return Err(Error::domain("samples must be strictly decreasing in r", w[1].r));
        }
    }
    let speed = |s: &PhaseState| (-s.h).sqrt();
    let mut t = vec![0.0; samples.len()];
    for i in (0..samples.len() - 1).rev() {
        let (near, far) = (&samples[i], &samples[i + 1]);
        t[i] = t[i + 1] + 0.5 * (speed(near) + speed(far)) * (near.r - far.r);
    }
    let t_max = t[0];
    Ok((t, t_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub r: f64,
    pub f: f64,
    /// `R = a/b`.
    #[serde(rename = "R")]
    pub ratio: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ProfileRow {
    pub fn c_sq(&self) -> f64 {
        self.c * self.c
    }
}

/// Metric data along one shot, ordered by increasing `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricProfile {
    pub rows: Vec<ProfileRow>,
}

impl MetricProfile {
    pub fn t_max(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    /// Build directly from closed-form data sampled at the given `t` values.
    pub fn from_reference(model: ReferenceModel, ts: &[f64]) -> Result<Self> {
        let rows = ts
            .iter()
            .map(|&t| {
                let m = crate::reference::eval_abc_of_t(model, t)?;
                let (f, ratio, _) = model.geodesic_data(t)?;
                Ok(ProfileRow { t, r: f64::NAN, f, ratio, a: m.a, b: m.b, c: m.c })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricProfile { rows })
    }
}

/// Reconstruct `(t, r, f, R, a, b, c)` at every sample.
pub fn build_profile(samples: &[PhaseState]) -> Result<MetricProfile> {
    let (t, _) = compute_t_of_r(samples)?;
    let mut rows = Vec::with_capacity(samples.len());
    for (s, &t) in samples.iter().zip(&t).rev() {
        if !(s.r < 0.0) || !(s.f > 0.0) {
            return Err(Error::domain("profile needs r < 0 and f > 0", s.f));
        }
        let ratio = -s.r.tanh();
        rows.push(ProfileRow {
            t,
            r: s.r,
            f: s.f,
            ratio,
            a: (s.f * ratio).sqrt(),
            b: (s.f / ratio).sqrt(),
            c: (-s.h).sqrt(),
        });
    }
    Ok(MetricProfile { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResampledPoint {
    pub t: f64,
    pub f: f64,
    #[serde(rename = "R")]
    pub ratio: f64,
    pub c_sq: f64,
}

/// Piecewise-linear interpolation of `f`, `R`, `c²` onto `t_grid`.
pub fn resample_profile_in_t(profile: &MetricProfile, t_grid: &[f64]) -> Result<Vec<ResampledPoint>> {
    let rows = &profile.rows;
    let t_max = profile.t_max();
    t_grid
        .iter()
        .map(|&x| {
            if rows.is_empty() || !(x >= 0.0 && x <= t_max) {
                return Err(Error::domain("resample point outside [0, t_max]", x));
            }
            // Far-field rows can share t = 0 once h underflows; take the first.
            let idx = rows.partition_point(|row| row.t < x);
            let hit = |row: &ProfileRow| ResampledPoint {
                t: x,
                f: row.f,
                ratio: row.ratio,
                c_sq: row.c_sq(),
            };
            if idx == 0 || rows[idx].t == x {
                return Ok(hit(&rows[idx]));
            }
            let (p, q) = (&rows[idx - 1], &rows[idx]);
            let w = (x - p.t) / (q.t - p.t);
            let lerp = |u: f64, v: f64| u + w * (v - u);
            Ok(ResampledPoint {
                t: x,
                f: lerp(p.f, q.f),
                ratio: lerp(p.ratio, q.ratio),
                c_sq: lerp(p.c_sq(), q.c_sq()),
            })
        })
        .collect()
}

/// Sup-norm distance between a profile and a closed-form model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub model: ReferenceModel,
    pub sup_error_f: f64,
    #[serde(rename = "sup_error_R")]
    pub sup_error_ratio: f64,
    pub sup_error_csq: f64,
    pub sample_count: usize,
}

/// Compare on `sample_count` uniform points of `[0, min(t_max, t*)]`,
/// endpoints included.
pub fn compare_to_reference(
    profile: &MetricProfile,
    model: ReferenceModel,
    sample_count: usize,
) -> Result<ComparisonReport> {
    if !model.is_geodesic() {
        return Err(Error::Unsupported {
            model: model.name(),
            quantity: "geodesic comparison",
        });
    }
    let end = profile.t_max().min(model.param_max());
    let grid: Vec<f64> = match sample_count {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect(),
    };
    let points = resample_profile_in_t(profile, &grid)?;
    let mut report = ComparisonReport {
        model,
        sup_error_f: 0.0,
        sup_error_ratio: 0.0,
        sup_error_csq: 0.0,
        sample_count: points.len(),
    };
    for p in &points {
        let (f, ratio, c_sq) = model.geodesic_data(p.t)?;
        report.sup_error_f = report.sup_error_f.max((p.f - f).abs());
        report.sup_error_ratio = report.sup_error_ratio.max((p.ratio - ratio).abs());
        report.sup_error_csq = report.sup_error_csq.max((p.c_sq - c_sq).abs());
    }
    Ok(report)
}

/// Comparison against the weighted-projective limit
/// `f = ¼cos²t`, `R ≡ 1`, `c² = (¼ sin 2t)²`.
pub fn compare_to_p114(profile: &MetricProfile, sample_count: usize) -> ComparisonReport {
    compare_to_reference(profile, ReferenceModel::P114, sample_count)
        .expect("P(1,1,4) has geodesic closed forms on [0, π/2]")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubblePoint {
    pub r: f64,
    pub f_scaled: f64,
    pub h_scaled: f64,
}

/// `(r, fτ, hτ)` at every sample: the metric blown up by τ near the
/// collapsing RP² orbit.
pub fn bubble_rescale(samples: &[PhaseState], tau: f64) -> Vec<BubblePoint> {
    samples
        .iter()
        .map(|s| BubblePoint { r: s.r, f_scaled: s.f * tau, h_scaled: s.h * tau })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleErrors {
    pub sup_error_f: f64,
    pub sup_error_h: f64,
    pub sample_count: usize,
    pub r_min: f64,
}

/// Sup distance of rescaled points with `r >= r_min` from `(-sinh r, -cosh r)`.
pub fn bubble_errors(points: &[BubblePoint], r_min: f64) -> BubbleErrors {
    let mut out = BubbleErrors { sup_error_f: 0.0, sup_error_h: 0.0, sample_count: 0, r_min };
    for p in points.iter().filter(|p| p.r >= r_min) {
        let Ok((f, h)) = eval_bubble_targets(p.r) else { continue };
        out.sup_error_f = out.sup_error_f.max((p.f_scaled - f).abs());
        out.sup_error_h = out.sup_error_h.max((p.h_scaled - h).abs());
        out.sample_count += 1;
    }
    out
}
