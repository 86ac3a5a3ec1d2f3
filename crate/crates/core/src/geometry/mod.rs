//! Profile curves, principal curvatures, surfaces of revolution and the
//! closed-form graph families.

mod asymptote;
mod closed_form;
mod mesh;

use std::f64::consts::PI;

use serde::Serialize;

pub use asymptote::{asymptote_report, AsymptoteReport};
pub use closed_form::{
    closed_form_u_alpha, cylinder_radius, kn_direct, kn_limit_ratio, oracle_u_prime_sq, printed_u_prime_sq, u_prime_sq,
    KnDirect,
};
pub use mesh::{revolve, SurfaceMesh};

use crate::error::{Error, Result};
use crate::numeric::hermite;
use crate::phaseplane::{Orbit, OrbitLimit};
use crate::prescribed::PrescribedFunction;
use crate::radial::Orientation;

/// Below this distance from the axis a profile point is treated as on it.
pub const AXIS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub s: f64,
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    /// Meridian curvature `θ′(s)` carried along for interpolation.
    pub dtheta_ds: f64,
}

/// Arclength-parametrized meridian `α(s) = (x(s), 0, z(s))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub samples: Vec<ProfileSample>,
    pub orientation: Orientation,
}

// Gauss–Legendre nodes and weights on [0, 1]
const GL4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

/// `∫ sin θ ds` over one step, with `θ` interpolated by its cubic Hermite.
fn rise(a: &ProfileSample, b: &ProfileSample) -> f64 {
    let h = b.s - a.s;
    GL4.iter()
        .map(|&(t, w)| {
            let s = a.s + t * h;
            w * hermite(a.s, b.s, a.theta, b.theta, a.dtheta_ds, b.dtheta_ds, s).sin()
        })
        .sum::<f64>()
        * h
}

/// Integrate `z′ = sin θ` along the orbit with `z(s₀) = z0`.
///
/// Extrapolated terminal points on the axis are appended so that closed
/// profiles reach `x = 0`.
pub fn profile_from_orbit(orbit: &Orbit, z0: f64) -> Result<ProfileCurve> {
    if orbit.samples.is_empty() {
        return Err(Error::Degenerate("empty orbit".into()));
    }
    let mut samples: Vec<ProfileSample> = orbit
        .samples
        .iter()
        .map(|p| ProfileSample {
            s: p.s,
            x: p.x,
            z: 0.0,
            theta: p.theta,
            dtheta_ds: if p.dtheta_ds.is_finite() { p.dtheta_ds } else { 0.0 },
        })
        .collect();
    if let Some(t) = orbit.terminal_start.filter(|t| t.x <= 1e-6) {
        let first = samples[0];
        if first.x > AXIS_EPS {
            samples.insert(
                0,
                ProfileSample {
                    s: first.s - first.x / first.theta.cos().abs().max(1e-3),
                    x: 0.0,
                    z: 0.0,
                    theta: t.theta,
                    dtheta_ds: first.dtheta_ds,
                },
            );
        }
    }
    if let Some(t) = orbit.terminal_end.filter(|t| t.x <= 1e-6) {
        let last = samples[samples.len() - 1];
        if last.x > AXIS_EPS {
            samples.push(ProfileSample {
                s: last.s + last.x / last.theta.cos().abs().max(1e-3),
                x: 0.0,
                z: 0.0,
                theta: t.theta,
                dtheta_ds: last.dtheta_ds,
            });
        }
    }
    samples[0].z = z0;
    for i in 1..samples.len() {
        let dz = rise(&samples[i - 1], &samples[i]);
        samples[i].z = samples[i - 1].z + dz;
    }
    let orientation = match (&orbit.limit_start, &orbit.limit_end) {
        (OrbitLimit::AxisOrthogonalTop, _) => Orientation::Upward,
        (_, OrbitLimit::AxisOrthogonalBottom) => Orientation::Downward,
        _ => Orientation::Upward,
    };
    Ok(ProfileCurve { samples, orientation })
}

impl ProfileCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn height(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.z - a.z,
            _ => 0.0,
        }
    }

    /// `n + 1` samples uniformly spaced in arclength (Hermite interpolation
    /// of `x`, `θ` and `z` with their exact derivatives).
    pub fn resample(&self, n: usize) -> Result<ProfileCurve> {
        if self.samples.len() < 2 || n < 1 {
            return Err(Error::InvalidInput("resampling needs two samples and n ≥ 1".into()));
        }
        let s: Vec<f64> = self.samples.iter().map(|p| p.s).collect();
        let (s0, s1) = (s[0], s[s.len() - 1]);
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = if i == n {
                s1
            } else {
                s0 + (s1 - s0) * i as f64 / n as f64
            };
            let j = crate::numeric::bracket(&s, t);
            let (a, b) = (&self.samples[j], &self.samples[j + 1]);
            let h = |ya: f64, yb: f64, da: f64, db: f64| hermite(a.s, b.s, ya, yb, da, db, t);
            let w = if b.s > a.s { (t - a.s) / (b.s - a.s) } else { 0.0 };
            let sample = if i == 0 {
                self.samples[0]
            } else if i == n {
                self.samples[self.samples.len() - 1]
            } else {
                ProfileSample {
                    s: t,
                    x: h(a.x, b.x, a.theta.cos(), b.theta.cos()).max(0.0),
                    z: h(a.z, b.z, a.theta.sin(), b.theta.sin()),
                    theta: h(a.theta, b.theta, a.dtheta_ds, b.dtheta_ds).clamp(0.0, PI),
                    dtheta_ds: a.dtheta_ds + w * (b.dtheta_ds - a.dtheta_ds),
                }
            };
            out.push(sample);
        }
        Ok(ProfileCurve {
            samples: out,
            orientation: self.orientation,
        })
    }

    /// `max |x′² + z′² − 1|` with `x′, z′` from the tangent angle.
    pub fn arclength_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|p| (p.theta.cos().powi(2) + p.theta.sin().powi(2) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub s: f64,
    pub x: f64,
    /// Meridian curvature `θ′` from the ODE.
    pub kappa1: f64,
    /// Meridian curvature from finite differences of `θ`.
    pub kappa1_fd: f64,
    /// Parallel curvature `sin θ / x`.
    pub kappa2: f64,
    pub nu: f64,
    pub gauss: f64,
    /// `|κ₁κ₂ − 𝔎(ν)|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub samples: Vec<CurvatureSample>,
    pub max_residual: f64,
    /// `max |κ₁_fd κ₂ − 𝔎(ν)|`, the independent finite-difference check.
    pub max_fd_residual: f64,
    pub skipped: usize,
}

/// Principal curvatures along a profile. Samples with `x ≤ x_min` are skipped.
pub fn curvatures(profile: &ProfileCurve, k: &PrescribedFunction, x_min: f64) -> Result<CurvatureReport> {
    let p = &profile.samples;
    let mut samples = Vec::with_capacity(p.len());
    let mut skipped = 0;
    let (mut max_residual, mut max_fd_residual) = (0.0f64, 0.0f64);
    for i in 0..p.len() {
        let q = &p[i];
        if q.x <= x_min || !(q.theta > 0.0 && q.theta < PI) {
            skipped += 1;
            continue;
        }
        let nu = q.theta.cos();
        let kv = k.evaluate(nu)?;
        let kappa1 = q.x * kv / q.theta.sin();
        let kappa1_fd = fd_derivative(p, i);
        let kappa2 = q.theta.sin() / q.x;
        let gauss = kappa1 * kappa2;
        let residual = (gauss - kv).abs();
        max_residual = max_residual.max(residual);
        if kappa1_fd.is_finite() {
            max_fd_residual = max_fd_residual.max((kappa1_fd * kappa2 - kv).abs());
        }
        samples.push(CurvatureSample {
            s: q.s,
            x: q.x,
            kappa1,
            kappa1_fd,
            kappa2,
            nu,
            gauss,
            residual,
        });
    }
    Ok(CurvatureReport {
        samples,
        max_residual,
        max_fd_residual,
        skipped,
    })
}

/// Three-point derivative of `θ` in `s` on a non-uniform grid.
fn fd_derivative(p: &[ProfileSample], i: usize) -> f64 {
    let n = p.len();
    if n < 3 {
        return f64::NAN;
    }
    let m = i.clamp(1, n - 2);
    let (a, b, c) = (&p[m - 1], &p[m], &p[m + 1]);
    if !(a.s < b.s && b.s < c.s) {
        return f64::NAN;
    }
    // derivative of the interpolating parabola at s_i
    let t = p[i].s;
    let l = |sj: f64, sk: f64, sl: f64| ((t - sk) + (t - sl)) / ((sj - sk) * (sj - sl));
    a.theta * l(a.s, b.s, c.s) + b.theta * l(b.s, a.s, c.s) + c.theta * l(c.s, a.s, b.s)
}
