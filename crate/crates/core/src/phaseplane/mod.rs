//! The phase plane `Θ = [0, ∞) × (0, π)` of the profile system
//!
//! ```text
//! x′ = cos θ,    θ′ = x·𝔎(cos θ)/sin θ,
//! ```
//!
//! its special orbits, monotonicity regions and first integral, and orbit
//! integration with limit classification.

mod first_integral;
mod orbit;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

pub use first_integral::FirstIntegral;
pub use orbit::{
    classify_limit, integrate_orbit, integrate_through, Direction, Orbit, OrbitLimit, OrbitOptions, OrbitSample,
    SampleMode,
};

use crate::error::{Error, Result};
use crate::prescribed::{partial_moment, zeros_and_signs, PrescribedFunction, Sign, Zero};

/// Default relative tolerance for deciding that `𝔎` vanishes.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub x: f64,
    pub theta: f64,
}

impl PhasePoint {
    pub fn new(x: f64, theta: f64) -> Self {
        Self { x, theta }
    }

    /// The angle function `ν = cos θ`.
    pub fn nu(&self) -> f64 {
        self.theta.cos()
    }

    /// Image under the reflection `(x, θ) ↦ (x, π − θ)`.
    pub fn reflected(&self) -> Self {
        Self {
            x: self.x,
            theta: PI - self.theta,
        }
    }
}

/// `(x′, θ′)` at an interior point.
pub fn vector_field(k: &PrescribedFunction, p: PhasePoint) -> Result<(f64, f64)> {
    if !(p.theta > 0.0 && p.theta < PI) {
        return Err(Error::SingularBoundary(p.theta));
    }
    let nu = p.theta.cos();
    let kv = k.evaluate(nu)?;
    Ok((nu, p.x * kv / p.theta.sin()))
}

/// `Φ(x, θ) = x²/2 + ∫₀^{cos θ} t/𝔎(t) dt`.
pub fn conserved_quantity(k: &PrescribedFunction, p: PhasePoint) -> Result<f64> {
    let c = p.theta.cos();
    match partial_moment(k, c) {
        Ok(m) => Ok(0.5 * p.x * p.x + m),
        Err(Error::Precondition(_)) => {
            let profile = zeros_and_signs(k, 1e-12)?;
            let y = profile
                .zeros_inside(0.0, c)
                .first()
                .map(|z| z.lo().clamp(c.min(0.0), c.max(0.0)))
                .unwrap_or(c);
            Err(Error::UndefinedFirstIntegral(y))
        }
        Err(Error::Divergent { .. }) => {
            let y = if k.value(0.0).abs() < k.value(c).abs() { 0.0 } else { c };
            Err(Error::UndefinedFirstIntegral(y))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityRegion {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub sign_dx: Sign,
    pub sign_dtheta: Sign,
}

impl MonotonicityRegion {
    pub fn contains(&self, theta: f64) -> bool {
        theta > self.theta_lo && theta < self.theta_hi
    }
}

/// Components of `(0, π)` cut by `θ = π/2` and the zero lines of `𝔎∘cos`,
/// each with the signs of `x′` and `θ′` (for `x > 0`).
pub fn monotonicity_regions(k: &PrescribedFunction) -> Result<Vec<MonotonicityRegion>> {
    let profile = zeros_and_signs(k, 1e-12)?;
    let (ylo, yhi) = profile.domain;
    // θ-interval covered by the domain of 𝔎
    let (tlo, thi) = (yhi.clamp(-1.0, 1.0).acos(), ylo.clamp(-1.0, 1.0).acos());
    let mut cuts = vec![tlo, thi];
    if FRAC_PI_2 > tlo && FRAC_PI_2 < thi {
        cuts.push(FRAC_PI_2);
    }
    for y in profile.zero_points() {
        let t = y.clamp(-1.0, 1.0).acos();
        if t > tlo && t < thi {
            cuts.push(t);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|b, a| (*b - *a).abs() <= 1e-14);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let y = mid.cos();
        if profile.vanishes_at(y, 0.0) {
            continue;
        }
        let Some(sign_dtheta) = Sign::of(k.value(y)) else {
            continue;
        };
        let sign_dx = if mid < FRAC_PI_2 {
            Sign::Positive
        } else {
            Sign::Negative
        };
        out.push(MonotonicityRegion {
            theta_lo: a,
            theta_hi: b,
            sign_dx,
            sign_dtheta,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecialOrbit {
    /// Horizontal line `θ = θ₀`: a flat cone with constant angle function.
    Cone { theta0: f64 },
    /// `𝔎` vanishes on a whole band: every horizontal line in it is a cone.
    ConeBand { theta_lo: f64, theta_hi: f64 },
    /// Every horizontal line is an orbit (`𝔎 ≡ 0`).
    AllHorizontalLines,
    /// The line of equilibria `θ = π/2` (flat cylinders).
    CylinderLine,
    /// The boundary `θ = 0` (horizontal plane, upward normal).
    PlaneTop,
    /// The boundary `θ = π` (horizontal plane, downward normal).
    PlaneBottom,
}

/// Orbits read off from the zeros of `𝔎`.
pub fn special_orbits(k: &PrescribedFunction) -> Result<Vec<SpecialOrbit>> {
    let profile = zeros_and_signs(k, 1e-12)?;
    let (ylo, yhi) = profile.domain;
    let mut out = Vec::new();
    let whole = profile
        .zeros
        .iter()
        .any(|z| matches!(z, Zero::Interval { lo, hi } if *lo <= ylo && *hi >= yhi));
    if whole {
        out.push(SpecialOrbit::AllHorizontalLines);
    }
    let at = |y: f64| profile.vanishes_at(y, 1e-12);
    for z in &profile.zeros {
        match *z {
            Zero::Point { y, .. } => {
                let t = y.clamp(-1.0, 1.0).acos();
                if y.abs() > 1e-12 && y.abs() < 1.0 - 1e-12 {
                    out.push(SpecialOrbit::Cone { theta0: t });
                }
            }
            Zero::Interval { lo, hi } if !whole => out.push(SpecialOrbit::ConeBand {
                theta_lo: hi.clamp(-1.0, 1.0).acos(),
                theta_hi: lo.clamp(-1.0, 1.0).acos(),
            }),
            Zero::Interval { .. } => {}
        }
    }
    if k.in_domain(0.0) && at(0.0) {
        out.push(SpecialOrbit::CylinderLine);
    }
    if k.in_domain(1.0) && at(1.0) {
        out.push(SpecialOrbit::PlaneTop);
    }
    if k.in_domain(-1.0) && at(-1.0) {
        out.push(SpecialOrbit::PlaneBottom);
    }
    Ok(out)
}

/// Largest `|𝔎|` over its domain, used to scale "vanishes" decisions.
pub(crate) fn curvature_scale(k: &PrescribedFunction) -> f64 {
    let (lo, hi) = k.domain();
    let m = (0..=256)
        .map(|i| k.value(lo + (hi - lo) * i as f64 / 256.0).abs())
        .fold(0.0f64, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_field_examples() {
        let (dx, dt) = vector_field(&PrescribedFunction::constant(1.0), PhasePoint::new(1.0, FRAC_PI_2)).unwrap();
        assert!(dx.abs() < 1e-16 && (dt - 1.0).abs() < 1e-15);
        let (dx, dt) = vector_field(&PrescribedFunction::power(4.0), PhasePoint::new(3.0, FRAC_PI_2)).unwrap();
        assert!(dx.abs() < 1e-16 && dt.abs() < 1e-60);
        let (dx, dt) = vector_field(&PrescribedFunction::constant(-1.0), PhasePoint::new(2.0, PI / 4.0)).unwrap();
        assert!((dx - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((dt + 8f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            vector_field(&PrescribedFunction::constant(1.0), PhasePoint::new(1.0, 0.0)),
            Err(Error::SingularBoundary(_))
        ));
    }

    #[test]
    fn conserved_quantity_examples() {
        let one = PrescribedFunction::constant(1.0);
        let v = conserved_quantity(&one, PhasePoint::new(0.0, 0.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let w = conserved_quantity(&one, PhasePoint::new(1.0, FRAC_PI_2)).unwrap();
        assert!((w - v).abs() < 1e-15);
        let m = conserved_quantity(&PrescribedFunction::constant(-1.0), PhasePoint::new(0.0, FRAC_PI_2)).unwrap();
        assert!(m.abs() < 1e-15);
    }

    #[test]
    fn conserved_quantity_undefined_across_zero() {
        let k = PrescribedFunction::affine(1.0, -0.5);
        match conserved_quantity(&k, PhasePoint::new(1.0, 0.1)) {
            Err(Error::UndefinedFirstIntegral(y)) => assert!((y - 0.5).abs() < 1e-9),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn regions_for_constant_curvature() {
        let r = monotonicity_regions(&PrescribedFunction::constant(1.0)).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].sign_dx, r[0].sign_dtheta), (Sign::Positive, Sign::Positive));
        assert_eq!((r[1].sign_dx, r[1].sign_dtheta), (Sign::Negative, Sign::Positive));
        let r = monotonicity_regions(&PrescribedFunction::constant(-1.0)).unwrap();
        assert_eq!((r[0].sign_dx, r[0].sign_dtheta), (Sign::Positive, Sign::Negative));
        assert_eq!((r[1].sign_dx, r[1].sign_dtheta), (Sign::Negative, Sign::Negative));
    }

    #[test]
    fn regions_cut_by_cone_line() {
        let r = monotonicity_regions(&PrescribedFunction::affine(1.0, -0.5)).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[0].theta_hi - PI / 3.0).abs() < 1e-12);
        assert!((r[1].theta_hi - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(r[0].sign_dtheta, Sign::Positive);
        assert_eq!(r[1].sign_dtheta, Sign::Negative);
        assert_eq!(r[2].sign_dtheta, Sign::Negative);
    }

    #[test]
    fn special_orbit_examples() {
        let s = special_orbits(&PrescribedFunction::constant(0.0)).unwrap();
        for want in [
            SpecialOrbit::AllHorizontalLines,
            SpecialOrbit::CylinderLine,
            SpecialOrbit::PlaneTop,
            SpecialOrbit::PlaneBottom,
        ] {
            assert!(s.contains(&want), "{s:?}");
        }
        let s = special_orbits(&PrescribedFunction::polynomial(vec![-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(s, vec![SpecialOrbit::PlaneTop, SpecialOrbit::PlaneBottom]);
        let s = special_orbits(&PrescribedFunction::affine(1.0, -0.5)).unwrap();
        assert_eq!(s.len(), 1);
        assert!(matches!(s[0], SpecialOrbit::Cone { theta0 } if (theta0 - PI / 3.0).abs() < 1e-12));
    }
}
