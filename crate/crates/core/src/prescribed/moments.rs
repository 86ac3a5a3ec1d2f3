use super::{zeros_and_signs, PrescribedFunction};
use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::quadrature::{integrate, integrate_improper, QuadOptions, SingularEnd};

const MOMENT_SCAN: usize = 256;

fn moment_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `∫₋₁¹ y/𝔎(y) dy`, defined for strictly positive `𝔎`.
///
/// Vanishing of this integral is the closing condition for a convex
/// rotational sphere.
pub fn minkowski_integral(k: &PrescribedFunction) -> Result<f64> {
    let profile = zeros_and_signs(k, 1e-12)?;
    if !profile.is_strictly_positive() || profile.domain != (-1.0, 1.0) {
        return Err(Error::Precondition(
            "the prescribed function must be strictly positive on [-1, 1]".into(),
        ));
    }
    let r = integrate(|y| y / k.value(y), -1.0, 1.0, moment_options())?;
    if r.error > 1e-10 * r.value.abs().max(1e-3) {
        return Err(Error::Accuracy {
            estimate: r.value,
            error: r.error,
        });
    }
    Ok(r.value)
}

/// Oriented moment `∫₀ᶜ t/𝔎(t) dt`.
///
/// A zero of `𝔎` at `0` or at `c` is treated as an improper endpoint; a
/// zero strictly between them is a precondition failure.
pub fn partial_moment(k: &PrescribedFunction, c: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&c) || !k.in_domain(c) {
        return Err(Error::Domain(c));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let f = |t: f64| t / k.value(t);
    let k0 = k.value(0.0);
    let kc = k.value(c);
    let samples: Vec<f64> = (0..=MOMENT_SCAN)
        .map(|i| k.value(c * i as f64 / MOMENT_SCAN as f64))
        .collect();
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tiny = 1e-13 * scale;
    // a monotone approach to an endpoint zero is not an interior zero
    for i in 1..MOMENT_SCAN {
        let t = c * i as f64 / MOMENT_SCAN as f64;
        let v = samples[i].abs();
        let local_min = v <= samples[i - 1].abs() && v <= samples[i + 1].abs();
        if v == 0.0 || (v <= tiny && local_min) {
            return Err(vanishes_inside(t, c));
        }
    }
    for i in 0..MOMENT_SCAN {
        let (a, b) = (samples[i], samples[i + 1]);
        if a.abs() > tiny && b.abs() > tiny && (a < 0.0) != (b < 0.0) {
            let t0 = c * i as f64 / MOMENT_SCAN as f64;
            let t1 = c * (i + 1) as f64 / MOMENT_SCAN as f64;
            let y = bisect(|t| k.value(t), t0, t1, 1e-14);
            return Err(vanishes_inside(y, c));
        }
    }
    let opts = moment_options();
    let zero_at_origin = k0.abs() <= tiny;
    let zero_at_end = kc.abs() <= tiny;
    let r = match (zero_at_origin, zero_at_end) {
        (false, false) => integrate(f, 0.0, c, opts)?,
        (true, false) => integrate_improper(f, 0.0, c, SingularEnd::Lower, opts)?,
        (false, true) => integrate_improper(f, 0.0, c, SingularEnd::Upper, opts)?,
        (true, true) => {
            let m = 0.5 * c;
            let a = integrate_improper(f, 0.0, m, SingularEnd::Lower, opts)?;
            let b = integrate_improper(f, m, c, SingularEnd::Upper, opts)?;
            crate::quadrature::QuadResult {
                value: a.value + b.value,
                error: a.error + b.error,
                evaluations: a.evaluations + b.evaluations,
            }
        }
    };
    if r.error > 1e-10 * r.value.abs().max(1e-3) {
        return Err(Error::Accuracy {
            estimate: r.value,
            error: r.error,
        });
    }
    Ok(r.value)
}

fn vanishes_inside(y: f64, c: f64) -> Error {
    Error::Precondition(format!(
        "prescribed function vanishes at y = {y} inside the moment range [0, {c}]"
    ))
}

/// `𝜶(n) = 2n/(n−1)` for `n ≥ 2`.
pub fn alpha_of_n(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n must be at least 2, got {n}")));
    }
    Ok(2.0 * n as f64 / (n - 1) as f64)
}

/// `𝒏(α) = α/(α−2)` for `α > 2`, the inverse of [`alpha_of_n`].
pub fn n_of_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must exceed 2, got {alpha}")));
    }
    Ok(alpha / (alpha - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_examples() {
        assert!(minkowski_integral(&PrescribedFunction::constant(1.0)).unwrap().abs() < 1e-15);
        let v = minkowski_integral(&PrescribedFunction::affine(1.0, 2.0)).unwrap();
        assert!((v - (2.0 - 2.0 * 3f64.ln())).abs() < 1e-12);
        let even = minkowski_integral(&PrescribedFunction::polynomial(vec![1.0, 0.0, 1.0])).unwrap();
        assert!(even.abs() < 1e-14);
    }

    #[test]
    fn minkowski_requires_positivity() {
        assert!(matches!(
            minkowski_integral(&PrescribedFunction::affine(1.0, -0.5)),
            Err(Error::Precondition(_))
        ));
        assert!(minkowski_integral(&PrescribedFunction::constant(-1.0)).is_err());
    }

    #[test]
    fn partial_moment_examples() {
        assert!((partial_moment(&PrescribedFunction::constant(1.0), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((partial_moment(&PrescribedFunction::constant(-1.0), 1.0).unwrap() + 0.5).abs() < 1e-15);
        let v = partial_moment(&PrescribedFunction::affine(1.0, 2.0), 1.0).unwrap();
        assert!((v - (1.0 - 2.0 * 1.5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn partial_moment_names_interior_zero() {
        let err = partial_moment(&PrescribedFunction::affine(1.0, -0.5), 1.0).unwrap_err();
        match err {
            Error::Precondition(msg) => assert!(msg.contains("0.5"), "{msg}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn improper_endpoints() {
        // 𝔎 = y: ∫₀ᶜ t/t = c
        let v = partial_moment(&PrescribedFunction::power(1.0), 0.7).unwrap();
        assert!((v - 0.7).abs() < 1e-10);
        // 𝔎 = 1 − y²: −½ ln(1 − c²)
        let k = PrescribedFunction::polynomial(vec![1.0, 0.0, -1.0]);
        let c = 0.9;
        let v = partial_moment(&k, c).unwrap();
        assert!((v + 0.5 * (1.0 - c * c).ln()).abs() < 1e-11);
        assert!(matches!(partial_moment(&k, 1.0), Err(Error::Divergent { .. })));
        assert!(matches!(
            partial_moment(&PrescribedFunction::power(4.0), 0.5),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn duality_of_exponents() {
        assert_eq!(alpha_of_n(2).unwrap(), 4.0);
        assert_eq!(n_of_alpha(4.0).unwrap(), 2.0);
        assert!((n_of_alpha(alpha_of_n(3).unwrap()).unwrap() - 3.0).abs() < 1e-12);
        assert!(alpha_of_n(1).is_err());
        assert!(n_of_alpha(2.0).is_err());
    }
}
