use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{dopri5, Control, OdeOptions};
use crate::quadrature::{integrate, QuadOptions};

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must be finite and ≥ 0, got {alpha}"
        )));
    }
    Ok(())
}

/// Radius `√(2R_α)`, `R_α = 1/(2 − α)`, of the limit cylinder when `α < 2`.
pub fn cylinder_radius(alpha: f64) -> Option<f64> {
    (alpha < 2.0).then(|| (2.0 / (2.0 - alpha)).sqrt())
}

/// `u′² = F(x; α) − 1` for the rotational graph with `𝔎(ν) = ν^α` through
/// the axis, from the separable reduction `dF/dx = 2x F^{2 − α/2}`.
pub fn u_prime_sq(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let x2 = x * x;
    let f = if alpha > 2.0 {
        let a = alpha - 2.0;
        (0.5 * a * x2 + 1.0).powf(2.0 / a)
    } else if alpha == 2.0 {
        x2.exp()
    } else {
        let r2 = 2.0 / (2.0 - alpha);
        if x2 >= r2 {
            return Err(Error::OutOfDomain(format!(
                "x = {x} is beyond the limit cylinder of radius {}",
                r2.sqrt()
            )));
        }
        (r2 / (r2 - x2)).powf(2.0 / (2.0 - alpha))
    };
    Ok(f - 1.0)
}

/// The same quantity as printed in the source formulas: `e^{x²/2}` for
/// `α = 2` and exponent `(2 − α)/2` for `α < 2`. Kept for adjudication only.
pub fn printed_u_prime_sq(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let x2 = x * x;
    if alpha > 2.0 {
        return u_prime_sq(alpha, x);
    }
    if alpha == 2.0 {
        return Ok((0.5 * x2).exp() - 1.0);
    }
    let r2 = 2.0 / (2.0 - alpha);
    if x2 >= r2 {
        return Err(Error::OutOfDomain(format!("x = {x} is beyond radius {}", r2.sqrt())));
    }
    Ok((r2 / (r2 - x2)).powf((2.0 - alpha) / 2.0) - 1.0)
}

/// `(u(x), u′(x))` with `u = ∫₀ˣ √(F − 1)`.
pub fn closed_form_u_alpha(alpha: f64, x: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0) {
        return Err(Error::InvalidInput(format!("x must be ≥ 0, got {x}")));
    }
    let up = u_prime_sq(alpha, x)?.max(0.0).sqrt();
    if x == 0.0 {
        return Ok((0.0, 0.0));
    }
    let integrand = |t: f64| u_prime_sq(alpha, t).map_or(f64::NAN, |v| v.max(0.0).sqrt());
    let u = integrate(integrand, 0.0, x, QuadOptions::relative(1e-12))?.value;
    Ok((u, up))
}

/// Direct integration of `q′ = 2x(1 − q)^{α/2}`, `q = u′²/(1 + u′²)`,
/// from `q(0) = 0`; returns `u′² = q/(1 − q)` at `x`.
pub fn oracle_u_prime_sq(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let opts = OdeOptions {
        rtol: 1e-13,
        atol: 1e-15,
        t_end: Some(x),
        ..OdeOptions::default()
    };
    let half = 0.5 * alpha;
    let out = dopri5(
        |t, q: &[f64; 1]| {
            let r = 1.0 - q[0];
            (r > 0.0).then(|| [2.0 * t * r.powf(half)])
        },
        0.0,
        [0.0],
        1.0,
        &opts,
        |_| Control::Continue,
    );
    if (out.t - x).abs() > 1e-12 * x.max(1.0) {
        return Err(Error::Integration(format!(
            "oracle stopped at x = {} ({:?})",
            out.t, out.stop
        )));
    }
    // 1 − q loses digits as q → 1; integrate log(1 − q) would be better but
    // the adjudication range keeps q well below 1
    let q = out.y[0];
    Ok(q / (1.0 - q))
}

/// `(n − 1)·n^{2/(n − 1)}`, the limit of `𝔎ₙ(ν)/ν^{2n/(n−1)}` as `ν → 0`.
pub fn kn_limit_ratio(n: u32) -> f64 {
    let nf = n as f64;
    (nf - 1.0) * nf.powf(2.0 / (nf - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnDirect {
    pub n: u32,
    pub nu: f64,
    /// By eliminating `x` from `ν(x)` in `K = n²(n−1)x^{2(n−2)}ν⁴`.
    pub value: f64,
    /// Gauss curvature of the rotated graph `u = xⁿ` at the same point.
    pub direct: f64,
    pub residual: f64,
    /// Printed formula `(n−1)y^{2n/(n−1)}(1−y²)^{(n−2)/(n−1)}`.
    pub printed: f64,
}

/// Gauss curvature of the rotated graph `u = xⁿ` as a function of the
/// angle function, computed two ways.
pub fn kn_direct(n: u32, nu: f64) -> Result<KnDirect> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n must be ≥ 2, got {n}")));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidInput(format!("nu must be in (0, 1], got {nu}")));
    }
    let nf = n as f64;
    let x = ((nu.powi(-2) - 1.0) / (nf * nf)).powf(1.0 / (2.0 * (nf - 1.0)));
    let value = nf * nf * (nf - 1.0) * x.powf(2.0 * (nf - 2.0)) * nu.powi(4);
    let direct = if x == 0.0 {
        // K(0) = u″(0)²
        if n == 2 {
            4.0
        } else {
            0.0
        }
    } else {
        let up = nf * x.powf(nf - 1.0);
        let upp = nf * (nf - 1.0) * x.powf(nf - 2.0);
        up * upp / (x * (1.0 + up * up).powi(2))
    };
    let printed = (nf - 1.0) * nu.powf(2.0 * nf / (nf - 1.0)) * (1.0 - nu * nu).powf((nf - 2.0) / (nf - 1.0));
    Ok(KnDirect {
        n,
        nu,
        value,
        direct,
        residual: (value - direct).abs(),
        printed,
    })
}
