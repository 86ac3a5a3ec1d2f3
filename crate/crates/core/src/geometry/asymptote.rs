use serde::Serialize;

use super::profile_from_orbit;
use crate::error::{Error, Result};
use crate::numeric::linear_fit;
use crate::phaseplane::{Orbit, OrbitLimit};
use crate::prescribed::{n_of_alpha, FunctionKind, PrescribedFunction};

/// Fits with an RMS residual above this are not reported as a growth exponent.
const FIT_RESIDUAL_MAX: f64 = 1e-3;

/// Behaviour of the graph continued from the axis as `x` grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymptoteReport {
    /// `u ~ C·x^m`; `exponent` is `None` when the log–log fit is poor.
    Entire {
        exponent: Option<f64>,
        fit_residual: f64,
        /// `𝒏(α)` for power functions with `α > 2`.
        expected: Option<f64>,
    },
    CylinderConvergent {
        radius: f64,
    },
    ConeConvergent {
        theta0: f64,
    },
}

/// Summarize the far end of the orbit leaving the axis upward.
pub fn asymptote_report(k: &PrescribedFunction, gamma_plus: &Orbit) -> Result<AsymptoteReport> {
    match &gamma_plus.limit_end {
        OrbitLimit::Equilibrium { x0 } => Ok(AsymptoteReport::CylinderConvergent { radius: *x0 }),
        OrbitLimit::ConeAsymptote { theta0 } => Ok(AsymptoteReport::ConeConvergent { theta0: *theta0 }),
        OrbitLimit::EntireGraphDivergence => {
            let profile = profile_from_orbit(gamma_plus, 0.0)?;
            let x_end = profile.samples.last().map_or(0.0, |p| p.x);
            let (lx, lz): (Vec<f64>, Vec<f64>) = profile
                .samples
                .iter()
                .filter(|p| p.x >= 0.1 * x_end && p.z > 0.0)
                .map(|p| (p.x.ln(), p.z.ln()))
                .unzip();
            if lx.len() < 3 {
                return Err(Error::Accuracy {
                    estimate: f64::NAN,
                    error: f64::INFINITY,
                });
            }
            let (slope, _, rms) = linear_fit(&lx, &lz);
            let expected = match k.kind() {
                FunctionKind::Power { alpha, .. } if *alpha > 2.0 => n_of_alpha(*alpha).ok(),
                FunctionKind::PolyDual(n) => Some(*n as f64),
                _ => None,
            };
            Ok(AsymptoteReport::Entire {
                exponent: (rms < FIT_RESIDUAL_MAX).then_some(slope),
                fit_residual: rms,
                expected,
            })
        }
        OrbitLimit::Unresolved { reason } => Err(Error::Integration(format!("unresolved orbit: {reason}"))),
        other => Err(Error::Precondition(format!(
            "no asymptote for an orbit ending in {}",
            other.name()
        ))),
    }
}
