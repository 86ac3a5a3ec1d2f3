//! The singular problem at the rotation axis.
//!
//! Near the axis the surface is a rotational graph `z = u(x)` with
//! `u′(0) = 0`. Writing `g = u′²`, the curvature equation becomes the fixed
//! point problem
//!
//! ```text
//! f(g(x)) = ∫₀ˣ t·φ(g(t)) dt,   f(y) = y/(1+y),   φ(y) = 2·𝔎(1/√(1+y)),
//! ```
//!
//! solved here by Picard iteration on a uniform grid over `[0, δ]`, shrinking
//! `δ` until the iteration contracts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::hermite;
use crate::phaseplane::{OrbitLimit, PhasePoint};
use crate::prescribed::PrescribedFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Normal `e₃` at the axis; the graph rises (`u ≥ 0`).
    Upward,
    /// Normal `−e₃` at the axis; the graph descends.
    Downward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    /// `g₀ ≡ 0`, or `g₀ = x²` when `𝔎(1) = 0` (which makes `g ≡ 0` a
    /// second, trivial fixed point).
    Auto,
    Zero,
    Constant(f64),
    /// `g₀(x) = c·x²`.
    Quadratic(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    pub delta_init: f64,
    /// Number of grid intervals on `[0, δ]`.
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub initial_guess: InitialGuess,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            delta_init: 0.25,
            grid: 2048,
            tol: 1e-13,
            max_iter: 500,
            initial_guess: InitialGuess::Auto,
        }
    }
}

const DELTA_FLOOR: f64 = 1e-8;
const RANGE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSolution {
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    /// Arclength of the graph from the axis.
    pub arclength: Vec<f64>,
    pub delta: f64,
    pub iterations: usize,
    pub contraction_estimate: f64,
    pub orientation: Orientation,
    #[serde(skip)]
    k: PrescribedFunction,
}

impl RadialSolution {
    /// `u` at any `x ∈ [0, δ]` by cubic Hermite interpolation.
    pub fn u_at(&self, x: f64) -> f64 {
        let i = crate::numeric::bracket(&self.grid, x);
        hermite(
            self.grid[i],
            self.grid[i + 1],
            self.u[i],
            self.u[i + 1],
            self.u_prime[i],
            self.u_prime[i + 1],
            x,
        )
    }

    /// `sup |f(g) − ∫₀ˣ t·φ(g)|` over the grid.
    pub fn residual(&self) -> f64 {
        let h = self.delta / (self.grid.len() - 1) as f64;
        let phi_k = |g: f64| 2.0 * self.k.value(1.0 / (1.0 + g).sqrt());
        let integrand: Vec<f64> = self.grid.iter().zip(&self.g).map(|(x, g)| x * phi_k(*g)).collect();
        let int = cumulative(&integrand, h);
        self.g
            .iter()
            .zip(&int)
            .map(|(g, i)| (g / (1.0 + g) - i).abs())
            .fold(0.0, f64::max)
    }

    /// True when the solution is the flat plane `g ≡ 0`.
    pub fn is_plane(&self) -> bool {
        self.g.iter().all(|&g| g == 0.0)
    }

    /// The prescribed function the solution was computed for (already
    /// reflected for downward solutions).
    pub fn prescribed(&self) -> &PrescribedFunction {
        &self.k
    }
}

/// Continuation start for the phase plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Handoff {
    pub point: PhasePoint,
    pub orientation: Orientation,
    pub limit_start: OrbitLimit,
    /// Arclength from the axis to `point`.
    pub arclength: f64,
    /// Set when `g ≡ 0`: the surface is a horizontal plane.
    pub degenerate: Option<String>,
}

/// Cumulative integral on a uniform grid, third-order accurate per step.
fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            out[1] = 0.5 * h * (f[0] + f[1]);
        }
        return out;
    }
    out[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    for i in 1..n - 1 {
        out[i + 1] = out[i] + h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
    }
    out
}

/// `u″(0) = √𝔎(1)` on the upward branch.
pub fn axis_second_derivative(k: &PrescribedFunction) -> Result<f64> {
    let k1 = k.evaluate(1.0)?;
    if k1 < 0.0 {
        return Err(Error::Precondition(format!(
            "the axis problem needs 𝔎(1) ≥ 0, got {k1}"
        )));
    }
    Ok(k1.sqrt())
}

enum Attempt {
    Converged(Vec<f64>, usize, f64),
    Shrink,
}

fn iterate(k: &PrescribedFunction, delta: f64, opts: &PicardOptions, k1_zero: bool) -> Attempt {
    let n = opts.grid;
    let h = delta / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let mut g: Vec<f64> = match opts.initial_guess {
        InitialGuess::Zero => vec![0.0; n + 1],
        InitialGuess::Constant(c) => {
            let mut v = vec![c.max(0.0); n + 1];
            v[0] = 0.0;
            v
        }
        InitialGuess::Quadratic(c) => xs.iter().map(|x| c.max(0.0) * x * x).collect(),
        InitialGuess::Auto if k1_zero => xs.iter().map(|x| x * x).collect(),
        InitialGuess::Auto => vec![0.0; n + 1],
    };
    let mut prev_diff = f64::INFINITY;
    let mut ratio: f64 = 0.0;
    for it in 1..=opts.max_iter {
        let integrand: Vec<f64> = xs
            .iter()
            .zip(&g)
            .map(|(x, g)| x * 2.0 * k.value(1.0 / (1.0 + g).sqrt()))
            .collect();
        let int = cumulative(&integrand, h);
        if int.iter().any(|&v| !(v <= 1.0 - RANGE_GUARD)) {
            return Attempt::Shrink;
        }
        let next: Vec<f64> = int.iter().map(|&z| (z / (1.0 - z)).max(0.0)).collect();
        let diff = next.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        g = next;
        if diff <= opts.tol {
            return Attempt::Converged(g, it, ratio);
        }
        if prev_diff.is_finite() && prev_diff > 0.0 {
            ratio = diff / prev_diff;
            if ratio >= 0.9 && diff > 1e3 * opts.tol {
                return Attempt::Shrink;
            }
        }
        prev_diff = diff;
    }
    Attempt::Shrink
}

/// Picard iteration for the upward axis solution.
pub fn picard_solve(k: &PrescribedFunction, opts: &PicardOptions) -> Result<RadialSolution> {
    let k1 = k.evaluate(1.0)?;
    if k1 < 0.0 {
        return Err(Error::Precondition(format!(
            "the axis problem needs 𝔎(1) ≥ 0, got {k1}"
        )));
    }
    if opts.grid < 4 || !(opts.delta_init > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(
            "radial options need grid ≥ 4, δ > 0, tol > 0".into(),
        ));
    }
    let scale = crate::phaseplane::curvature_scale(k);
    let k1_zero = k1.abs() <= 1e-12 * scale;
    let mut delta = opts.delta_init;
    loop {
        if delta < DELTA_FLOOR {
            return Err(Error::NoContraction(DELTA_FLOOR));
        }
        match iterate(k, delta, opts, k1_zero) {
            Attempt::Shrink => delta *= 0.5,
            Attempt::Converged(g, iterations, ratio) => {
                let n = opts.grid;
                let h = delta / n as f64;
                let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
                let u_prime: Vec<f64> = g.iter().map(|v| v.sqrt()).collect();
                let u = cumulative(&u_prime, h);
                let ds: Vec<f64> = g.iter().map(|v| (1.0 + v).sqrt()).collect();
                let arclength = cumulative(&ds, h);
                return Ok(RadialSolution {
                    grid,
                    g,
                    u,
                    u_prime,
                    arclength,
                    delta,
                    iterations,
                    contraction_estimate: ratio,
                    orientation: Orientation::Upward,
                    k: k.clone(),
                });
            }
        }
    }
}

/// Phase-plane point at the end of the radial solution.
pub fn handoff(sol: &RadialSolution) -> Handoff {
    let n = sol.grid.len() - 1;
    let theta = sol.u_prime[n].atan();
    let (point, limit_start) = match sol.orientation {
        Orientation::Upward => (PhasePoint::new(sol.delta, theta), OrbitLimit::AxisOrthogonalTop),
        Orientation::Downward => (
            PhasePoint::new(sol.delta, std::f64::consts::PI - theta),
            OrbitLimit::AxisOrthogonalBottom,
        ),
    };
    Handoff {
        point,
        orientation: sol.orientation,
        limit_start,
        arclength: sol.arclength[n],
        degenerate: sol.is_plane().then(|| "plane, no interior continuation".to_string()),
    }
}

/// Axis solution with downward normal: solved for `y ↦ 𝔎(−y)` and mapped
/// back by `(x, θ) ↦ (x, π − θ)`.
pub fn downward_solve(k: &PrescribedFunction, opts: &PicardOptions) -> Result<(RadialSolution, Handoff)> {
    let km1 = k.evaluate(-1.0)?;
    if km1 < 0.0 {
        return Err(Error::Precondition(format!(
            "the downward axis problem needs 𝔎(−1) ≥ 0, got {km1}"
        )));
    }
    let mut sol = picard_solve(&k.reflect(), opts)?;
    sol.orientation = Orientation::Downward;
    let h = handoff(&sol);
    Ok((sol, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_for_zero_curvature() {
        let sol = picard_solve(&PrescribedFunction::constant(0.0), &PicardOptions::default()).unwrap();
        assert!(sol.is_plane());
        assert_eq!(sol.delta, 0.25);
        assert!(handoff(&sol).degenerate.is_some());
    }

    #[test]
    fn quartic_power_gives_parabola() {
        let sol = picard_solve(&PrescribedFunction::power(4.0), &PicardOptions::default()).unwrap();
        let err = sol
            .grid
            .iter()
            .zip(&sol.g)
            .map(|(x, g)| (g - x * x).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        assert!(sol.residual() < 1e-12);
        assert!((sol.u_at(0.1) - 0.005).abs() < 1e-10);
    }

    #[test]
    fn unit_sphere_cap() {
        let sol = picard_solve(&PrescribedFunction::constant(1.0), &PicardOptions::default()).unwrap();
        for (x, g) in sol.grid.iter().zip(&sol.g) {
            assert!((g - x * x / (1.0 - x * x)).abs() < 1e-10);
        }
        let h = handoff(&sol);
        assert!((h.point.theta - sol.delta.asin()).abs() < 1e-10);
        assert_eq!(h.limit_start, OrbitLimit::AxisOrthogonalTop);
    }

    #[test]
    fn second_derivative_at_axis() {
        assert_eq!(axis_second_derivative(&PrescribedFunction::constant(4.0)).unwrap(), 2.0);
        assert!(axis_second_derivative(&PrescribedFunction::constant(-1.0)).is_err());
        assert!(picard_solve(&PrescribedFunction::constant(-1.0), &PicardOptions::default()).is_err());
    }

    #[test]
    fn downward_mirror_and_precondition() {
        let (sol, h) = downward_solve(&PrescribedFunction::constant(1.0), &PicardOptions::default()).unwrap();
        assert_eq!(sol.orientation, Orientation::Downward);
        assert!((h.point.theta - (std::f64::consts::PI - sol.delta.asin())).abs() < 1e-10);
        assert_eq!(h.limit_start, OrbitLimit::AxisOrthogonalBottom);
        assert!(downward_solve(&PrescribedFunction::affine(1.0, 2.0), &PicardOptions::default()).is_ok());
        assert!(matches!(
            downward_solve(&PrescribedFunction::affine(1.0, -1.0), &PicardOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cumulative_rule_is_third_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let f: Vec<f64> = (0..=n).map(|i| (i as f64 * h).exp()).collect();
            (cumulative(&f, h)[n] - (1f64.exp() - 1.0)).abs()
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 < 1e-6, "{e1}");
        assert!((e1 / e2).log2() > 2.8, "{e1} {e2}");
    }
}
