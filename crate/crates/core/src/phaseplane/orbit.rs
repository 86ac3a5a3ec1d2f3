use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{curvature_scale, FirstIntegral, PhasePoint, ZERO_TOL};
use crate::error::{Error, Result};
use crate::ode::{dopri5, Control, DenseSegment, OdeOptions, StopReason};
use crate::prescribed::{partial_moment, zeros_and_signs, PrescribedFunction};
use crate::quadrature::{integrate, QuadOptions};
use crate::radial::{downward_solve, handoff, picard_solve, PicardOptions, RadialSolution};

/// How an orbit ends (or begins, read backward in `s`).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitLimit {
    /// Reaches the axis at a non-orthogonal angle in finite arclength.
    AxisCusp {
        theta0: f64,
    },
    /// Limit `(0, 0)`: meets the axis orthogonally, upward normal.
    AxisOrthogonalTop,
    /// Limit `(0, π)`: meets the axis orthogonally, downward normal.
    AxisOrthogonalBottom,
    /// Limit `(x₀, 0)` at finite arclength.
    SingularCircleTheta0 {
        x0: f64,
    },
    /// Limit `(x₀, π)` at finite arclength.
    SingularCirclePi {
        x0: f64,
    },
    /// Converges to the rest point `(x₀, π/2)` as `s → ±∞`.
    Equilibrium {
        x0: f64,
    },
    /// `x → ∞` with `θ → θ₀`, a zero line of `𝔎∘cos`.
    ConeAsymptote {
        theta0: f64,
    },
    /// Converges to `(0, π/2)` as `s → ±∞`.
    AxisAsymptote,
    /// `x → ∞` with `θ → π/2` where `𝔎(0) = 0`.
    EntireGraphDivergence,
    Unresolved {
        reason: String,
    },
    /// The integration started here (interior point).
    Interior {
        x: f64,
        theta: f64,
    },
    /// Integration halted on a requested stop condition.
    Stopped {
        x: f64,
        theta: f64,
    },
}

impl OrbitLimit {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitLimit::AxisCusp { .. } => "axis_cusp",
            OrbitLimit::AxisOrthogonalTop => "axis_orthogonal_top",
            OrbitLimit::AxisOrthogonalBottom => "axis_orthogonal_bottom",
            OrbitLimit::SingularCircleTheta0 { .. } => "singular_circle_theta0",
            OrbitLimit::SingularCirclePi { .. } => "singular_circle_pi",
            OrbitLimit::Equilibrium { .. } => "equilibrium",
            OrbitLimit::ConeAsymptote { .. } => "cone_asymptote",
            OrbitLimit::AxisAsymptote => "axis_asymptote",
            OrbitLimit::EntireGraphDivergence => "entire_graph_divergence",
            OrbitLimit::Unresolved { .. } => "unresolved",
            OrbitLimit::Interior { .. } => "interior",
            OrbitLimit::Stopped { .. } => "stopped",
        }
    }

    pub fn is_unresolved(&self) -> bool {
        matches!(self, OrbitLimit::Unresolved { .. })
    }

    /// Image under `(x, θ, s) ↦ (x, π − θ, −s)`.
    pub fn reflected(&self) -> OrbitLimit {
        match self {
            OrbitLimit::AxisCusp { theta0 } => OrbitLimit::AxisCusp { theta0: PI - theta0 },
            OrbitLimit::AxisOrthogonalTop => OrbitLimit::AxisOrthogonalBottom,
            OrbitLimit::AxisOrthogonalBottom => OrbitLimit::AxisOrthogonalTop,
            OrbitLimit::SingularCircleTheta0 { x0 } => OrbitLimit::SingularCirclePi { x0: *x0 },
            OrbitLimit::SingularCirclePi { x0 } => OrbitLimit::SingularCircleTheta0 { x0: *x0 },
            OrbitLimit::ConeAsymptote { theta0 } => OrbitLimit::ConeAsymptote { theta0: PI - theta0 },
            OrbitLimit::Interior { x, theta } => OrbitLimit::Interior {
                x: *x,
                theta: PI - theta,
            },
            OrbitLimit::Stopped { x, theta } => OrbitLimit::Stopped {
                x: *x,
                theta: PI - theta,
            },
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Backward => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleMode {
    /// One sample per accepted integrator step.
    Steps,
    /// Samples every `h` of arclength (dense output), plus event samples.
    Uniform(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct OrbitOptions {
    /// Absolute and relative integrator tolerance.
    pub tol: f64,
    pub max_arclength: f64,
    pub max_steps: usize,
    /// Orbits with `x` beyond this are classified as escaping.
    pub x_max: f64,
    /// Distance from `θ ∈ {0, π}` at which integration stops and the
    /// endpoint is extrapolated.
    pub theta_min: f64,
    pub sample: SampleMode,
    /// Stop when `x` reaches this value.
    pub stop_at_x: Option<f64>,
    /// Stop at the first crossing of `θ = π/2`.
    pub stop_at_half_pi: bool,
    /// Relative threshold (against `max |𝔎|`) for deciding `𝔎 = 0`.
    pub zero_tol: f64,
    pub h_max: f64,
    /// Compute the first-integral drift after integration.
    pub track_drift: bool,
    pub picard: PicardOptions,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_arclength: 1e6,
            max_steps: 2_000_000,
            x_max: 1e3,
            theta_min: 1e-6,
            sample: SampleMode::Steps,
            stop_at_x: None,
            stop_at_half_pi: false,
            zero_tol: ZERO_TOL,
            h_max: f64::INFINITY,
            track_drift: true,
            picard: PicardOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitSample {
    pub s: f64,
    pub x: f64,
    pub theta: f64,
    pub dx_ds: f64,
    pub dtheta_ds: f64,
}

impl OrbitSample {
    pub fn point(&self) -> PhasePoint {
        PhasePoint::new(self.x, self.theta)
    }
}

/// Arclength-sampled orbit. Samples are stored in increasing `s`;
/// `limit_start` describes the low-`s` end and `limit_end` the high-`s` end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub samples: Vec<OrbitSample>,
    pub direction: Direction,
    pub limit_start: OrbitLimit,
    pub limit_end: OrbitLimit,
    /// `max |Φ − Φ₀|` over the samples where the first integral is defined.
    pub conserved_drift: Option<f64>,
    /// Extrapolated boundary point beyond the first sample.
    pub terminal_start: Option<PhasePoint>,
    /// Extrapolated boundary point beyond the last sample.
    pub terminal_end: Option<PhasePoint>,
    pub notes: Vec<String>,
    pub steps: usize,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &OrbitSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &OrbitSample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn arclength(&self) -> f64 {
        self.last().s - self.first().s
    }

    pub fn points(&self) -> Vec<PhasePoint> {
        self.samples.iter().map(|s| s.point()).collect()
    }

    /// The orbit of `y ↦ 𝔎(−y)` obtained by `(x, θ, s) ↦ (x, π − θ, −s)`.
    pub fn reflected(&self) -> Orbit {
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|p| OrbitSample {
                s: -p.s,
                x: p.x,
                theta: PI - p.theta,
                dx_ds: -p.dx_ds,
                dtheta_ds: p.dtheta_ds,
            })
            .collect();
        let direction = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
            Direction::Both => Direction::Both,
        };
        Orbit {
            samples,
            direction,
            limit_start: self.limit_end.reflected(),
            limit_end: self.limit_start.reflected(),
            conserved_drift: self.conserved_drift,
            terminal_start: self.terminal_end.map(|p| p.reflected()),
            terminal_end: self.terminal_start.map(|p| p.reflected()),
            notes: self.notes.clone(),
            steps: self.steps,
        }
    }

    /// Limit at the end reached by integrating in `direction` from the start.
    pub fn limit_toward(&self, direction: Direction) -> &OrbitLimit {
        match direction {
            Direction::Backward => &self.limit_start,
            _ => &self.limit_end,
        }
    }

    pub fn terminal_toward(&self, direction: Direction) -> Option<PhasePoint> {
        match direction {
            Direction::Backward => self.terminal_start,
            _ => self.terminal_end,
        }
    }
}

struct Context<'a> {
    k: &'a PrescribedFunction,
    opts: &'a OrbitOptions,
    scale: f64,
    k0_zero: bool,
    fi: Option<FirstIntegral>,
    /// `Φ` at the start point, when the first integral is defined there.
    phi0: Option<f64>,
}

impl Context<'_> {
    fn vanishes(&self, y: f64) -> bool {
        self.k.in_domain(y) && self.k.value(y).abs() <= self.opts.zero_tol * self.scale
    }

    fn field(&self, x: f64, theta: f64) -> Option<(f64, f64)> {
        if !(theta > 0.0 && theta < PI) {
            return None;
        }
        // the double nearest π/2 stands for the equator itself
        let nu = if theta == FRAC_PI_2 { 0.0 } else { theta.cos() };
        let kv = self.k.value(nu);
        if !kv.is_finite() {
            return None;
        }
        Some((nu, x * kv / theta.sin()))
    }

    fn sample(&self, s: f64, x: f64, theta: f64) -> OrbitSample {
        let (dx_ds, dtheta_ds) = self.field(x, theta).unwrap_or((theta.cos(), f64::NAN));
        OrbitSample {
            s,
            x,
            theta,
            dx_ds,
            dtheta_ds,
        }
    }
}

struct Side {
    samples: Vec<OrbitSample>,
    limit: OrbitLimit,
    terminal: Option<PhasePoint>,
    notes: Vec<String>,
    steps: usize,
}

/// Integrate the orbit through `start` in one direction of `s`.
///
/// Starts on the axis are accepted: `(0, 0)` forward and `(0, π)` backward
/// are continued from the radial solution; `(0, θ₀)` with `θ₀` strictly
/// between is a cusp start and must point into `x > 0`.
pub fn integrate_orbit(
    k: &PrescribedFunction,
    start: PhasePoint,
    direction: Direction,
    opts: &OrbitOptions,
) -> Result<Orbit> {
    if direction == Direction::Both {
        return integrate_through(k, start, opts);
    }
    validate(k, start, opts)?;
    let ctx = context(k, start, opts);
    let dir = direction.sign();
    let here = OrbitLimit::Interior {
        x: start.x,
        theta: start.theta,
    };

    let mut prefix: Vec<OrbitSample> = Vec::new();
    let mut notes = Vec::new();
    let (side_start, s0, start_limit) = if start.x == 0.0 {
        if start.theta == 0.0 || start.theta == PI {
            let upward = start.theta == 0.0;
            if upward != (dir > 0.0) {
                return Err(Error::Precondition(
                    "orbits leave (0, 0) forward and (0, π) backward in arclength".into(),
                ));
            }
            let (sol, hand) = if upward {
                let sol = picard_solve(k, &opts.picard)?;
                let h = handoff(&sol);
                (sol, h)
            } else {
                downward_solve(k, &opts.picard)?
            };
            prefix = radial_samples(&ctx, &sol, upward);
            if let Some(d) = &hand.degenerate {
                return Ok(plane_orbit(&ctx, direction, upward, d));
            }
            notes.push(format!(
                "radial solution on [0, {}] in {} iterations",
                sol.delta, sol.iterations
            ));
            (hand.point, dir * hand.arclength, hand.limit_start)
        } else {
            if start.theta.cos() * dir <= 1e-12 {
                return Err(Error::Precondition(format!(
                    "a cusp start at theta = {} does not enter x > 0 in this direction",
                    start.theta
                )));
            }
            (start, 0.0, OrbitLimit::AxisCusp { theta0: start.theta })
        }
    } else {
        (start, 0.0, here)
    };

    // a rest point is its own orbit
    if ctx.k0_zero && side_start.theta.cos().abs() <= 1e-15 && side_start.x > 0.0 {
        let sample = ctx.sample(0.0, side_start.x, side_start.theta);
        return Ok(assemble(
            &ctx,
            direction,
            vec![sample],
            start_limit,
            Side {
                samples: vec![],
                limit: OrbitLimit::Equilibrium { x0: side_start.x },
                terminal: None,
                notes: vec!["start is an equilibrium".into()],
                steps: 0,
            },
            notes,
        ));
    }

    let side = run_side(&ctx, side_start, s0, dir);
    Ok(assemble(&ctx, direction, prefix, start_limit, side, notes))
}

/// Integrate both ways from an interior point.
pub fn integrate_through(k: &PrescribedFunction, start: PhasePoint, opts: &OrbitOptions) -> Result<Orbit> {
    validate(k, start, opts)?;
    if start.x == 0.0 {
        return Err(Error::Precondition(
            "two-sided integration needs an interior start".into(),
        ));
    }
    let ctx = context(k, start, opts);
    if ctx.k0_zero && start.theta.cos().abs() <= 1e-15 {
        let sample = ctx.sample(0.0, start.x, start.theta);
        let eq = OrbitLimit::Equilibrium { x0: start.x };
        return Ok(Orbit {
            samples: vec![sample],
            direction: Direction::Both,
            limit_start: eq.clone(),
            limit_end: eq,
            conserved_drift: Some(0.0),
            terminal_start: None,
            terminal_end: None,
            notes: vec!["start is an equilibrium".into()],
            steps: 0,
        });
    }
    let back = run_side(&ctx, start, 0.0, -1.0);
    let fwd = run_side(&ctx, start, 0.0, 1.0);
    let mut samples: Vec<OrbitSample> = back.samples.into_iter().rev().collect();
    samples.pop();
    samples.extend(fwd.samples);
    let mut notes = back.notes;
    notes.extend(fwd.notes);
    let conserved_drift = drift(&ctx, &samples, start);
    Ok(Orbit {
        samples,
        direction: Direction::Both,
        limit_start: back.limit,
        limit_end: fwd.limit,
        conserved_drift,
        terminal_start: back.terminal,
        terminal_end: fwd.terminal,
        notes,
        steps: back.steps + fwd.steps,
    })
}

fn validate(k: &PrescribedFunction, p: PhasePoint, opts: &OrbitOptions) -> Result<()> {
    if !(p.x.is_finite() && p.theta.is_finite()) || p.x < 0.0 || !(0.0..=PI).contains(&p.theta) {
        return Err(Error::InvalidInput(format!(
            "start ({}, {}) is outside [0, ∞) × [0, π]",
            p.x, p.theta
        )));
    }
    if p.x > 0.0 && (p.theta == 0.0 || p.theta == PI) {
        return Err(Error::SingularBoundary(p.theta));
    }
    if !k.in_domain(p.theta.cos()) {
        return Err(Error::Domain(p.theta.cos()));
    }
    if !(opts.tol > 0.0 && opts.x_max > 0.0 && opts.theta_min > 0.0 && opts.max_arclength > 0.0) {
        return Err(Error::InvalidInput("orbit options must be positive".into()));
    }
    Ok(())
}

fn context<'a>(k: &'a PrescribedFunction, start: PhasePoint, opts: &'a OrbitOptions) -> Context<'a> {
    let scale = curvature_scale(k);
    let k0_zero = k.in_domain(0.0) && k.value(0.0).abs() <= opts.zero_tol * scale;
    let y = start.theta.cos();
    let fi = if k.value(y).abs() <= 1e-12 * scale && y.abs() > 1e-15 {
        None
    } else {
        FirstIntegral::around(k, y)
    };
    let phi0 = fi.as_ref().and_then(|f| f.phi(start));
    Context {
        k,
        opts,
        scale,
        k0_zero,
        fi,
        phi0,
    }
}

fn radial_samples(ctx: &Context, sol: &RadialSolution, upward: bool) -> Vec<OrbitSample> {
    let n = sol.grid.len() - 1;
    let stride = (n / 128).max(1);
    let k1 = sol.prescribed().value(1.0).max(0.0).sqrt();
    let mut out = Vec::new();
    for i in (0..n).step_by(stride) {
        let x = sol.grid[i];
        let t = sol.u_prime[i].atan();
        let (theta, s) = if upward {
            (t, sol.arclength[i])
        } else {
            (PI - t, -sol.arclength[i])
        };
        let mut sample = ctx.sample(s, x, theta);
        if !(sample.dtheta_ds.is_finite()) || theta == 0.0 || theta == PI {
            sample.dx_ds = theta.cos();
            sample.dtheta_ds = if x == 0.0 { k1 } else { sample.dtheta_ds };
            if !sample.dtheta_ds.is_finite() {
                sample.dtheta_ds = 0.0;
            }
        }
        out.push(sample);
    }
    if !upward {
        out.reverse();
    }
    out
}

fn plane_orbit(ctx: &Context, direction: Direction, upward: bool, note: &str) -> Orbit {
    let n = 64;
    let theta = if upward { 0.0 } else { PI };
    let xm = ctx.opts.x_max;
    let mut samples: Vec<OrbitSample> = (0..=n)
        .map(|i| {
            let x = xm * i as f64 / n as f64;
            OrbitSample {
                s: if upward { x } else { -x },
                x,
                theta,
                dx_ds: theta.cos(),
                dtheta_ds: 0.0,
            }
        })
        .collect();
    let (start, end) = if upward {
        (OrbitLimit::AxisOrthogonalTop, OrbitLimit::ConeAsymptote { theta0: 0.0 })
    } else {
        samples.reverse();
        (
            OrbitLimit::ConeAsymptote { theta0: PI },
            OrbitLimit::AxisOrthogonalBottom,
        )
    };
    Orbit {
        samples,
        direction,
        limit_start: start,
        limit_end: end,
        conserved_drift: None,
        terminal_start: None,
        terminal_end: None,
        notes: vec![note.to_string()],
        steps: 0,
    }
}

fn assemble(
    ctx: &Context,
    direction: Direction,
    prefix: Vec<OrbitSample>,
    start_limit: OrbitLimit,
    side: Side,
    mut notes: Vec<String>,
) -> Orbit {
    notes.extend(side.notes);
    let forward = direction != Direction::Backward;
    let mut samples = prefix;
    let (limit_start, limit_end, terminal_start, terminal_end);
    if forward {
        samples.extend(side.samples);
        limit_start = start_limit;
        limit_end = side.limit;
        terminal_start = None;
        terminal_end = side.terminal;
    } else {
        // prefix (if any) is already ascending and ends at the axis
        let mut body: Vec<OrbitSample> = side.samples.into_iter().rev().collect();
        body.extend(samples);
        samples = body;
        limit_start = side.limit;
        limit_end = start_limit;
        terminal_start = side.terminal;
        terminal_end = None;
    }
    let origin = if forward { samples.first() } else { samples.last() }.map(|s| s.point());
    let conserved_drift = origin.and_then(|p| drift(ctx, &samples, p));
    Orbit {
        samples,
        direction,
        limit_start,
        limit_end,
        conserved_drift,
        terminal_start,
        terminal_end,
        notes,
        steps: side.steps,
    }
}

const DRIFT_SAMPLES: usize = 20_000;

fn drift(ctx: &Context, samples: &[OrbitSample], origin: PhasePoint) -> Option<f64> {
    if !ctx.opts.track_drift {
        return None;
    }
    let fi = ctx.fi.as_ref()?;
    let phi0 = fi.phi(origin)?;
    let stride = (samples.len() / DRIFT_SAMPLES).max(1);
    let mut worst: f64 = 0.0;
    let mut any = false;
    for s in samples.iter().step_by(stride).chain(samples.last()) {
        // skip samples that sit on a zero line of 𝔎 (the moment is singular there)
        if ctx.k.value(s.theta.cos()).abs() <= 1e-6 * ctx.scale {
            continue;
        }
        if let Some(phi) = fi.phi(s.point()) {
            worst = worst.max((phi - phi0).abs());
            any = true;
        }
    }
    any.then_some(worst)
}

struct Walker<'a, 'b> {
    ctx: &'a Context<'b>,
    dir: f64,
    s_start: f64,
    samples: Vec<OrbitSample>,
    next_uniform: Option<f64>,
    eq_count: usize,
    limit: Option<OrbitLimit>,
    terminal: Option<PhasePoint>,
    notes: Vec<String>,
    zero_lines: Vec<f64>,
}

/// Interior dense-output probes per step when looking for line crossings.
const PROBES: usize = 4;

impl Walker<'_, '_> {
    fn push_uniform_until(&mut self, seg: &DenseSegment<2>, s_end: f64) {
        let SampleMode::Uniform(h) = self.ctx.opts.sample else {
            return;
        };
        while let Some(next) = self.next_uniform {
            if (next - s_end) * self.dir > 0.0 {
                break;
            }
            let y = seg.eval(next);
            self.samples.push(self.ctx.sample(next, y[0], y[1]));
            self.next_uniform = Some(next + self.dir * h);
        }
    }

    fn push(&mut self, sample: OrbitSample) {
        if let Some(last) = self.samples.last() {
            if last.s == sample.s {
                return;
            }
        }
        self.samples.push(sample);
    }

    fn on_segment(&mut self, seg: &DenseSegment<2>) -> Control {
        let opts = self.ctx.opts;
        let [x0, t0] = seg.y0;
        let [x1, t1] = seg.y1;
        let tm = opts.theta_min;
        let ttol = 1e-12 * seg.t1.abs().max(1.0);

        // terminal events, earliest first
        let mut terminal: Option<(f64, u8)> = None;
        let mut consider = |s: f64, tag: u8| {
            if terminal.is_none_or(|(best, _)| (s - best) * self.dir < 0.0) {
                terminal = Some((s, tag));
            }
        };
        if x0 > 0.0 && x1 <= 0.0 {
            consider(seg.locate(|_, y| y[0], ttol), 0);
        }
        if t0 >= tm && t1 < tm {
            consider(seg.locate(|_, y| y[1] - tm, ttol), 1);
        }
        if t0 <= PI - tm && t1 > PI - tm {
            consider(seg.locate(|_, y| y[1] - (PI - tm), ttol), 2);
        }
        if let Some(xs) = opts.stop_at_x {
            if (x0 - xs) * (x1 - xs) <= 0.0 && x0 != xs {
                consider(seg.locate(|_, y| y[0] - xs, ttol), 3);
            }
        }
        let halves = seg.roots(|_, y| y[1] - FRAC_PI_2, PROBES, ttol);
        if let (true, Some(&sh)) = (opts.stop_at_half_pi, halves.first()) {
            consider(sh, 4);
        }

        for &tz in &self.zero_lines {
            if !seg.roots(|_, y| y[1] - tz, PROBES, ttol).is_empty() {
                self.notes.push(format!(
                    "crossed the zero line theta = {tz} near s = {}; expected only from integration error",
                    seg.t1
                ));
            }
        }

        let s_stop = terminal.map(|(s, _)| s).unwrap_or(seg.t1);
        for sh in halves {
            if (sh - s_stop) * self.dir <= 0.0 {
                self.push_uniform_until(seg, sh);
                let y = seg.eval(sh);
                let mut sample = self.ctx.sample(sh, y[0], FRAC_PI_2);
                sample.dx_ds = 0.0;
                self.push(sample);
            }
        }
        self.push_uniform_until(seg, s_stop);

        if let Some((s, tag)) = terminal {
            let y = seg.eval(s);
            return self.terminal_event(s, y, tag);
        }
        if matches!(opts.sample, SampleMode::Steps) {
            self.push(self.ctx.sample(seg.t1, x1, t1));
        }

        // equilibrium: the field stays tiny near θ = π/2
        let (fx, ft) = self.ctx.field(x1, t1).unwrap_or((f64::NAN, f64::NAN));
        if self.ctx.k0_zero && fx.hypot(ft) < 1e-9 * (1.0 + x1.abs()) {
            self.eq_count += 1;
            if self.eq_count >= 100 {
                let x_star = self
                    .ctx
                    .fi
                    .as_ref()
                    .and_then(|fi| {
                        let first = self.samples.first()?;
                        let phi0 = fi.phi(first.point())?;
                        let m0 = fi.moment(0.0)?;
                        let v = 2.0 * (phi0 - m0);
                        (v >= 0.0).then(|| v.sqrt())
                    })
                    .unwrap_or(x1);
                return self.finish(OrbitLimit::Equilibrium { x0: x_star }, None);
            }
        } else {
            self.eq_count = 0;
        }

        let k0 = if self.ctx.k.in_domain(0.0) {
            self.ctx.k.value(0.0).abs()
        } else {
            0.0
        };
        if x1 < 1e-4 && t1.cos().abs() <= 10.0 * (1.0 + k0.sqrt()) * x1 && x1 < x0 {
            return self.finish(OrbitLimit::AxisAsymptote, None);
        }
        if x1 > opts.x_max {
            let limit = classify_tail(self.ctx, &self.samples, TailReason::Escaped);
            return self.finish(limit, None);
        }
        if (seg.t1 - self.s_start).abs() > opts.max_arclength {
            let limit = classify_tail(self.ctx, &self.samples, TailReason::ArclengthBudget);
            return self.finish(limit, None);
        }
        Control::Continue
    }

    fn finish(&mut self, limit: OrbitLimit, terminal: Option<PhasePoint>) -> Control {
        self.limit = Some(limit);
        self.terminal = terminal;
        Control::Break
    }

    fn terminal_event(&mut self, s: f64, y: [f64; 2], tag: u8) -> Control {
        let tm = self.ctx.opts.theta_min;
        match tag {
            0 => {
                let theta = y[1];
                let mut sample = self.ctx.sample(s, 0.0, theta);
                sample.dtheta_ds = 0.0;
                self.push(sample);
                let limit = if theta < 10.0 * tm {
                    OrbitLimit::AxisOrthogonalTop
                } else if theta > PI - 10.0 * tm {
                    OrbitLimit::AxisOrthogonalBottom
                } else {
                    OrbitLimit::AxisCusp { theta0: theta }
                };
                self.finish(limit, Some(PhasePoint::new(0.0, theta)))
            }
            1 | 2 => {
                let theta = if tag == 1 { tm } else { PI - tm };
                self.push(self.ctx.sample(s, y[0], theta));
                let (limit, terminal) = boundary_limit(self.ctx, y[0], theta, &mut self.notes);
                self.finish(limit, terminal)
            }
            _ => {
                let x = if tag == 3 {
                    self.ctx.opts.stop_at_x.unwrap_or(y[0])
                } else {
                    y[0]
                };
                let theta = if tag == 4 { FRAC_PI_2 } else { y[1] };
                let mut sample = self.ctx.sample(s, x, theta);
                if tag == 4 {
                    sample.dx_ds = 0.0;
                }
                self.push(sample);
                self.finish(OrbitLimit::Stopped { x, theta }, None)
            }
        }
    }
}

/// Classify the approach to `θ ∈ {0, π}` from `(x, θ)` near the boundary,
/// extrapolating the terminal `x` through the first integral.
fn boundary_limit(ctx: &Context, x: f64, theta: f64, notes: &mut Vec<String>) -> (OrbitLimit, Option<PhasePoint>) {
    let top = theta < FRAC_PI_2;
    let yb: f64 = if top { 1.0 } else { -1.0 };
    let tb = if top { 0.0 } else { PI };
    if ctx.vanishes(yb) {
        return (OrbitLimit::ConeAsymptote { theta0: tb }, None);
    }
    let c = theta.cos();
    let k = ctx.k;
    // x_T² = x² − 2∫_c^{y_b} t/𝔎(t) dt
    let integral = integrate(|t| t / k.value(t), c, yb, QuadOptions::default())
        .map(|r| r.value)
        .unwrap_or_else(|e| match e {
            Error::Accuracy { estimate, .. } => estimate,
            _ => f64::NAN,
        });
    let local = x * x - 2.0 * integral;
    // the conserved value from the start is free of accumulated drift
    let global = match (ctx.fi.as_ref(), ctx.phi0) {
        (Some(fi), Some(phi0)) if fi.covers(c) => fi.moment(yb).map(|m| 2.0 * (phi0 - m)),
        _ => None,
    };
    let xt2 = match global {
        Some(g) if g.is_finite() => {
            if (g - local).abs() > 1e-6 * (1.0 + x * x) {
                notes.push(format!(
                    "terminal extrapolation disagrees with the first integral: {local:e} vs {g:e}"
                ));
            }
            g
        }
        _ => local,
    };
    if !xt2.is_finite() {
        return (
            OrbitLimit::Unresolved {
                reason: "terminal extrapolation failed".into(),
            },
            None,
        );
    }
    if xt2 < -1e-12 {
        notes.push(format!("axis reached before the boundary (x_T² = {xt2:e})"));
    }
    let xt = xt2.max(0.0).sqrt();
    let terminal = PhasePoint::new(xt, tb);
    let limit = match (xt <= 1e-6, top) {
        (true, true) => OrbitLimit::AxisOrthogonalTop,
        (true, false) => OrbitLimit::AxisOrthogonalBottom,
        (false, true) => OrbitLimit::SingularCircleTheta0 { x0: xt },
        (false, false) => OrbitLimit::SingularCirclePi { x0: xt },
    };
    (limit, Some(terminal))
}

fn run_side(ctx: &Context, start: PhasePoint, s0: f64, dir: f64) -> Side {
    let opts = ctx.opts;
    let zero_lines = zeros_and_signs(ctx.k, 1e-12)
        .map(|p| {
            p.zero_points()
                .into_iter()
                .filter(|y| y.abs() < 1.0 - 1e-12)
                .map(|y| y.acos())
                .collect()
        })
        .unwrap_or_default();
    let mut walker = Walker {
        ctx,
        dir,
        s_start: s0,
        samples: vec![ctx.sample(s0, start.x, start.theta)],
        next_uniform: match opts.sample {
            SampleMode::Uniform(h) => Some(s0 + dir * h.abs()),
            SampleMode::Steps => None,
        },
        eq_count: 0,
        limit: None,
        terminal: None,
        notes: Vec::new(),
        zero_lines,
    };
    if start.x == 0.0 {
        if let Some(first) = walker.samples.first_mut() {
            first.dtheta_ds = 0.0;
        }
    }
    let ode = OdeOptions {
        rtol: opts.tol,
        atol: opts.tol,
        h_init: None,
        h_max: opts.h_max,
        max_steps: opts.max_steps,
        t_end: None,
    };
    let rhs = |_s: f64, y: &[f64; 2]| ctx.field(y[0], y[1]).map(|(a, b)| [a, b]);
    let outcome = dopri5(rhs, s0, [start.x, start.theta], dir, &ode, |seg| walker.on_segment(seg));
    let steps = outcome.accepted;
    if walker.limit.is_none() {
        let [x, theta] = outcome.y;
        let limit = match outcome.stop {
            StopReason::MaxSteps => classify_tail(ctx, &walker.samples, TailReason::StepBudget),
            StopReason::StepUnderflow if !(1e-3..=PI - 1e-3).contains(&theta) => {
                walker.push(ctx.sample(outcome.t, x, theta));
                let (limit, terminal) = boundary_limit(ctx, x, theta, &mut walker.notes);
                walker.terminal = terminal;
                limit
            }
            StopReason::StepUnderflow => {
                walker.push(ctx.sample(outcome.t, x, theta));
                let reason = if ctx.k.in_domain(theta.cos() + 1e-9 * theta.cos().signum())
                    && ctx.k.in_domain(theta.cos() - 1e-9 * theta.cos().signum())
                {
                    format!("step size underflow at (x, theta) = ({x}, {theta})")
                } else {
                    format!("left the domain of the prescribed function at theta = {theta}")
                };
                OrbitLimit::Unresolved { reason }
            }
            StopReason::Observer | StopReason::EndTime => OrbitLimit::Unresolved {
                reason: "integration stopped without a classification".into(),
            },
        };
        walker.limit = Some(limit);
    }
    Side {
        samples: walker.samples,
        limit: walker.limit.unwrap_or(OrbitLimit::Unresolved {
            reason: "no limit".into(),
        }),
        terminal: walker.terminal,
        notes: walker.notes,
        steps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TailReason {
    Escaped,
    ArclengthBudget,
    StepBudget,
    Inspect,
}

/// Classify the end of an orbit from its last samples (in integration
/// order). Needs at least two samples.
pub fn classify_limit(k: &PrescribedFunction, tail: &[OrbitSample], opts: &OrbitOptions) -> OrbitLimit {
    if tail.len() < 2 {
        return OrbitLimit::Unresolved {
            reason: "tail too short".into(),
        };
    }
    let first = tail[0];
    let ctx = context(k, first.point(), opts);
    let last = tail[tail.len() - 1];
    let tm = opts.theta_min;
    if last.x <= 1e-12 {
        return if last.theta < 10.0 * tm {
            OrbitLimit::AxisOrthogonalTop
        } else if last.theta > PI - 10.0 * tm {
            OrbitLimit::AxisOrthogonalBottom
        } else if (last.theta - FRAC_PI_2).abs() < 1e-6 {
            OrbitLimit::AxisAsymptote
        } else {
            OrbitLimit::AxisCusp { theta0: last.theta }
        };
    }
    if last.theta <= tm * (1.0 + 1e-9) || last.theta >= PI - tm * (1.0 + 1e-9) {
        return boundary_limit(&ctx, last.x, last.theta, &mut Vec::new()).0;
    }
    let reason = if last.x > opts.x_max {
        TailReason::Escaped
    } else {
        TailReason::Inspect
    };
    classify_tail(&ctx, tail, reason)
}

fn classify_tail(ctx: &Context, samples: &[OrbitSample], reason: TailReason) -> OrbitLimit {
    let Some(last) = samples.last() else {
        return OrbitLimit::Unresolved {
            reason: "empty orbit".into(),
        };
    };
    let x_end = last.x;
    let t_end = last.theta;
    // sample one decade of x back along the tail
    let decade = samples
        .iter()
        .rev()
        .find(|p| p.x <= 0.1 * x_end)
        .or_else(|| samples.first())
        .copied()
        .unwrap_or(*last);
    let variation = (t_end - decade.theta).abs();
    let gap_end = (t_end - FRAC_PI_2).abs();
    let gap_dec = (decade.theta - FRAC_PI_2).abs();
    let toward_half = ctx.k0_zero && gap_end < gap_dec && gap_end < 0.1 && x_end > decade.x;

    if (reason != TailReason::Inspect || x_end > ctx.opts.x_max)
        && toward_half
        && (reason == TailReason::Escaped || moment_diverges_at_zero(ctx, t_end))
    {
        return OrbitLimit::EntireGraphDivergence;
    }
    if reason == TailReason::Escaped || x_end > ctx.opts.x_max {
        let y = t_end.cos();
        if let Some(y0) = nearest_zero(ctx.k, y) {
            let theta0 = y0.clamp(-1.0, 1.0).acos();
            if variation < 1e-6 && (t_end - theta0).abs() <= 1e-6 && ctx.vanishes(y0) {
                return OrbitLimit::ConeAsymptote { theta0 };
            }
        }
        return OrbitLimit::Unresolved {
            reason: format!(
                "escaped to x = {x_end:.3e} with theta = {t_end} still varying by {variation:.3e} over the last decade"
            ),
        };
    }
    if ctx.k0_zero && t_end.cos().abs() < 1e-6 {
        if let Some((fx, ft)) = ctx.field(last.x, t_end) {
            if fx.hypot(ft) < 1e-6 * (1.0 + last.x) {
                return OrbitLimit::Equilibrium { x0: last.x };
            }
        }
    }
    if last.x < 1e-4 && t_end.cos().abs() <= 10.0 * last.x * 2.0 {
        return OrbitLimit::AxisAsymptote;
    }
    OrbitLimit::Unresolved {
        reason: match reason {
            TailReason::ArclengthBudget => "arclength budget exhausted".into(),
            TailReason::StepBudget => "step budget exhausted".into(),
            _ => "tail does not match any limit pattern".into(),
        },
    }
}

/// True when `∫ t/𝔎(t) dt` diverges as `y → 0` from the side of `cos θ`,
/// so no equilibrium can be reached on that side.
fn moment_diverges_at_zero(ctx: &Context, theta: f64) -> bool {
    matches!(partial_moment(ctx.k, theta.cos()), Err(Error::Divergent { .. }))
}

fn nearest_zero(k: &PrescribedFunction, y: f64) -> Option<f64> {
    let profile = zeros_and_signs(k, 1e-12).ok()?;
    profile
        .zero_points()
        .into_iter()
        .min_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> OrbitOptions {
        OrbitOptions::default()
    }

    #[test]
    fn unit_sphere_from_the_axis() {
        let k = PrescribedFunction::constant(1.0);
        // near the pole |x − sin θ| ≈ ΔΦ/x, so this check needs a tight tolerance
        let tight = OrbitOptions { tol: 1e-14, ..opts() };
        let o = integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Forward, &tight).unwrap();
        assert_eq!(o.limit_start, OrbitLimit::AxisOrthogonalTop);
        assert_eq!(o.limit_end, OrbitLimit::AxisOrthogonalBottom, "{:?}", o.notes);
        assert!(o.terminal_end.unwrap().x <= 1e-6);
        let worst = o
            .samples
            .iter()
            .map(|p| (p.x - p.theta.sin()).abs())
            .fold(0.0, f64::max);
        let at = o
            .samples
            .iter()
            .max_by(|a, b| (a.x - a.theta.sin()).abs().total_cmp(&(b.x - b.theta.sin()).abs()))
            .unwrap();
        assert!(worst <= 1e-8, "{worst} at {at:?} of {}", o.len());
        assert!(o.conserved_drift.unwrap() < 1e-9);
    }

    #[test]
    fn off_axis_start_on_unit_constant_hits_axis() {
        // Φ = x²/2 + cos²θ/2 = 1/8 meets x = 0 where cos θ = −1/2
        let k = PrescribedFunction::constant(1.0);
        let o = integrate_orbit(&k, PhasePoint::new(0.5, FRAC_PI_2), Direction::Forward, &opts()).unwrap();
        match o.limit_end {
            OrbitLimit::AxisCusp { theta0 } => assert!((theta0 - 2.0 * PI / 3.0).abs() < 1e-8, "{theta0}"),
            ref l => panic!("{l:?}"),
        }
    }

    #[test]
    fn waist_of_negative_constant() {
        let k = PrescribedFunction::constant(-1.0);
        let o = integrate_through(&k, PhasePoint::new(1.0, FRAC_PI_2), &opts()).unwrap();
        match (&o.limit_start, &o.limit_end) {
            (OrbitLimit::SingularCirclePi { x0: a }, OrbitLimit::SingularCircleTheta0 { x0: b }) => {
                assert!((a - 2f64.sqrt()).abs() < 1e-6, "{a}");
                assert!((b - 2f64.sqrt()).abs() < 1e-6, "{b}");
            }
            l => panic!("{l:?}"),
        }
    }

    #[test]
    fn positive_constant_from_waist_reaches_pi_half_again() {
        let k = PrescribedFunction::constant(1.0);
        let mut o = opts();
        o.stop_at_half_pi = true;
        let orbit = integrate_orbit(&k, PhasePoint::new(0.5, 1.0), Direction::Forward, &o).unwrap();
        let last = orbit.last();
        assert!(matches!(orbit.limit_end, OrbitLimit::Stopped { .. }));
        assert_eq!(last.theta, FRAC_PI_2);
        assert_eq!(last.dx_ds, 0.0);
    }

    #[test]
    fn parabola_is_entire() {
        let k = PrescribedFunction::power(4.0);
        let o = integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Forward, &opts()).unwrap();
        assert_eq!(o.limit_end, OrbitLimit::EntireGraphDivergence, "{:?}", o.notes);
    }

    #[test]
    fn linear_power_converges_to_cylinder() {
        let k = PrescribedFunction::power(1.0);
        let o = integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Forward, &opts()).unwrap();
        match o.limit_end {
            OrbitLimit::Equilibrium { x0 } => assert!((x0 - 2f64.sqrt()).abs() < 1e-4, "{x0}"),
            ref l => panic!("{l:?}"),
        }
    }

    #[test]
    fn cone_asymptote() {
        let k = PrescribedFunction::affine(1.0, -0.5);
        let mut o = opts();
        o.x_max = 100.0;
        let orbit = integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Forward, &o).unwrap();
        match orbit.limit_end {
            OrbitLimit::ConeAsymptote { theta0 } => assert!((theta0 - PI / 3.0).abs() < 1e-4),
            ref l => panic!("{l:?}"),
        }
    }

    #[test]
    fn axis_cusp_for_failed_minkowski() {
        let k = PrescribedFunction::affine(1.0, 2.0);
        let o = integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Forward, &opts()).unwrap();
        match o.limit_end {
            OrbitLimit::AxisCusp { theta0 } => assert!(theta0 > FRAC_PI_2),
            ref l => panic!("{l:?}"),
        }
    }

    #[test]
    fn tractrix_reaches_axis_asymptotically() {
        let k = PrescribedFunction::constant(-1.0);
        let t = PI / 4.0;
        let o = integrate_through(&k, PhasePoint::new(t.cos(), t), &opts()).unwrap();
        assert_eq!(o.limit_start, OrbitLimit::AxisAsymptote);
        match o.limit_end {
            OrbitLimit::SingularCircleTheta0 { x0 } => assert!((x0 - 1.0).abs() < 1e-6),
            ref l => panic!("{l:?}"),
        }
    }

    #[test]
    fn rejects_bad_axis_starts() {
        let k = PrescribedFunction::constant(1.0);
        assert!(integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Backward, &opts()).is_err());
        assert!(integrate_orbit(&k, PhasePoint::new(0.0, 2.0), Direction::Forward, &opts()).is_err());
        assert!(integrate_orbit(&k, PhasePoint::new(1.0, 0.0), Direction::Forward, &opts()).is_err());
    }

    #[test]
    fn reflection_maps_limits() {
        let k = PrescribedFunction::affine(1.0, 2.0);
        let o = integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Forward, &opts()).unwrap();
        let r = o.reflected();
        assert_eq!(r.limit_end, OrbitLimit::AxisOrthogonalBottom);
        assert!(r.samples.windows(2).all(|w| w[0].s <= w[1].s));
    }
}
