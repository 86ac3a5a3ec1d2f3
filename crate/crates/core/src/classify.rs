//! Regime-level classification of rotational surfaces for a prescribed `𝔎`.
//!
//! The regime is read off the sign structure of `𝔎` (and, for positive `𝔎`,
//! the sign of `∫₋₁¹ y/𝔎`). Each regime produces a list of surface families,
//! and every family is backed by orbits that were actually integrated. Where
//! the first integral is defined along a whole orbit, each endpoint is also
//! predicted from its level set and the two are compared.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{asymptote_report, profile_from_orbit, AsymptoteReport};
use crate::phaseplane::{
    integrate_orbit, integrate_through, monotonicity_regions, special_orbits, Direction, FirstIntegral,
    MonotonicityRegion, Orbit, OrbitLimit, OrbitOptions, OrbitSample, PhasePoint, SpecialOrbit,
};
use crate::prescribed::{minkowski_integral, zeros_and_signs, PrescribedFunction, Sign, SignProfile};

/// `|∫ y/𝔎| ≤ SPHERE_TOL` counts as satisfying the closing condition.
pub const SPHERE_TOL: f64 = 1e-8;
/// Above the sphere threshold but below this the report says "near-closed".
pub const NEAR_CLOSED_TOL: f64 = 1e-4;
/// Allowed gap between an integrated endpoint and its level-set prediction.
pub const CHECK_TOL: f64 = 1e-6;
/// Terminal radii at or below this are read as meeting the axis orthogonally.
const ORTHOGONAL_X: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    VanishesSomewhere,
    StrictlyNegative,
    StrictlyPositiveWithSphere,
    StrictlyPositiveNoSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Annuli with a waist at `(x₀, π/2)` and singular circles at both ends.
    WaistAnnuli,
    /// Graphs with a cusp on the axis and a singular boundary circle.
    CuspGraphs,
    /// Annuli with one end asymptotic to the axis.
    PseudosphereAnalogues,
    /// The convex sphere through `(0, 0)` and `(0, π)`.
    Sphere,
    /// Compact surfaces with cusps on the axis.
    CuspCompacts,
    /// Annuli bounded by two singular circles.
    SingularAnnuli,
    /// The orbit leaving `(0, 0)`.
    TopAxisOrbit,
    /// The orbit arriving at `(0, π)`.
    BottomAxisOrbit,
    /// Orbits through axis cusps that are neither of the two above.
    AxisCuspOrbits,
    /// Graphs leaving the axis orthogonally and continued to infinity.
    EntireGraphs,
    /// Compact non-complete surfaces with two axis cusps (`𝔎(±1) = 0`, `𝔎 > 0` inside).
    CompactCuspSurfaces,
    /// Embedded annuli asymptotic to `θ = 0` and `θ = π` (`𝔎(±1) = 0`, `𝔎 < 0` inside).
    CatenoidLikeAnnuli,
    /// Witness orbits where no single claim is made.
    SampleOrbits,
}

/// Comparison of one integrated endpoint with its level-set prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointCheck {
    /// `"start"` or `"end"` of the witness orbit.
    pub end: &'static str,
    pub predicted: OrbitLimit,
    pub computed: OrbitLimit,
    /// Terminal radius re-derived from the last integrated sample.
    pub local_x: Option<f64>,
    /// Largest coordinate gap (in `x²/2` for radii below `1e-3`); infinite
    /// when the kinds differ.
    pub error: f64,
}

impl EndpointCheck {
    pub fn passed(&self) -> bool {
        self.error <= CHECK_TOL
    }
}

/// An integrated orbit supporting a family claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub label: String,
    pub start: PhasePoint,
    pub direction: Direction,
    pub limit_start: OrbitLimit,
    pub limit_end: OrbitLimit,
    pub terminal_start: Option<PhasePoint>,
    pub terminal_end: Option<PhasePoint>,
    pub conserved_drift: Option<f64>,
    pub arclength: f64,
    pub steps: usize,
    pub notes: Vec<String>,
    pub checks: Vec<EndpointCheck>,
    #[serde(skip)]
    pub orbit: Option<Orbit>,
}

impl Witness {
    pub fn is_unresolved(&self) -> bool {
        self.orbit.is_none() || self.limit_start.is_unresolved() || self.limit_end.is_unresolved()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceFamily {
    pub kind: FamilyKind,
    pub parameter: String,
    pub data: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub warnings: Vec<String>,
}

impl SurfaceFamily {
    fn new(kind: FamilyKind, parameter: &str) -> Self {
        Self {
            kind,
            parameter: parameter.into(),
            data: BTreeMap::new(),
            witnesses: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn set(&mut self, key: impl Into<String>, value: f64) {
        if value.is_finite() {
            self.data.insert(key.into(), value);
        }
    }

    fn push(&mut self, w: Witness) {
        if w.is_unresolved() {
            self.warnings.push(format!("witness {} is unresolved", w.label));
        }
        for c in w.checks.iter().filter(|c| !c.passed()) {
            self.warnings.push(format!(
                "witness {} {}: computed {} differs from level-set prediction {} by {:e}",
                w.label,
                c.end,
                c.computed.name(),
                c.predicted.name(),
                c.error
            ));
        }
        self.witnesses.push(w);
    }
}

/// Polyline of one witness in the `(x, θ)` plane, split where it leaves the window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitCurve {
    pub label: String,
    pub segments: Vec<Vec<[f64; 2]>>,
}

impl PortraitCurve {
    /// At most about `points` samples of `orbit`, clipped to `x ≤ x_max`.
    pub fn from_orbit(label: &str, orbit: &Orbit, x_max: f64, points: usize) -> Self {
        let stride = orbit.len().div_ceil(points.max(2)).max(1);
        let last = orbit.len().saturating_sub(1);
        let mut segments: Vec<Vec<[f64; 2]>> = Vec::new();
        let mut current = Vec::new();
        for (i, s) in orbit.samples.iter().enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            if s.x <= x_max {
                current.push([s.x, s.theta]);
            } else if !current.is_empty() {
                segments.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            segments.push(current);
        }
        Self {
            label: label.into(),
            segments,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearClosed {
    pub minkowski: f64,
    /// Distance of the top orbit's far end from `(0, π)`: the singular circle
    /// radius, or `π − θ₀` for a cusp.
    pub terminal_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub function: String,
    pub regime: Regime,
    pub minkowski_value: Option<f64>,
    pub near_closed: Option<NearClosed>,
    pub sign_profile: SignProfile,
    pub special_orbits: Vec<SpecialOrbit>,
    pub regions: Vec<MonotonicityRegion>,
    pub families: Vec<SurfaceFamily>,
    /// Largest endpoint-prediction gap over all witnesses.
    pub max_check_error: Option<f64>,
    pub portrait: Vec<PortraitCurve>,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn family(&self, kind: FamilyKind) -> Option<&SurfaceFamily> {
        self.families.iter().find(|f| f.kind == kind)
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.families.iter().flat_map(|f| f.witnesses.iter())
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub orbit: OrbitOptions,
    /// Waist radii for negative annuli.
    pub waist_radii: Vec<f64>,
    /// Cusp angles on the axis; those with `cos θ₀ > 0` are integrated forward.
    pub cusp_angles: Vec<f64>,
    /// Waist radii for singular annuli in the positive regime; empty picks
    /// radii beyond the axis orbits.
    pub annulus_radii: Vec<f64>,
    /// Start radii at `θ = π/2` for the `𝔎(±1) = 0` families.
    pub example_radii: Vec<f64>,
    /// Number of terms `xₙ = 2⁻ⁿ` in the pseudosphere sequence.
    pub pseudosphere_levels: u32,
    pub portrait_points: usize,
    pub portrait_x_max: f64,
    /// Integrate independent witnesses on separate threads.
    pub parallel: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            orbit: OrbitOptions::default(),
            waist_radii: vec![0.5, 1.0, 2.0],
            cusp_angles: vec![FRAC_PI_6, FRAC_PI_3, 2.0 * FRAC_PI_3, 5.0 * FRAC_PI_6],
            annulus_radii: Vec::new(),
            example_radii: vec![0.1, 1.0],
            pseudosphere_levels: 12,
            portrait_points: 400,
            portrait_x_max: 4.0,
            parallel: true,
        }
    }
}

struct Job {
    label: String,
    start: PhasePoint,
    direction: Direction,
}

impl Job {
    fn new(label: impl Into<String>, start: PhasePoint, direction: Direction) -> Self {
        Self {
            label: label.into(),
            start,
            direction,
        }
    }
}

fn run_orbit(k: &PrescribedFunction, job: &Job, opts: &OrbitOptions) -> Result<Orbit> {
    match job.direction {
        Direction::Both => integrate_through(k, job.start, opts),
        d => integrate_orbit(k, job.start, d, opts),
    }
}

/// Integrate the jobs, concurrently if asked; results keep job order.
fn run_jobs(k: &PrescribedFunction, jobs: &[Job], opts: &ClassifyOptions) -> Vec<Result<Orbit>> {
    if !opts.parallel || jobs.len() < 2 {
        return jobs.iter().map(|j| run_orbit(k, j, &opts.orbit)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|j| scope.spawn(move || run_orbit(k, j, &opts.orbit)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Integration("witness thread panicked".into())))
            })
            .collect()
    })
}

/// Level-set bookkeeping for the strictly signed regimes.
struct Levels {
    fi: FirstIntegral,
    sign: f64,
}

impl Levels {
    fn new(k: &PrescribedFunction) -> Option<Self> {
        let fi = FirstIntegral::canonical(k)?;
        (fi.covers(-1.0) && fi.covers(1.0)).then(|| Self {
            fi,
            sign: k.value(0.0).signum(),
        })
    }

    fn m(&self, c: f64) -> f64 {
        self.fi.moment(c).unwrap_or(f64::NAN)
    }

    /// Predicted limit reached from level `phi` moving toward `y_end = ±1`.
    ///
    /// `M` is monotone in `|c|` on each side of `0`; the orbit reaches the
    /// pole with `x² = 2(Φ − M(y_end))` when that is nonnegative and
    /// otherwise hits the axis where `M(c) = Φ`.
    fn predict(&self, phi: f64, y_end: f64) -> OrbitLimit {
        let gap = phi - self.m(y_end);
        if gap >= 0.0 {
            let x = (2.0 * gap).sqrt();
            return match (x <= ORTHOGONAL_X, y_end > 0.0) {
                (true, true) => OrbitLimit::AxisOrthogonalTop,
                (true, false) => OrbitLimit::AxisOrthogonalBottom,
                (false, true) => OrbitLimit::SingularCircleTheta0 { x0: x },
                (false, false) => OrbitLimit::SingularCirclePi { x0: x },
            };
        }
        let (a, b) = if y_end > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
        match self.fi.solve_moment(phi, a, b) {
            Some(c) => OrbitLimit::AxisCusp { theta0: c.acos() },
            None => OrbitLimit::Unresolved {
                reason: "no level-set root".into(),
            },
        }
    }

    /// Pole approached when moving in `direction` (`θ` decreases forward for `𝔎 < 0`).
    fn pole(&self, direction: Direction) -> f64 {
        let forward = if self.sign > 0.0 { -1.0 } else { 1.0 };
        match direction {
            Direction::Backward => -forward,
            _ => forward,
        }
    }

    /// `x² + 2(M(cos θ) − M(y_end))` at the sample nearest the boundary.
    fn local_x(&self, sample: &OrbitSample, y_end: f64) -> Option<f64> {
        let v = sample.x * sample.x + 2.0 * (self.fi.moment(sample.theta.cos())? - self.m(y_end));
        v.is_finite().then(|| v.max(0.0).sqrt())
    }
}

fn limit_coordinate(l: &OrbitLimit) -> Option<(&'static str, f64)> {
    match *l {
        OrbitLimit::AxisCusp { theta0 } => Some(("theta", theta0)),
        OrbitLimit::SingularCircleTheta0 { x0 } | OrbitLimit::SingularCirclePi { x0 } => Some(("x", x0)),
        OrbitLimit::AxisOrthogonalTop | OrbitLimit::AxisOrthogonalBottom => Some(("x", 0.0)),
        _ => None,
    }
}

fn check_end(levels: &Levels, orbit: &Orbit, end: &'static str, phi: f64, y_end: f64) -> Option<EndpointCheck> {
    let computed = if end == "start" {
        &orbit.limit_start
    } else {
        &orbit.limit_end
    };
    let (ck, cv) = limit_coordinate(computed)?;
    let predicted = levels.predict(phi, y_end);
    let local_x = if ck == "x" {
        let sample = if end == "start" { orbit.first() } else { orbit.last() };
        levels.local_x(sample, y_end)
    } else {
        None
    };
    let error = match limit_coordinate(&predicted) {
        Some((pk, pv)) if pk == ck && predicted.name() == computed.name() => {
            // near the axis x = √(2ΔΦ) amplifies drift, so compare levels there
            let gap = |a: f64| {
                if ck == "x" && pv < 1e-3 {
                    0.5 * (a * a - pv * pv).abs()
                } else {
                    (a - pv).abs()
                }
            };
            local_x.map_or(gap(cv), |lx| gap(cv).max(gap(lx)))
        }
        _ => f64::INFINITY,
    };
    Some(EndpointCheck {
        end,
        predicted,
        computed: computed.clone(),
        local_x,
        error,
    })
}

fn witness(job: &Job, orbit: Result<Orbit>, levels: Option<&Levels>) -> Witness {
    let orbit = match orbit {
        Ok(o) => o,
        Err(e) => {
            let reason = e.to_string();
            return Witness {
                label: job.label.clone(),
                start: job.start,
                direction: job.direction,
                limit_start: OrbitLimit::Unresolved { reason: reason.clone() },
                limit_end: OrbitLimit::Unresolved { reason },
                terminal_start: None,
                terminal_end: None,
                conserved_drift: None,
                arclength: 0.0,
                steps: 0,
                notes: Vec::new(),
                checks: Vec::new(),
                orbit: None,
            };
        }
    };
    let mut checks = Vec::new();
    if let Some(lv) = levels {
        if let Some(phi) = lv.fi.phi(job.start) {
            let fwd = lv.pole(Direction::Forward);
            if job.direction != Direction::Backward {
                checks.extend(check_end(lv, &orbit, "end", phi, fwd));
            }
            if job.direction != Direction::Forward {
                checks.extend(check_end(lv, &orbit, "start", phi, -fwd));
            }
        }
    }
    Witness {
        label: job.label.clone(),
        start: job.start,
        direction: job.direction,
        limit_start: orbit.limit_start.clone(),
        limit_end: orbit.limit_end.clone(),
        terminal_start: orbit.terminal_start,
        terminal_end: orbit.terminal_end,
        conserved_drift: orbit.conserved_drift,
        arclength: orbit.arclength(),
        steps: orbit.steps,
        notes: orbit.notes.clone(),
        checks,
        orbit: Some(orbit),
    }
}

fn witnesses(k: &PrescribedFunction, jobs: &[Job], opts: &ClassifyOptions, levels: Option<&Levels>) -> Vec<Witness> {
    run_jobs(k, jobs, opts)
        .into_iter()
        .zip(jobs)
        .map(|(o, j)| witness(j, o, levels))
        .collect()
}

fn cusp_direction(theta0: f64) -> Direction {
    if theta0.cos() > 0.0 {
        Direction::Forward
    } else {
        Direction::Backward
    }
}

fn valid_cusp_angles(opts: &ClassifyOptions) -> Vec<f64> {
    opts.cusp_angles
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && *t < PI && t.cos().abs() > 1e-9)
        .collect()
}

fn limit_x(l: &OrbitLimit) -> Option<f64> {
    match *l {
        OrbitLimit::SingularCircleTheta0 { x0 } | OrbitLimit::SingularCirclePi { x0 } => Some(x0),
        OrbitLimit::AxisOrthogonalTop | OrbitLimit::AxisOrthogonalBottom => Some(0.0),
        _ => None,
    }
}

/// Decide the regime and assemble families with integrated witnesses.
pub fn classify(k: &PrescribedFunction, opts: &ClassifyOptions) -> Result<ClassificationReport> {
    let profile = zeros_and_signs(k, 1e-12)?;
    let full_domain = profile.domain == (-1.0, 1.0);
    let mut report = ClassificationReport {
        function: k.spec(),
        regime: Regime::VanishesSomewhere,
        minkowski_value: None,
        near_closed: None,
        sign_profile: profile.clone(),
        special_orbits: special_orbits(k)?,
        regions: monotonicity_regions(k)?,
        families: Vec::new(),
        max_check_error: None,
        portrait: Vec::new(),
        notes: Vec::new(),
    };
    if full_domain && profile.is_strictly_negative() {
        report.regime = Regime::StrictlyNegative;
        negative_families(k, opts, &mut report)?;
    } else if full_domain && profile.is_strictly_positive() {
        let mink = minkowski_integral(k)?;
        report.minkowski_value = Some(mink);
        if mink.abs() <= SPHERE_TOL {
            report.regime = Regime::StrictlyPositiveWithSphere;
            sphere_families(k, opts, &mut report)?;
        } else {
            report.regime = Regime::StrictlyPositiveNoSphere;
            no_sphere_families(k, mink, opts, &mut report)?;
        }
    } else {
        vanishing_families(k, &profile, opts, &mut report)?;
    }
    report.max_check_error = report
        .witnesses()
        .flat_map(|w| w.checks.iter().map(|c| c.error))
        .reduce(f64::max);
    report.portrait = portrait(&report, opts);
    Ok(report)
}

fn levels_or_err(k: &PrescribedFunction) -> Result<Levels> {
    Levels::new(k).ok_or_else(|| Error::Precondition("first integral not defined on [-1, 1]".into()))
}

fn negative_families(k: &PrescribedFunction, opts: &ClassifyOptions, report: &mut ClassificationReport) -> Result<()> {
    let levels = levels_or_err(k)?;
    let (m_top, m_bottom) = (levels.m(1.0), levels.m(-1.0));

    let mut waists = SurfaceFamily::new(FamilyKind::WaistAnnuli, "waist radius x0 at (x0, pi/2)");
    let radii: Vec<f64> = opts.waist_radii.iter().copied().filter(|r| *r > 0.0).collect();
    let jobs: Vec<Job> = radii
        .iter()
        .map(|&r| Job::new(format!("waist x0={r}"), PhasePoint::new(r, FRAC_PI_2), Direction::Both))
        .collect();
    let mut previous: Option<(f64, f64)> = None;
    for (w, &r) in witnesses(k, &jobs, opts, Some(&levels)).into_iter().zip(&radii) {
        waists.set(format!("x0={r}/x_top"), limit_x(&w.limit_end).unwrap_or(f64::NAN));
        waists.set(format!("x0={r}/x_bottom"), limit_x(&w.limit_start).unwrap_or(f64::NAN));
        waists.set(format!("x0={r}/x_top_predicted"), (r * r - 2.0 * m_top).sqrt());
        waists.set(format!("x0={r}/x_bottom_predicted"), (r * r - 2.0 * m_bottom).sqrt());
        if let Some(x1) = limit_x(&w.limit_end) {
            if let Some((r0, x0)) = previous {
                if r > r0 && x1 < x0 {
                    waists
                        .warnings
                        .push(format!("top radius decreases between waists {r0} and {r}"));
                }
            }
            previous = Some((r, x1));
        }
        waists.push(w);
    }
    report.families.push(waists);

    let mut cusps = SurfaceFamily::new(FamilyKind::CuspGraphs, "cusp angle theta0 at (0, theta0)");
    let angles = valid_cusp_angles(opts);
    let jobs: Vec<Job> = angles
        .iter()
        .map(|&t| Job::new(format!("cusp theta0={t}"), PhasePoint::new(0.0, t), cusp_direction(t)))
        .collect();
    for (w, &t) in witnesses(k, &jobs, opts, Some(&levels)).into_iter().zip(&angles) {
        let far = w.orbit.as_ref().map(|o| o.limit_toward(w.direction).clone());
        cusps.set(
            format!("theta0={t}/r0"),
            far.as_ref().and_then(limit_x).unwrap_or(f64::NAN),
        );
        cusps.push(w);
    }
    report.families.push(cusps);

    let ps = pseudosphere_limit(k, opts.pseudosphere_levels, &opts.orbit)?;
    let mut fam = SurfaceFamily::new(
        FamilyKind::PseudosphereAnalogues,
        "limits of waist annuli as the waist shrinks to the axis",
    );
    fam.set("x_infinity", ps.x_infinity);
    fam.set("x_infinity_bottom", ps.x_infinity_bottom);
    fam.set("sequence_limit", ps.sequence_limit);
    fam.set("sequence_agreement", ps.agreement);
    if ps.flagged {
        fam.warnings.push(format!(
            "sequence limit {} disagrees with the first-integral value {} by {:e}",
            ps.sequence_limit, ps.x_infinity, ps.agreement
        ));
    }
    if !ps.decreasing {
        fam.warnings.push("sequence x_n^1 is not monotone".into());
    }
    let [p1, p2] = ps.witness_starts;
    for (label, start, o) in [("P1", p1, ps.witness_top), ("P2", p2, ps.witness_bottom)] {
        fam.push(witness(&Job::new(label, start, Direction::Both), Ok(o), Some(&levels)));
    }
    report.families.push(fam);

    let sup = (0..=200)
        .map(|i| k.value(-1.0 + 2.0 * i as f64 / 200.0))
        .fold(f64::NEG_INFINITY, f64::max);
    if sup < 0.0 {
        report.notes.push(format!(
            "curvature is bounded above by {sup:.6e} < 0, so no complete surface exists; every family has singular or axis ends"
        ));
    }
    Ok(())
}

/// Result of the shrinking-waist construction for `𝔎 < 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudosphereLimit {
    /// `√(−2∫₀¹ t/𝔎)`, the returned value.
    pub x_infinity: f64,
    /// `√(−2∫₀⁻¹ t/𝔎)`, the radius for the mirrored surface.
    pub x_infinity_bottom: f64,
    /// `(xₙ, xₙ¹)` with `xₙ¹` re-derived from the last integrated sample.
    pub sequence: Vec<(f64, f64)>,
    pub richardson: Vec<f64>,
    pub sequence_limit: f64,
    pub agreement: f64,
    pub decreasing: bool,
    /// Agreement worse than `1e-4`.
    pub flagged: bool,
    /// Points on the level `Φ = 0` at `θ = π/4` and `θ = 3π/4`.
    pub witness_starts: [PhasePoint; 2],
    #[serde(skip)]
    pub witness_top: Orbit,
    #[serde(skip)]
    pub witness_bottom: Orbit,
}

/// Limit radius of the pseudosphere analogues for strictly negative `𝔎`.
///
/// Waist orbits from `(2⁻ⁿ, π/2)` end at singular circles `(xₙ¹, 0)` with
/// `xₙ¹ − x_∞ = O(xₙ²)`; the sequence is Richardson-extrapolated and compared
/// with the first-integral value. The witnesses lie on the level `Φ = 0`.
pub fn pseudosphere_limit(k: &PrescribedFunction, levels: u32, opts: &OrbitOptions) -> Result<PseudosphereLimit> {
    let profile = zeros_and_signs(k, 1e-12)?;
    if profile.domain != (-1.0, 1.0) || !profile.is_strictly_negative() {
        return Err(Error::Precondition(
            "the prescribed function must be strictly negative on [-1, 1]".into(),
        ));
    }
    if levels < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 sequence levels, got {levels}"
        )));
    }
    let lv = levels_or_err(k)?;
    let x_infinity = (-2.0 * lv.m(1.0)).sqrt();
    let x_infinity_bottom = (-2.0 * lv.m(-1.0)).sqrt();

    let seq_opts = OrbitOptions {
        track_drift: false,
        ..*opts
    };
    let mut sequence = Vec::new();
    for n in 1..=levels {
        let xn = 0.5f64.powi(n as i32);
        let o = integrate_orbit(k, PhasePoint::new(xn, FRAC_PI_2), Direction::Forward, &seq_opts)?;
        if !matches!(o.limit_end, OrbitLimit::SingularCircleTheta0 { .. }) {
            return Err(Error::Integration(format!(
                "waist orbit from x = {xn} ended in {}",
                o.limit_end.name()
            )));
        }
        let x1 = lv
            .local_x(o.last(), 1.0)
            .ok_or_else(|| Error::Integration("first integral undefined at the stop point".into()))?;
        sequence.push((xn, x1));
    }
    let richardson: Vec<f64> = sequence.windows(2).map(|w| (4.0 * w[1].1 - w[0].1) / 3.0).collect();
    let sequence_limit = *richardson.last().unwrap_or(&f64::NAN);
    let agreement = (sequence_limit - x_infinity).abs();
    let decreasing = sequence.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);

    let level_point = |theta: f64| {
        lv.fi
            .level_set_x(0.0, theta)
            .map(|x| PhasePoint::new(x, theta))
            .ok_or_else(|| Error::Precondition("level zero is empty".into()))
    };
    let witness_starts = [level_point(PI / 4.0)?, level_point(3.0 * PI / 4.0)?];
    let witness_top = integrate_through(k, witness_starts[0], opts)?;
    let witness_bottom = integrate_through(k, witness_starts[1], opts)?;
    Ok(PseudosphereLimit {
        x_infinity,
        x_infinity_bottom,
        sequence,
        richardson,
        sequence_limit,
        agreement,
        decreasing,
        flagged: !(agreement <= 1e-4),
        witness_starts,
        witness_top,
        witness_bottom,
    })
}

fn half_pi_crossing(o: &Orbit) -> Option<f64> {
    o.samples
        .iter()
        .find(|s| s.theta == FRAC_PI_2)
        .map(|s| s.x)
        .or_else(|| {
            o.samples.windows(2).find_map(|w| {
                let (a, b) = (w[0].theta - FRAC_PI_2, w[1].theta - FRAC_PI_2);
                (a * b < 0.0).then(|| w[0].x + (w[1].x - w[0].x) * a / (a - b))
            })
        })
}

fn axis_jobs() -> [Job; 2] {
    [
        Job::new("gamma+", PhasePoint::new(0.0, 0.0), Direction::Forward),
        Job::new("gamma-", PhasePoint::new(0.0, PI), Direction::Backward),
    ]
}

fn sphere_families(k: &PrescribedFunction, opts: &ClassifyOptions, report: &mut ClassificationReport) -> Result<()> {
    let levels = levels_or_err(k)?;
    let x_plus_predicted = (2.0 * levels.m(1.0)).sqrt();

    let mut sphere = SurfaceFamily::new(FamilyKind::Sphere, "unique up to vertical translation");
    let [top, _] = axis_jobs();
    let o = run_orbit(k, &top, &opts.orbit);
    let w = witness(&top, o, Some(&levels));
    if let Some(orbit) = &w.orbit {
        sphere.set("x_plus", half_pi_crossing(orbit).unwrap_or(f64::NAN));
        if let Ok(p) = profile_from_orbit(orbit, 0.0) {
            sphere.set("height", p.height());
        }
        if let Some(t) = orbit.terminal_end {
            sphere.set("terminal_x", t.x);
        }
        if !matches!(orbit.limit_end, OrbitLimit::AxisOrthogonalBottom) {
            sphere.warnings.push(format!(
                "the top orbit ends in {} instead of closing at (0, pi)",
                orbit.limit_end.name()
            ));
        }
    }
    sphere.set("x_plus_predicted", x_plus_predicted);
    sphere.push(w);
    report.families.push(sphere);

    let mut cusps = SurfaceFamily::new(FamilyKind::CuspCompacts, "cusp angle theta0 at (0, theta0)");
    let angles = valid_cusp_angles(opts);
    let jobs: Vec<Job> = angles
        .iter()
        .map(|&t| Job::new(format!("cusp theta0={t}"), PhasePoint::new(0.0, t), cusp_direction(t)))
        .collect();
    for (w, &t) in witnesses(k, &jobs, opts, Some(&levels)).into_iter().zip(&angles) {
        if let Some(OrbitLimit::AxisCusp { theta0 }) = w.orbit.as_ref().map(|o| o.limit_toward(w.direction)) {
            cusps.set(format!("theta0={t}/theta1"), *theta0);
        }
        cusps.push(w);
    }
    report.families.push(cusps);

    let radii = annulus_radii(opts, x_plus_predicted);
    report
        .families
        .push(annuli(k, &radii, opts, &levels, "waist radius x0 > x_plus"));
    Ok(())
}

fn annulus_radii(opts: &ClassifyOptions, beyond: f64) -> Vec<f64> {
    if !opts.annulus_radii.is_empty() {
        return opts.annulus_radii.clone();
    }
    let base = beyond.max(0.1);
    vec![1.25 * base, 2.0 * base]
}

fn annuli(k: &PrescribedFunction, radii: &[f64], opts: &ClassifyOptions, levels: &Levels, what: &str) -> SurfaceFamily {
    let mut fam = SurfaceFamily::new(FamilyKind::SingularAnnuli, what);
    let jobs: Vec<Job> = radii
        .iter()
        .filter(|r| **r > 0.0)
        .map(|&r| {
            Job::new(
                format!("annulus x0={r}"),
                PhasePoint::new(r, FRAC_PI_2),
                Direction::Both,
            )
        })
        .collect();
    for w in witnesses(k, &jobs, opts, Some(levels)) {
        let r = w.start.x;
        if let Some(x) = limit_x(&w.limit_start) {
            fam.set(format!("x0={r}/x_start"), x);
        }
        if let Some(x) = limit_x(&w.limit_end) {
            fam.set(format!("x0={r}/x_end"), x);
        }
        fam.push(w);
    }
    fam
}

fn no_sphere_families(
    k: &PrescribedFunction,
    mink: f64,
    opts: &ClassifyOptions,
    report: &mut ClassificationReport,
) -> Result<()> {
    let levels = levels_or_err(k)?;
    report.notes.push(format!(
        "the closing condition fails ({mink:.9e}); the {} pole carries the cusp and singular-circle pair (heuristic beyond the affine case, backed by the witnesses below)",
        if mink < 0.0 { "bottom" } else { "top" }
    ));
    let [wt, wb]: [Witness; 2] = witnesses(k, &axis_jobs(), opts, Some(&levels))
        .try_into()
        .map_err(|_| Error::Integration("axis orbits missing".into()))?;

    if mink.abs() <= NEAR_CLOSED_TOL {
        let gap = match wt.limit_end {
            OrbitLimit::AxisCusp { theta0 } => PI - theta0,
            ref l => limit_x(l).unwrap_or(f64::NAN),
        };
        report.near_closed = Some(NearClosed {
            minkowski: mink,
            terminal_gap: gap,
        });
        report
            .notes
            .push("near-closed: the closing condition almost holds".into());
    }

    let mut top_fam = SurfaceFamily::new(FamilyKind::TopAxisOrbit, "orbit leaving (0, 0)");
    match wt.limit_end {
        OrbitLimit::AxisCusp { theta0 } => {
            top_fam.set("theta0", theta0);
            top_fam.set("cos_theta0", theta0.cos());
        }
        ref l => {
            if let Some(x) = limit_x(l) {
                top_fam.set("x0", x);
            }
        }
    }
    if let Some(x) = wt.orbit.as_ref().and_then(half_pi_crossing) {
        top_fam.set("x_plus", x);
    }
    top_fam.push(wt);
    report.families.push(top_fam);

    let mut bottom_fam = SurfaceFamily::new(FamilyKind::BottomAxisOrbit, "orbit arriving at (0, pi)");
    match wb.limit_start {
        OrbitLimit::AxisCusp { theta0 } => {
            bottom_fam.set("theta0", theta0);
            bottom_fam.set("cos_theta0", theta0.cos());
        }
        ref l => {
            if let Some(x) = limit_x(l) {
                bottom_fam.set("x0", x);
            }
        }
    }
    if let Some(x) = wb.orbit.as_ref().and_then(half_pi_crossing) {
        bottom_fam.set("x_minus", x);
    }
    bottom_fam.push(wb);
    report.families.push(bottom_fam);

    let mut cusps = SurfaceFamily::new(FamilyKind::AxisCuspOrbits, "cusp angle theta0 at (0, theta0)");
    let angles = valid_cusp_angles(opts);
    let jobs: Vec<Job> = angles
        .iter()
        .map(|&t| Job::new(format!("cusp theta0={t}"), PhasePoint::new(0.0, t), cusp_direction(t)))
        .collect();
    for w in witnesses(k, &jobs, opts, Some(&levels)) {
        let t = w.start.theta;
        match w.orbit.as_ref().map(|o| o.limit_toward(w.direction)) {
            Some(OrbitLimit::AxisCusp { theta0 }) => cusps.set(format!("theta0={t}/theta1"), *theta0),
            Some(l) => {
                if let Some(x) = limit_x(l) {
                    cusps.set(format!("theta0={t}/x1"), x);
                }
            }
            None => {}
        }
        cusps.push(w);
    }
    report.families.push(cusps);

    let beyond = (2.0 * levels.m(1.0)).sqrt().max((2.0 * levels.m(-1.0)).sqrt());
    let radii = annulus_radii(opts, beyond);
    report.families.push(annuli(
        k,
        &radii,
        opts,
        &levels,
        "waist radius x0 beyond both axis orbits",
    ));
    Ok(())
}

fn vanishing_families(
    k: &PrescribedFunction,
    profile: &SignProfile,
    opts: &ClassifyOptions,
    report: &mut ClassificationReport,
) -> Result<()> {
    let (lo, hi) = profile.domain;
    // the axis orbits exist when 𝔎 is positive next to the pole (𝔎(±1) = 0 allowed)
    let positive_next_to = |y: f64| {
        let region = if y > 0.0 {
            profile.regions.last()
        } else {
            profile.regions.first()
        };
        region.is_some_and(|r| r.sign == Sign::Positive && (if y > 0.0 { r.hi } else { r.lo }) == y)
    };
    let zero_at = |y: f64| k.in_domain(y) && profile.vanishes_at(y, 1e-12);
    // ν₀: where the sign region touching the pole begins
    let nu0 = profile.regions.last().filter(|r| r.lo > -1.0).map(|r| r.lo);
    let nu0_low = profile.regions.first().filter(|r| r.hi < 1.0).map(|r| r.hi);

    let mut jobs = Vec::new();
    if hi >= 1.0 && positive_next_to(1.0) {
        jobs.push(axis_jobs().into_iter().next().expect("two axis jobs"));
    }
    if lo <= -1.0 && positive_next_to(-1.0) {
        jobs.push(axis_jobs().into_iter().nth(1).expect("two axis jobs"));
    }
    for w in witnesses(k, &jobs, opts, None) {
        let top = w.direction == Direction::Forward;
        let mut fam = SurfaceFamily::new(
            FamilyKind::EntireGraphs,
            if top {
                "graph leaving the axis orthogonally at (0, 0)"
            } else {
                "graph arriving at the axis orthogonally at (0, pi)"
            },
        );
        let claim = if top {
            nu0.is_some_and(|v| v >= 0.0)
        } else {
            nu0_low.is_some_and(|v| v <= 0.0)
        };
        if let Some(v) = if top { nu0 } else { nu0_low } {
            fam.set("nu0", v);
        }
        let report_of = w.orbit.as_ref().map(|o| {
            if top {
                asymptote_report(k, o)
            } else {
                asymptote_report(&k.reflect(), &o.reflected())
            }
        });
        match report_of {
            Some(Ok(a)) => {
                match a {
                    AsymptoteReport::Entire {
                        exponent,
                        fit_residual,
                        expected,
                    } => {
                        fam.set("growth_exponent", exponent.unwrap_or(f64::NAN));
                        fam.set("fit_residual", fit_residual);
                        fam.set("expected_exponent", expected.unwrap_or(f64::NAN));
                    }
                    AsymptoteReport::CylinderConvergent { radius } => fam.set("cylinder_radius", radius),
                    AsymptoteReport::ConeConvergent { theta0 } => {
                        let t = if top { theta0 } else { PI - theta0 };
                        fam.set("cone_angle", t);
                    }
                }
                if !claim {
                    fam.kind = FamilyKind::SampleOrbits;
                }
            }
            Some(Err(e)) => {
                fam.kind = FamilyKind::SampleOrbits;
                fam.warnings.push(format!("no asymptote: {e}"));
            }
            None => fam.kind = FamilyKind::SampleOrbits,
        }
        fam.push(w);
        report.families.push(fam);
    }

    if zero_at(1.0) && zero_at(-1.0) {
        report.families.extend(example1_families(k, &opts.example_radii, opts)?);
    }
    if report.families.is_empty() {
        let mut fam = SurfaceFamily::new(
            FamilyKind::SampleOrbits,
            "orbits through (1, theta) in each sign region",
        );
        let jobs: Vec<Job> = report
            .regions
            .iter()
            .map(|r| {
                let t = 0.5 * (r.theta_lo + r.theta_hi);
                Job::new(format!("region theta={t}"), PhasePoint::new(1.0, t), Direction::Both)
            })
            .collect();
        for w in witnesses(k, &jobs, opts, None) {
            fam.push(w);
        }
        fam.warnings
            .push("no family claim applies; orbits are reported without classification".into());
        report.families.push(fam);
    }
    if nu0 == Some(0.0) || nu0_low == Some(0.0) {
        report.notes.push(
            "nu0 = 0: whether the graph is entire or converges to a cylinder is decided per instance by the integrated orbit"
                .into(),
        );
    }
    Ok(())
}

/// Families for `𝔎(±1) = 0`, split by the sign of `𝔎` inside `(−1, 1)`.
///
/// Positive inside: the orbit through `(x₀, π/2)` hits the axis at two cusp
/// angles with `M(cos θ) = x₀²/2`. Negative inside: it is asymptotic to
/// `θ = 0` and `θ = π` with `x → ∞` at both ends.
pub fn example1_families(k: &PrescribedFunction, radii: &[f64], opts: &ClassifyOptions) -> Result<Vec<SurfaceFamily>> {
    let profile = zeros_and_signs(k, 1e-12)?;
    let ends = [-1.0, 1.0];
    if !ends.iter().all(|&y| k.in_domain(y) && profile.vanishes_at(y, 1e-12)) {
        return Err(Error::Precondition(
            "the prescribed function must vanish at both -1 and 1".into(),
        ));
    }
    let inner: Vec<_> = profile.regions.iter().filter(|r| r.hi > -1.0 && r.lo < 1.0).collect();
    let all = |s: Sign| !inner.is_empty() && inner.iter().all(|r| r.sign == s) && profile.zeros.len() == 2;
    let radii: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.0).collect();
    let jobs: Vec<Job> = radii
        .iter()
        .map(|&r| Job::new(format!("x0={r}"), PhasePoint::new(r, FRAC_PI_2), Direction::Both))
        .collect();
    let ws = witnesses(k, &jobs, opts, None);

    if all(Sign::Positive) {
        let fi = FirstIntegral::canonical(k);
        let mut fam = SurfaceFamily::new(FamilyKind::CompactCuspSurfaces, "start radius x0 at (x0, pi/2)");
        for (w, &r) in ws.into_iter().zip(&radii) {
            for (key, l) in [("cos_end", &w.limit_end), ("cos_start", &w.limit_start)] {
                match l {
                    OrbitLimit::AxisCusp { theta0 } => fam.set(format!("x0={r}/{key}"), theta0.cos()),
                    other => fam.warnings.push(format!("x0={r}: {key} end is {}", other.name())),
                }
            }
            if let Some(fi) = &fi {
                let target = 0.5 * r * r;
                let edge = 1.0 - 1e-12;
                if let Some(c) = fi.solve_moment(target, 0.0, edge) {
                    fam.set(format!("x0={r}/cos_start_predicted"), c);
                }
                if let Some(c) = fi.solve_moment(target, -edge, 0.0) {
                    fam.set(format!("x0={r}/cos_end_predicted"), c);
                }
            }
            fam.push(w);
        }
        return Ok(vec![fam]);
    }
    if all(Sign::Negative) {
        let mut fam = SurfaceFamily::new(FamilyKind::CatenoidLikeAnnuli, "waist radius x0 at (x0, pi/2)");
        for (w, &r) in ws.into_iter().zip(&radii) {
            let expect = [(&w.limit_end, "end", 0.0), (&w.limit_start, "start", PI)];
            for (l, which, t) in expect {
                match l {
                    OrbitLimit::ConeAsymptote { theta0 } if (theta0 - t).abs() < 1e-6 => {
                        if let Some(o) = &w.orbit {
                            let s = if which == "end" { o.last() } else { o.first() };
                            fam.set(format!("x0={r}/x_{which}"), s.x);
                        }
                    }
                    other => fam
                        .warnings
                        .push(format!("x0={r}: {which} is {} rather than asymptotic", other.name())),
                }
            }
            fam.push(w);
        }
        return Ok(vec![fam]);
    }
    let mut fam = SurfaceFamily::new(FamilyKind::SampleOrbits, "start radius x0 at (x0, pi/2)");
    fam.warnings
        .push("the interior sign is not uniform: behaviour is reported per orbit without a family claim".into());
    for w in ws {
        fam.push(w);
    }
    Ok(vec![fam])
}

fn portrait(report: &ClassificationReport, opts: &ClassifyOptions) -> Vec<PortraitCurve> {
    report
        .witnesses()
        .filter_map(|w| {
            let o = w.orbit.as_ref()?;
            Some(PortraitCurve::from_orbit(
                &w.label,
                o,
                opts.portrait_x_max,
                opts.portrait_points,
            ))
        })
        .collect()
}
