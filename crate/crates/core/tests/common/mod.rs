#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use ksurf_core::numeric::hermite;
use ksurf_core::phaseplane::{
    conserved_quantity, integrate_orbit, monotonicity_regions, Direction, Orbit, OrbitOptions, PhasePoint, SampleMode,
};
use ksurf_core::prescribed::{Sign, Table};
use ksurf_core::PrescribedFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random prescribed functions of every kind, reproducible from `seed`.
pub fn battery(seed: u64, n: usize) -> Vec<PrescribedFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_function(&mut rng, i % 6)).collect()
}

fn nonzero(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn random_function(rng: &mut ChaCha8Rng, kind: usize) -> PrescribedFunction {
    match kind {
        0 => PrescribedFunction::constant(nonzero(rng, 0.2, 3.0)),
        1 => PrescribedFunction::affine(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        2 => {
            let degree = rng.gen_range(2..=3);
            PrescribedFunction::polynomial((0..=degree).map(|_| rng.gen_range(-2.0..2.0)).collect())
        }
        3 => PrescribedFunction::power(rng.gen_range(0.5..5.0)),
        4 => PrescribedFunction::poly_dual(rng.gen_range(2..=5)).expect("n >= 2"),
        _ => {
            let (a, b, c) = (
                nonzero(rng, 0.5, 2.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.5..3.0),
            );
            let ys: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
            let values = ys.iter().map(|y| a + b * (c * y).sin()).collect();
            PrescribedFunction::tabulated(Table::new(ys, values).expect("valid table"))
        }
    }
}

pub fn battery_options() -> OrbitOptions {
    OrbitOptions {
        max_arclength: 200.0,
        ..OrbitOptions::default()
    }
}

/// Interior starts at the middle of every monotonicity region.
pub fn region_starts(k: &PrescribedFunction) -> Vec<PhasePoint> {
    let regions = monotonicity_regions(k).unwrap_or_default();
    let mut out = Vec::new();
    for r in &regions {
        let t = 0.5 * (r.theta_lo + r.theta_hi);
        for x in [0.4, 1.3] {
            out.push(PhasePoint::new(x, t));
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct Tally {
    pub checks: usize,
    pub violations: Vec<String>,
}

impl Tally {
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(what());
        }
    }

    pub fn merge(&mut self, other: Tally) {
        self.checks += other.checks;
        self.violations.extend(other.violations);
    }
}

fn forward(k: &PrescribedFunction, p: PhasePoint, d: Direction, opts: &OrbitOptions) -> Option<Orbit> {
    integrate_orbit(k, p, d, opts).ok()
}

/// `Φ` re-evaluated by quadrature on a subsample, against its start value.
///
/// The allowance grows with the sensitivity `|∂Φ/∂x| x + |∂Φ/∂θ|` at the
/// sample: near a zero line of `𝔎` the moment is logarithmic and a state
/// error at the integrator tolerance moves `Φ` by much more.
pub fn conservation(k: &PrescribedFunction, o: &Orbit, tally: &mut Tally) {
    let p0 = o.first();
    let Ok(phi0) = conserved_quantity(k, p0.point()) else {
        return;
    };
    let stride = (o.len() / 60).max(1);
    for p in o.samples.iter().step_by(stride) {
        if let Ok(phi) = conserved_quantity(k, p.point()) {
            let c = p.theta.cos();
            let sensitivity = p.x * p.x + (p.theta.sin() * c / k.value(c)).abs();
            let allowed = 1e-8 * (1.0 + phi0.abs() + sensitivity) * (p.s - p0.s).abs().max(1.0);
            tally.check((phi - phi0).abs() <= allowed, || {
                format!(
                    "{k}: phi drift {:e} at s = {} from {:?}",
                    (phi - phi0).abs(),
                    p.s,
                    p0.point()
                )
            });
        }
    }
}

/// Consecutive samples inside one region move in the region's directions.
pub fn monotonicity(k: &PrescribedFunction, o: &Orbit, tally: &mut Tally) {
    let regions = monotonicity_regions(k).unwrap_or_default();
    let tol = battery_options().tol;
    for w in o.samples.windows(2) {
        let Some(r) = regions
            .iter()
            .find(|r| r.contains(w[0].theta) && r.contains(w[1].theta))
        else {
            continue;
        };
        let (dx, dt) = (w[1].x - w[0].x, w[1].theta - w[0].theta);
        // orbits hugging a zero line of 𝔎 jitter at the integrator tolerance
        let slack = |v: f64| 10.0 * tol * (1.0 + v.abs());
        let sign = |s: Sign| s.as_f64();
        tally.check(dx * sign(r.sign_dx) >= -slack(w[0].x), || {
            format!("{k}: x moves against its region at s = {}", w[1].s)
        });
        tally.check(dt * sign(r.sign_dtheta) >= -slack(w[0].theta), || {
            format!("{k}: theta moves against its region at s = {}", w[1].s)
        });
    }
}

/// Every sample recorded on `θ = π/2` has `x′ = 0` exactly.
pub fn half_pi_crossings(k: &PrescribedFunction, o: &Orbit, tally: &mut Tally) {
    for p in o.samples.iter().filter(|p| p.theta == FRAC_PI_2) {
        tally.check(p.dx_ds == 0.0, || format!("{k}: dx/ds = {} on theta = pi/2", p.dx_ds));
    }
}

/// Orbit of `𝔎` forward against the orbit of `y ↦ 𝔎(−y)` backward from the
/// mirrored start, compared at equal `|s|`.
pub fn reflection(k: &PrescribedFunction, start: PhasePoint, tally: &mut Tally) {
    let h = 0.05;
    let opts = OrbitOptions {
        sample: SampleMode::Uniform(h),
        max_arclength: 5.0,
        track_drift: false,
        ..OrbitOptions::default()
    };
    let (Some(a), Some(b)) = (
        forward(k, start, Direction::Forward, &opts),
        forward(&k.reflect(), start.reflected(), Direction::Backward, &opts),
    ) else {
        return;
    };
    let on_grid = |s: f64| {
        let n = s / h;
        ((n - n.round()).abs() < 1e-9).then(|| n.round() as i64)
    };
    let mut bs = std::collections::HashMap::new();
    for p in &b.samples {
        if let Some(n) = on_grid(p.s) {
            bs.insert(-n, p);
        }
    }
    for p in &a.samples {
        let Some(q) = on_grid(p.s).and_then(|n| bs.get(&n)) else {
            continue;
        };
        let err = (p.x - q.x).abs().max((p.theta - (PI - q.theta)).abs());
        tally.check(err <= 1e-8, || {
            format!("{k}: reflection gap {err:e} at s = {} from {start:?}", p.s)
        });
    }
    tally.check(a.limit_end.reflected().name() == b.limit_start.name(), || {
        format!(
            "{k}: reflected limits {} vs {}",
            a.limit_end.name(),
            b.limit_start.name()
        )
    });
}

/// Graphs `θ(x)` leaving one vertical line keep their order.
pub fn non_crossing(k: &PrescribedFunction, x0: f64, tally: &mut Tally) {
    let opts = OrbitOptions {
        stop_at_half_pi: true,
        stop_at_x: Some(x0 + 2.0),
        max_arclength: 50.0,
        track_drift: false,
        ..OrbitOptions::default()
    };
    let mut graphs: Vec<(f64, Orbit)> = Vec::new();
    for j in 0..10 {
        let t = 0.1 + (PI - 0.2) * j as f64 / 9.0;
        if (t - FRAC_PI_2).abs() < 1e-3 || !k.in_domain(t.cos()) {
            continue;
        }
        // x increases forward above the equator and backward below it
        let d = if t < FRAC_PI_2 {
            Direction::Forward
        } else {
            Direction::Backward
        };
        if let Some(o) = forward(k, PhasePoint::new(x0, t), d, &opts) {
            graphs.push((t, o));
        }
    }
    let as_graph = |o: &Orbit| -> Vec<(f64, f64, f64)> {
        let mut v: Vec<_> = o
            .samples
            .iter()
            .filter(|p| p.dx_ds.abs() > 1e-3)
            .map(|p| (p.x, p.theta, p.dtheta_ds / p.dx_ds))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.dedup_by(|b, a| b.0 <= a.0);
        v
    };
    let curves: Vec<(f64, Vec<(f64, f64, f64)>)> = graphs.iter().map(|(t, o)| (*t, as_graph(o))).collect();
    for w in curves.windows(2) {
        let ((_, lo), (_, hi)) = (&w[0], &w[1]);
        if lo.len() < 2 || hi.len() < 2 {
            continue;
        }
        let x_end = lo.last().unwrap().0.min(hi.last().unwrap().0);
        for &(x, t_lo, _) in lo.iter().filter(|p| p.0 <= x_end) {
            let i = hi.partition_point(|p| p.0 <= x);
            if i == 0 || i >= hi.len() {
                continue;
            }
            let (a, b) = (hi[i - 1], hi[i]);
            let t_hi = hermite(a.0, b.0, a.1, b.1, a.2, b.2, x);
            tally.check(t_lo <= t_hi + 1e-7, || {
                format!("{k}: graphs cross near x = {x} ({t_lo} > {t_hi})")
            });
        }
    }
}

/// All five property families on one function.
pub fn property_suite(k: &PrescribedFunction) -> Tally {
    let mut tally = Tally::default();
    let opts = battery_options();
    for p in region_starts(k) {
        for d in [Direction::Forward, Direction::Backward] {
            if let Some(o) = forward(k, p, d, &opts) {
                conservation(k, &o, &mut tally);
                monotonicity(k, &o, &mut tally);
                half_pi_crossings(k, &o, &mut tally);
            }
        }
        reflection(k, p, &mut tally);
    }
    non_crossing(k, 0.5, &mut tally);
    tally
}
