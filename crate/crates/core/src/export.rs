//! Plain-file artifacts: CSV tables and SVG plots. Meshes write their own
//! Wavefront text through `SurfaceMesh::write_obj`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write;

use crate::classify::PortraitCurve;
use crate::error::Result;
use crate::geometry::{ProfileCurve, AXIS_EPS};
use crate::phaseplane::{integrate_through, FirstIntegral, Orbit, OrbitOptions, PhasePoint};
use crate::prescribed::{zeros_and_signs, PrescribedFunction};
use crate::radial::RadialSolution;

fn opt(v: Option<f64>) -> String {
    v.filter(|v| v.is_finite()).map(|v| v.to_string()).unwrap_or_default()
}

/// Columns `s, x, theta, dx_ds, dtheta_ds, phi`; `phi` is empty where the
/// first integral is undefined.
pub fn write_orbit_csv<W: Write>(k: &PrescribedFunction, orbit: &Orbit, w: W) -> Result<()> {
    let mid = orbit.samples.get(orbit.len() / 2).map(|s| s.theta.cos());
    let fi = mid.and_then(|y| FirstIntegral::around(k, y));
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "x", "theta", "dx_ds", "dtheta_ds", "phi"])?;
    for p in &orbit.samples {
        let phi = fi.as_ref().and_then(|fi| fi.phi(p.point()));
        out.write_record([
            p.s.to_string(),
            p.x.to_string(),
            p.theta.to_string(),
            p.dx_ds.to_string(),
            p.dtheta_ds.to_string(),
            opt(phi),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `x, g, u, u_prime, arclength` on the radial grid.
pub fn write_radial_csv<W: Write>(sol: &RadialSolution, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "g", "u", "u_prime", "arclength"])?;
    for i in 0..sol.grid.len() {
        out.write_record([sol.grid[i], sol.g[i], sol.u[i], sol.u_prime[i], sol.arclength[i]].map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `s, x, z, theta, kappa1, kappa2, gauss, residual`; curvature
/// columns are empty on the axis.
pub fn write_profile_csv<W: Write>(k: &PrescribedFunction, profile: &ProfileCurve, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["s", "x", "z", "theta", "kappa1", "kappa2", "gauss", "residual"])?;
    for p in &profile.samples {
        let curv = (p.x > AXIS_EPS && p.theta > 0.0 && p.theta < PI)
            .then(|| {
                let kv = k.evaluate(p.theta.cos()).ok()?;
                let k1 = p.x * kv / p.theta.sin();
                let k2 = p.theta.sin() / p.x;
                Some([k1, k2, k1 * k2, (k1 * k2 - kv).abs()])
            })
            .flatten();
        let mut row = vec![p.s.to_string(), p.x.to_string(), p.z.to_string(), p.theta.to_string()];
        row.extend((0..4).map(|i| opt(curv.map(|c| c[i]))));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Orbits through a `grid × grid` lattice of interior starts in
/// `(0, x_max) × (0, π)`.
pub fn grid_portrait(
    k: &PrescribedFunction,
    grid: usize,
    x_max: f64,
    opts: &OrbitOptions,
) -> Result<Vec<PortraitCurve>> {
    let opts = OrbitOptions {
        x_max: opts.x_max.min(4.0 * x_max),
        max_arclength: opts.max_arclength.min(20.0 * x_max + 20.0),
        track_drift: false,
        ..*opts
    };
    let mut out = Vec::new();
    for i in 1..=grid {
        for j in 1..=grid {
            let x = x_max * i as f64 / (grid + 1) as f64;
            let theta = PI * j as f64 / (grid + 1) as f64;
            let start = PhasePoint::new(x, theta);
            if !k.in_domain(theta.cos()) {
                continue;
            }
            // failures are dropped: a portrait is a picture, not a claim
            if let Ok(o) = integrate_through(k, start, &opts) {
                out.push(PortraitCurve::from_orbit(
                    &format!("({x:.3}, {theta:.3})"),
                    &o,
                    x_max,
                    400,
                ));
            }
        }
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 40.0;

/// Phase portrait on the fixed window `x ∈ [0, x_max]`, `θ ∈ [0, π]`
/// (`θ = 0` at the bottom). Dividing lines are dashed; when `𝔎(0) = 0` the
/// line of equilibria `θ = π/2` is dotted instead.
pub fn portrait_svg(k: &PrescribedFunction, curves: &[PortraitCurve], x_max: f64) -> Result<String> {
    let profile = zeros_and_signs(k, 1e-12)?;
    let px = |x: f64| M + (W - 2.0 * M) * x / x_max;
    let py = |t: f64| H - M - (H - 2.0 * M) * t / PI;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let hline = |s: &mut String, t: f64, dash: &str, color: &str| {
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.3}" x2="{}" y2="{y:.3}" stroke="{color}" stroke-dasharray="{dash}"/>"#,
            px(0.0),
            px(x_max),
            y = py(t)
        );
    };
    let equilibria = k.in_domain(0.0) && profile.vanishes_at(0.0, 1e-12);
    if equilibria {
        hline(&mut s, FRAC_PI_2, "1 3", "black");
    } else {
        hline(&mut s, FRAC_PI_2, "6 4", "gray");
    }
    for y in profile.zero_points() {
        if y.abs() > 1e-12 && y > -1.0 && y < 1.0 {
            hline(&mut s, y.acos(), "6 4", "gray");
        }
    }
    for c in curves {
        for seg in &c.segments {
            if seg.len() < 2 {
                continue;
            }
            let pts: Vec<String> = seg.iter().map(|p| format!("{:.3},{:.3}", px(p[0]), py(p[1]))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="steelblue" stroke-width="1" points="{}"><title>{}</title></polyline>"#,
                pts.join(" "),
                escape(&c.label)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">x</text>"#,
        W / 2.0,
        H - 10.0
    );
    let _ = writeln!(s, r#"<text x="12" y="{}" font-size="12">θ</text>"#, H / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10">π</text>"#,
        M - 14.0,
        py(PI) + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10">0</text>"#,
        M - 14.0,
        py(0.0) + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10">{x_max}</text>"#,
        px(x_max) - 8.0,
        H - M + 14.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Meridian and its mirror image in the `(x, z)` plane, scaled to fit.
pub fn profile_svg(profile: &ProfileCurve) -> String {
    let p = &profile.samples;
    let xr = p.iter().fold(0.0f64, |m, q| m.max(q.x)).max(1e-9);
    let (z0, z1) = p
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q.z), b.max(q.z)));
    let zr = (z1 - z0).max(1e-9);
    let scale = ((W - 2.0 * M) / (2.0 * xr)).min((H - 2.0 * M) / zr);
    let cx = W / 2.0;
    let map = |x: f64, z: f64| format!("{:.3},{:.3}", cx + scale * x, H - M - scale * (z - z0));
    let right: Vec<String> = p.iter().map(|q| map(q.x, q.z)).collect();
    let left: Vec<String> = p.iter().map(|q| map(-q.x, q.z)).collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{cx}" y1="{M}" x2="{cx}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        H - M
    );
    for pts in [right, left] {
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="darkred" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
