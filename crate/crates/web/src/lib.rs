//! Browser bindings: a phase portrait, a meridian profile and a
//! classification summary for a prescribed function given as text.

use std::f64::consts::PI;

use ksurf_core::classify::{classify, ClassifyOptions};
use ksurf_core::export::{grid_portrait, portrait_svg, profile_svg};
use ksurf_core::geometry::profile_from_orbit;
use ksurf_core::phaseplane::{integrate_orbit, integrate_through, Direction, OrbitOptions, PhasePoint};
use ksurf_core::PrescribedFunction;
use wasm_bindgen::prelude::*;

// Interactive budgets: a stalled orbit should cost a fraction of a second.
fn options() -> OrbitOptions {
    OrbitOptions {
        tol: 1e-10,
        max_arclength: 200.0,
        max_steps: 200_000,
        ..OrbitOptions::default()
    }
}

fn parse(spec: &str) -> Result<PrescribedFunction, String> {
    spec.trim().parse().map_err(|e: ksurf_core::Error| e.to_string())
}

pub fn portrait(spec: &str, x_max: f64, grid: usize) -> Result<String, String> {
    if !(x_max > 0.0 && x_max <= 50.0) || !(1..=24).contains(&grid) {
        return Err("window must lie in (0, 50] and the grid in 1..=24".into());
    }
    let k = parse(spec)?;
    let curves = grid_portrait(&k, grid, x_max, &options()).map_err(|e| e.to_string())?;
    portrait_svg(&k, &curves, x_max).map_err(|e| e.to_string())
}

/// Profile through `(x0, theta0)`; `x0 = 0` means the axis point with
/// `theta0` either `0` (leaving upward) or `π` (leaving downward).
pub fn profile(spec: &str, x0: f64, theta0: f64) -> Result<String, String> {
    let k = parse(spec)?;
    if !(x0 >= 0.0) || !(0.0..=PI).contains(&theta0) {
        return Err("need x0 ≥ 0 and theta0 in [0, π]".into());
    }
    let opts = options();
    let orbit = if x0 == 0.0 {
        if theta0 < PI / 2.0 {
            integrate_orbit(&k, PhasePoint::new(0.0, 0.0), Direction::Forward, &opts)
        } else {
            integrate_orbit(&k, PhasePoint::new(0.0, PI), Direction::Backward, &opts)
        }
    } else {
        integrate_through(&k, PhasePoint::new(x0, theta0), &opts)
    }
    .map_err(|e| e.to_string())?;
    let p = profile_from_orbit(&orbit, 0.0).map_err(|e| e.to_string())?;
    Ok(profile_svg(&p))
}

pub fn summary(spec: &str) -> Result<String, String> {
    let k = parse(spec)?;
    let opts = ClassifyOptions {
        orbit: options(),
        parallel: false,
        ..ClassifyOptions::default()
    };
    let report = classify(&k, &opts).map_err(|e| e.to_string())?;
    let families: Vec<_> = report
        .families
        .iter()
        .map(|f| {
            serde_json::json!({
                "kind": f.kind,
                "data": f.data,
                "warnings": f.warnings,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "function": report.function,
        "regime": report.regime,
        "minkowski": report.minkowski_value,
        "families": families,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn portrait_svg_for(spec: &str, x_max: f64, grid: usize) -> Result<String, JsError> {
    portrait(spec, x_max, grid).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn profile_svg_for(spec: &str, x0: f64, theta0: f64) -> Result<String, JsError> {
    profile(spec, x0, theta0).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn classify_json(spec: &str) -> Result<String, JsError> {
    summary(spec).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn portrait_is_an_svg() {
        let s = portrait("const:1", 3.0, 4).unwrap();
        assert!(s.starts_with("<svg") && s.contains("<polyline"));
        assert!(portrait("const:1", -1.0, 4).is_err());
    }

    #[test]
    fn profile_of_the_sphere() {
        let s = profile("const:1", 0.0, 0.0).unwrap();
        assert!(s.contains("<svg"));
        assert!(profile("const:1", -1.0, 0.0).is_err());
    }

    #[test]
    fn summary_names_the_regime() {
        let v: serde_json::Value = serde_json::from_str(&summary("affine:1,2").unwrap()).unwrap();
        assert_eq!(v["regime"], "StrictlyPositiveNoSphere");
        assert!(summary("bogus").is_err());
    }
}
