use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use ksurf_core::classify::{classify, example1_families, pseudosphere_limit, ClassifyOptions, FamilyKind, Regime};
use ksurf_core::phaseplane::OrbitOptions;
use ksurf_core::PrescribedFunction;

fn report(k: &PrescribedFunction) -> ksurf_core::classify::ClassificationReport {
    classify(k, &ClassifyOptions::default()).unwrap()
}

/// Plain bisection on a bracketing interval.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn unit_sphere() {
    let r = report(&PrescribedFunction::constant(1.0));
    assert_eq!(r.regime, Regime::StrictlyPositiveWithSphere);
    assert!(r.minkowski_value.unwrap().abs() < 1e-14);
    let s = r.family(FamilyKind::Sphere).unwrap();
    assert!((s.data["x_plus"] - 1.0).abs() < 1e-8);
    assert!((s.data["height"] - 2.0).abs() < 1e-6);
    assert!(s.warnings.is_empty(), "{:?}", s.warnings);
}

#[test]
fn shifted_affine_has_no_sphere() {
    let r = report(&PrescribedFunction::affine(1.0, 2.0));
    assert_eq!(r.regime, Regime::StrictlyPositiveNoSphere);
    let exact = 2.0 - 2.0 * 3f64.ln();
    assert!((r.minkowski_value.unwrap() - exact).abs() < 1e-8);

    // level set through (0, 0): c − 2 ln((c + 2)/2) = 1 − 2 ln(3/2), negative root
    let level = 1.0 - 2.0 * 1.5f64.ln();
    let c = bisect(|c| c - 2.0 * ((c + 2.0) / 2.0).ln() - level, -1.0, 0.0);
    let top = r.family(FamilyKind::TopAxisOrbit).unwrap();
    assert!(top.data["theta0"] > FRAC_PI_2);
    assert!(
        (top.data["cos_theta0"] - c).abs() < 1e-5,
        "{} vs {c}",
        top.data["cos_theta0"]
    );
}

#[test]
fn negative_constant_families() {
    let r = report(&PrescribedFunction::constant(-1.0));
    assert_eq!(r.regime, Regime::StrictlyNegative);
    let waists = r.family(FamilyKind::WaistAnnuli).unwrap();
    for x0 in [0.5f64, 1.0, 2.0] {
        // x² − cos²θ is constant, so the ends sit at √(x₀² + 1)
        let expected = (x0 * x0 + 1.0).sqrt();
        assert!((waists.data[&format!("x0={x0}/x_top")] - expected).abs() < 1e-6);
        assert!((waists.data[&format!("x0={x0}/x_bottom")] - expected).abs() < 1e-6);
    }
    let ps = r.family(FamilyKind::PseudosphereAnalogues).unwrap();
    assert!((ps.data["x_infinity"] - 1.0).abs() < 1e-6);
    assert!(r.family(FamilyKind::CuspGraphs).is_some());
}

#[test]
fn pseudosphere_radii() {
    let opts = OrbitOptions::default();
    let four = pseudosphere_limit(&PrescribedFunction::constant(-4.0), 10, &opts).unwrap();
    assert!((four.x_infinity - 0.5).abs() < 1e-10);
    let quad = pseudosphere_limit(&PrescribedFunction::polynomial(vec![-1.0, 0.0, -1.0]), 10, &opts).unwrap();
    assert!((quad.x_infinity - 2f64.ln().sqrt()).abs() < 1e-10);
    assert!(quad.agreement < 1e-4, "{}", quad.agreement);
}

#[test]
fn vanishing_at_one_half_gives_a_cone() {
    let r = report(&PrescribedFunction::affine(1.0, -0.5));
    assert_eq!(r.regime, Regime::VanishesSomewhere);
    let f = r.family(FamilyKind::EntireGraphs).unwrap();
    assert!((f.data["cone_angle"] - FRAC_PI_3).abs() < 1e-4);
}

#[test]
fn compact_cusp_surfaces_of_one_minus_y_squared() {
    let k = PrescribedFunction::polynomial(vec![1.0, 0.0, -1.0]);
    let fams = example1_families(&k, &[1.0, 0.1], &ClassifyOptions::default()).unwrap();
    let f = fams.iter().find(|f| f.kind == FamilyKind::CompactCuspSurfaces).unwrap();
    for x0 in [1.0f64, 0.1] {
        // x₀²/2 = −½ ln(1 − c²)
        let c = (1.0 - (-x0 * x0).exp()).sqrt();
        let a = f.data[&format!("x0={x0}/cos_start")];
        let b = f.data[&format!("x0={x0}/cos_end")];
        let (lo, hi) = (a.min(b), a.max(b));
        assert!((hi - c).abs() < 1e-6 && (lo + c).abs() < 1e-6, "{x0}: {a} {b} vs ±{c}");
    }
}

#[test]
fn catenoid_like_annuli_of_y_squared_minus_one() {
    let k = PrescribedFunction::polynomial(vec![-1.0, 0.0, 1.0]);
    let fams = example1_families(&k, &[1.0], &ClassifyOptions::default()).unwrap();
    let f = fams.iter().find(|f| f.kind == FamilyKind::CatenoidLikeAnnuli).unwrap();
    assert!(f.warnings.is_empty(), "{:?}", f.warnings);
    // x grows monotonically away from the waist on both sides
    let orbit = f.witnesses[0].orbit.as_ref().unwrap();
    let waist = orbit.samples.iter().position(|p| p.theta == FRAC_PI_2).unwrap();
    assert!(orbit.samples[..=waist].windows(2).all(|w| w[0].x >= w[1].x));
    assert!(orbit.samples[waist..].windows(2).all(|w| w[0].x <= w[1].x));
    assert!(
        f.data["x0=1/x_start"] > 5.0 && f.data["x0=1/x_end"] > 5.0,
        "{:?}",
        f.data
    );
}
