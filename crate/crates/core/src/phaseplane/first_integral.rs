use super::{curvature_scale, PhasePoint};
use crate::numeric::{bisect, bracket};
use crate::prescribed::{zeros_and_signs, PrescribedFunction};
use crate::quadrature::{integrate, integrate_improper, QuadOptions, SingularEnd};

const NODES: usize = 128;

/// Tabulated first integral `Φ = x²/2 + ∫_b^{cos θ} t/𝔎(t) dt` on a `y`-range
/// free of interior zeros of `𝔎`.
///
/// With base `b = 0` this is the canonical first integral; any other base
/// shifts it by a constant, which is enough for conservation checks.
#[derive(Debug, Clone)]
pub struct FirstIntegral {
    k: PrescribedFunction,
    base: f64,
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

fn opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

impl FirstIntegral {
    /// Base point `0`. When `𝔎(0) = 0` the moment must converge at `0` from
    /// at least one side.
    pub fn canonical(k: &PrescribedFunction) -> Option<Self> {
        if !k.in_domain(0.0) {
            return None;
        }
        let scale = curvature_scale(k);
        if k.value(0.0).abs() > 1e-12 * scale {
            let (lo, hi) = zero_free_range(k, 0.0)?;
            return Self::build(k, 0.0, lo, hi);
        }
        // 𝔎(0) = 0: keep the sides on which the moment converges
        let f = |t: f64| t / k.value(t);
        let conv = |a: f64, b: f64, end| integrate_improper(f, a, b, end, opts()).is_ok();
        let probe = 1e-9;
        let right = (k.in_domain(probe))
            .then(|| zero_free_range(k, probe))
            .flatten()
            .filter(|&(a, b)| a == 0.0 && b > 0.0 && conv(0.0, 0.5 * b, SingularEnd::Lower))
            .map(|(_, b)| b);
        let left = (k.in_domain(-probe))
            .then(|| zero_free_range(k, -probe))
            .flatten()
            .filter(|&(a, b)| b == 0.0 && a < 0.0 && conv(0.5 * a, 0.0, SingularEnd::Upper))
            .map(|(a, _)| a);
        match (left, right) {
            (None, None) => None,
            (a, b) => Self::build(k, 0.0, a.unwrap_or(0.0), b.unwrap_or(0.0)),
        }
    }

    /// The canonical integral if it covers `y`, else one based at `y` over the
    /// zero-free range containing it.
    pub fn around(k: &PrescribedFunction, y: f64) -> Option<Self> {
        if let Some(fi) = Self::canonical(k) {
            if fi.covers(y) {
                return Some(fi);
            }
        }
        let (lo, hi) = zero_free_range(k, y)?;
        if y <= lo || y >= hi {
            return None;
        }
        Self::build(k, y, lo, hi)
    }

    fn build(k: &PrescribedFunction, base: f64, lo: f64, hi: f64) -> Option<Self> {
        if !(hi > lo) {
            return None;
        }
        let scale = curvature_scale(k);
        let vanishes = |y: f64| k.value(y).abs() <= 1e-12 * scale;
        let f = |t: f64| t / k.value(t);
        let mut nodes: Vec<f64> = (1..NODES).map(|j| lo + (hi - lo) * j as f64 / NODES as f64).collect();
        if !vanishes(lo) {
            nodes.insert(0, lo);
        }
        if !vanishes(hi) {
            nodes.push(hi);
        }
        nodes.push(base);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|b, a| (*b - *a).abs() <= 1e-15);
        let ib = nodes.iter().position(|&n| n == base)?;
        let mut cumulative = vec![0.0; nodes.len()];
        let base_singular = vanishes(base);
        let segment = |a: f64, b: f64, from_base: bool| -> Option<f64> {
            let r = if from_base && base_singular {
                let end = if a == base {
                    SingularEnd::Lower
                } else {
                    SingularEnd::Upper
                };
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let sign = if a < b { 1.0 } else { -1.0 };
                let end = if sign > 0.0 { end } else { flip(end) };
                integrate_improper(f, lo, hi, end, opts()).ok()?.value * sign
            } else {
                integrate(f, a, b, opts()).ok()?.value
            };
            r.is_finite().then_some(r)
        };
        for j in ib + 1..nodes.len() {
            cumulative[j] = cumulative[j - 1] + segment(nodes[j - 1], nodes[j], j - 1 == ib)?;
        }
        for j in (0..ib).rev() {
            cumulative[j] = cumulative[j + 1] + segment(nodes[j + 1], nodes[j], j + 1 == ib)?;
        }
        Some(Self {
            k: k.clone(),
            base,
            lo,
            hi,
            nodes,
            cumulative,
        })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// `y`-range on which the moment is defined (endpoints may be zeros of `𝔎`).
    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn covers(&self, y: f64) -> bool {
        (y > self.lo && y < self.hi) || self.nodes.contains(&y) || y == self.base
    }

    /// `∫_base^c t/𝔎(t) dt`, or `None` outside the range.
    pub fn moment(&self, c: f64) -> Option<f64> {
        if !self.covers(c) {
            return None;
        }
        if self.nodes.len() < 2 {
            return Some(0.0);
        }
        let i = bracket(&self.nodes, c);
        let j = if (c - self.nodes[i]).abs() <= (self.nodes[i + 1] - c).abs() {
            i
        } else {
            i + 1
        };
        if self.nodes[j] == c {
            return Some(self.cumulative[j]);
        }
        if self.nodes[j] == self.base && self.k.value(self.base).abs() <= 1e-12 * curvature_scale(&self.k) {
            // stay clear of the singular base; use the other neighbour
            let other = if j == i { i + 1 } else { i };
            return self.tail(other, c);
        }
        self.tail(j, c)
    }

    fn tail(&self, j: usize, c: f64) -> Option<f64> {
        let f = |t: f64| t / self.k.value(t);
        let r = integrate(f, self.nodes[j], c, opts()).ok()?;
        let v = self.cumulative[j] + r.value;
        v.is_finite().then_some(v)
    }

    pub fn phi(&self, p: PhasePoint) -> Option<f64> {
        Some(0.5 * p.x * p.x + self.moment(p.theta.cos())?)
    }

    /// `x ≥ 0` on the level set `Φ = level` at angle `θ`, if any.
    pub fn level_set_x(&self, level: f64, theta: f64) -> Option<f64> {
        let m = self.moment(theta.cos())?;
        let x2 = 2.0 * (level - m);
        (x2 >= 0.0).then(|| x2.sqrt())
    }

    /// Root `c` in `[a, b]` of `M(c) = target`, assuming a sign change.
    pub fn solve_moment(&self, target: f64, a: f64, b: f64) -> Option<f64> {
        let g = |c: f64| self.moment(c).map_or(f64::NAN, |m| m - target);
        let (ga, gb) = (g(a), g(b));
        if !(ga * gb <= 0.0) {
            return None;
        }
        Some(bisect(g, a, b, 1e-15))
    }
}

fn flip(end: SingularEnd) -> SingularEnd {
    match end {
        SingularEnd::Lower => SingularEnd::Upper,
        SingularEnd::Upper => SingularEnd::Lower,
    }
}

/// Largest interval around `y` containing no zero of `𝔎` in its interior.
fn zero_free_range(k: &PrescribedFunction, y: f64) -> Option<(f64, f64)> {
    let profile = zeros_and_signs(k, 1e-12).ok()?;
    let (mut lo, mut hi) = profile.domain;
    for z in &profile.zeros {
        if z.hi() <= y && z.hi() > lo {
            lo = z.hi();
        }
        if z.lo() >= y && z.lo() < hi {
            hi = z.lo();
        }
        if z.lo() < y && z.hi() > y {
            return None;
        }
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn canonical_matches_closed_forms() {
        let fi = FirstIntegral::canonical(&PrescribedFunction::affine(1.0, 2.0)).unwrap();
        for c in [-0.9, -0.3, 0.0, 0.4, 1.0] {
            let exact = c - 2.0 * ((c + 2.0) / 2.0f64).ln();
            assert!((fi.moment(c).unwrap() - exact).abs() < 1e-13, "{c}");
        }
    }

    #[test]
    fn improper_base_for_linear_curvature() {
        // 𝔎 = y: moment is c on both sides of the zero
        let fi = FirstIntegral::canonical(&PrescribedFunction::power(1.0)).unwrap();
        assert_eq!(fi.range(), (-1.0, 1.0));
        assert!((fi.moment(0.6).unwrap() - 0.6).abs() < 1e-12);
        assert!((fi.moment(-0.3).unwrap() + 0.3).abs() < 1e-12);
        assert!((fi.phi(PhasePoint::new(2f64.sqrt(), FRAC_PI_2)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_at_origin_has_no_canonical_form() {
        assert!(FirstIntegral::canonical(&PrescribedFunction::power(4.0)).is_none());
        let fi = FirstIntegral::around(&PrescribedFunction::power(4.0), 0.5).unwrap();
        assert_eq!(fi.base(), 0.5);
        // ∫_{0.5}^{c} t^{-3} = (4 − c^{-2})/2
        let c: f64 = 0.8;
        assert!((fi.moment(c).unwrap() - 0.5 * (4.0 - c.powi(-2))).abs() < 1e-12);
        assert!(fi.moment(-0.5).is_none());
    }

    #[test]
    fn level_set_and_root() {
        let k = PrescribedFunction::polynomial(vec![1.0, 0.0, -1.0]);
        let fi = FirstIntegral::canonical(&k).unwrap();
        // Φ = x²/2 − ½ ln(1 − c²); from (1, π/2) the axis is hit where M(c) = 1/2
        let c = fi.solve_moment(0.5, 0.0, 0.999_999).unwrap();
        assert!((c - (1.0 - (-1.0f64).exp()).sqrt()).abs() < 1e-12);
        let x = fi.level_set_x(0.5, FRAC_PI_2).unwrap();
        assert!((x - 1.0).abs() < 1e-14);
    }
}
