use serde::Serialize;

use super::{FunctionKind, PrescribedFunction};
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_min};

/// Uniform scan resolution used to bracket zeros.
pub const ZERO_SCAN_INTERVALS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Positive)
        } else if v < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Zero {
    /// Isolated zero; `tangential` when the function does not change sign there.
    Point { y: f64, tangential: bool },
    /// The function vanishes identically on `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

impl Zero {
    pub fn lo(&self) -> f64 {
        match *self {
            Zero::Point { y, .. } => y,
            Zero::Interval { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Zero::Point { y, .. } => y,
            Zero::Interval { hi, .. } => hi,
        }
    }

    pub fn contains(&self, y: f64, tol: f64) -> bool {
        y >= self.lo() - tol && y <= self.hi() + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignRegion {
    pub lo: f64,
    pub hi: f64,
    pub sign: Sign,
}

/// Zero set and sign structure of a prescribed function over its domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignProfile {
    pub domain: (f64, f64),
    pub zeros: Vec<Zero>,
    pub regions: Vec<SignRegion>,
    pub largest_zero_in_unit: Option<f64>,
    pub value_at_minus_one: Option<f64>,
    pub value_at_zero: Option<f64>,
    pub value_at_plus_one: Option<f64>,
    pub tol: f64,
    pub scale: f64,
    pub warnings: Vec<String>,
}

impl SignProfile {
    pub fn has_zeros(&self) -> bool {
        !self.zeros.is_empty()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.zeros.is_empty() && self.regions.iter().all(|r| r.sign == Sign::Positive)
    }

    pub fn is_strictly_negative(&self) -> bool {
        self.zeros.is_empty() && self.regions.iter().all(|r| r.sign == Sign::Negative)
    }

    /// True when `y` lies in (or within `slack` of) the zero set.
    pub fn vanishes_at(&self, y: f64, slack: f64) -> bool {
        self.zeros.iter().any(|z| z.contains(y, slack))
    }

    /// Zeros strictly inside `(a, b)` (either order).
    pub fn zeros_inside(&self, a: f64, b: f64) -> Vec<Zero> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.zeros
            .iter()
            .filter(|z| z.hi() > lo && z.lo() < hi)
            .copied()
            .collect()
    }

    /// Sign of the region containing `y`, if `y` is not a zero.
    pub fn sign_at(&self, y: f64) -> Option<Sign> {
        self.regions.iter().find(|r| y > r.lo && y < r.hi).map(|r| r.sign)
    }

    /// Point-zero locations (interval zeros contribute both endpoints).
    pub fn zero_points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for z in &self.zeros {
            match *z {
                Zero::Point { y, .. } => out.push(y),
                Zero::Interval { lo, hi } => {
                    out.push(lo);
                    out.push(hi);
                }
            }
        }
        out
    }
}

/// Locate the zeros of `𝔎` and the sign of `𝔎` between them.
///
/// Zeros are bracketed by sign changes on a uniform scan and polished by
/// bisection; non-sign-changing (tangential) zeros are found as local minima
/// of `|𝔎|` below `tol·scale`, where `scale` is the largest sampled `|𝔎|`.
pub fn zeros_and_signs(k: &PrescribedFunction, tol: f64) -> Result<SignProfile> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let (lo, hi) = k.domain();
    let n = ZERO_SCAN_INTERVALS;
    let ys: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = ys.iter().map(|&y| k.value(y)).collect();
    if let Some(i) = vs.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(ys[i]));
    }
    let max_abs = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let thr = tol * scale;
    let small: Vec<bool> = vs.iter().map(|v| v.abs() <= thr).collect();
    let f = |y: f64| k.value(y);

    let mut zeros: Vec<Zero> = Vec::new();
    let mut i = 0;
    while i <= n {
        if small[i] {
            let start = i;
            while i < n && small[i + 1] {
                i += 1;
            }
            let end = i;
            let exact = (start..=end).all(|j| vs[j] == 0.0);
            if exact && end > start {
                zeros.push(Zero::Interval {
                    lo: ys[start],
                    hi: ys[end],
                });
            } else {
                locate_in_run(&f, &ys, &vs, start, end, thr, &mut zeros);
            }
        } else if i < n && !small[i + 1] && (vs[i] < 0.0) != (vs[i + 1] < 0.0) {
            let y = bisect(f, ys[i], ys[i + 1], 0.0);
            zeros.push(Zero::Point { y, tangential: false });
        }
        i += 1;
    }
    zeros.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
    zeros.dedup_by(|b, a| (b.lo() - a.hi()).abs() <= 1e-10);

    // regions between consecutive zeros
    let mut regions = Vec::new();
    let mut cursor = lo;
    let push_region = |a: f64, b: f64, regions: &mut Vec<SignRegion>| {
        if b - a <= 0.0 {
            return;
        }
        // sign from the largest-magnitude sample in the gap, else the midpoint
        let mut best = k.value(0.5 * (a + b));
        for (y, v) in ys.iter().zip(&vs) {
            if *y > a && *y < b && v.abs() > best.abs() {
                best = *v;
            }
        }
        if let Some(sign) = Sign::of(best) {
            regions.push(SignRegion { lo: a, hi: b, sign });
        }
    };
    for z in &zeros {
        push_region(cursor, z.lo(), &mut regions);
        cursor = z.hi();
    }
    push_region(cursor, hi, &mut regions);

    let largest_zero_in_unit = zeros
        .iter()
        .filter(|z| z.hi() >= 0.0 && z.lo() <= 1.0)
        .map(|z| z.hi().min(1.0))
        .fold(None, |m: Option<f64>, y| Some(m.map_or(y, |m| m.max(y))));

    let mut warnings = Vec::new();
    if let FunctionKind::Tabulated(t) = k.kind() {
        let simple = zeros
            .iter()
            .filter(|z| matches!(z, Zero::Point { tangential: false, .. }))
            .count();
        if t.node_sign_changes() > simple {
            warnings.push(format!(
                "unresolved zero cluster: table has {} node sign changes but {} zeros were resolved",
                t.node_sign_changes(),
                simple
            ));
        }
    }

    let at = |y: f64| k.evaluate(y).ok();
    Ok(SignProfile {
        domain: (lo, hi),
        zeros,
        regions,
        largest_zero_in_unit,
        value_at_minus_one: at(-1.0),
        value_at_zero: at(0.0),
        value_at_plus_one: at(1.0),
        tol,
        scale,
        warnings,
    })
}

fn locate_in_run<F: Fn(f64) -> f64>(
    f: &F,
    ys: &[f64],
    vs: &[f64],
    start: usize,
    end: usize,
    thr: f64,
    zeros: &mut Vec<Zero>,
) {
    let n = ys.len() - 1;
    let a = start.saturating_sub(1);
    let b = (end + 1).min(n);
    // raw sign changes inside the bracket
    let mut found = false;
    for j in a..b {
        if vs[j] * vs[j + 1] < 0.0 {
            let y = bisect(f, ys[j], ys[j + 1], 0.0);
            zeros.push(Zero::Point { y, tangential: false });
            found = true;
        }
    }
    if found {
        return;
    }
    let left = if start > 0 { Sign::of(vs[start - 1]) } else { None };
    let right = if end < n { Sign::of(vs[end + 1]) } else { None };
    let crosses = matches!((left, right), (Some(l), Some(r)) if l != r);
    if let Some(j) = (start..=end).find(|&j| vs[j] == 0.0) {
        let tangential = matches!((left, right), (Some(l), Some(r)) if l == r);
        zeros.push(Zero::Point { y: ys[j], tangential });
        return;
    }
    let y = golden_min(|y| f(y).abs(), ys[a], ys[b], 1e-13);
    if f(y).abs() <= thr {
        zeros.push(Zero::Point {
            y,
            tangential: !crosses && left.is_some() && right.is_some(),
        });
    } else {
        // endpoint minimum: the smallest sample stands in
        let j = (start..=end)
            .min_by(|&p, &q| vs[p].abs().total_cmp(&vs[q].abs()))
            .unwrap_or(start);
        zeros.push(Zero::Point {
            y: ys[j],
            tangential: !crosses && left.is_some() && right.is_some(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prescribed::{PowerExtension, Table};

    #[test]
    fn constant_negative_has_one_region() {
        let p = zeros_and_signs(&PrescribedFunction::constant(-1.0), 1e-12).unwrap();
        assert!(p.zeros.is_empty());
        assert_eq!(p.regions.len(), 1);
        assert_eq!(p.regions[0].sign, Sign::Negative);
        assert!(p.is_strictly_negative());
    }

    #[test]
    fn y_squared_minus_one_vanishes_at_both_ends() {
        let p = zeros_and_signs(&PrescribedFunction::polynomial(vec![-1.0, 0.0, 1.0]), 1e-12).unwrap();
        let pts = p.zero_points();
        assert_eq!(pts.len(), 2, "{:?}", p.zeros);
        assert!((pts[0] + 1.0).abs() < 1e-12 && (pts[1] - 1.0).abs() < 1e-12);
        assert_eq!(p.regions.len(), 1);
        assert_eq!(p.regions[0].sign, Sign::Negative);
    }

    #[test]
    fn affine_root_and_largest_zero() {
        let p = zeros_and_signs(&PrescribedFunction::affine(1.0, -0.5), 1e-12).unwrap();
        assert_eq!(p.zeros.len(), 1);
        assert!((p.zero_points()[0] - 0.5).abs() < 1e-12);
        assert_eq!(p.regions[0].sign, Sign::Negative);
        assert_eq!(p.regions[1].sign, Sign::Positive);
        assert!((p.largest_zero_in_unit.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tangential_zero_is_flagged() {
        let p = zeros_and_signs(&PrescribedFunction::power(4.0), 1e-10).unwrap();
        assert_eq!(p.zeros.len(), 1, "{:?}", p.zeros);
        match p.zeros[0] {
            Zero::Point { y, tangential } => {
                assert!(y.abs() < 1e-3);
                assert!(tangential);
            }
            _ => panic!(),
        }
        assert_eq!(p.regions.len(), 2);
    }

    #[test]
    fn identically_zero_is_one_interval() {
        let p = zeros_and_signs(&PrescribedFunction::constant(0.0), 1e-12).unwrap();
        assert_eq!(p.zeros, vec![Zero::Interval { lo: -1.0, hi: 1.0 }]);
        assert!(p.regions.is_empty());
        let z = zeros_and_signs(&PrescribedFunction::power_with(1.5, PowerExtension::Zero), 1e-12).unwrap();
        assert!(matches!(z.zeros[0], Zero::Interval { lo, hi } if lo == -1.0 && hi == 0.0));
    }

    #[test]
    fn restricted_power_scans_unit_interval() {
        let p = zeros_and_signs(&PrescribedFunction::power(1.5), 1e-12).unwrap();
        assert_eq!(p.domain, (0.0, 1.0));
        assert_eq!(p.largest_zero_in_unit, Some(0.0));
        assert!(p.value_at_minus_one.is_none());
    }

    #[test]
    fn fine_table_oscillation_warns() {
        let m = 40001;
        let ys: Vec<f64> = (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect();
        let vs: Vec<f64> = ys.iter().map(|y| (20000.0 * y).sin()).collect();
        let k = PrescribedFunction::tabulated(Table::new(ys, vs).unwrap());
        let p = zeros_and_signs(&k, 1e-12).unwrap();
        assert!(p.warnings.iter().any(|w| w.contains("unresolved zero cluster")));
    }

    #[test]
    fn rejects_nonpositive_tol() {
        assert!(zeros_and_signs(&PrescribedFunction::constant(1.0), 0.0).is_err());
    }
}
