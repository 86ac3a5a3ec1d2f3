//! Adaptive Gauss–Kronrod (7/15) quadrature with global subdivision, plus a
//! geometric-subdivision driver for integrands that blow up at one endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half, descending) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// 7-point Gauss weights; the Gauss nodes are XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Accuracy targets for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// One 15-point panel: (kronrod value, error estimate).
pub fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (value, error, _) = kronrod15_abs(f, a, b);
    (value, error)
}

/// As [`kronrod15`], also returning the integral of `|f|` over the panel.
fn kronrod15_abs<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let resk = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg * half).abs()).max(0.0);
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (1.0f64).min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (resk, err, resabs)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive quadrature of `f` over `[a, b]`.
///
/// Panels with the largest error estimate are bisected until the summed
/// estimate drops below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error, abs) = kronrod15_abs(&f, a, b);
    if !value.is_finite() {
        return Err(Error::Accuracy {
            estimate: value,
            error: f64::INFINITY,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value,
        error,
        abs,
    });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;

    while total_err > opts.target(total).max(roundoff_floor(&heap)) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Accuracy {
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // panel can no longer be split in floating point
            heap.push(worst);
            return Err(Error::Accuracy {
                estimate: total,
                error: total_err,
            });
        }
        let (v1, e1, a1) = kronrod15_abs(&f, worst.a, mid);
        let (v2, e2, a2) = kronrod15_abs(&f, mid, worst.b);
        evaluations += 30;
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Accuracy {
                estimate: total,
                error: f64::INFINITY,
            });
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            abs: a1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            abs: a2,
        });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// Which endpoint of the interval carries the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularEnd {
    Lower,
    Upper,
}

/// Partial sums beyond this magnitude are declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;
const MAX_GEOMETRIC_PIECES: usize = 48;

/// Improper integral of `f` over `[a, b]` with a (possible) singularity at
/// one endpoint.
///
/// The interval is cut geometrically toward the singular end; each piece is
/// integrated adaptively. Once the piece magnitudes decay geometrically the
/// tail is summed in closed form. Non-decaying pieces, or partial sums beyond
/// [`DIVERGENCE_BOUND`], report [`Error::Divergent`].
pub fn integrate_improper<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    end: SingularEnd,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    // pieces are integrated from the regular end, so a lower singularity
    // accumulates the reversed integral
    let (regular, singular, orient) = match end {
        SingularEnd::Lower => (b, a, -1.0),
        SingularEnd::Upper => (a, b, 1.0),
    };
    // pieces run from `regular` toward `singular`
    let span = singular - regular;
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut evaluations = 0;
    let mut pieces: Vec<f64> = Vec::new();
    let mut lo = regular;
    for k in 1..=MAX_GEOMETRIC_PIECES {
        let hi = singular - span * 0.5f64.powi(k as i32);
        let piece_opts = QuadOptions {
            abs_tol: opts.abs_tol * 0.5f64.powi(k as i32),
            ..opts
        };
        let r = integrate(&f, lo, hi, piece_opts).or_else(|e| match e {
            Error::Accuracy { estimate, error } if estimate.is_finite() => Ok(QuadResult {
                value: estimate,
                error,
                evaluations: 0,
            }),
            other => Err(other),
        })?;
        evaluations += r.evaluations;
        sum += r.value;
        err += r.error;
        pieces.push(r.value);
        lo = hi;
        if sum.abs() > DIVERGENCE_BOUND {
            return Err(Error::Divergent { partial: orient * sum });
        }
        let n = pieces.len();
        if n >= 4 {
            let p1 = pieces[n - 3].abs();
            let p2 = pieces[n - 2].abs();
            let p3 = pieces[n - 1].abs();
            if p3 == 0.0 {
                return finish(orient * sum, err, evaluations);
            }
            let r1 = p2 / p1.max(f64::MIN_POSITIVE);
            let r2 = p3 / p2.max(f64::MIN_POSITIVE);
            let stable = (r1 - r2).abs() <= 0.05 * r2.max(1e-3);
            if stable && r2 < 0.98 {
                let tail = pieces[n - 1] * r2 / (1.0 - r2);
                // uncertainty of the geometric tail from the ratio drift
                let tail_err = pieces[n - 1].abs() * (r1 - r2).abs() / ((1.0 - r2) * (1.0 - r2));
                if tail.abs() <= opts.target(sum) || (n >= 6 && tail_err <= opts.target(sum)) {
                    return finish(orient * (sum + tail), err + tail_err, evaluations);
                }
            } else if stable && r2 >= 0.98 && n >= 8 {
                return Err(Error::Divergent { partial: orient * sum });
            }
        }
    }
    let n = pieces.len();
    let last = pieces[n - 1].abs();
    let prev = pieces[n - 2].abs();
    if last >= 0.9 * prev {
        Err(Error::Divergent { partial: orient * sum })
    } else {
        Err(Error::Accuracy {
            estimate: orient * sum,
            error: err + last,
        })
    }
}

// Error estimates below this are dominated by cancellation in the panel sums.
/// Error level at which every panel estimate is its own rounding floor; a
/// cancelling integrand cannot be resolved below it.
fn roundoff_floor(heap: &BinaryHeap<Panel>) -> f64 {
    100.0 * f64::EPSILON * heap.iter().map(|p| p.abs).sum::<f64>()
}

fn finish(value: f64, error: f64, evaluations: usize) -> Result<QuadResult> {
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_on_low_degree_polynomials() {
        for k in 0..=22 {
            let (v, _) = kronrod15(&|x: f64| x.powi(k), 0.0, 1.0);
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // ∫₋₁¹ 1/(1e-4 + x²) dx = 2·atan(100)/0.01
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadOptions::relative(1e-12)).unwrap();
        let exact = 2.0 * 100f64.atan() / 0.01;
        assert!((r.value - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let fwd = integrate(|x| x.exp(), 0.0, 1.0, QuadOptions::default()).unwrap().value;
        let bwd = integrate(|x| x.exp(), 1.0, 0.0, QuadOptions::default()).unwrap().value;
        assert!((fwd + bwd).abs() < 1e-15);
        assert!((fwd - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn improper_integrable_power_singularity() {
        // ∫₀¹ t^(-1/2) dt = 2
        let r = integrate_improper(
            |t| t.powf(-0.5),
            0.0,
            1.0,
            SingularEnd::Lower,
            QuadOptions::relative(1e-10),
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
        // ∫₀¹ t/(1 - t)^(0.3) dt, singular at the upper end
        let r = integrate_improper(
            |t: f64| t / (1.0 - t).powf(0.3),
            0.0,
            1.0,
            SingularEnd::Upper,
            QuadOptions::relative(1e-10),
        )
        .unwrap();
        // Beta(2, 0.7) = Γ(2)Γ(0.7)/Γ(2.7) = 1/(0.7·1.7)
        let exact = 1.0 / (0.7 * 1.7);
        assert!((r.value - exact).abs() < 1e-8, "{} vs {exact}", r.value);
    }

    #[test]
    fn improper_log_divergence_is_reported() {
        let r = integrate_improper(
            |t: f64| t / (1.0 - t * t),
            0.0,
            1.0,
            SingularEnd::Upper,
            QuadOptions::default(),
        );
        assert!(matches!(r, Err(Error::Divergent { .. })), "{r:?}");
        let r = integrate_improper(
            |t: f64| t.powi(-3),
            0.0,
            1.0,
            SingularEnd::Lower,
            QuadOptions::default(),
        );
        assert!(matches!(r, Err(Error::Divergent { .. })), "{r:?}");
    }
}
