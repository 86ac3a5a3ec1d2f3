//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The driver is open-ended: it keeps stepping in the requested direction and
//! hands each accepted step to an observer, which decides when to stop. Event
//! location is done by the observer on the dense output.

// Butcher tableau (FSAL: the last stage row equals the weights).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Stop exactly at this time when reached.
    pub t_end: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
            t_end: None,
        }
    }
}

/// One accepted step with its quartic continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
    /// Local error estimate (scaled norm, ≤ 1 for an accepted step).
    pub error: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Interpolated state at `t` (meaningful for `t` between `t0` and `t1`).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h();
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = |j: usize| self.cont[j][i];
            out[i] = c(0) + s * (c(1) + s1 * (c(2) + s * (c(3) + s1 * c(4))));
        }
        out
    }

    /// Locate `t` in the segment where `g(t, y(t))` changes sign, given that
    /// `g` has opposite signs at the two ends. Bisection on the dense output.
    pub fn locate<G: FnMut(f64, &[f64; N]) -> f64>(&self, g: G, ttol: f64) -> f64 {
        self.locate_between(g, self.t0, self.t1, ttol)
    }

    /// As [`Self::locate`], restricted to the bracket `[a, b]` inside the segment.
    pub fn locate_between<G: FnMut(f64, &[f64; N]) -> f64>(&self, mut g: G, a: f64, b: f64, ttol: f64) -> f64 {
        let (mut a, mut b) = (a, b);
        let ga = g(a, &self.eval(a));
        for _ in 0..200 {
            if (b - a).abs() <= ttol {
                break;
            }
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            let gm = g(m, &self.eval(m));
            if gm == 0.0 {
                return m;
            }
            if (gm < 0.0) == (ga < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Every sign change of `g` along the segment, probing the dense output at
    /// `probes` interior points so that a root pair inside one step is not missed.
    pub fn roots<G: FnMut(f64, &[f64; N]) -> f64>(&self, mut g: G, probes: usize, ttol: f64) -> Vec<f64> {
        let n = probes + 1;
        let ts: Vec<f64> = (0..=n).map(|i| self.t0 + self.h() * i as f64 / n as f64).collect();
        let gs: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(i, &t)| match i {
                0 => g(t, &self.y0),
                _ if i == n => g(self.t1, &self.y1),
                _ => g(t, &self.eval(t)),
            })
            .collect();
        let mut out = Vec::new();
        for i in 0..n {
            if gs[i] * gs[i + 1] < 0.0 {
                let b = if i + 1 == n { self.t1 } else { ts[i + 1] };
                out.push(self.locate_between(&mut g, ts[i], b, ttol));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Break,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Observer,
    EndTime,
    MaxSteps,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOutcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    pub stop: StopReason,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, ks: &[[f64; N]], coef: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (k, &a) in ks.iter().zip(coef) {
        if a != 0.0 {
            for i in 0..N {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrate `y' = rhs(t, y)` from `(t0, y0)` in the direction of `sign(direction)`.
///
/// `rhs` may return `None` where the field is undefined; the step is then
/// rejected and shrunk. Each accepted step is passed to `observer`.
pub fn dopri5<const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    direction: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> OdeOutcome<N>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    O: FnMut(&DenseSegment<N>) -> Control,
{
    let dir = if direction < 0.0 { -1.0 } else { 1.0 };
    let mut t = t0;
    let mut y = y0;
    let outcome = |t: f64, y: [f64; N], accepted, rejected, stop| OdeOutcome {
        t,
        y,
        accepted,
        rejected,
        stop,
    };
    let Some(mut f) = rhs(t, &y) else {
        return outcome(t, y, 0, 0, StopReason::StepUnderflow);
    };
    let scale = |y: &[f64; N], z: &[f64; N], i: usize| opts.atol + opts.rtol * y[i].abs().max(z[i].abs());
    let norm = |v: &[f64; N], y: &[f64; N]| {
        let s: f64 = (0..N).map(|i| (v[i] / scale(y, y, i)).powi(2)).sum();
        (s / N as f64).sqrt()
    };

    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            let d0 = norm(&y, &y);
            let d1 = norm(&f, &y);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let h0 = h0.min(opts.h_max);
            let y1 = axpy(&y, dir * h0, &[f], &[1.0]);
            match rhs(t + dir * h0, &y1) {
                Some(f1) => {
                    let mut d = [0.0; N];
                    for i in 0..N {
                        d[i] = f1[i] - f[i];
                    }
                    let d2 = norm(&d, &y) / h0;
                    let h1 = if d1.max(d2) <= 1e-15 {
                        (h0 * 1e-3).max(1e-6)
                    } else {
                        (0.01 / d1.max(d2)).powf(0.2)
                    };
                    (100.0 * h0).min(h1)
                }
                None => h0 * 1e-3,
            }
        }
    }
    .min(opts.h_max);

    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    let mut facold: f64 = 1e-4;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut last_rejected = false;
    let mut ks = [[0.0; N]; 7];

    loop {
        if accepted + rejected >= opts.max_steps {
            return outcome(t, y, accepted, rejected, StopReason::MaxSteps);
        }
        let mut at_end = false;
        if let Some(te) = opts.t_end {
            let remaining = (te - t) * dir;
            if remaining <= 0.0 {
                return outcome(t, y, accepted, rejected, StopReason::EndTime);
            }
            if h >= remaining {
                h = remaining;
                at_end = true;
            }
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return outcome(t, y, accepted, rejected, StopReason::StepUnderflow);
        }
        let hs = dir * h;
        ks[0] = f;
        let mut ok = true;
        for s in 1..7 {
            let ys = axpy(&y, hs, &ks[..s], &A[s][..s]);
            match rhs(t + C[s] * hs, &ys) {
                Some(k) if finite(&k) => ks[s] = k,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            h *= 0.25;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        let y_new = axpy(&y, hs, &ks[..6], &A[6]);
        let mut errv = [0.0; N];
        for i in 0..N {
            errv[i] = hs * (0..7).map(|j| E[j] * ks[j][i]).sum::<f64>();
        }
        let err = {
            let s: f64 = (0..N).map(|i| (errv[i] / scale(&y, &y_new, i)).powi(2)).sum();
            (s / N as f64).sqrt()
        };
        if !err.is_finite() || !finite(&y_new) {
            h *= 0.25;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(0.2, 10.0);
            let mut h_new = (h / fac).min(opts.h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);
            let f_new = ks[6];
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * f[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - hs * f_new[i] - bspl;
                cont[4][i] = hs * (0..7).map(|j| D[j] * ks[j][i]).sum::<f64>();
            }
            let t_new = if at_end { opts.t_end.unwrap_or(t + hs) } else { t + hs };
            let seg = DenseSegment {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                f0: f,
                f1: f_new,
                error: err,
                cont,
            };
            accepted += 1;
            t = t_new;
            y = y_new;
            f = f_new;
            last_rejected = false;
            if observer(&seg) == Control::Break {
                return outcome(t, y, accepted, rejected, StopReason::Observer);
            }
            if at_end {
                return outcome(t, y, accepted, rejected, StopReason::EndTime);
            }
            h = h_new;
        } else {
            h /= (fac11 / SAFE).min(5.0);
            rejected += 1;
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let opts = OdeOptions {
            t_end: Some(2.0 * std::f64::consts::PI),
            ..OdeOptions::default()
        };
        let out = dopri5(
            |_, y: &[f64; 2]| Some([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            1.0,
            &opts,
            |_| Control::Continue,
        );
        assert_eq!(out.stop, StopReason::EndTime);
        assert!((out.y[0] - 1.0).abs() < 1e-8 && out.y[1].abs() < 1e-8, "{:?}", out.y);
    }

    #[test]
    fn backward_direction_and_dense_output() {
        let opts = OdeOptions {
            t_end: Some(-1.0),
            ..OdeOptions::default()
        };
        let mut worst: f64 = 0.0;
        let out = dopri5(
            |_, y: &[f64; 1]| Some([y[0]]),
            0.0,
            [1.0],
            -1.0,
            &opts,
            |seg| {
                for k in 1..4 {
                    let t = seg.t0 + seg.h() * k as f64 / 4.0;
                    worst = worst.max((seg.eval(t)[0] - t.exp()).abs());
                }
                Control::Continue
            },
        );
        assert!((out.y[0] - (-1f64).exp()).abs() < 1e-9);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn undefined_field_shrinks_step() {
        // y' = 1 only defined for y < 1; observer stops before the wall
        let out = dopri5(
            |_, y: &[f64; 1]| if y[0] < 1.0 { Some([1.0]) } else { None },
            0.0,
            [0.0],
            1.0,
            &OdeOptions::default(),
            |_| Control::Continue,
        );
        assert_eq!(out.stop, StopReason::StepUnderflow);
        assert!(out.y[0] < 1.0 && out.y[0] > 1.0 - 1e-9);
    }

    #[test]
    fn event_location_on_dense_output() {
        let mut hit = None;
        dopri5(
            |_, y: &[f64; 2]| Some([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            1.0,
            &OdeOptions::default(),
            |seg| {
                if seg.y0[0] > 0.0 && seg.y1[0] <= 0.0 {
                    hit = Some(seg.locate(|_, y| y[0], 1e-13));
                    return Control::Break;
                }
                Control::Continue
            },
        );
        assert!((hit.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }
}
