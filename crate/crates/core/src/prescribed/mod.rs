//! The prescribed curvature function on `[-1, 1]` and its derived functionals.
//!
//! A [`PrescribedFunction`] maps an angle value `y = ⟨η, e₃⟩` to the Gauss
//! curvature a rotational surface must have wherever its normal makes that
//! angle with the axis.

mod moments;
mod signs;
mod table;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use moments::{alpha_of_n, minkowski_integral, n_of_alpha, partial_moment};
pub use signs::{zeros_and_signs, Sign, SignProfile, SignRegion, Zero, ZERO_SCAN_INTERVALS};
pub use table::Table;

use crate::error::{Error, Result};

/// How a non-integer power `y^α` is continued to `y < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerExtension {
    /// Domain is `[0, 1]`; negative queries are rejected.
    Restricted,
    /// `|y|^α`.
    Even,
    /// `0` for `y ≤ 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    Constant(f64),
    Power {
        alpha: f64,
        extension: PowerExtension,
    },
    /// `a·y + b`
    Affine {
        a: f64,
        b: f64,
    },
    /// Coefficients in ascending powers of `y`.
    Polynomial(Vec<f64>),
    /// Curvature function of the rotated graph `u = xⁿ`, continued evenly to `y < 0`.
    PolyDual(u32),
    Tabulated(Table),
}

/// Evaluable model of the prescribed function together with its endpoint
/// regularity.
#[derive(Debug, Clone, PartialEq)]
pub struct PrescribedFunction {
    kind: FunctionKind,
    reflected: bool,
    c1_at_minus_one: bool,
    c1_at_plus_one: bool,
}

const DOMAIN_SLACK: f64 = 1e-12;

impl PrescribedFunction {
    fn from_kind(kind: FunctionKind) -> Self {
        let (c1_at_minus_one, c1_at_plus_one) = match &kind {
            FunctionKind::Power { alpha, extension } => {
                let integer = alpha.fract() == 0.0;
                (integer || *extension != PowerExtension::Restricted, true)
            }
            FunctionKind::PolyDual(n) => (*n == 2, *n == 2),
            _ => (true, true),
        };
        Self {
            kind,
            reflected: false,
            c1_at_minus_one,
            c1_at_plus_one,
        }
    }

    pub fn constant(k: f64) -> Self {
        Self::from_kind(FunctionKind::Constant(k))
    }

    /// `y^α` with the default continuation: integer powers are evaluated on
    /// the whole interval, non-integer powers are restricted to `[0, 1]`.
    pub fn power(alpha: f64) -> Self {
        Self::power_with(alpha, PowerExtension::Restricted)
    }

    pub fn power_with(alpha: f64, extension: PowerExtension) -> Self {
        Self::from_kind(FunctionKind::Power { alpha, extension })
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Self::from_kind(FunctionKind::Affine { a, b })
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self::from_kind(FunctionKind::Polynomial(coefficients))
    }

    /// `(n−1)·n^(2/(n−1))·y^(2n/(n−1))·(1−y²)^((n−2)/(n−1))`, the curvature of
    /// the rotated graph `u = xⁿ` as a function of its angle.
    pub fn poly_dual(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("polydual needs n >= 2, got {n}")));
        }
        Ok(Self::from_kind(FunctionKind::PolyDual(n)))
    }

    pub fn tabulated(table: Table) -> Self {
        Self::from_kind(FunctionKind::Tabulated(table))
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    /// The function `y ↦ 𝔎(−y)`.
    pub fn reflect(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            reflected: !self.reflected,
            c1_at_minus_one: self.c1_at_plus_one,
            c1_at_plus_one: self.c1_at_minus_one,
        }
    }

    /// C¹ regularity at `y = −1`.
    pub fn c1_at_minus_one(&self) -> bool {
        self.c1_at_minus_one
    }

    /// C¹ regularity at `y = 1`.
    pub fn c1_at_plus_one(&self) -> bool {
        self.c1_at_plus_one
    }

    /// Closed interval on which the function may be evaluated.
    pub fn domain(&self) -> (f64, f64) {
        let (lo, hi) = match &self.kind {
            FunctionKind::Power {
                alpha,
                extension: PowerExtension::Restricted,
            } if alpha.fract() != 0.0 => (0.0, 1.0),
            _ => (-1.0, 1.0),
        };
        if self.reflected {
            (-hi, -lo)
        } else {
            (lo, hi)
        }
    }

    pub fn in_domain(&self, y: f64) -> bool {
        let (lo, hi) = self.domain();
        y >= lo - DOMAIN_SLACK && y <= hi + DOMAIN_SLACK
    }

    /// `𝔎(y)`; rejects `y` outside the domain.
    pub fn evaluate(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || !self.in_domain(y) {
            return Err(Error::Domain(y));
        }
        Ok(self.value(y))
    }

    /// Unchecked evaluation for hot loops whose arguments are known to lie in
    /// the domain. Out-of-domain arguments give `NaN`.
    pub fn value(&self, y: f64) -> f64 {
        let y = if self.reflected { -y } else { y };
        let y = y.clamp(-1.0, 1.0);
        match &self.kind {
            FunctionKind::Constant(k) => *k,
            FunctionKind::Affine { a, b } => a * y + b,
            FunctionKind::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * y + ci),
            FunctionKind::Power { alpha, extension } => power_value(*alpha, *extension, y),
            FunctionKind::PolyDual(n) => poly_dual_value(*n, y),
            FunctionKind::Tabulated(t) => t.value(y),
        }
    }

    /// `𝔎′(y)`. May be infinite at endpoints where the model is not C¹.
    pub fn derivative(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || !self.in_domain(y) {
            return Err(Error::Domain(y));
        }
        let (y, sign) = if self.reflected { (-y, -1.0) } else { (y, 1.0) };
        let y = y.clamp(-1.0, 1.0);
        let d = match &self.kind {
            FunctionKind::Constant(_) => 0.0,
            FunctionKind::Affine { a, .. } => *a,
            FunctionKind::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, &ci)| acc * y + i as f64 * ci),
            FunctionKind::Power { alpha, extension } => power_derivative(*alpha, *extension, y),
            FunctionKind::PolyDual(n) => poly_dual_derivative(*n, y),
            FunctionKind::Tabulated(t) => t.derivative(y),
        };
        Ok(sign * d)
    }

    /// Textual spec, parseable by [`FromStr`].
    pub fn spec(&self) -> String {
        self.to_string()
    }

    /// Parse a spec string; `table:` paths are resolved relative to `base`.
    pub fn parse_with_base(spec: &str, base: Option<&Path>) -> Result<Self> {
        let spec = spec.trim();
        if let Some(inner) = spec.strip_prefix("reflect:") {
            return Ok(Self::parse_with_base(inner, base)?.reflect());
        }
        let (head, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected KIND:ARGS, got '{spec}'")))?;
        let numbers = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number '{t}' in '{spec}'")))
                })
                .collect()
        };
        match head {
            "const" => {
                let v = numbers(args)?;
                expect_len(&v, 1, spec)?;
                Ok(Self::constant(v[0]))
            }
            "pow" => {
                let (a, ext) = match args.split_once(',') {
                    Some((a, e)) => (a, Some(e.trim())),
                    None => (args, None),
                };
                let alpha = numbers(a)?[0];
                if !(alpha > 0.0) {
                    return Err(Error::Parse(format!("pow exponent must be positive in '{spec}'")));
                }
                let extension = match ext {
                    None | Some("restricted") => PowerExtension::Restricted,
                    Some("even") => PowerExtension::Even,
                    Some("zero") => PowerExtension::Zero,
                    Some(other) => return Err(Error::Parse(format!("unknown power extension '{other}'"))),
                };
                Ok(Self::power_with(alpha, extension))
            }
            "affine" => {
                let v = numbers(args)?;
                expect_len(&v, 2, spec)?;
                Ok(Self::affine(v[0], v[1]))
            }
            "poly" => {
                let v = numbers(args)?;
                if v.is_empty() {
                    return Err(Error::Parse(format!("empty polynomial in '{spec}'")));
                }
                Ok(Self::polynomial(v))
            }
            "polydual" => {
                let n: u32 = args
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("polydual needs an integer, got '{args}'")))?;
                Self::poly_dual(n).map_err(|e| Error::Parse(e.to_string()))
            }
            "table" => {
                let path = match base {
                    Some(b) if Path::new(args).is_relative() => b.join(args),
                    _ => Path::new(args).to_path_buf(),
                };
                let mut table = Table::from_csv_path(&path)?;
                table.set_source(args);
                Ok(Self::tabulated(table))
            }
            other => Err(Error::Parse(format!("unknown function kind '{other}'"))),
        }
    }
}

fn expect_len(v: &[f64], n: usize, spec: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Parse(format!("expected {n} value(s) in '{spec}'")));
    }
    Ok(())
}

impl FromStr for PrescribedFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_base(s, None)
    }
}

impl fmt::Display for PrescribedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reflected {
            write!(f, "reflect:")?;
        }
        let join = |v: &[f64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            FunctionKind::Constant(k) => write!(f, "const:{k}"),
            FunctionKind::Power { alpha, extension } => match extension {
                PowerExtension::Restricted => write!(f, "pow:{alpha}"),
                PowerExtension::Even => write!(f, "pow:{alpha},even"),
                PowerExtension::Zero => write!(f, "pow:{alpha},zero"),
            },
            FunctionKind::Affine { a, b } => write!(f, "affine:{a},{b}"),
            FunctionKind::Polynomial(c) => write!(f, "poly:{}", join(c)),
            FunctionKind::PolyDual(n) => write!(f, "polydual:{n}"),
            FunctionKind::Tabulated(t) => write!(f, "table:{}", t.source()),
        }
    }
}

fn power_value(alpha: f64, extension: PowerExtension, y: f64) -> f64 {
    if alpha.fract() == 0.0 && alpha.abs() < i32::MAX as f64 {
        return y.powi(alpha as i32);
    }
    if y >= 0.0 {
        return y.powf(alpha);
    }
    match extension {
        PowerExtension::Restricted => f64::NAN,
        PowerExtension::Even => (-y).powf(alpha),
        PowerExtension::Zero => 0.0,
    }
}

fn power_derivative(alpha: f64, extension: PowerExtension, y: f64) -> f64 {
    if alpha.fract() == 0.0 && alpha.abs() < i32::MAX as f64 {
        if alpha == 0.0 {
            return 0.0;
        }
        return alpha * y.powi(alpha as i32 - 1);
    }
    if y > 0.0 {
        return alpha * y.powf(alpha - 1.0);
    }
    if y == 0.0 {
        return if alpha > 1.0 { 0.0 } else { f64::INFINITY };
    }
    match extension {
        PowerExtension::Restricted => f64::NAN,
        PowerExtension::Even => -alpha * (-y).powf(alpha - 1.0),
        PowerExtension::Zero => 0.0,
    }
}

/// `(n−1)·n^(2/(n−1))`
pub(crate) fn poly_dual_constant(n: u32) -> f64 {
    let m = n as f64 - 1.0;
    m * (n as f64).powf(2.0 / m)
}

fn poly_dual_value(n: u32, y: f64) -> f64 {
    let m = n as f64 - 1.0;
    let p = 2.0 * n as f64 / m;
    let q = (n as f64 - 2.0) / m;
    let a = y.abs();
    let w = (1.0 - a * a).max(0.0);
    poly_dual_constant(n) * a.powf(p) * w.powf(q)
}

fn poly_dual_derivative(n: u32, y: f64) -> f64 {
    let m = n as f64 - 1.0;
    let p = 2.0 * n as f64 / m;
    let q = (n as f64 - 2.0) / m;
    let a = y.abs();
    let s = if y < 0.0 { -1.0 } else { 1.0 };
    let w = (1.0 - a * a).max(0.0);
    let c = poly_dual_constant(n);
    let first = p * a.powf(p - 1.0) * w.powf(q);
    let second = if q == 0.0 {
        0.0
    } else {
        a.powf(p) * q * w.powf(q - 1.0) * (-2.0 * a)
    };
    s * c * (first + second)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(PrescribedFunction::constant(1.0).evaluate(0.3).unwrap(), 1.0);
        assert_eq!(PrescribedFunction::power(4.0).evaluate(0.5).unwrap(), 0.0625);
        assert_eq!(PrescribedFunction::poly_dual(3).unwrap().evaluate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_rejects_out_of_domain() {
        let k = PrescribedFunction::constant(1.0);
        assert!(matches!(k.evaluate(1.5), Err(Error::Domain(_))));
        assert!(matches!(k.evaluate(f64::NAN), Err(Error::Domain(_))));
        let p = PrescribedFunction::power(1.5);
        assert!(matches!(p.evaluate(-0.2), Err(Error::Domain(_))));
        assert_eq!(p.domain(), (0.0, 1.0));
    }

    #[test]
    fn power_extensions() {
        let even = PrescribedFunction::power_with(1.5, PowerExtension::Even);
        assert!((even.evaluate(-0.25).unwrap() - 0.125).abs() < 1e-15);
        let zero = PrescribedFunction::power_with(1.5, PowerExtension::Zero);
        assert_eq!(zero.evaluate(-0.25).unwrap(), 0.0);
        assert_eq!(zero.evaluate(0.0).unwrap(), 0.0);
        // integer powers are defined everywhere
        assert_eq!(PrescribedFunction::power(3.0).evaluate(-0.5).unwrap(), -0.125);
    }

    #[test]
    fn polydual_two_is_four_y_to_the_fourth() {
        let k = PrescribedFunction::poly_dual(2).unwrap();
        for &y in &[0.1, 0.5, 0.9, 1.0] {
            assert!((k.evaluate(y).unwrap() - 4.0 * y.powi(4)).abs() < 1e-14);
        }
        assert!(k.c1_at_plus_one());
        let k3 = PrescribedFunction::poly_dual(3).unwrap();
        assert!(!k3.c1_at_plus_one());
        assert_eq!(k3.evaluate(1.0).unwrap(), 0.0);
        assert!(PrescribedFunction::poly_dual(1).is_err());
    }

    #[test]
    fn reflection_mirrors_values_and_flags() {
        let k = PrescribedFunction::affine(1.0, 2.0);
        let r = k.reflect();
        assert_eq!(r.evaluate(0.5).unwrap(), 1.5);
        assert_eq!(r.derivative(0.5).unwrap(), -1.0);
        assert_eq!(r.reflect(), k);
        let p = PrescribedFunction::power(1.5).reflect();
        assert_eq!(p.domain(), (-1.0, 0.0));
    }

    #[test]
    fn spec_round_trip() {
        for s in [
            "const:-1",
            "pow:4",
            "pow:1.5,even",
            "affine:1,-0.5",
            "poly:1,0,-1",
            "polydual:3",
            "reflect:affine:1,2",
        ] {
            let k: PrescribedFunction = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
            let again: PrescribedFunction = k.to_string().parse().unwrap();
            assert_eq!(again, k);
        }
    }

    #[test]
    fn spec_errors() {
        for s in [
            "",
            "const",
            "const:",
            "const:1,2",
            "pow:-1",
            "wat:1",
            "polydual:x",
            "affine:1",
        ] {
            assert!(s.parse::<PrescribedFunction>().is_err(), "{s}");
        }
    }

    #[test]
    fn polynomial_derivative_matches_hand_computation() {
        // 1 + 2y + 3y²  →  2 + 6y
        let k = PrescribedFunction::polynomial(vec![1.0, 2.0, 3.0]);
        assert_eq!(k.derivative(0.5).unwrap(), 5.0);
    }
}
