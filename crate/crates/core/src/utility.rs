//! Concave nondecreasing utilities and certification of the growth caps
//!
//! ```text
//! u(x) <= C1 (x^alpha + 1)        for x >= 0
//! u(x) <= C2 (1 - |x|^beta)       for x <  0
//! ```
//!
//! with `0 <= alpha < 1 < beta`.
//!
//! Utilities that are linear on the negative half-line (`appendix_power`,
//! `capped_power`, tabulated) can never meet the second cap with `beta > 1`:
//! `-c|x|` eventually exceeds `C2 (1 - |x|^beta)`. [`UtilityKind::TwoSidedPower`]
//! and [`UtilityKind::Exponential`] are the built-ins that admit a full
//! certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityKind {
    /// `alpha x` for `x <= 0`, `(x + 1)^alpha - 1` for `x > 0`.
    AppendixPower { alpha: f64 },
    /// `x^alpha` for `x >= 0`, `slope * x` for `x < 0`. Not concave at 0
    /// (the right derivative is infinite), so optimizers refuse it.
    CappedPower { alpha: f64, slope: f64 },
    /// `(x + 1)^alpha - 1` for `x >= 0`, `(alpha / beta)(1 - (1 - x)^beta)`
    /// for `x < 0`. Continuously differentiable with `u'(0) = alpha`.
    TwoSidedPower { alpha: f64, beta: f64 },
    /// `(1 - exp(-lambda x)) / lambda`, bounded above by `1 / lambda`.
    Exponential { risk_aversion: f64 },
    /// Piecewise-linear interpolation of `(xs, ys)`, extrapolated linearly
    /// with the end slopes.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
}

impl GrowthBounds {
    pub fn new(alpha: f64, beta: f64, c1: f64, c2: f64) -> Result<Self> {
        let g = Self { alpha, beta, c1, c2 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidGrowthBounds(format!("alpha = {} must lie in [0, 1)", self.alpha)));
        }
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return Err(Error::InvalidGrowthBounds(format!("beta = {} must exceed 1", self.beta)));
        }
        if !(self.c1 > 0.0) || !(self.c2 > 0.0) || !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(Error::InvalidGrowthBounds("C1 and C2 must be positive".into()));
        }
        Ok(())
    }

    pub fn positive_cap(&self, x: f64) -> f64 {
        self.c1 * (x.powf(self.alpha) + 1.0)
    }

    pub fn negative_cap(&self, x: f64) -> f64 {
        self.c2 * (1.0 - x.abs().powf(self.beta))
    }
}

/// Configuration form of a utility: the kind plus an optional growth
/// certificate to verify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    #[serde(flatten)]
    pub kind: UtilityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthBounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Utility {
    kind: UtilityKind,
    scale: f64,
    growth: Option<GrowthBounds>,
}

impl Utility {
    pub fn new(kind: UtilityKind) -> Result<Self> {
        validate_kind(&kind)?;
        Ok(Self { kind, scale: 1.0, growth: None })
    }

    pub fn appendix_power(alpha: f64) -> Result<Self> {
        Self::new(UtilityKind::AppendixPower { alpha })
    }

    /// Validates the kind and, when bounds are supplied, certifies them.
    pub fn from_spec(spec: UtilitySpec) -> Result<Self> {
        let u = Self::new(spec.kind)?;
        match spec.growth {
            Some(g) => u.certified(g),
            None => Ok(u),
        }
    }

    /// Attaches `g` after [`certify_growth`] confirms it.
    pub fn certified(mut self, g: GrowthBounds) -> Result<Self> {
        let cert = certify_growth(&self, &g)?;
        if !cert.verdict.holds() {
            let side = if cert.positive.verdict.holds() { &cert.negative } else { &cert.positive };
            return Err(Error::InvalidGrowthBounds(format!(
                "certificate fails at x = {:?}",
                side.witness.unwrap_or(f64::NAN)
            )));
        }
        self.growth = Some(g);
        Ok(self)
    }

    /// `c * u` for `c > 0`; a certificate, if any, is rescaled with it.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidUtility(format!("scale {c} must be positive")));
        }
        let growth = self.growth.map(|g| GrowthBounds { c1: g.c1 * c, c2: g.c2 * c, ..g });
        Ok(Self { kind: self.kind.clone(), scale: self.scale * c, growth })
    }

    pub fn kind(&self) -> &UtilityKind {
        &self.kind
    }

    pub fn growth(&self) -> Option<&GrowthBounds> {
        self.growth.as_ref()
    }

    pub fn is_certified(&self) -> bool {
        self.growth.is_some()
    }

    /// False for tabulated utilities, whose derivative is the slope of the
    /// interpolant (a finite-difference fallback).
    pub fn derivative_is_exact(&self) -> bool {
        !matches!(self.kind, UtilityKind::Tabulated { .. })
    }

    pub fn is_concave_kind(&self) -> bool {
        match &self.kind {
            UtilityKind::CappedPower { .. } => false,
            UtilityKind::Tabulated { xs, ys } => {
                let slopes: Vec<f64> = xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
                slopes.windows(2).all(|s| s[1] <= s[0])
            }
            _ => true,
        }
    }

    pub fn is_strictly_increasing(&self) -> bool {
        match &self.kind {
            UtilityKind::Tabulated { ys, .. } => ys.windows(2).all(|w| w[1] > w[0]),
            _ => true,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.scale * base_value(&self.kind, x)
    }

    /// Derivative; at a kink the left derivative is returned.
    pub fn derivative(&self, x: f64) -> f64 {
        self.scale * base_derivative(&self.kind, x)
    }

    fn positive_tail(&self) -> PosTail {
        let s = self.scale;
        match &self.kind {
            UtilityKind::AppendixPower { alpha }
            | UtilityKind::CappedPower { alpha, .. }
            | UtilityKind::TwoSidedPower { alpha, .. } => PosTail::Power { exponent: *alpha, coef: s },
            UtilityKind::Exponential { risk_aversion } => PosTail::Bounded { sup: s / risk_aversion },
            UtilityKind::Tabulated { xs, ys } => {
                let n = xs.len();
                let slope = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
                if slope > 0.0 {
                    PosTail::Power { exponent: 1.0, coef: s * slope }
                } else {
                    PosTail::Bounded { sup: s * ys[n - 1] }
                }
            }
        }
    }

    fn negative_tail(&self) -> NegTail {
        let s = self.scale;
        match &self.kind {
            UtilityKind::AppendixPower { alpha } => NegTail::Power { exponent: 1.0, coef: s * alpha },
            UtilityKind::CappedPower { slope, .. } => NegTail::Power { exponent: 1.0, coef: s * slope },
            UtilityKind::TwoSidedPower { alpha, beta } => NegTail::Power { exponent: *beta, coef: s * alpha / beta },
            UtilityKind::Exponential { .. } => NegTail::Exponential,
            UtilityKind::Tabulated { xs, ys } => {
                let slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
                if slope > 0.0 {
                    NegTail::Power { exponent: 1.0, coef: s * slope }
                } else {
                    NegTail::Bounded
                }
            }
        }
    }
}

pub fn eval_u(u: &Utility, x: f64) -> f64 {
    u.value(x)
}

pub fn eval_u_prime(u: &Utility, x: f64) -> f64 {
    u.derivative(x)
}

fn validate_kind(kind: &UtilityKind) -> Result<()> {
    let unit = |name: &str, a: f64| {
        if a > 0.0 && a < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidUtility(format!("{name} = {a} must lie in (0, 1)")))
        }
    };
    match kind {
        UtilityKind::AppendixPower { alpha } => unit("alpha", *alpha),
        UtilityKind::CappedPower { alpha, slope } => {
            unit("alpha", *alpha)?;
            if *slope > 0.0 && slope.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidUtility(format!("slope {slope} must be positive")))
            }
        }
        UtilityKind::TwoSidedPower { alpha, beta } => {
            unit("alpha", *alpha)?;
            if *beta > 1.0 && beta.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidUtility(format!("beta = {beta} must exceed 1")))
            }
        }
        UtilityKind::Exponential { risk_aversion } => {
            if *risk_aversion > 0.0 && risk_aversion.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidUtility("risk aversion must be positive".into()))
            }
        }
        UtilityKind::Tabulated { xs, ys } => {
            if xs.len() < 2 || xs.len() != ys.len() {
                return Err(Error::InvalidUtility("tabulated utility needs at least two (x, y) pairs".into()));
            }
            if xs.iter().chain(ys).any(|v| !v.is_finite()) {
                return Err(Error::InvalidUtility("non-finite table entry".into()));
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidUtility("table abscissae must increase strictly".into()));
            }
            Ok(())
        }
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    // index of the segment [xs[i], xs[i+1]] whose closed right end holds x
    let n = xs.len();
    match xs.partition_point(|&v| v < x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    }
}

fn base_value(kind: &UtilityKind, x: f64) -> f64 {
    match kind {
        UtilityKind::AppendixPower { alpha } => {
            if x <= 0.0 {
                alpha * x
            } else {
                (x + 1.0).powf(*alpha) - 1.0
            }
        }
        UtilityKind::CappedPower { alpha, slope } => {
            if x >= 0.0 {
                x.powf(*alpha)
            } else {
                slope * x
            }
        }
        UtilityKind::TwoSidedPower { alpha, beta } => {
            if x >= 0.0 {
                (x + 1.0).powf(*alpha) - 1.0
            } else {
                alpha / beta * (1.0 - (1.0 - x).powf(*beta))
            }
        }
        UtilityKind::Exponential { risk_aversion: l } => -(-l * x).exp_m1() / l,
        UtilityKind::Tabulated { xs, ys } => {
            let i = segment(xs, x);
            let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
            ys[i] + t * (ys[i + 1] - ys[i])
        }
    }
}

fn base_derivative(kind: &UtilityKind, x: f64) -> f64 {
    match kind {
        UtilityKind::AppendixPower { alpha } => {
            if x <= 0.0 {
                *alpha
            } else {
                alpha * (x + 1.0).powf(alpha - 1.0)
            }
        }
        UtilityKind::CappedPower { alpha, slope } => {
            if x <= 0.0 {
                *slope
            } else {
                alpha * x.powf(alpha - 1.0)
            }
        }
        UtilityKind::TwoSidedPower { alpha, beta } => {
            if x >= 0.0 {
                alpha * (x + 1.0).powf(alpha - 1.0)
            } else {
                alpha * (1.0 - x).powf(beta - 1.0)
            }
        }
        UtilityKind::Exponential { risk_aversion: l } => (-l * x).exp(),
        UtilityKind::Tabulated { xs, ys } => {
            let i = segment(xs, x);
            (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeReport {
    pub nondecreasing: bool,
    pub concave: bool,
    /// First grid point where a check failed.
    pub witness: Option<f64>,
}

impl ShapeReport {
    pub fn ok(&self) -> bool {
        self.nondecreasing && self.concave
    }
}

/// First- and second-difference checks on `points` equispaced nodes over
/// `[lo, hi]`, with tolerance `1e-9` relative to the largest `|u|` seen.
pub fn check_shape_on(u: &Utility, lo: f64, hi: f64, points: usize) -> ShapeReport {
    let h = (hi - lo) / (points - 1) as f64;
    let vals: Vec<f64> = (0..points).map(|i| u.value(lo + h * i as f64)).collect();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut rep = ShapeReport { nondecreasing: true, concave: true, witness: None };
    for i in 1..points {
        if vals[i] - vals[i - 1] < -tol {
            rep.nondecreasing = false;
            rep.witness.get_or_insert(lo + h * i as f64);
        }
        if i + 1 < points && vals[i + 1] - 2.0 * vals[i] + vals[i - 1] > tol {
            rep.concave = false;
            rep.witness.get_or_insert(lo + h * i as f64);
        }
    }
    rep
}

/// The standard shape check: 10^4 nodes over `[-100, 100]`.
pub fn check_shape(u: &Utility) -> ShapeReport {
    check_shape_on(u, -100.0, 100.0, 10_000)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PosTail {
    /// `u(x) ~ coef * x^exponent` as `x -> inf`.
    Power { exponent: f64, coef: f64 },
    Bounded { sup: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NegTail {
    /// `u(-t) ~ -coef * t^exponent` as `t -> inf`.
    Power { exponent: f64, coef: f64 },
    Exponential,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideCertificate {
    pub verdict: Verdict,
    /// A point where the cap is violated.
    pub witness: Option<f64>,
    /// Whether the tail behaviour alone settles the sign far out.
    pub tail_decided: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub verdict: Verdict,
    pub positive: SideCertificate,
    pub negative: SideCertificate,
}

const GRID_POINTS: usize = 4000;
const GRID_MAX: f64 = 1e8;

fn log_grid() -> impl Iterator<Item = f64> {
    let (lo, hi) = (1e-6f64.ln(), GRID_MAX.ln());
    (0..GRID_POINTS).map(move |i| (lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64).exp())
}

fn violates(value: f64, cap: f64) -> bool {
    value > cap + 1e-12 * cap.abs().max(1.0)
}

/// Doubling search for a violation of `value(t) <= cap(t)` beyond the grid.
fn doubling_witness(value: impl Fn(f64) -> f64, cap: impl Fn(f64) -> f64) -> Option<f64> {
    let mut t = 1.0f64;
    while t.is_finite() {
        let (v, c) = (value(t), cap(t));
        if !v.is_finite() || !c.is_finite() {
            break;
        }
        if violates(v, c) {
            return Some(t);
        }
        t *= 2.0;
    }
    None
}

/// Checks both growth caps. The far tail is settled from the utility's
/// asymptotic form; the bounded region by a log-spaced scan up to `1e8`.
pub fn certify_growth(u: &Utility, g: &GrowthBounds) -> Result<GrowthCertificate> {
    g.validate()?;

    // x >= 0
    let pos_cap = |x: f64| g.positive_cap(x);
    let pos_tail_ok = match u.positive_tail() {
        PosTail::Power { exponent, coef } => {
            if exponent > g.alpha || (exponent == g.alpha && coef > g.c1) {
                Some(false)
            } else if exponent < g.alpha || coef < g.c1 {
                Some(true)
            } else {
                None
            }
        }
        PosTail::Bounded { sup } => {
            if g.alpha > 0.0 {
                Some(true)
            } else {
                Some(sup <= 2.0 * g.c1)
            }
        }
    };
    let mut pos_witness = std::iter::once(0.0).chain(log_grid()).find(|&x| violates(u.value(x), pos_cap(x)));
    if pos_witness.is_none() && pos_tail_ok == Some(false) {
        pos_witness = doubling_witness(|x| u.value(x), pos_cap);
    }
    let positive = SideCertificate {
        verdict: side_verdict(pos_witness, pos_tail_ok),
        witness: pos_witness,
        tail_decided: pos_tail_ok.is_some(),
    };

    // x < 0, scanned in t = -x
    let neg_cap = |t: f64| g.negative_cap(t);
    let neg_tail_ok = match u.negative_tail() {
        NegTail::Power { exponent, coef } => {
            if exponent > g.beta || (exponent == g.beta && coef > g.c2) {
                Some(true)
            } else if exponent < g.beta || coef < g.c2 {
                Some(false)
            } else {
                None
            }
        }
        NegTail::Exponential => Some(true),
        NegTail::Bounded => Some(false),
    };
    let mut neg_witness = log_grid().find(|&t| violates(u.value(-t), neg_cap(t))).map(|t| -t);
    if neg_witness.is_none() && neg_tail_ok == Some(false) {
        neg_witness = doubling_witness(|t| u.value(-t), neg_cap).map(|t| -t);
    }
    let negative = SideCertificate {
        verdict: side_verdict(neg_witness, neg_tail_ok),
        witness: neg_witness,
        tail_decided: neg_tail_ok.is_some(),
    };

    let verdict = match (positive.verdict, negative.verdict) {
        (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
        (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
        _ => Verdict::Undecided,
    };
    Ok(GrowthCertificate { verdict, positive, negative })
}

fn side_verdict(witness: Option<f64>, tail_ok: Option<bool>) -> Verdict {
    match (witness, tail_ok) {
        (Some(_), _) => Verdict::Fails,
        (None, Some(false)) => Verdict::Undecided,
        (None, _) => Verdict::Holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn app(alpha: f64) -> Utility {
        Utility::appendix_power(alpha).unwrap()
    }

    #[test]
    fn appendix_power_values_and_derivatives() {
        let u = app(0.5);
        assert_eq!(u.value(3.0), 1.0);
        assert_eq!(u.value(-2.0), -1.0);
        assert_eq!(u.derivative(0.0), 0.5);
        assert!((u.derivative(1e-300) - 0.5).abs() < 1e-15);
        assert!((u.derivative(1.25) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(eval_u(&u, 0.0), 0.0);
        assert_eq!(eval_u_prime(&u, -5.0), 0.5);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Utility::appendix_power(1.0).is_err());
        assert!(Utility::appendix_power(0.0).is_err());
        assert!(Utility::new(UtilityKind::TwoSidedPower { alpha: 0.5, beta: 1.0 }).is_err());
        assert!(Utility::new(UtilityKind::Tabulated { xs: vec![0.0, 0.0], ys: vec![0.0, 1.0] }).is_err());
        assert!(GrowthBounds::new(0.5, 1.0, 1.0, 1.0).is_err());
        assert!(GrowthBounds::new(1.0, 2.0, 1.0, 1.0).is_err());
        assert!(GrowthBounds::new(0.0, 2.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn builtin_shapes() {
        for u in [
            app(0.5),
            app(0.9),
            Utility::new(UtilityKind::TwoSidedPower { alpha: 0.5, beta: 2.0 }).unwrap(),
            Utility::new(UtilityKind::Exponential { risk_aversion: 0.3 }).unwrap(),
            Utility::new(UtilityKind::Tabulated { xs: vec![-1.0, 0.0, 2.0], ys: vec![-2.0, 0.0, 1.0] }).unwrap(),
        ] {
            assert!(check_shape(&u).ok(), "{:?}", u.kind());
        }
        // infinite right derivative at 0 against a finite left one
        let capped = Utility::new(UtilityKind::CappedPower { alpha: 0.5, slope: 1.0 }).unwrap();
        let rep = check_shape(&capped);
        assert!(rep.nondecreasing && !rep.concave);
        assert!(!capped.is_concave_kind());
    }

    #[test]
    fn appendix_positive_side_certified_negative_side_not() {
        let u = app(0.5);
        let cert = certify_growth(&u, &GrowthBounds::new(0.5, 1.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(cert.positive.verdict, Verdict::Holds);
        // -x/2 > 1 - x^1.5 for x >= 1.5 or so: the cap is violated
        assert_eq!(cert.negative.verdict, Verdict::Fails);
        let w = cert.negative.witness.unwrap();
        assert!(u.value(w) > 1.0 - w.abs().powf(1.5));
        assert_eq!(cert.verdict, Verdict::Fails);
        assert!(u.clone().certified(GrowthBounds::new(0.5, 1.5, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn capped_power_fails_smaller_alpha() {
        let u = Utility::new(UtilityKind::CappedPower { alpha: 0.5, slope: 1.0 }).unwrap();
        let cert = certify_growth(&u, &GrowthBounds::new(0.4, 2.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(cert.positive.verdict, Verdict::Fails);
        let x = cert.positive.witness.unwrap();
        assert!(x.sqrt() > x.powf(0.4) + 1.0);
        // the spec'd witness region: x = 1e4 gives 100 > 39.8 + 1
        assert!(1e4f64.sqrt() > 1e4f64.powf(0.4) + 1.0);
    }

    #[test]
    fn two_sided_power_certified() {
        let u = Utility::new(UtilityKind::TwoSidedPower { alpha: 0.5, beta: 2.0 }).unwrap();
        let g = GrowthBounds::new(0.5, 2.0, 1.0, 0.25).unwrap();
        let cert = certify_growth(&u, &g).unwrap();
        assert_eq!(cert.verdict, Verdict::Holds, "{cert:?}");
        assert!(u.certified(g).unwrap().is_certified());
        // C2 too large for the leading coefficient alpha / beta
        let u = Utility::new(UtilityKind::TwoSidedPower { alpha: 0.5, beta: 2.0 }).unwrap();
        let too_big = GrowthBounds::new(0.5, 2.0, 1.0, 0.3).unwrap();
        assert_eq!(certify_growth(&u, &too_big).unwrap().negative.verdict, Verdict::Fails);
    }

    #[test]
    fn exponential_certified_with_alpha_zero() {
        let u = Utility::new(UtilityKind::Exponential { risk_aversion: 1.0 }).unwrap();
        let g = GrowthBounds::new(0.0, 2.0, 0.5, 1.0).unwrap();
        assert_eq!(certify_growth(&u, &g).unwrap().verdict, Verdict::Holds);
        let tight = GrowthBounds::new(0.0, 2.0, 0.4, 1.0).unwrap();
        assert_eq!(certify_growth(&u, &tight).unwrap().positive.verdict, Verdict::Fails);
    }

    #[test]
    fn scaling_rescales_values_and_bounds() {
        let u = Utility::new(UtilityKind::TwoSidedPower { alpha: 0.5, beta: 2.0 })
            .unwrap()
            .certified(GrowthBounds::new(0.5, 2.0, 1.0, 0.25).unwrap())
            .unwrap();
        let v = u.scaled(2.0).unwrap();
        assert_eq!(v.value(3.0), 2.0 * u.value(3.0));
        assert_eq!(v.derivative(-1.0), 2.0 * u.derivative(-1.0));
        assert_eq!(v.growth().unwrap().c1, 2.0);
        assert!(u.scaled(0.0).is_err());
    }

    #[test]
    fn tabulated_derivative_is_flagged() {
        let u = Utility::new(UtilityKind::Tabulated { xs: vec![-1.0, 0.0, 2.0], ys: vec![-2.0, 0.0, 1.0] }).unwrap();
        assert!(!u.derivative_is_exact());
        assert_eq!(u.derivative(0.0), 2.0); // left slope at the knot
        assert_eq!(u.derivative(1.0), 0.5);
        assert_eq!(u.value(4.0), 2.0);
        assert_eq!(u.value(-2.0), -4.0);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"two_sided_power","alpha":0.5,"beta":2.0,"growth":{"alpha":0.5,"beta":2.0,"C1":1.0,"C2":0.25}}"#;
        let spec: UtilitySpec = serde_json::from_str(json).unwrap();
        let u = Utility::from_spec(spec).unwrap();
        assert!(u.is_certified());
        let bad = r#"{"kind":"appendix_power","alpha":0.5,"growth":{"alpha":0.5,"beta":1.5,"C1":1.0,"C2":1.0}}"#;
        assert!(Utility::from_spec(serde_json::from_str(bad).unwrap()).is_err());
    }
}
