//! Equivalent measures under which every asset has zero expected return.
//!
//! Each coordinate is reweighted independently. The default reweighting is
//! the logistic tilt `psi(a (eps - b)) / z`, with `a` chosen so that
//! `eps - b` has mean zero under the tilted law. Because `psi` takes values
//! in `(1/2, 3/2)` the tilt can only move the mean so far; coordinates whose
//! drift is out of reach fall back to the utility-gradient measure
//! `u'(phi* X) / E[u'(phi* X)]` of the one-asset problem, which prices `X`
//! exactly by the first-order condition.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{asset_return, centered_value, check_no_arbitrage, FactorStrategy, MarketModel};
use crate::numeric::bisect;
use crate::optimizer::optimize_single_asset;
use crate::scenario::{CoordinateLaw, DistributionSpec, ScenarioSet};
use crate::utility::Utility;

/// Tilt parameters are searched in `[-TILT_BRACKET, TILT_BRACKET]`.
pub const TILT_BRACKET: f64 = 50.0;
pub const TILT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_FALLBACK_ALPHA: f64 = 0.5;
const BISECTION_BUDGET: usize = 400;

/// `1/2 + 1/(1 + e^x)`: strictly decreasing from `3/2` to `1/2`, `psi(0) = 1`.
pub fn psi(x: f64) -> f64 {
    0.5 + 1.0 / (1.0 + x.exp())
}

/// `g(a) = E[psi(a X) X]` for `X = eps - b`. Strictly decreasing in `a`,
/// with `g(0) = E[X]`.
pub fn tilt_residual(x: &CoordinateLaw, a: f64) -> f64 {
    x.expect(|v| psi(a * v) * v)
}

fn coordinate_law(dist: &DistributionSpec) -> Result<CoordinateLaw> {
    dist.coordinate_law().ok_or(Error::Unsupported { family: dist.family(), what: "exact tilt expectations" })
}

/// Solves `E[psi(a (eps - b)) (eps - b)] = 0` for `a` by bisection.
///
/// Fails with [`Error::OneSided`] when `eps - b` does not charge both signs
/// (an arbitrage) and with [`Error::NoTiltBracket`] when the root lies
/// outside the search bracket or is not resolved to `tol`; the latter is
/// the cue for the utility-gradient fallback.
pub fn solve_tilt(dist: &DistributionSpec, b: f64, tol: f64) -> Result<f64> {
    let x = coordinate_law(dist)?.shifted(b);
    solve_tilt_law(&x, tol)
}

fn solve_tilt_law(x: &CoordinateLaw, tol: f64) -> Result<f64> {
    let (p_pos, p_neg) = x.sign_masses();
    if !(p_pos > 0.0 && p_neg > 0.0) {
        return Err(Error::OneSided { p_pos, p_neg });
    }
    let g = |a: f64| tilt_residual(x, a);
    let no_bracket = || Error::NoTiltBracket { bracket: TILT_BRACKET, g_lo: g(-TILT_BRACKET), g_hi: g(TILT_BRACKET) };
    match bisect(g, -TILT_BRACKET, TILT_BRACKET, tol, BISECTION_BUDGET) {
        Some(r) if r.converged => Ok(r.root),
        _ => Err(no_bracket()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TiltMethod {
    LogisticTilt { a: f64 },
    UtilityGradient { alpha: f64, phi_star: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateTilt {
    /// 1-based coordinate index.
    pub index: usize,
    pub b: f64,
    #[serde(flatten)]
    pub method: TiltMethod,
    /// Normalizer: `E[psi(a X)]` or `E[u'(phi* X)]`.
    pub z: f64,
    /// `E_Q[eps - b]`, evaluated exactly on the coordinate law.
    pub residual: f64,
}

impl CoordinateTilt {
    /// Density factor `dQ_i/dP_i` at noise value `eps`.
    pub fn factor(&self, eps: f64) -> f64 {
        let x = eps - self.b;
        match self.method {
            TiltMethod::LogisticTilt { a } => psi(a * x) / self.z,
            TiltMethod::UtilityGradient { alpha, phi_star } => appendix_derivative(alpha, phi_star * x) / self.z,
        }
    }

    /// `|a| / |b|`; `None` for fallback coordinates and zero drift.
    pub fn tilt_ratio(&self) -> Option<f64> {
        match self.method {
            TiltMethod::LogisticTilt { a } if self.b != 0.0 => Some(a.abs() / self.b.abs()),
            _ => None,
        }
    }

    pub fn a(&self) -> Option<f64> {
        match self.method {
            TiltMethod::LogisticTilt { a } => Some(a),
            TiltMethod::UtilityGradient { .. } => None,
        }
    }
}

fn appendix_derivative(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        alpha
    } else {
        alpha * (x + 1.0).powf(alpha - 1.0)
    }
}

/// A product measure `dQ/dP = prod_i factor_i(eps_i)` over the first `K`
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedMeasure {
    pub coordinates: Vec<CoordinateTilt>,
}

impl TiltedMeasure {
    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    /// `dQ/dP` at one noise row (extra trailing coordinates are ignored).
    pub fn density(&self, eps: &[f64]) -> f64 {
        self.coordinates.iter().zip(eps).map(|(c, &e)| c.factor(e)).product()
    }

    pub fn densities(&self, s: &ScenarioSet) -> Result<Vec<f64>> {
        if s.width() < self.len() {
            return Err(Error::ScenarioWidth { got: s.width(), need: self.len() });
        }
        Ok((0..s.len()).into_par_iter().map(|j| self.density(s.row(j))).collect())
    }

    pub fn max_residual(&self) -> f64 {
        self.coordinates.iter().map(|c| c.residual.abs()).fold(0.0, f64::max)
    }

    pub fn fallback_count(&self) -> usize {
        self.coordinates.iter().filter(|c| matches!(c.method, TiltMethod::UtilityGradient { .. })).count()
    }

    /// `sum_i (a_i^2 + b_i^2)`, counting `a_i = 0` on fallback coordinates.
    pub fn tilt_energy(&self) -> f64 {
        self.coordinates.iter().map(|c| c.a().unwrap_or(0.0).powi(2) + c.b * c.b).sum()
    }

    /// CSV with one row per coordinate: `i,b,method,a,z,residual`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "b", "method", "a", "z", "residual"])?;
        for c in &self.coordinates {
            let (method, a) = match c.method {
                TiltMethod::LogisticTilt { a } => ("logistic_tilt".to_string(), a.to_string()),
                TiltMethod::UtilityGradient { alpha, .. } => (format!("utility_gradient({alpha})"), String::new()),
            };
            w.write_record([c.index.to_string(), c.b.to_string(), method, a, c.z.to_string(), c.residual.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn gradient_coordinate(index: usize, b: f64, x: &CoordinateLaw, alpha: f64) -> Result<CoordinateTilt> {
    let m = single_asset_measure_law(x, alpha)?;
    Ok(CoordinateTilt {
        index,
        b,
        method: TiltMethod::UtilityGradient { alpha, phi_star: m.phi_star },
        z: m.normalizer,
        residual: m.pricing_residual,
    })
}

/// Builds the drift-removing product measure for every coordinate of the
/// model. Coordinates whose tilt equation has no root in the bracket use
/// the utility-gradient construction with exponent `fallback_alpha`.
pub fn build_tilted_measure(model: &MarketModel, fallback_alpha: f64) -> Result<TiltedMeasure> {
    if !(fallback_alpha > 0.0 && fallback_alpha < 1.0) {
        return Err(Error::InvalidUtility(format!("fallback alpha {fallback_alpha} must lie in (0, 1)")));
    }
    check_no_arbitrage(model).into_result()?;
    let coordinates = model
        .noise()
        .par_iter()
        .zip(model.b())
        .enumerate()
        .map(|(i, (dist, &b))| {
            let x = coordinate_law(dist)?.shifted(b);
            match solve_tilt_law(&x, TILT_TOLERANCE) {
                Ok(a) => {
                    let z = x.expect(|v| psi(a * v));
                    let residual = x.expect(|v| psi(a * v) * v) / z;
                    Ok(CoordinateTilt { index: i + 1, b, method: TiltMethod::LogisticTilt { a }, z, residual })
                }
                Err(Error::NoTiltBracket { .. }) => gradient_coordinate(i + 1, b, &x, fallback_alpha),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TiltedMeasure { coordinates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub w: f64,
    /// `E[(dQ/dP)^w]`.
    pub density: f64,
    /// `E[(dP/dQ)^w]`.
    pub inverse: f64,
    pub density_std_error: f64,
    pub inverse_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleAssetMeasure {
    pub phi_star: f64,
    /// `E[u'(phi* X)]`.
    pub normalizer: f64,
    /// `(x, dW/dP(x))` on the support, for finitely supported `X`.
    pub support_density: Option<Vec<(f64, f64)>>,
    /// `E_W[X]`.
    pub pricing_residual: f64,
    /// Upper bound `alpha / E[u'(phi* X)]` of the density.
    pub density_bound: f64,
    pub moments: Vec<MomentRow>,
}

/// The utility-gradient measure of the one-asset problem with the
/// linear/power utility of exponent `alpha`.
pub fn single_asset_measure(x: &CoordinateLaw, alpha: f64, w_list: &[f64]) -> Result<SingleAssetMeasure> {
    let mut m = single_asset_measure_law(x, alpha)?;
    let density = |v: f64| appendix_derivative(alpha, m.phi_star * v) / m.normalizer;
    m.moments = w_list
        .iter()
        .map(|&w| MomentRow {
            w,
            density: x.expect(|v| density(v).powf(w)),
            inverse: x.expect(|v| density(v).powf(-w)),
            density_std_error: 0.0,
            inverse_std_error: 0.0,
        })
        .collect();
    Ok(m)
}

fn single_asset_measure_law(x: &CoordinateLaw, alpha: f64) -> Result<SingleAssetMeasure> {
    let u = Utility::appendix_power(alpha)?;
    let opt = optimize_single_asset(x, &u)?;
    let phi = opt.phi_star;
    let normalizer = x.expect(|v| u.derivative(phi * v));
    let pricing_residual = x.expect(|v| u.derivative(phi * v) * v) / normalizer;
    let support_density = match x {
        CoordinateLaw::Discrete(law) => Some(law.points.iter().map(|&v| (v, u.derivative(phi * v) / normalizer)).collect()),
        CoordinateLaw::Uniform { .. } => None,
    };
    Ok(SingleAssetMeasure {
        phi_star: phi,
        normalizer,
        support_density,
        pricing_residual,
        density_bound: alpha / normalizer,
        moments: Vec::new(),
    })
}

/// `{-2, -1, 1, 2}` plus `+-p` when given.
pub fn default_moment_exponents(p: Option<f64>) -> Vec<f64> {
    let mut w = vec![-2.0, -1.0, 1.0, 2.0];
    if let Some(p) = p {
        for v in [-p, p] {
            if !w.contains(&v) {
                w.push(v);
            }
        }
    }
    w.sort_by(f64::total_cmp);
    w
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub moments: Vec<MomentRow>,
    pub max_pricing_residual: f64,
    /// `|a_i| / |b_i|` per coordinate.
    pub tilt_ratios: Vec<Option<f64>>,
    pub max_tilt_ratio: Option<f64>,
    /// `sum_i (a_i^2 + b_i^2)`.
    pub tilt_energy: f64,
    /// Smallest `c` with `ln E[(dQ/dP)^w] <= c * tilt_energy` and the same
    /// for `dP/dQ`, over all tabulated `w`.
    pub fitted_c: f64,
    pub min_density: f64,
    /// `E[dQ/dP]` over the scenario set.
    pub density_mean: f64,
    pub monte_carlo: bool,
    pub fallback_coordinates: usize,
}

impl MeasureReport {
    pub fn moments_finite_positive(&self) -> bool {
        self.moments.iter().all(|m| m.density.is_finite() && m.density > 0.0 && m.inverse.is_finite() && m.inverse > 0.0)
    }
}

/// Tabulates `E[(dQ/dP)^w]` and `E[(dP/dQ)^w]` over the scenario set.
/// Standard errors are zero under exact enumeration.
pub fn measure_moments(q: &TiltedMeasure, s: &ScenarioSet, w_list: &[f64]) -> Result<MeasureReport> {
    let d = q.densities(s)?;
    let stat = |f: &(dyn Fn(f64) -> f64 + Sync)| (s.expect_indexed(|j| f(d[j])), s.standard_error_indexed(|j| f(d[j])));
    let moments: Vec<MomentRow> = w_list
        .iter()
        .map(|&w| {
            let (density, density_std_error) = stat(&|x: f64| x.powf(w));
            let (inverse, inverse_std_error) = stat(&|x: f64| x.powf(-w));
            MomentRow { w, density, inverse, density_std_error, inverse_std_error }
        })
        .collect();
    let energy = q.tilt_energy();
    let fitted_c = if energy > 0.0 {
        moments.iter().flat_map(|m| [m.density.ln(), m.inverse.ln()]).fold(0.0, f64::max) / energy
    } else {
        0.0
    };
    let tilt_ratios: Vec<Option<f64>> = q.coordinates.iter().map(CoordinateTilt::tilt_ratio).collect();
    Ok(MeasureReport {
        moments,
        max_pricing_residual: q.max_residual(),
        max_tilt_ratio: tilt_ratios.iter().flatten().copied().reduce(f64::max),
        tilt_ratios,
        tilt_energy: energy,
        fitted_c,
        min_density: d.iter().copied().fold(f64::INFINITY, f64::min),
        density_mean: s.expect_indexed(|j| d[j]),
        monte_carlo: !s.is_exact(),
        fallback_coordinates: q.fallback_count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricingReport {
    /// `E_Q[R_i]` for `i = 1..=K`.
    pub asset_residuals: Vec<f64>,
    /// `E_Q[V(phi)]` per supplied strategy.
    pub strategy_residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Checks that assets and strategies have zero expected value under `q`,
/// with expectations taken over the scenario set.
pub fn verify_pricing(q: &TiltedMeasure, model: &MarketModel, s: &ScenarioSet, strategies: &[FactorStrategy]) -> Result<PricingReport> {
    let k = q.len();
    if s.width() < k {
        return Err(Error::ScenarioWidth { got: s.width(), need: k });
    }
    let mut asset_residuals = Vec::with_capacity(k);
    for i in 1..=k {
        asset_residuals.push(s.expect_with(|r| q.density(r) * asset_return(model, i, r).expect("width checked")));
    }
    let b = model.b();
    let mut strategy_residuals = Vec::with_capacity(strategies.len());
    for phi in strategies {
        if phi.len() > k {
            return Err(Error::PortfolioTooLong { got: phi.len(), max: k });
        }
        strategy_residuals.push(s.expect_with(|r| q.density(r) * centered_value(phi.phi(), b, r)));
    }
    let max_residual = asset_residuals.iter().chain(&strategy_residuals).map(|v| v.abs()).fold(0.0, f64::max);
    Ok(PricingReport { asset_residuals, strategy_residuals, max_residual })
}
