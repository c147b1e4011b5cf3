//! Expected-utility maximization.
//!
//! [`optimize_single_asset`] solves `max_phi E[u(phi X)]` for one risky
//! payoff by bisection on the monotone first-order condition.
//! [`optimize_truncated`] maximizes the scenario average of `u(V(phi))` over
//! `phi in R^K` by gradient ascent with Armijo backtracking, starting at
//! `phi = 0`. [`truncation_ladder`] repeats that for increasing `K` on one
//! scenario set; because the strategy spaces are nested the optimal values
//! must be nondecreasing.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{check_no_arbitrage, portfolio_value, FactorStrategy, MarketModel};
use crate::numeric::{bisect, l2_norm, par_sum, par_sum_vec};
use crate::scenario::{row_rng, CoordinateLaw, ScenarioSet};
use crate::utility::Utility;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub shrink: f64,
    /// Sufficient-increase constant of the Armijo test.
    pub armijo: f64,
    pub ladder: Vec<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 10_000, initial_step: 1.0, shrink: 0.5, armijo: 1e-4, ladder: Vec::new() }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidSolverConfig(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidSolverConfig(format!("shrink {} must lie in (0, 1)", self.shrink)));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::InvalidSolverConfig("initial step must be positive".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidSolverConfig("armijo constant must lie in (0, 1)".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSolverConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleAssetOptimum {
    pub phi_star: f64,
    pub value: f64,
    /// `E[u'(phi* X) X]` at the returned point.
    pub derivative: f64,
    pub iterations: usize,
}

fn require_concave(u: &Utility) -> Result<()> {
    if u.is_concave_kind() {
        Ok(())
    } else {
        Err(Error::InvalidUtility(format!("{:?} is not concave; no maximizer can be certified", u.kind())))
    }
}

/// Maximizes `phi -> E[u(phi X)]` over the real line.
///
/// The derivative `E[u'(phi X) X]` is nonincreasing in `phi`; it is
/// positive far left and negative far right whenever `X` charges both signs,
/// so a sign-change bracket always exists.
pub fn optimize_single_asset(x: &CoordinateLaw, u: &Utility) -> Result<SingleAssetOptimum> {
    require_concave(u)?;
    let (p_pos, p_neg) = x.sign_masses();
    if !(p_pos > 0.0 && p_neg > 0.0) {
        return Err(Error::OneSided { p_pos, p_neg });
    }
    let deriv = |phi: f64| x.expect(|v| u.derivative(phi * v) * v);
    let (mut lo, mut hi) = (-1.0, 1.0);
    while deriv(lo) < 0.0 {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(Error::Precondition("no sign change of the first-order condition".into()));
        }
    }
    while deriv(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Precondition("no sign change of the first-order condition".into()));
        }
    }
    let root = bisect(deriv, lo, hi, 0.0, 4096).expect("bracket established above");
    let phi_star = root.root;
    Ok(SingleAssetOptimum {
        phi_star,
        value: x.expect(|v| u.value(phi_star * v)),
        derivative: deriv(phi_star),
        iterations: root.iterations,
    })
}

/// The sample-average objective `sum_s w_s u(sum_i phi_i (eps_si - b_i))` on
/// the first `k` coordinates of a scenario set.
#[derive(Debug, Clone)]
pub struct SaaObjective<'a> {
    centered: Vec<f64>,
    weights: &'a [f64],
    k: usize,
    u: &'a Utility,
}

impl<'a> SaaObjective<'a> {
    pub fn new(model: &MarketModel, u: &'a Utility, k: usize, s: &'a ScenarioSet) -> Result<Self> {
        if k == 0 || k > model.truncation() {
            return Err(Error::IndexOutOfRange { index: k, len: model.truncation() });
        }
        if s.width() < k {
            return Err(Error::ScenarioWidth { got: s.width(), need: k });
        }
        let b = &model.b()[..k];
        let centered = s.rows().flat_map(|r| r[..k].iter().zip(b).map(|(e, bi)| e - bi)).collect();
        Ok(Self { centered, weights: s.weights(), k, u })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    fn payoff(&self, j: usize, phi: &[f64]) -> f64 {
        let row = &self.centered[j * self.k..(j + 1) * self.k];
        row.iter().zip(phi).map(|(x, p)| x * p).sum()
    }

    pub fn value(&self, phi: &[f64]) -> f64 {
        par_sum(self.weights.len(), |j| self.weights[j] * self.u.value(self.payoff(j, phi)))
    }

    /// Objective and gradient `sum_s w_s u'(V_s) (eps_s - b)`.
    pub fn value_and_gradient(&self, phi: &[f64]) -> (f64, Vec<f64>) {
        let k = self.k;
        let mut out = par_sum_vec(self.weights.len(), k + 1, |j, acc| {
            let v = self.payoff(j, phi);
            let w = self.weights[j];
            acc[0].add(w * self.u.value(v));
            let d = w * self.u.derivative(v);
            for (a, x) in acc[1..].iter_mut().zip(&self.centered[j * k..(j + 1) * k]) {
                a.add(d * x);
            }
        });
        let f = out.remove(0);
        (f, out)
    }

    pub fn gradient(&self, phi: &[f64]) -> Vec<f64> {
        self.value_and_gradient(phi).1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedOptimum {
    pub phi_star: FactorStrategy,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Monte Carlo standard error of `value`; zero under exact enumeration.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct AscentResult {
    phi: Vec<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient ascent with Armijo backtracking. Each trial step starts from a
/// Barzilai-Borwein estimate (the configured initial step on the first
/// iteration) and is shrunk until the sufficient-increase test passes.
fn gradient_ascent(obj: &SaaObjective<'_>, cfg: &SolverConfig) -> AscentResult {
    let mut phi = vec![0.0; obj.dim()];
    let (mut f, mut g) = obj.value_and_gradient(&phi);
    let mut step = cfg.initial_step;
    for it in 0..cfg.max_iterations {
        let gn2 = dot(&g, &g);
        if gn2.sqrt() <= cfg.tolerance {
            return AscentResult { phi, value: f, grad_norm: gn2.sqrt(), iterations: it, converged: true };
        }
        let mut t = step;
        let mut accepted = None;
        while t > 1e-30 {
            let trial: Vec<f64> = phi.iter().zip(&g).map(|(p, d)| p + t * d).collect();
            let ft = obj.value(&trial);
            if ft >= f + cfg.armijo * t * gn2 {
                accepted = Some((trial, ft));
                break;
            }
            t *= cfg.shrink;
        }
        let Some((next, _)) = accepted else {
            // Armijo test lost to rounding: the objective is flat at machine
            // precision along the gradient.
            return AscentResult { phi, value: f, grad_norm: gn2.sqrt(), iterations: it, converged: false };
        };
        let (f_next, g_next) = obj.value_and_gradient(&next);
        let s: Vec<f64> = next.iter().zip(&phi).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy < 0.0 { dot(&s, &s) / -sy } else { t / cfg.shrink };
        phi = next;
        f = f_next;
        g = g_next;
    }
    let grad_norm = l2_norm(&g);
    AscentResult { phi, value: f, grad_norm, iterations: cfg.max_iterations, converged: grad_norm <= cfg.tolerance }
}

/// Maximizes the scenario average of `u(V(phi))` over `phi in R^k`.
///
/// Refuses markets that fail the per-coordinate no-arbitrage test on the
/// first `k` coordinates. When the iteration cap is hit the best iterate is
/// returned with `converged = false`.
pub fn optimize_truncated(
    model: &MarketModel,
    u: &Utility,
    k: usize,
    s: &ScenarioSet,
    cfg: &SolverConfig,
) -> Result<TruncatedOptimum> {
    cfg.validate()?;
    require_concave(u)?;
    let na = check_no_arbitrage(model);
    let failing: Vec<usize> = na.failing.iter().copied().filter(|&i| i <= k).collect();
    if !failing.is_empty() {
        return Err(Error::Arbitrage { coordinates: failing });
    }
    let obj = SaaObjective::new(model, u, k, s)?;
    let res = gradient_ascent(&obj, cfg);
    let phi_star = FactorStrategy::new(res.phi);

    // recomputed through the portfolio-value path, not the centered matrix
    let value = s.expect_with(|row| u.value(portfolio_value(model, &phi_star, row).expect("width checked")));
    let std_error = s.standard_error_with(|row| u.value(portfolio_value(model, &phi_star, row).expect("width checked")));
    Ok(TruncatedOptimum {
        phi_star,
        value,
        grad_norm: res.grad_norm,
        iterations: res.iterations,
        converged: res.converged,
        std_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    #[serde(rename = "K")]
    pub k: usize,
    pub phi_star: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub std_error: f64,
    /// `||phi*_K - phi*_{K'}||` against the previous level.
    pub diff_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationReport {
    pub levels: Vec<LevelResult>,
    /// `v_{K'} >= v_K - 1e-8` for consecutive levels.
    pub monotone: bool,
    pub unbounded: bool,
    /// Scenario-set arbitrage direction, when one was found.
    pub witness: Option<Vec<f64>>,
}

impl OptimizationReport {
    /// The report for a market where a scenario-set arbitrage was found: no
    /// levels are reported, only the witness.
    pub fn refused(det: &UnboundedReport) -> Self {
        Self { levels: Vec::new(), monotone: true, unbounded: true, witness: det.witness.clone() }
    }
}

pub const MONOTONICITY_SLACK: f64 = 1e-8;

/// Runs [`optimize_truncated`] for every level in `cfg.ladder` (sorted,
/// deduplicated) on one scenario set, which must be at least as wide as the
/// largest level.
pub fn truncation_ladder(model: &MarketModel, u: &Utility, s: &ScenarioSet, cfg: &SolverConfig) -> Result<OptimizationReport> {
    let mut ladder = cfg.ladder.clone();
    if ladder.is_empty() {
        ladder.push(model.truncation());
    }
    ladder.sort_unstable();
    ladder.dedup();
    let optima: Vec<Result<TruncatedOptimum>> =
        ladder.par_iter().map(|&k| optimize_truncated(model, u, k, s, cfg)).collect();
    let mut levels: Vec<LevelResult> = Vec::with_capacity(ladder.len());
    for (k, opt) in ladder.iter().zip(optima) {
        let opt = opt?;
        let diff_norm = levels.last().map(|prev| opt.phi_star.distance(&FactorStrategy::new(prev.phi_star.clone())));
        levels.push(LevelResult {
            k: *k,
            phi_star: opt.phi_star.phi().to_vec(),
            value: opt.value,
            grad_norm: opt.grad_norm,
            iterations: opt.iterations,
            converged: opt.converged,
            std_error: opt.std_error,
            diff_norm,
        });
    }
    let monotone = levels.windows(2).all(|w| w[1].value >= w[0].value - MONOTONICITY_SLACK);
    Ok(OptimizationReport { levels, monotone, unbounded: false, witness: None })
}

/// Scenario sets at most this long are screened by linear programming.
pub const LP_SCENARIO_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSearch {
    CoordinateDirections,
    LinearProgram,
    RandomDirections,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnboundedReport {
    pub found: bool,
    /// A direction with `V >= 0` on every scenario and `V > 0` on some.
    pub witness: Option<Vec<f64>>,
    pub method: WitnessSearch,
    pub directions_tried: usize,
    /// `found` and `u` strictly increasing: the supremum is not attained.
    pub supremum_unattained: bool,
    /// Whether the search was exhaustive on this scenario set (linear
    /// program solved or witness found).
    pub conclusive: bool,
}

const SIGN_TOL: f64 = 1e-12;

fn is_arbitrage(values: impl Iterator<Item = f64>) -> bool {
    let mut positive = false;
    for v in values {
        if v < -SIGN_TOL {
            return false;
        }
        positive |= v > SIGN_TOL;
    }
    positive
}

/// Searches for a scenario-set arbitrage on the model's coordinates.
///
/// Coordinate directions `+-e_i` go first. Sets of at most
/// [`LP_SCENARIO_LIMIT`] rows are then settled exactly by the linear program
/// `max E[V(phi)]` subject to `V_s(phi) >= 0` and `|phi_i| <= 1`; larger sets
/// fall back to `direction_budget` seeded random directions. A miss outside
/// the linear program is reported as inconclusive.
pub fn detect_unbounded(model: &MarketModel, u: &Utility, s: &ScenarioSet, direction_budget: usize) -> Result<UnboundedReport> {
    let k = model.truncation().min(s.width());
    let b = &model.b()[..k];
    let centered: Vec<Vec<f64>> = s.rows().map(|r| r[..k].iter().zip(b).map(|(e, bi)| e - bi).collect()).collect();
    let strictly = u.is_strictly_increasing();
    let report = |witness: Option<Vec<f64>>, method, tried, conclusive| UnboundedReport {
        found: witness.is_some(),
        supremum_unattained: witness.is_some() && strictly,
        witness,
        method,
        directions_tried: tried,
        conclusive,
    };

    let mut tried = 0;
    for i in 0..k {
        for sign in [1.0, -1.0] {
            tried += 1;
            if is_arbitrage(centered.iter().map(|x| sign * x[i])) {
                let mut w = vec![0.0; k];
                w[i] = sign;
                return Ok(report(Some(w), WitnessSearch::CoordinateDirections, tried, true));
            }
        }
    }

    if s.is_exact() {
        // On a full product support the minimum of V(phi) is the sum of the
        // per-coordinate minima, each negative for a two-sided coordinate
        // with phi_i != 0; the coordinate scan above was exhaustive.
        return Ok(report(None, WitnessSearch::CoordinateDirections, tried, true));
    }

    if s.len() <= LP_SCENARIO_LIMIT {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = (0..k)
            .map(|i| {
                let c: f64 = centered.iter().zip(s.weights()).map(|(x, w)| w * x[i]).sum();
                lp.add_var(c, (-1.0, 1.0))
            })
            .collect();
        for x in &centered {
            let expr: Vec<_> = vars.iter().copied().zip(x.iter().copied()).collect();
            lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
        }
        let sol = lp.solve().map_err(|e| Error::Precondition(format!("arbitrage LP failed: {e}")))?;
        let phi: Vec<f64> = vars.iter().map(|v| sol[*v]).collect();
        let witness = (sol.objective() > 1e-9 && is_arbitrage(centered.iter().map(|x| dot(x, &phi)))).then_some(phi);
        return Ok(report(witness, WitnessSearch::LinearProgram, tried, true));
    }

    for d in 0..direction_budget {
        tried += 1;
        let mut rng = row_rng(0x5eed_d1ec, d as u64);
        let mut dir: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let n = l2_norm(&dir);
        if n == 0.0 {
            continue;
        }
        dir.iter_mut().for_each(|v| *v /= n);
        if is_arbitrage(centered.iter().map(|x| dot(x, &dir))) {
            return Ok(report(Some(dir), WitnessSearch::RandomDirections, tried, true));
        }
    }
    Ok(report(None, WitnessSearch::RandomDirections, tried, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{build_market, ModelSpec};
    use crate::scenario::{enumerate_scenarios, DistributionSpec};
    use crate::utility::UtilityKind;

    fn law(points: &[f64], probs: &[f64]) -> CoordinateLaw {
        crate::scenario::DiscreteLaw::new(points.to_vec(), probs.to_vec()).unwrap().into()
    }

    fn rademacher_market(b: &[f64]) -> MarketModel {
        build_market(ModelSpec::from_drifts(b, DistributionSpec::Rademacher)).unwrap()
    }

    #[test]
    fn single_asset_closed_forms() {
        let u = Utility::appendix_power(0.5).unwrap();
        // (phi + 1)^(-1/2) = 0.36 / 0.64
        let opt = optimize_single_asset(&law(&[1.0, -1.0], &[0.64, 0.36]), &u).unwrap();
        let expected = (0.64f64 / 0.36).powi(2) - 1.0;
        assert!((opt.phi_star - expected).abs() < 1e-10);
        assert!((opt.phi_star - 2.16049).abs() < 1e-5);
        assert!(opt.derivative.abs() < 1e-12);

        let sym = optimize_single_asset(&law(&[1.0, -1.0], &[0.5, 0.5]), &u).unwrap();
        assert_eq!(sym.phi_star, 0.0);

        let short = optimize_single_asset(&law(&[0.8, -1.2], &[0.5, 0.5]), &u).unwrap();
        assert!((short.phi_star + 25.0 / 24.0).abs() < 1e-10);
    }

    #[test]
    fn single_asset_grid_search_agrees() {
        let u = Utility::appendix_power(0.5).unwrap();
        let x = law(&[1.0, -1.0], &[0.64, 0.36]);
        let opt = optimize_single_asset(&x, &u).unwrap();
        let (mut best_phi, mut best) = (0.0, f64::NEG_INFINITY);
        for i in 0..=50_000 {
            let phi = i as f64 * 1e-4;
            let v = 0.64 * u.value(phi) + 0.36 * u.value(-phi);
            if v > best {
                best = v;
                best_phi = phi;
            }
        }
        assert!((best_phi - opt.phi_star).abs() <= 1e-4);
        assert!(opt.value >= best - 1e-15);
    }

    #[test]
    fn single_asset_one_sided_rejected() {
        let u = Utility::appendix_power(0.5).unwrap();
        let err = optimize_single_asset(&law(&[2.0, 0.0], &[0.5, 0.5]), &u).unwrap_err();
        assert!(matches!(err, Error::OneSided { .. }));
    }

    #[test]
    fn zero_drift_gives_zero_strategy() {
        for u in [
            Utility::appendix_power(0.5).unwrap(),
            Utility::new(UtilityKind::TwoSidedPower { alpha: 0.3, beta: 2.0 }).unwrap(),
            Utility::new(UtilityKind::Exponential { risk_aversion: 1.0 }).unwrap(),
        ] {
            for k in [1, 3] {
                let model = rademacher_market(&vec![0.0; k]);
                let s = enumerate_scenarios(model.noise()).unwrap();
                let opt = optimize_truncated(&model, &u, k, &s, &SolverConfig::default()).unwrap();
                assert!(opt.phi_star.norm() <= 1e-4);
                assert!((opt.value - u.value(0.0)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn one_coordinate_matches_single_asset() {
        let u = Utility::appendix_power(0.5).unwrap();
        let model = rademacher_market(&[0.2]);
        let s = enumerate_scenarios(model.noise()).unwrap();
        let opt = optimize_truncated(&model, &u, 1, &s, &SolverConfig::default()).unwrap();
        let single = optimize_single_asset(&law(&[0.8, -1.2], &[0.5, 0.5]), &u).unwrap();
        assert!(opt.converged);
        assert!((opt.phi_star.phi()[0] - single.phi_star).abs() < 1e-6);
        assert!((opt.value - single.value).abs() < 1e-9);
    }

    #[test]
    fn arbitrage_market_refused() {
        let u = Utility::appendix_power(0.5).unwrap();
        let model = rademacher_market(&[0.2, -1.0]);
        let s = enumerate_scenarios(model.noise()).unwrap();
        assert!(matches!(
            optimize_truncated(&model, &u, 2, &s, &SolverConfig::default()),
            Err(Error::Arbitrage { .. })
        ));
        // the first coordinate alone is fine
        assert!(optimize_truncated(&model, &u, 1, &s, &SolverConfig::default()).is_ok());
    }

    #[test]
    fn capped_power_refused() {
        let u = Utility::new(UtilityKind::CappedPower { alpha: 0.5, slope: 1.0 }).unwrap();
        let model = rademacher_market(&[0.2]);
        let s = enumerate_scenarios(model.noise()).unwrap();
        assert!(optimize_truncated(&model, &u, 1, &s, &SolverConfig::default()).is_err());
    }

    #[test]
    fn iteration_cap_flags_unconverged() {
        let u = Utility::appendix_power(0.5).unwrap();
        let model = rademacher_market(&[0.2, 0.1, 0.05]);
        let s = enumerate_scenarios(model.noise()).unwrap();
        let cfg = SolverConfig { max_iterations: 1, ..SolverConfig::default() };
        let opt = optimize_truncated(&model, &u, 3, &s, &cfg).unwrap();
        assert!(!opt.converged);
        assert!(opt.value > u.value(0.0));
    }

    #[test]
    fn ladder_trivial_cases() {
        let u = Utility::appendix_power(0.5).unwrap();
        let model = rademacher_market(&[0.0; 8]);
        let s = enumerate_scenarios(model.noise()).unwrap();
        let cfg = SolverConfig { ladder: vec![1, 2, 4, 8], ..SolverConfig::default() };
        let rep = truncation_ladder(&model, &u, &s, &cfg).unwrap();
        assert!(rep.monotone);
        for l in &rep.levels {
            assert!((l.value - 0.0).abs() < 1e-12);
            assert!(l.diff_norm.unwrap_or(0.0) < 1e-12);
        }

        let model = rademacher_market(&[0.2, 0.1]);
        let s = enumerate_scenarios(model.noise()).unwrap();
        let cfg = SolverConfig { ladder: vec![2], ..SolverConfig::default() };
        let rep = truncation_ladder(&model, &u, &s, &cfg).unwrap();
        let direct = optimize_truncated(&model, &u, 2, &s, &cfg).unwrap();
        assert_eq!(rep.levels.len(), 1);
        assert_eq!(rep.levels[0].value, direct.value);
        assert_eq!(rep.levels[0].phi_star, direct.phi_star.phi());
        assert_eq!(rep.levels[0].diff_norm, None);
    }

    #[test]
    fn unbounded_detection() {
        let u = Utility::appendix_power(0.5).unwrap();
        let bad = rademacher_market(&[-1.0]);
        let s = enumerate_scenarios(bad.noise()).unwrap();
        let rep = detect_unbounded(&bad, &u, &s, 100).unwrap();
        assert!(rep.found && rep.supremum_unattained);
        assert_eq!(rep.witness, Some(vec![1.0]));

        let fair = rademacher_market(&[0.0; 3]);
        let s = enumerate_scenarios(fair.noise()).unwrap();
        let rep = detect_unbounded(&fair, &u, &s, 100).unwrap();
        assert!(!rep.found && rep.conclusive);
        assert_eq!(rep.method, WitnessSearch::CoordinateDirections);
        // the same rows without the product-enumeration tag go through the LP
        let rows: Vec<Vec<f64>> = s.rows().map(|r| r.to_vec()).collect();
        let supplied = ScenarioSet::from_rows(&rows, Some(s.weights().to_vec())).unwrap();
        let rep = detect_unbounded(&fair, &u, &supplied, 100).unwrap();
        assert!(!rep.found);
        assert_eq!(rep.method, WitnessSearch::LinearProgram);

        let good = rademacher_market(&[0.2, -0.1, 0.05]);
        let s = enumerate_scenarios(good.noise()).unwrap();
        assert!(!detect_unbounded(&good, &u, &s, 100).unwrap().found);
    }

    #[test]
    fn lp_finds_combination_arbitrage() {
        // each coordinate two-sided, but eps_1 + eps_2 >= 0 on the sampled rows
        let model = rademacher_market(&[0.0, 0.0]);
        let rows = [[1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]];
        let s = ScenarioSet::from_rows(&rows, None).unwrap();
        let u = Utility::appendix_power(0.5).unwrap();
        let rep = detect_unbounded(&model, &u, &s, 10).unwrap();
        assert!(rep.found);
        let w = rep.witness.unwrap();
        for r in rows {
            assert!(w[0] * r[0] + w[1] * r[1] >= -1e-12);
        }
    }
}
