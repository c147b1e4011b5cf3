//! Numerical checks of the side conditions and inequalities behind the
//! existence results, and the run report that collects them.
//!
//! * [`check_subgaussian`] scans `sup_i E[exp(gamma |eps_i|)]` over a
//!   `gamma` grid.
//! * [`check_assumption_relevant`] evaluates the two-sided tail and
//!   truncated-second-moment conditions on grids.
//! * [`exp_ui_bound`] measures `E[exp(|V|)]` over random strategies of small
//!   norm and fits the `2 exp(C ||phi||^2)` envelope.
//! * [`holder_chain_check`] evaluates both sides of the Hölder chain that
//!   bounds the positive part of the utility by its negative part.
//! * [`value_cap`] turns the same constants into an upper bound on any
//!   attainable expected utility.
//! * [`emit_report`] writes `report.json` and `tables/*.csv`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::market::{centered_value, check_assumption_b, check_no_arbitrage, AssumptionBReport, FactorStrategy, MarketModel, NoArbitrageReport};
use crate::numeric::l2_norm;
use crate::optimizer::OptimizationReport;
use crate::risk_neutral::{MeasureReport, PricingReport, TiltedMeasure};
use crate::scenario::{row_rng, ScenarioSet, Side};
use crate::utility::Utility;
use crate::verdict::Verdict;

pub const DEFAULT_GAMMAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
pub const DEFAULT_DELTAS: [f64; 3] = [0.25, 0.5, 1.0];
pub const UI_THRESHOLDS: [f64; 3] = [10.0, 100.0, 1000.0];
/// Margins above `-HOLDER_SLACK` count as satisfied.
pub const HOLDER_SLACK: f64 = 1e-9;

/// `count` strategies on `k` coordinates: i.i.d. uniform entries on
/// `[-1, 1]`, rescaled to norm `norm`. Strategy `j` draws from its own
/// stream keyed by `(seed, j)`.
pub fn random_strategies(k: usize, count: usize, norm: f64, seed: u64) -> Vec<FactorStrategy> {
    (0..count)
        .map(|j| {
            let mut rng = row_rng(seed, j as u64);
            let mut phi: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let n = l2_norm(&phi);
            if n > 0.0 {
                phi.iter_mut().for_each(|v| *v *= norm / n);
            }
            FactorStrategy::new(phi)
        })
        .collect()
}

/// Like [`random_strategies`], with each norm drawn uniformly from
/// `(0, max_norm]`.
pub fn random_strategies_in_ball(k: usize, count: usize, max_norm: f64, seed: u64) -> Vec<FactorStrategy> {
    (0..count)
        .map(|j| {
            let mut rng = row_rng(seed, j as u64);
            let mut phi: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let target = max_norm * (1.0 - rng.gen::<f64>());
            let n = l2_norm(&phi);
            if n > 0.0 {
                phi.iter_mut().for_each(|v| *v *= target / n);
            }
            FactorStrategy::new(phi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    pub gamma: f64,
    /// `max_i E[exp(gamma |eps_i|)]`; infinite when some coordinate has no
    /// exponential moment of this order.
    pub sup_moment: f64,
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubGaussianReport {
    pub verdict: Verdict,
    pub rows: Vec<GammaRow>,
    pub largest_passing_gamma: Option<f64>,
}

/// Exponential-moment scan over the truncated model's coordinates.
pub fn check_subgaussian(model: &MarketModel, gammas: &[f64]) -> SubGaussianReport {
    let rows: Vec<GammaRow> = gammas
        .iter()
        .map(|&gamma| {
            let sup_moment = model.noise().iter().map(|d| d.exp_moment(gamma)).fold(0.0, f64::max);
            GammaRow { gamma, sup_moment, finite: sup_moment.is_finite() }
        })
        .collect();
    let largest_passing_gamma = rows.iter().filter(|r| r.finite).map(|r| r.gamma).reduce(f64::max);
    SubGaussianReport { verdict: Verdict::from_bool(largest_passing_gamma.is_some()), rows, largest_passing_gamma }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub x: f64,
    /// `min_i P(eps_i > x)`.
    pub inf_above: f64,
    /// `min_i P(eps_i < -x)`.
    pub inf_below: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedMomentRow {
    pub level: f64,
    /// `max_i E[eps_i^2 1{|eps_i| >= level}]`.
    pub sup_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevantReport {
    pub tails: Vec<TailRow>,
    pub tails_verdict: Verdict,
    pub first_failing_x: Option<f64>,
    pub truncated_moments: Vec<TruncatedMomentRow>,
    /// Holds when every coordinate has finite variance: finitely many
    /// coordinates, or one shared law, make the supremum vanish.
    pub ui_verdict: Verdict,
}

/// Two-sided tail masses on `x_grid` and truncated second moments on
/// `level_grid`, evaluated per coordinate from the family formulas.
pub fn check_assumption_relevant(model: &MarketModel, x_grid: &[f64], level_grid: &[f64]) -> RelevantReport {
    let noise = model.noise();
    let tails: Vec<TailRow> = x_grid
        .iter()
        .map(|&x| TailRow {
            x,
            inf_above: noise.iter().map(|d| d.tail_probability(x, Side::Above)).fold(f64::INFINITY, f64::min),
            inf_below: noise.iter().map(|d| d.tail_probability(-x, Side::Below)).fold(f64::INFINITY, f64::min),
        })
        .collect();
    let first_failing_x = tails.iter().find(|t| !(t.inf_above > 0.0 && t.inf_below > 0.0)).map(|t| t.x);
    let truncated_moments = level_grid
        .iter()
        .map(|&level| TruncatedMomentRow {
            level,
            sup_moment: noise.iter().map(|d| d.truncated_second_moment(level)).fold(0.0, f64::max),
        })
        .collect();
    let finite_variance = noise.iter().all(|d| d.second_moment().is_finite());
    RelevantReport {
        tails,
        tails_verdict: Verdict::from_bool(first_failing_x.is_none()),
        first_failing_x,
        truncated_moments,
        ui_verdict: Verdict::from_bool(finite_variance),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpUiRow {
    pub delta: f64,
    pub trials: usize,
    /// Largest measured `E[exp(|V(phi)|)]`.
    pub sup_estimate: f64,
    /// Smallest `C >= 0` with every measurement below `2 exp(C ||phi||^2)`.
    pub fitted_c: f64,
    pub std_error: f64,
    pub monte_carlo: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpUiMeasurement {
    pub norm: f64,
    pub value: f64,
    pub std_error: f64,
}

/// `E[exp(|sum_i phi_i eps_i|)]` for each strategy, over the scenario set.
pub fn exp_moments_of(s: &ScenarioSet, strategies: &[FactorStrategy]) -> Result<Vec<ExpUiMeasurement>> {
    strategies
        .iter()
        .map(|phi| {
            if phi.len() > s.width() {
                return Err(Error::ScenarioWidth { got: s.width(), need: phi.len() });
            }
            let f = |r: &[f64]| r.iter().zip(phi.phi()).map(|(e, p)| e * p).sum::<f64>().abs().exp();
            Ok(ExpUiMeasurement { norm: phi.norm(), value: s.expect_with(f), std_error: s.standard_error_with(f) })
        })
        .collect()
}

/// Measures the exponential moment over `trials` seeded strategies with
/// `||phi|| <= delta` on the model's coordinates.
pub fn exp_ui_bound(model: &MarketModel, s: &ScenarioSet, delta: f64, trials: usize, seed: u64) -> Result<ExpUiRow> {
    let strategies = random_strategies_in_ball(model.truncation(), trials, delta, seed);
    let measured = exp_moments_of(s, &strategies)?;
    let fitted_c = measured
        .iter()
        .filter(|m| m.norm > 0.0)
        .map(|m| (m.value / 2.0).ln() / (m.norm * m.norm))
        .fold(0.0, f64::max);
    let worst = measured.iter().max_by(|a, b| a.value.total_cmp(&b.value));
    Ok(ExpUiRow {
        delta,
        trials,
        sup_estimate: worst.map_or(1.0, |m| m.value),
        fitted_c,
        std_error: worst.map_or(0.0, |m| m.std_error),
        monte_carlo: !s.is_exact(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UiTailRow {
    pub threshold: f64,
    /// `max_phi E[Z^2 1{Z^2 > T}]` with `Z = V(phi)` uncentered.
    pub sup_tail: f64,
}

/// Tail second moments of `Z = sum_i phi_i eps_i` over the strategies.
pub fn ui_tail_decay(s: &ScenarioSet, strategies: &[FactorStrategy], thresholds: &[f64]) -> Vec<UiTailRow> {
    thresholds
        .iter()
        .map(|&t| UiTailRow {
            threshold: t,
            sup_tail: strategies
                .iter()
                .map(|phi| {
                    s.expect_with(|r| {
                        let z: f64 = r.iter().zip(phi.phi()).map(|(e, p)| e * p).sum();
                        if z * z > t {
                            z * z
                        } else {
                            0.0
                        }
                    })
                })
                .fold(0.0, f64::max),
        })
        .collect()
}

/// The measure-dependent constants of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderConstants {
    /// `(E[(dP/dQ)^(alpha/(1-alpha))])^(1-alpha)`.
    pub c_prime: f64,
    /// `(E[(dQ/dP)^(beta/(beta-1))])^(alpha(beta-1)/beta)`.
    pub c_double_prime: f64,
}

/// Computes the chain constants from the densities over the scenario set.
pub fn holder_constants(q: &TiltedMeasure, s: &ScenarioSet, alpha: f64, beta: f64) -> Result<HolderConstants> {
    let d = q.densities(s)?;
    let p_exp = alpha / (1.0 - alpha);
    let q_exp = beta / (beta - 1.0);
    let inv = s.expect_indexed(|j| d[j].powf(-p_exp));
    let dir = s.expect_indexed(|j| d[j].powf(q_exp));
    Ok(HolderConstants { c_prime: inv.powf(1.0 - alpha), c_double_prime: dir.powf(alpha * (beta - 1.0) / beta) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderLinks {
    /// `C1 (E[(Y+)^alpha] + 1)`.
    pub growth: f64,
    /// `C1 (C' (E_Q[Y+])^alpha + 1)`.
    pub change_of_measure: f64,
    /// `C1 (C' (E_Q[Y-])^alpha + 1)`.
    pub pricing: f64,
    /// `C1 (C' C'' (E[(Y-)^beta])^(alpha/beta) + 1)`.
    pub reverse_holder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderMargin {
    pub norm: f64,
    /// `E[u(Y+)]`.
    pub lhs: f64,
    /// `C1 (C' C'' (-(1/C2) E[u(-Y-)] + 1)^(alpha/beta) + 1)`.
    pub rhs: f64,
    pub margin: f64,
    pub links: HolderLinks,
    /// `E_Q[Y]`; the chain uses `E_Q[Y+] = E_Q[Y-]`.
    pub pricing_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub constants: HolderConstants,
    pub margins: Vec<HolderMargin>,
    pub min_margin: f64,
    pub verdict: Verdict,
}

/// Evaluates the Hölder chain for `Y = V(phi)` per strategy. Requires a
/// certified utility.
pub fn holder_chain_check(
    model: &MarketModel,
    q: &TiltedMeasure,
    u: &Utility,
    strategies: &[FactorStrategy],
    s: &ScenarioSet,
) -> Result<HolderReport> {
    let g = *u.growth().ok_or(Error::Uncertified)?;
    let constants = holder_constants(q, s, g.alpha, g.beta)?;
    let HolderConstants { c_prime, c_double_prime } = constants;
    let d = q.densities(s)?;
    let b = model.b();
    let mut margins = Vec::with_capacity(strategies.len());
    for phi in strategies {
        if phi.len() > q.len() {
            return Err(Error::PortfolioTooLong { got: phi.len(), max: q.len() });
        }
        let y: Vec<f64> = s.rows().map(|r| centered_value(phi.phi(), b, r)).collect();
        let e = |f: &(dyn Fn(usize) -> f64 + Sync)| s.expect_indexed(f);
        let lhs = e(&|j| u.value(y[j].max(0.0)));
        let neg_u = e(&|j| u.value(-(-y[j]).max(0.0)));
        let pos_alpha = e(&|j| y[j].max(0.0).powf(g.alpha));
        let q_pos = e(&|j| d[j] * y[j].max(0.0));
        let q_neg = e(&|j| d[j] * (-y[j]).max(0.0));
        let neg_beta = e(&|j| (-y[j]).max(0.0).powf(g.beta));
        let r = g.alpha / g.beta;
        let links = HolderLinks {
            growth: g.c1 * (pos_alpha + 1.0),
            change_of_measure: g.c1 * (c_prime * q_pos.powf(g.alpha) + 1.0),
            pricing: g.c1 * (c_prime * q_neg.powf(g.alpha) + 1.0),
            reverse_holder: g.c1 * (c_prime * c_double_prime * neg_beta.powf(r) + 1.0),
        };
        let rhs = g.c1 * (c_prime * c_double_prime * (-neg_u / g.c2 + 1.0).powf(r) + 1.0);
        margins.push(HolderMargin { norm: phi.norm(), lhs, rhs, margin: rhs - lhs, links, pricing_residual: q_pos - q_neg });
    }
    let min_margin = margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
    Ok(HolderReport { constants, verdict: Verdict::from_bool(min_margin >= -HOLDER_SLACK), margins, min_margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueCap {
    pub cap: f64,
    /// Maximizing value of `N = -E[u(-Y-)]`.
    pub n_star: f64,
}

/// Upper bound on `E[u(V(phi))]` over all strategies priced by the measure:
/// `sup_N [C1 (C' C'' (N/C2 + 1)^(alpha/beta) + 1) - N] + |u(0)|`, with
/// `N >= max(-u(0), -C2)`.
pub fn value_cap(u: &Utility, constants: HolderConstants) -> Result<ValueCap> {
    let g = *u.growth().ok_or(Error::Uncertified)?;
    let r = g.alpha / g.beta;
    let k = g.c1 * constants.c_prime * constants.c_double_prime;
    let u0 = u.value(0.0);
    let n_min = (-u0).max(-g.c2);
    let kappa = k * r / g.c2;
    let n_star = (g.c2 * (kappa.powf(1.0 / (1.0 - r)) - 1.0)).max(n_min);
    let f = |n: f64| g.c1 + k * (n / g.c2 + 1.0).powf(r) - n;
    Ok(ValueCap { cap: f(n_star) + u0.abs(), n_star })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub x_grid: Vec<f64>,
    pub level_grid: Vec<f64>,
    pub holder_strategies: usize,
    /// Norm of the random strategies fed to the Hölder chain.
    pub holder_norm: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            gammas: DEFAULT_GAMMAS.to_vec(),
            deltas: DEFAULT_DELTAS.to_vec(),
            trials: 100,
            x_grid: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            level_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            holder_strategies: 100,
            holder_norm: 1.0,
        }
    }
}

/// The five assumption verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdicts {
    pub assumption_b: Verdict,
    pub novum_subgauss: Verdict,
    pub novum_na: Verdict,
    pub relevant_tails: Verdict,
    pub relevant_ui: Verdict,
}

impl Verdicts {
    pub fn all_hold(&self) -> bool {
        [self.assumption_b, self.novum_subgauss, self.novum_na, self.relevant_tails, self.relevant_ui]
            .iter()
            .all(|v| v.holds())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionsReport {
    pub verdicts: Verdicts,
    pub assumption_b: AssumptionBReport,
    pub subgaussian: SubGaussianReport,
    pub no_arbitrage: NoArbitrageReport,
    pub relevant: RelevantReport,
}

/// The assumption checks that need only the model.
pub fn check_assumptions(model: &MarketModel, cfg: &DiagnosticsConfig) -> AssumptionsReport {
    let assumption_b = check_assumption_b(model);
    let subgaussian = check_subgaussian(model, &cfg.gammas);
    let no_arbitrage = check_no_arbitrage(model);
    let relevant = check_assumption_relevant(model, &cfg.x_grid, &cfg.level_grid);
    AssumptionsReport {
        verdicts: Verdicts {
            assumption_b: assumption_b.verdict,
            novum_subgauss: subgaussian.verdict,
            novum_na: no_arbitrage.verdict(),
            relevant_tails: relevant.tails_verdict,
            relevant_ui: relevant.ui_verdict,
        },
        assumption_b,
        subgaussian,
        no_arbitrage,
        relevant,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub assumptions: AssumptionsReport,
    pub exp_moments: Section<Vec<ExpUiRow>>,
    pub ui_tails: Section<Vec<UiTailRow>>,
    pub holder: Section<HolderReport>,
    pub value_cap: Section<ValueCap>,
}

/// Runs every check that the inputs allow. The exponential-moment table
/// needs a passing sub-Gaussian scan; the Hölder chain and the value cap
/// need a measure and a certified utility.
pub fn run_diagnostics(
    model: &MarketModel,
    u: &Utility,
    q: Option<&TiltedMeasure>,
    s: &ScenarioSet,
    cfg: &DiagnosticsConfig,
    seed: u64,
) -> Result<DiagnosticsReport> {
    let assumptions = check_assumptions(model, cfg);
    let (exp_moments, ui_tails) = if assumptions.verdicts.novum_subgauss.holds() {
        let rows = cfg.deltas.iter().map(|&d| exp_ui_bound(model, s, d, cfg.trials, seed)).collect::<Result<Vec<_>>>()?;
        let unit = random_strategies_in_ball(model.truncation(), cfg.trials, 1.0, seed);
        (Section::Present(rows), Section::Present(ui_tail_decay(s, &unit, &UI_THRESHOLDS)))
    } else {
        (Section::Skipped, Section::Skipped)
    };
    let (holder, cap) = match q {
        Some(q) if u.is_certified() => {
            let strategies = random_strategies(q.len(), cfg.holder_strategies, cfg.holder_norm, seed);
            let holder = holder_chain_check(model, q, u, &strategies, s)?;
            let cap = value_cap(u, holder.constants)?;
            (Section::Present(holder), Section::Present(cap))
        }
        _ => (Section::Skipped, Section::Skipped),
    };
    Ok(DiagnosticsReport { assumptions, exp_moments, ui_tails, holder, value_cap: cap })
}

/// A report section that may be absent; absent sections serialize as the
/// string `"skipped"`.
#[derive(Debug, Clone, PartialEq)]
pub enum Section<T> {
    Present(T),
    Skipped,
}

impl<T> Section<T> {
    pub fn as_ref(&self) -> Option<&T> {
        match self {
            Section::Present(t) => Some(t),
            Section::Skipped => None,
        }
    }
}

impl<T> From<Option<T>> for Section<T> {
    fn from(v: Option<T>) -> Self {
        v.map_or(Section::Skipped, Section::Present)
    }
}

impl<T: Serialize> Serialize for Section<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Section::Present(t) => t.serialize(serializer),
            Section::Skipped => serializer.serialize_str("skipped"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSection {
    pub measure: TiltedMeasure,
    pub moments: MeasureReport,
    pub pricing: PricingReport,
}

/// Everything a run produced. Field order fixes the JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub run: serde_json::Value,
    pub model: MarketModel,
    pub diagnostics: Section<DiagnosticsReport>,
    pub optimization: Section<OptimizationReport>,
    pub measure: Section<MeasureSection>,
}

fn write_table<F>(path: &Path, header: &[&str], fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<fs::File>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(fs::File::create(path)?);
    w.write_record(header)?;
    fill(&mut w)?;
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `report.json` and the CSV tables under `dir/tables`. Output
/// depends only on the bundle, so equal bundles give equal bytes.
pub fn emit_report(bundle: &ReportBundle, dir: &Path) -> Result<()> {
    let tables = dir.join("tables");
    fs::create_dir_all(&tables)?;
    let mut json = serde_json::to_vec_pretty(bundle)?;
    json.push(b'\n');
    fs::File::create(dir.join("report.json"))?.write_all(&json)?;

    let model = &bundle.model;
    let na = check_no_arbitrage(model);
    write_table(&tables.join("drifts.csv"), &["i", "b", "p_below", "p_above", "passes"], |w| {
        for c in &na.coordinates {
            w.write_record([c.index.to_string(), c.b.to_string(), c.p_below.to_string(), c.p_above.to_string(), c.passes.to_string()])?;
        }
        Ok(())
    })?;

    if let Section::Present(d) = &bundle.diagnostics {
        let v = &d.assumptions.verdicts;
        write_table(&tables.join("verdicts.csv"), &["assumption", "verdict"], |w| {
            for (name, verdict) in [
                ("assumption_b", v.assumption_b),
                ("novum_subgauss", v.novum_subgauss),
                ("novum_na", v.novum_na),
                ("relevant_tails", v.relevant_tails),
                ("relevant_ui", v.relevant_ui),
            ] {
                w.write_record([name, verdict_str(verdict)])?;
            }
            Ok(())
        })?;
        if let Section::Present(rows) = &d.exp_moments {
            write_table(&tables.join("exp_moments.csv"), &["delta", "trials", "sup_estimate", "fitted_c", "std_error"], |w| {
                for r in rows {
                    w.write_record([r.delta.to_string(), r.trials.to_string(), r.sup_estimate.to_string(), r.fitted_c.to_string(), r.std_error.to_string()])?;
                }
                Ok(())
            })?;
        }
        if let Section::Present(h) = &d.holder {
            write_table(&tables.join("holder.csv"), &["strategy", "norm", "lhs", "rhs", "margin"], |w| {
                for (j, m) in h.margins.iter().enumerate() {
                    w.write_record([j.to_string(), m.norm.to_string(), m.lhs.to_string(), m.rhs.to_string(), m.margin.to_string()])?;
                }
                Ok(())
            })?;
        }
    }

    if let Section::Present(o) = &bundle.optimization {
        write_table(&tables.join("ladder.csv"), &["K", "value", "grad_norm", "diff_norm", "iterations", "converged", "std_error"], |w| {
            for l in &o.levels {
                w.write_record([
                    l.k.to_string(),
                    l.value.to_string(),
                    l.grad_norm.to_string(),
                    opt(l.diff_norm),
                    l.iterations.to_string(),
                    l.converged.to_string(),
                    l.std_error.to_string(),
                ])?;
            }
            Ok(())
        })?;
    }

    if let Section::Present(m) = &bundle.measure {
        m.measure.write_csv(fs::File::create(tables.join("tilt.csv"))?)?;
        write_table(&tables.join("moments.csv"), &["w", "density", "inverse", "density_std_error", "inverse_std_error"], |w| {
            for r in &m.moments.moments {
                w.write_record([r.w.to_string(), r.density.to_string(), r.inverse.to_string(), r.density_std_error.to_string(), r.inverse_std_error.to_string()])?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "fails",
        Verdict::Undecided => "undecided",
    }
}
