//! The truncated market: return equations, the drift reparametrization, the
//! asset-to-factor portfolio map and the structural assumption checks.
//!
//! Assets are indexed `1..=K` (asset 0 is riskless with rate 0). Coordinates
//! `1..=m` are the tradeable factors. Asset `i` returns
//!
//! ```text
//! R_i = mu_i + beta_bar_i eps_i                              (i <= m)
//! R_i = mu_i + sum_j beta_i^j eps_j + beta_bar_i eps_i       (i >  m)
//! ```
//!
//! and after reparametrization every payoff is a combination of the centered
//! terms `eps_i - b_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, l2_norm};
use crate::scenario::{self, DistributionSpec, ScenarioSet, Side};
use crate::verdict::Verdict;

/// Analytic description of `b_i` beyond the truncation level, used only by
/// [`check_assumption_b`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BRule {
    /// `b_{K+1}, b_{K+2}, ...` listed explicitly; zero afterwards.
    Explicit { values: Vec<f64> },
    /// `b_i = c * i^(-p)`.
    Power { c: f64, p: f64 },
    Zero,
}

/// Noise laws, either shared by every coordinate or listed per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    PerCoordinate(Vec<DistributionSpec>),
    Shared(DistributionSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub mu: Vec<f64>,
    /// Factor loadings of assets `m+1..=K`: `beta[i - m - 1][j - 1]` is
    /// `beta_i^j`.
    #[serde(default)]
    pub beta: Vec<Vec<f64>>,
    pub beta_bar: Vec<f64>,
    pub noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_rule: Option<BRule>,
}

impl ModelSpec {
    /// A factor-only market (`m = K`, unit loadings) with prescribed
    /// reparametrized drifts: `mu_i = -b_i`, `beta_bar_i = 1`.
    pub fn from_drifts(b: &[f64], noise: DistributionSpec) -> Self {
        Self {
            m: b.len(),
            k: b.len(),
            mu: b.iter().map(|x| -x).collect(),
            beta: Vec::new(),
            beta_bar: vec![1.0; b.len()],
            noise: NoiseSpec::Shared(noise),
            b_rule: None,
        }
    }

    pub fn with_noise(mut self, noise: Vec<DistributionSpec>) -> Self {
        self.noise = NoiseSpec::PerCoordinate(noise);
        self
    }

    pub fn with_b_rule(mut self, rule: BRule) -> Self {
        self.b_rule = Some(rule);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketModel {
    spec: ModelSpec,
    noise: Vec<DistributionSpec>,
    b: Vec<f64>,
    /// `sqrt(sum_{i<=K} b_i^2)`.
    b_norm: f64,
}

impl MarketModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn factor_count(&self) -> usize {
        self.spec.m
    }

    pub fn truncation(&self) -> usize {
        self.spec.k
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    pub fn noise(&self) -> &[DistributionSpec] {
        &self.noise
    }

    pub fn mu(&self) -> &[f64] {
        &self.spec.mu
    }

    pub fn beta_bar(&self) -> &[f64] {
        &self.spec.beta_bar
    }

    /// `beta_i^j` for 1-based `i > m`, `j <= m`.
    pub fn loading(&self, i: usize, j: usize) -> f64 {
        self.spec.beta[i - self.spec.m - 1][j - 1]
    }

    pub fn sample_scenarios(&self, n: usize, seed: u64) -> Result<ScenarioSet> {
        scenario::sample_scenarios(&self.noise, n, seed)
    }

    pub fn enumerate_scenarios(&self) -> Result<ScenarioSet> {
        scenario::enumerate_scenarios(&self.noise)
    }

    /// `sum_j |beta_i^j| + |beta_bar_i|`, the factor by which a per-coordinate
    /// pricing error can be amplified in asset `i`.
    pub fn loading_mass(&self, i: usize) -> f64 {
        let own = self.spec.beta_bar[i - 1].abs();
        if i <= self.spec.m {
            own
        } else {
            own + (1..=self.spec.m).map(|j| self.loading(i, j).abs()).sum::<f64>()
        }
    }
}

pub fn build_market(spec: ModelSpec) -> Result<MarketModel> {
    let (m, k) = (spec.m, spec.k);
    if m < 1 {
        return Err(Error::InvalidModel("m must be at least 1".into()));
    }
    if k < m {
        return Err(Error::TruncationBelowFactors { k, m });
    }
    if spec.mu.len() != k {
        return Err(Error::InvalidModel(format!("mu has {} entries, expected K = {k}", spec.mu.len())));
    }
    if spec.beta_bar.len() != k {
        return Err(Error::InvalidModel(format!("beta_bar has {} entries, expected K = {k}", spec.beta_bar.len())));
    }
    if spec.beta.len() != k - m {
        return Err(Error::InvalidModel(format!("beta has {} rows, expected K - m = {}", spec.beta.len(), k - m)));
    }
    if let Some(row) = spec.beta.iter().position(|r| r.len() != m) {
        return Err(Error::InvalidModel(format!("beta row {} must have m = {m} loadings", row + m + 1)));
    }
    let all = spec.mu.iter().chain(&spec.beta_bar).chain(spec.beta.iter().flatten());
    if all.clone().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel("non-finite parameter".into()));
    }
    if let Some(i) = spec.beta_bar.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroIdiosyncraticLoading { index: i + 1 });
    }
    let noise = match &spec.noise {
        NoiseSpec::Shared(d) => vec![d.clone(); k],
        NoiseSpec::PerCoordinate(v) if v.len() == k => v.clone(),
        NoiseSpec::PerCoordinate(v) => {
            return Err(Error::InvalidModel(format!("noise lists {} laws, expected K = {k}", v.len())))
        }
    };
    for d in &noise {
        d.validate()?;
    }

    let mu = &spec.mu;
    let bb = &spec.beta_bar;
    let mut b = Vec::with_capacity(k);
    for i in 0..m {
        b.push(-mu[i] / bb[i]);
    }
    for i in m..k {
        let loads = &spec.beta[i - m];
        let cross = compensated_sum((0..m).map(|j| mu[j] * loads[j] / (bb[j] * bb[i])));
        b.push(-mu[i] / bb[i] + cross);
    }
    let b_norm = l2_norm(&b);
    Ok(MarketModel { spec, noise, b, b_norm })
}

fn check_return_args(model: &MarketModel, i: usize, eps: &[f64]) -> Result<()> {
    let k = model.truncation();
    if i == 0 || i > k {
        return Err(Error::IndexOutOfRange { index: i, len: k });
    }
    let need = i.max(model.factor_count());
    if eps.len() < need {
        return Err(Error::NoiseTooShort { got: eps.len(), need });
    }
    Ok(())
}

/// `R_i` from the raw return equation.
pub fn asset_return(model: &MarketModel, i: usize, eps: &[f64]) -> Result<f64> {
    check_return_args(model, i, eps)?;
    Ok(raw_return(model, i, eps))
}

/// `R_i` from the centered form `sum_j beta_i^j (eps_j - b_j) + beta_bar_i (eps_i - b_i)`.
pub fn asset_return_reparametrized(model: &MarketModel, i: usize, eps: &[f64]) -> Result<f64> {
    check_return_args(model, i, eps)?;
    let b = model.b();
    let own = model.beta_bar()[i - 1] * (eps[i - 1] - b[i - 1]);
    if i <= model.factor_count() {
        return Ok(own);
    }
    let factors = (1..=model.factor_count()).map(|j| model.loading(i, j) * (eps[j - 1] - b[j - 1]));
    Ok(compensated_sum(factors.chain(std::iter::once(own))))
}

pub(crate) fn raw_return(model: &MarketModel, i: usize, eps: &[f64]) -> f64 {
    let base = model.mu()[i - 1] + model.beta_bar()[i - 1] * eps[i - 1];
    if i <= model.factor_count() {
        return base;
    }
    base + (1..=model.factor_count()).map(|j| model.loading(i, j) * eps[j - 1]).sum::<f64>()
}

/// Dollar holdings `psi_0..psi_k` in the riskless asset and assets `1..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetPortfolio {
    psi: Vec<f64>,
}

impl AssetPortfolio {
    /// Rejects holdings that do not add up to the zero initial capital. The
    /// sum is taken with compensated summation and must vanish up to
    /// `1e-12 * max(1, sum |psi_i|)`.
    pub fn new(psi: Vec<f64>) -> Result<Self> {
        let sum = compensated_sum(psi.iter().copied());
        let scale = psi.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if !sum.is_finite() || sum.abs() > 1e-12 * scale {
            return Err(Error::BudgetViolation { sum });
        }
        Ok(Self { psi })
    }

    pub fn holdings(&self) -> &[f64] {
        &self.psi
    }

    /// `sum_i psi_i R_i` with `R_0 = 0`.
    pub fn value(&self, model: &MarketModel, eps: &[f64]) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.psi.len());
        for (i, &p) in self.psi.iter().enumerate().skip(1) {
            terms.push(p * asset_return(model, i, eps)?);
        }
        Ok(compensated_sum(terms))
    }
}

/// Position sizes `phi_1..phi_K` on the centered coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorStrategy {
    phi: Vec<f64>,
    norm: f64,
}

impl FactorStrategy {
    pub fn new(phi: Vec<f64>) -> Self {
        let norm = l2_norm(&phi);
        Self { phi, norm }
    }

    pub fn zeros(k: usize) -> Self {
        Self::new(vec![0.0; k])
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `||self - other||` with the shorter vector zero-padded.
    pub fn distance(&self, other: &FactorStrategy) -> f64 {
        let n = self.len().max(other.len());
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        (0..n).map(|i| (at(&self.phi, i) - at(&other.phi, i)).powi(2)).sum::<f64>().sqrt()
    }
}

/// Maps asset holdings to factor positions so that
/// `sum_i psi_i R_i = sum_i phi_i (eps_i - b_i)` on every scenario.
pub fn convert_portfolio(model: &MarketModel, psi: &AssetPortfolio) -> Result<FactorStrategy> {
    let k = model.truncation();
    let m = model.factor_count();
    let h = psi.holdings();
    if h.len() > k + 1 {
        return Err(Error::PortfolioTooLong { got: h.len(), max: k + 1 });
    }
    let at = |i: usize| h.get(i).copied().unwrap_or(0.0);
    let bb = model.beta_bar();
    let mut phi = vec![0.0; k];
    for j in 1..=m {
        let spill = compensated_sum((m + 1..=k).map(|i| at(i) * model.loading(i, j)));
        phi[j - 1] = at(j) * bb[j - 1] + spill;
    }
    for i in m + 1..=k {
        phi[i - 1] = at(i) * bb[i - 1];
    }
    Ok(FactorStrategy::new(phi))
}

/// `V(phi) = sum_i phi_i (eps_i - b_i)`.
pub fn portfolio_value(model: &MarketModel, phi: &FactorStrategy, eps: &[f64]) -> Result<f64> {
    let k = model.truncation();
    if phi.len() > k {
        return Err(Error::IndexOutOfRange { index: phi.len(), len: k });
    }
    if eps.len() < phi.len() {
        return Err(Error::NoiseTooShort { got: eps.len(), need: phi.len() });
    }
    Ok(centered_value(phi.phi(), &model.b()[..phi.len()], eps))
}

pub(crate) fn centered_value(phi: &[f64], b: &[f64], eps: &[f64]) -> f64 {
    compensated_sum(phi.iter().zip(b).zip(eps).map(|((p, bi), e)| p * (e - bi)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionBReport {
    pub verdict: Verdict,
    pub reason: String,
    /// `sum_{i<=n} b_i^2` for `n = 1..=K`.
    pub partial_sums: Vec<f64>,
    /// Partial sum plus the analytic (or integral-bound) tail beyond `K`,
    /// when the rule allows one.
    pub total_estimate: Option<f64>,
}

/// Decides `sum_i b_i^2 < infinity` from the truncated drifts plus the
/// analytic tail rule.
pub fn check_assumption_b(model: &MarketModel) -> AssumptionBReport {
    let mut partial_sums = Vec::with_capacity(model.b().len());
    let mut acc = crate::numeric::CompensatedSum::new();
    for b in model.b() {
        acc.add(b * b);
        partial_sums.push(acc.value());
    }
    let head = acc.value();
    let k = model.truncation() as f64;
    let (verdict, reason, total_estimate) = match &model.spec().b_rule {
        None => (Verdict::Undecided, "no rule for b_i beyond K".to_string(), None),
        Some(BRule::Zero) => (Verdict::Holds, "b_i = 0 beyond K".into(), Some(head)),
        Some(BRule::Explicit { values }) => {
            let tail = compensated_sum(values.iter().map(|v| v * v));
            let ok = tail.is_finite();
            (Verdict::from_bool(ok), format!("finite explicit tail of {} terms", values.len()), Some(head + tail))
        }
        Some(BRule::Power { c, p }) => {
            if *c == 0.0 {
                (Verdict::Holds, "power rule with c = 0".into(), Some(head))
            } else if *p > 0.5 {
                // sum_{i>K} i^{-2p} <= int_K^inf x^{-2p} dx
                let tail = c * c * k.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0);
                (Verdict::Holds, format!("p-series with 2p = {} > 1 converges", 2.0 * p), Some(head + tail))
            } else {
                (Verdict::Fails, format!("p-series with 2p = {} <= 1 diverges", 2.0 * p), None)
            }
        }
    };
    AssumptionBReport { verdict, reason, partial_sums, total_estimate }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateNa {
    pub index: usize,
    pub b: f64,
    pub p_below: f64,
    pub p_above: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoArbitrageReport {
    pub coordinates: Vec<CoordinateNa>,
    pub failing: Vec<usize>,
    pub arbitrage_prone: bool,
}

impl NoArbitrageReport {
    pub fn verdict(&self) -> Verdict {
        Verdict::from_bool(!self.arbitrage_prone)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.arbitrage_prone {
            Err(Error::Arbitrage { coordinates: self.failing })
        } else {
            Ok(self)
        }
    }
}

/// Per-coordinate no-arbitrage: both `P(eps_i < b_i)` and `P(eps_i > b_i)`
/// must be positive.
pub fn check_no_arbitrage(model: &MarketModel) -> NoArbitrageReport {
    let coordinates: Vec<CoordinateNa> = model
        .noise()
        .iter()
        .zip(model.b())
        .enumerate()
        .map(|(i, (d, &b))| {
            let p_below = d.tail_probability(b, Side::Below);
            let p_above = d.tail_probability(b, Side::Above);
            CoordinateNa { index: i + 1, b, p_below, p_above, passes: p_below > 0.0 && p_above > 0.0 }
        })
        .collect();
    let failing: Vec<usize> = coordinates.iter().filter(|c| !c.passes).map(|c| c.index).collect();
    let arbitrage_prone = !failing.is_empty();
    NoArbitrageReport { coordinates, failing, arbitrage_prone }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_spec() -> ModelSpec {
        ModelSpec {
            m: 1,
            k: 2,
            mu: vec![0.1, 0.05],
            beta: vec![vec![0.5]],
            beta_bar: vec![1.0, 2.0],
            noise: NoiseSpec::Shared(DistributionSpec::Rademacher),
            b_rule: None,
        }
    }

    #[test]
    fn reparametrized_drifts() {
        let model = build_market(example_spec()).unwrap();
        assert!((model.b()[0] + 0.1).abs() < 1e-15);
        assert!(model.b()[1].abs() < 1e-15);
        assert!((model.b_norm() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_drift_and_sign_flip() {
        let mut spec = example_spec();
        spec.mu = vec![0.0, 0.0];
        let model = build_market(spec).unwrap();
        assert_eq!(model.b(), &[0.0, 0.0]);
        assert_eq!(model.b_norm(), 0.0);

        let spec = ModelSpec {
            m: 1,
            k: 1,
            mu: vec![0.2],
            beta: vec![],
            beta_bar: vec![-2.0],
            noise: NoiseSpec::Shared(DistributionSpec::Rademacher),
            b_rule: None,
        };
        assert!((build_market(spec).unwrap().b()[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ill_posed_models_rejected() {
        let mut spec = example_spec();
        spec.beta_bar[1] = 0.0;
        assert!(matches!(build_market(spec), Err(Error::ZeroIdiosyncraticLoading { index: 2 })));
        let mut spec = example_spec();
        spec.k = 0;
        assert!(matches!(build_market(spec), Err(Error::TruncationBelowFactors { .. })));
        let mut spec = example_spec();
        spec.noise = NoiseSpec::PerCoordinate(vec![DistributionSpec::Rademacher]);
        assert!(build_market(spec).is_err());
    }

    #[test]
    fn asset_returns_both_forms() {
        let model = build_market(example_spec()).unwrap();
        let eps = [1.0, -1.0];
        let raw = asset_return(&model, 2, &eps).unwrap();
        let rep = asset_return_reparametrized(&model, 2, &eps).unwrap();
        assert!((raw + 1.45).abs() < 1e-12);
        assert!((rep + 1.45).abs() < 1e-12);
        assert!(asset_return(&model, 3, &eps).is_err());
        assert!(asset_return(&model, 0, &eps).is_err());
        assert!(asset_return(&model, 2, &eps[..1]).is_err());
        // noise sitting exactly at the drift kills every return
        let at_drift = model.b().to_vec();
        for i in 1..=2 {
            assert!(asset_return(&model, i, &at_drift).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn portfolio_conversion_example() {
        let model = build_market(example_spec()).unwrap();
        let psi = AssetPortfolio::new(vec![-3.0, 1.0, 2.0]).unwrap();
        let phi = convert_portfolio(&model, &psi).unwrap();
        assert_eq!(phi.phi(), &[2.0, 4.0]);
        let eps = [1.0, -1.0];
        let lhs = psi.value(&model, &eps).unwrap();
        let rhs = portfolio_value(&model, &phi, &eps).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!((rhs + 1.8).abs() < 1e-12);

        let zero = convert_portfolio(&model, &AssetPortfolio::new(vec![0.0; 3]).unwrap()).unwrap();
        assert_eq!(zero.phi(), &[0.0, 0.0]);
        assert!(AssetPortfolio::new(vec![1.0, 1.0]).is_err());
        let long = AssetPortfolio::new(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert!(convert_portfolio(&model, &long).is_err());
    }

    #[test]
    fn single_risky_asset_conversion() {
        let spec = ModelSpec {
            m: 1,
            k: 1,
            mu: vec![0.3],
            beta: vec![],
            beta_bar: vec![-1.5],
            noise: NoiseSpec::Shared(DistributionSpec::Rademacher),
            b_rule: None,
        };
        let model = build_market(spec).unwrap();
        let c = 2.5;
        let phi = convert_portfolio(&model, &AssetPortfolio::new(vec![-c, c]).unwrap()).unwrap();
        assert_eq!(phi.phi(), &[c * -1.5]);
    }

    #[test]
    fn portfolio_value_trivia() {
        let model = build_market(example_spec()).unwrap();
        let zero = FactorStrategy::zeros(2);
        assert_eq!(portfolio_value(&model, &zero, &[0.3, 0.7]).unwrap(), 0.0);
        let phi = FactorStrategy::new(vec![3.0, -7.0]);
        assert_eq!(portfolio_value(&model, &phi, model.b()).unwrap(), 0.0);
        assert!(portfolio_value(&model, &FactorStrategy::zeros(3), &[0.0; 3]).is_err());
    }

    #[test]
    fn assumption_b_rules() {
        let k = 1000;
        let b: Vec<f64> = (1..=k).map(|i| 1.0 / i as f64).collect();
        let model = |rule| build_market(ModelSpec::from_drifts(&b, DistributionSpec::Rademacher).with_b_rule(rule)).unwrap();

        let rep = check_assumption_b(&model(BRule::Power { c: 1.0, p: 1.0 }));
        assert_eq!(rep.verdict, Verdict::Holds);
        let total = rep.total_estimate.unwrap();
        let target = std::f64::consts::PI.powi(2) / 6.0;
        assert!((total - target).abs() < 1e-3, "{total}");
        assert!(rep.partial_sums.windows(2).all(|w| w[1] >= w[0]));

        assert_eq!(check_assumption_b(&model(BRule::Power { c: 1.0, p: 0.5 })).verdict, Verdict::Fails);
        assert_eq!(check_assumption_b(&model(BRule::Explicit { values: vec![0.5; 10] })).verdict, Verdict::Holds);
        assert_eq!(check_assumption_b(&model(BRule::Zero)).verdict, Verdict::Holds);
        let no_rule = build_market(ModelSpec::from_drifts(&b, DistributionSpec::Rademacher)).unwrap();
        assert_eq!(check_assumption_b(&no_rule).verdict, Verdict::Undecided);
    }

    #[test]
    fn assumption_b_agrees_with_p_series_criterion() {
        let b = [0.1, 0.05];
        for p in [0.3, 0.5, 0.51, 1.0, 2.0] {
            let model = build_market(
                ModelSpec::from_drifts(&b, DistributionSpec::Rademacher).with_b_rule(BRule::Power { c: 0.3, p }),
            )
            .unwrap();
            assert_eq!(check_assumption_b(&model).verdict, Verdict::from_bool(p > 0.5), "p = {p}");
        }
    }

    #[test]
    fn p_series_partial_sums_reach_zeta_two() {
        // independent summation to 10^6 terms, smallest terms first
        let s: f64 = (1..=1_000_000u64).rev().map(|i| 1.0 / (i as f64 * i as f64)).sum();
        assert!((s - 1.6449).abs() < 1e-4);
    }

    #[test]
    fn no_arbitrage_examples() {
        let ok = build_market(ModelSpec::from_drifts(&[0.2, 0.0], DistributionSpec::Rademacher)).unwrap();
        let rep = check_no_arbitrage(&ok);
        assert!(!rep.arbitrage_prone);
        assert_eq!(rep.coordinates[0].p_below, 0.5);
        assert_eq!(rep.coordinates[0].p_above, 0.5);

        let bad = build_market(ModelSpec::from_drifts(&[0.2, -1.0], DistributionSpec::Rademacher)).unwrap();
        let rep = check_no_arbitrage(&bad);
        assert!(rep.arbitrage_prone);
        assert_eq!(rep.failing, vec![2]);
        assert_eq!(rep.coordinates[1].p_below, 0.0);
        assert!(rep.into_result().is_err());
    }
}
