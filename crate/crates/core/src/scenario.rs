//! Noise distributions and the scenario sets every expectation is taken
//! against.
//!
//! Two kinds of [`ScenarioSet`] exist. [`enumerate_scenarios`] lists the exact
//! joint support of independent finite-support coordinates with product
//! probabilities, which makes expectations exact up to rounding and serves as
//! the oracle for everything else. [`sample_scenarios`] draws i.i.d. rows with
//! a counter-based generator: row `j` is a pure function of `(seed, j)`, so the
//! set is bit-identical for any number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, integrate, par_sum};

/// Largest joint support [`enumerate_scenarios`] accepts by default.
pub const ENUMERATION_CAP: usize = 1_000_000;

const PROB_TOL: f64 = 1e-12;
const MOMENT_TOL: f64 = 1e-10;

/// Law of one noise coordinate. Every family is standardized to mean 0 and
/// variance 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    FiniteDiscrete { points: Vec<f64>, probs: Vec<f64> },
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    StandardizedUniform,
    /// Standardized Bernoulli(p): `sqrt((1-p)/p)` with probability `p`,
    /// `-sqrt(p/(1-p))` otherwise.
    StandardizedTwoPoint { p: f64 },
    /// Random sign times a scaled Pareto(1, shape) magnitude. Has finite
    /// variance for `shape > 2` but no exponential moment of any order; used
    /// as a negative fixture for the sub-Gaussian condition.
    SymmetricPareto { shape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

/// A finitely supported law that is not necessarily standardized, such as
/// the law of `eps - b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.len() != probs.len() || points.is_empty() {
            return Err(Error::InvalidDistribution(format!(
                "{} points with {} probabilities",
                points.len(),
                probs.len()
            )));
        }
        if points.iter().chain(&probs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite entry".into()));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidDistribution("negative probability".into()));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { points, probs })
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.points.iter().zip(&self.probs).map(|(&x, &p)| p * f(x)))
    }

    pub fn shifted(&self, shift: f64) -> Self {
        Self { points: self.points.iter().map(|x| x - shift).collect(), probs: self.probs.clone() }
    }

    /// `P(X > 0)` and `P(X < 0)`.
    pub fn sign_masses(&self) -> (f64, f64) {
        let pos = compensated_sum(self.iter().filter(|(x, _)| *x > 0.0).map(|(_, p)| p));
        let neg = compensated_sum(self.iter().filter(|(x, _)| *x < 0.0).map(|(_, p)| p));
        (pos, neg)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }
}

/// A one-dimensional law whose expectations can be evaluated to machine
/// precision: finitely supported, or uniform on an interval (by composite
/// Gauss-Legendre quadrature split at 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoordinateLaw {
    Discrete(DiscreteLaw),
    Uniform { lo: f64, hi: f64 },
}

const UNIFORM_PANELS: usize = 64;

impl CoordinateLaw {
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            CoordinateLaw::Discrete(law) => law.expect(f),
            CoordinateLaw::Uniform { lo, hi } => integrate(f, *lo, *hi, &[0.0], UNIFORM_PANELS) / (hi - lo),
        }
    }

    /// The law of `X - shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        match self {
            CoordinateLaw::Discrete(law) => CoordinateLaw::Discrete(law.shifted(shift)),
            CoordinateLaw::Uniform { lo, hi } => CoordinateLaw::Uniform { lo: lo - shift, hi: hi - shift },
        }
    }

    /// `P(X > 0)` and `P(X < 0)`.
    pub fn sign_masses(&self) -> (f64, f64) {
        match self {
            CoordinateLaw::Discrete(law) => law.sign_masses(),
            CoordinateLaw::Uniform { lo, hi } => {
                let below = ((0.0 - lo) / (hi - lo)).clamp(0.0, 1.0);
                (1.0 - below, below)
            }
        }
    }

    /// Essential infimum and supremum.
    pub fn range(&self) -> (f64, f64) {
        match self {
            CoordinateLaw::Discrete(law) => law
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, _)| (a.min(x), b.max(x))),
            CoordinateLaw::Uniform { lo, hi } => (*lo, *hi),
        }
    }
}

impl From<DiscreteLaw> for CoordinateLaw {
    fn from(law: DiscreteLaw) -> Self {
        CoordinateLaw::Discrete(law)
    }
}

impl DistributionSpec {
    /// The law as a [`CoordinateLaw`], or `None` when expectations cannot be
    /// evaluated exactly (heavy-tailed families).
    pub fn coordinate_law(&self) -> Option<CoordinateLaw> {
        if let Some(law) = self.support() {
            return Some(CoordinateLaw::Discrete(law));
        }
        match self {
            DistributionSpec::StandardizedUniform => {
                let h = 3f64.sqrt();
                Some(CoordinateLaw::Uniform { lo: -h, hi: h })
            }
            _ => None,
        }
    }

    /// Rescales an arbitrary finite law to mean 0 and variance 1.
    pub fn standardized(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let law = DiscreteLaw::new(points, probs)?;
        let mean = law.expect(|x| x);
        let var = law.expect(|x| (x - mean) * (x - mean));
        if var <= 0.0 {
            return Err(Error::InvalidDistribution("degenerate law cannot be standardized".into()));
        }
        let sd = var.sqrt();
        let spec = DistributionSpec::FiniteDiscrete {
            points: law.points.iter().map(|x| (x - mean) / sd).collect(),
            probs: law.probs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn family(&self) -> &'static str {
        match self {
            DistributionSpec::FiniteDiscrete { .. } => "finite_discrete",
            DistributionSpec::Rademacher => "rademacher",
            DistributionSpec::StandardizedUniform => "standardized_uniform",
            DistributionSpec::StandardizedTwoPoint { .. } => "standardized_two_point",
            DistributionSpec::SymmetricPareto { .. } => "symmetric_pareto",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::FiniteDiscrete { points, probs } => {
                let law = DiscreteLaw::new(points.clone(), probs.clone())?;
                let mean = law.expect(|x| x);
                let second = law.expect(|x| x * x);
                if mean.abs() > MOMENT_TOL || (second - 1.0).abs() > MOMENT_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "finite_discrete must have mean 0 and variance 1, got mean {mean} and second moment {second}"
                    )));
                }
                Ok(())
            }
            DistributionSpec::StandardizedTwoPoint { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidDistribution(format!("two-point p = {p} outside (0, 1)")));
                }
                Ok(())
            }
            DistributionSpec::SymmetricPareto { shape } => {
                if !(*shape > 2.0) || !shape.is_finite() {
                    return Err(Error::InvalidDistribution(format!("pareto shape {shape} must exceed 2")));
                }
                Ok(())
            }
            DistributionSpec::Rademacher | DistributionSpec::StandardizedUniform => Ok(()),
        }
    }

    /// The finite support with its probabilities, or `None` for continuous
    /// families.
    pub fn support(&self) -> Option<DiscreteLaw> {
        match self {
            DistributionSpec::FiniteDiscrete { points, probs } => {
                Some(DiscreteLaw { points: points.clone(), probs: probs.clone() })
            }
            DistributionSpec::Rademacher => Some(DiscreteLaw { points: vec![1.0, -1.0], probs: vec![0.5, 0.5] }),
            DistributionSpec::StandardizedTwoPoint { p } => {
                let q = 1.0 - p;
                Some(DiscreteLaw { points: vec![(q / p).sqrt(), -(p / q).sqrt()], probs: vec![*p, q] })
            }
            DistributionSpec::StandardizedUniform | DistributionSpec::SymmetricPareto { .. } => None,
        }
    }

    pub fn support_size(&self) -> Option<usize> {
        match self {
            DistributionSpec::FiniteDiscrete { points, .. } => Some(points.len()),
            DistributionSpec::Rademacher | DistributionSpec::StandardizedTwoPoint { .. } => Some(2),
            _ => None,
        }
    }

    fn pareto_scale(shape: f64) -> f64 {
        ((shape - 2.0) / shape).sqrt()
    }

    /// `P(eps < x)` or `P(eps > x)`, strict on both sides.
    pub fn tail_probability(&self, x: f64, side: Side) -> f64 {
        if let Some(law) = self.support() {
            let hit = |v: f64| match side {
                Side::Below => v < x,
                Side::Above => v > x,
            };
            return compensated_sum(law.iter().filter(|(v, _)| hit(*v)).map(|(_, p)| p));
        }
        match self {
            DistributionSpec::StandardizedUniform => {
                let h = 3f64.sqrt();
                let below = ((x + h) / (2.0 * h)).clamp(0.0, 1.0);
                match side {
                    Side::Below => below,
                    Side::Above => 1.0 - below,
                }
            }
            DistributionSpec::SymmetricPareto { shape } => {
                let s = Self::pareto_scale(*shape);
                // Upper tail of the symmetric law at t >= 0.
                let upper = |t: f64| if t >= s { 0.5 * (t / s).powf(-shape) } else { 0.5 };
                match side {
                    Side::Above if x >= 0.0 => upper(x),
                    Side::Above => 1.0 - upper(-x),
                    Side::Below if x <= 0.0 => upper(-x),
                    Side::Below => 1.0 - upper(x),
                }
            }
            _ => unreachable!("finite families handled above"),
        }
    }

    /// `E[exp(gamma |eps|)]`; infinite for families without exponential
    /// moments.
    pub fn exp_moment(&self, gamma: f64) -> f64 {
        if let Some(law) = self.support() {
            return law.expect(|x| (gamma * x.abs()).exp());
        }
        match self {
            DistributionSpec::StandardizedUniform => {
                let h = 3f64.sqrt();
                let z = gamma * h;
                if z == 0.0 {
                    1.0
                } else {
                    z.exp_m1() / z
                }
            }
            DistributionSpec::SymmetricPareto { .. } => {
                if gamma == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            _ => unreachable!(),
        }
    }

    /// `E[eps^2 1{|eps| >= level}]`.
    pub fn truncated_second_moment(&self, level: f64) -> f64 {
        if let Some(law) = self.support() {
            return law.expect(|x| if x.abs() >= level { x * x } else { 0.0 });
        }
        match self {
            DistributionSpec::StandardizedUniform => {
                let h = 3f64.sqrt();
                if level <= 0.0 {
                    1.0
                } else if level >= h {
                    0.0
                } else {
                    1.0 - level.powi(3) / (3.0 * h)
                }
            }
            DistributionSpec::SymmetricPareto { shape } => {
                let s = Self::pareto_scale(*shape);
                (level / s).max(1.0).powf(2.0 - shape)
            }
            _ => unreachable!(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self.support() {
            Some(law) => law.expect(|x| x),
            None => 0.0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self.support() {
            Some(law) => law.expect(|x| x * x),
            None => 1.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistributionSpec::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DistributionSpec::StandardizedTwoPoint { p } => {
                let q = 1.0 - p;
                if rng.gen::<f64>() < *p {
                    (q / p).sqrt()
                } else {
                    -(p / q).sqrt()
                }
            }
            DistributionSpec::StandardizedUniform => 3f64.sqrt() * (2.0 * rng.gen::<f64>() - 1.0),
            DistributionSpec::FiniteDiscrete { points, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (x, p) in points.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                // rounding left a sliver above the last cumulative value
                *points.iter().zip(probs).rev().find(|(_, p)| **p > 0.0).map(|(x, _)| x).unwrap_or(&points[0])
            }
            DistributionSpec::SymmetricPareto { shape } => {
                let s = Self::pareto_scale(*shape);
                let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
                let mag = s * u.powf(-1.0 / shape);
                if rng.gen::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
        }
    }
}

/// `E[exp(gamma |eps|)]` for one coordinate.
pub fn estimate_exp_moment(dist: &DistributionSpec, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
    }
    Ok(dist.exp_moment(gamma))
}

pub fn tail_probability(dist: &DistributionSpec, x: f64, side: Side) -> f64 {
    dist.tail_probability(x, side)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    MonteCarlo { seed: u64, n: usize },
    ExactEnumeration,
    /// Rows supplied by the caller.
    Supplied,
}

/// Weighted noise realizations, stored row-major (`len × width`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    width: usize,
    draws: Vec<f64>,
    weights: Vec<f64>,
    provenance: Provenance,
}

impl ScenarioSet {
    /// Builds a set from explicit rows. `weights` defaults to uniform and
    /// must otherwise be nonnegative and sum to one.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], weights: Option<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Precondition("scenario count must be at least 1".into()));
        }
        let width = rows[0].as_ref().len();
        let mut draws = Vec::with_capacity(n * width);
        for r in rows {
            let r = r.as_ref();
            if r.len() != width {
                return Err(Error::LengthMismatch { expected: width, got: r.len() });
            }
            draws.extend_from_slice(r);
        }
        let weights = match weights {
            None => vec![1.0 / n as f64; n],
            Some(w) => {
                if w.len() != n {
                    return Err(Error::LengthMismatch { expected: n, got: w.len() });
                }
                let total = compensated_sum(w.iter().copied());
                if w.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Precondition(format!("scenario weights must be nonnegative and sum to 1 (got {total})")));
                }
                w
            }
        };
        Ok(Self { width, draws, weights, provenance: Provenance::Supplied })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_exact(&self) -> bool {
        self.provenance == Provenance::ExactEnumeration
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.draws[j * self.width..(j + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.width.max(1)).take(self.len())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    /// `sum_j w_j values_j` with compensated summation.
    pub fn expectation(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: values.len() });
        }
        Ok(par_sum(self.len(), |j| self.weights[j] * values[j]))
    }

    /// Expectation of a per-row statistic, evaluated in parallel with an
    /// order-stable reduction.
    pub fn expect_with<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.expect_indexed(|j| f(self.row(j)))
    }

    /// Like [`expect_with`](Self::expect_with), with the statistic keyed by
    /// row index.
    pub fn expect_indexed<F>(&self, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync,
    {
        par_sum(self.len(), |j| self.weights[j] * f(j))
    }

    /// Monte Carlo standard error of `E[f]`; zero for exact sets.
    pub fn standard_error_with<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.standard_error_indexed(|j| f(self.row(j)))
    }

    pub fn standard_error_indexed<F>(&self, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync,
    {
        if self.is_exact() || self.len() < 2 {
            return 0.0;
        }
        let mean = self.expect_indexed(&f);
        let var = self.expect_indexed(|j| {
            let d = f(j) - mean;
            d * d
        });
        let n = self.len() as f64;
        (var * n / (n - 1.0) / n).sqrt()
    }

    /// Restricts to the first `k` coordinates, keeping rows and weights.
    pub fn truncate_width(&self, k: usize) -> Result<ScenarioSet> {
        if k > self.width {
            return Err(Error::ScenarioWidth { got: self.width, need: k });
        }
        let draws = self.rows().flat_map(|r| r[..k].iter().copied()).collect();
        Ok(ScenarioSet { width: k, draws, weights: self.weights.clone(), provenance: self.provenance })
    }

    /// CSV export: one column per coordinate (headers `1..=K`) followed by
    /// `weight`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.width).map(|i| i.to_string()).collect();
        header.push("weight".into());
        w.write_record(&header)?;
        for (j, row) in self.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.weights[j].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn validate_noise(noise: &[DistributionSpec]) -> Result<()> {
    for d in noise {
        d.validate()?;
    }
    Ok(())
}

/// Draws `n` i.i.d. rows. Row `j` uses its own ChaCha stream keyed by
/// `(seed, j)`.
pub fn sample_scenarios(noise: &[DistributionSpec], n: usize, seed: u64) -> Result<ScenarioSet> {
    if n == 0 {
        return Err(Error::Precondition("scenario count must be at least 1".into()));
    }
    validate_noise(noise)?;
    let width = noise.len();
    let mut draws = vec![0.0; n * width];
    if width > 0 {
        draws.par_chunks_mut(width).enumerate().for_each(|(j, row)| {
            let mut rng = row_rng(seed, j as u64);
            for (slot, d) in row.iter_mut().zip(noise) {
                *slot = d.sample(&mut rng);
            }
        });
    }
    Ok(ScenarioSet { width, draws, weights: vec![1.0 / n as f64; n], provenance: Provenance::MonteCarlo { seed, n } })
}

pub(crate) fn row_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn enumerate_scenarios(noise: &[DistributionSpec]) -> Result<ScenarioSet> {
    enumerate_scenarios_capped(noise, ENUMERATION_CAP)
}

/// Exact product-measure enumeration. The first coordinate varies slowest.
pub fn enumerate_scenarios_capped(noise: &[DistributionSpec], cap: usize) -> Result<ScenarioSet> {
    validate_noise(noise)?;
    let mut laws = Vec::with_capacity(noise.len());
    for d in noise {
        laws.push(d.support().ok_or(Error::Unsupported { family: d.family(), what: "exact enumeration" })?);
    }
    let size = laws.iter().try_fold(1u128, |acc, l| acc.checked_mul(l.points.len() as u128)).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::EnumerationCapExceeded { size, cap });
    }
    let n = size as usize;
    let width = laws.len();
    let mut draws = Vec::with_capacity(n * width);
    let mut weights = Vec::with_capacity(n);
    let mut idx = vec![0usize; width];
    for _ in 0..n {
        let mut w = 1.0;
        for (l, &k) in laws.iter().zip(&idx) {
            draws.push(l.points[k]);
            w *= l.probs[k];
        }
        weights.push(w);
        for c in (0..width).rev() {
            idx[c] += 1;
            if idx[c] < laws[c].points.len() {
                break;
            }
            idx[c] = 0;
        }
    }
    Ok(ScenarioSet { width, draws, weights, provenance: Provenance::ExactEnumeration })
}

pub fn expectation(s: &ScenarioSet, values: &[f64]) -> Result<f64> {
    s.expectation(values)
}
