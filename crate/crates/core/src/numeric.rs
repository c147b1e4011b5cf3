//! Small numerical kernels shared across modules: compensated summation,
//! order-stable parallel reduction and bracketed bisection.

use rayon::prelude::*;

/// Scenario chunk size for parallel reductions. Partial sums are formed per
/// chunk and then folded in chunk order, so the result does not depend on
/// how many worker threads rayon uses.
pub const REDUCTION_CHUNK: usize = 4096;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sums `term(j)` for `j in 0..n` with a fixed chunked tree.
pub fn par_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(n);
            compensated_sum((lo..hi).map(&term))
        })
        .collect();
    compensated_sum(partials)
}

/// Vector-valued version of [`par_sum`]: `term(j, acc)` adds row `j`'s
/// contribution into a `width`-long accumulator.
pub fn par_sum_vec<F>(n: usize, width: usize, term: F) -> Vec<f64>
where
    F: Fn(usize, &mut [CompensatedSum]) + Sync,
{
    let chunks = n.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<Vec<CompensatedSum>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(n);
            let mut acc = vec![CompensatedSum::new(); width];
            for j in lo..hi {
                term(j, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![CompensatedSum::new(); width];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.add(p.value());
        }
    }
    total.into_iter().map(|t| t.value()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Bisection for a root of `f` on `[lo, hi]`, which must bracket a sign
/// change (`f(lo)` and `f(hi)` of opposite sign or one of them zero).
///
/// Stops once `|f| <= ftol` or the bracket can no longer be split in
/// floating point. Returns `None` when the endpoints do not bracket.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, ftol: f64, max_iter: usize) -> Option<Bisection>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(Bisection { root: lo, value: 0.0, iterations: 0, converged: true });
    }
    if f_hi == 0.0 {
        return Some(Bisection { root: hi, value: 0.0, iterations: 0, converged: true });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Some(Bisection { root: best.0, value: best.1, iterations: it, converged: best.1.abs() <= ftol });
        }
        let f_mid = f(mid);
        if f_mid.abs() < best.1.abs() {
            best = (mid, f_mid);
        }
        if f_mid.abs() <= ftol {
            return Some(Bisection { root: mid, value: f_mid, iterations: it, converged: true });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(Bisection { root: best.0, value: best.1, iterations: max_iter, converged: best.1.abs() <= ftol })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite 16-point Gauss-Legendre integral of `f` over `[lo, hi]`, with
/// `panels` equal panels between consecutive breakpoints. Interior
/// breakpoints let kinked integrands be split where they bend.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breakpoints: &[f64], panels: usize) -> f64 {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    let (nodes, weights) = RULE.get_or_init(|| gauss_legendre(16));
    let mut cuts = vec![lo];
    cuts.extend(breakpoints.iter().copied().filter(|c| *c > lo && *c < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let mut acc = CompensatedSum::new();
    for seg in cuts.windows(2) {
        let h = (seg[1] - seg[0]) / panels as f64;
        for p in 0..panels {
            let a = seg[0] + p as f64 * h;
            let mid = a + 0.5 * h;
            for (x, w) in nodes.iter().zip(weights) {
                acc.add(0.5 * h * w * f(mid + 0.5 * h * x));
            }
        }
    }
    acc.value()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
