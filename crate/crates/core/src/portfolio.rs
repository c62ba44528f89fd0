//! Portfolio weights: cluster-entropy normalization, the long-only
//! maximum-Sharpe baseline and the 1/N rule, plus weight diversity measures.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Allocation over labelled assets; non-negative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    weights: Vec<T>,
    labels: Vec<String>,
}

impl<T: Scalar> WeightVector<T> {
    pub fn new(weights: Vec<T>, labels: Vec<String>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), found: labels.len() });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::Data(format!("weight {i} is negative or non-finite: {}", weights[i])));
        }
        let sum: T = weights.iter().copied().sum();
        if (sum - T::one()).abs() > T::of(SIMPLEX_TOLERANCE) {
            return Err(Error::Data(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights, labels })
    }

    /// The naive 1/N allocation.
    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Self::new(vec![T::one() / T::of_usize(n); n], labels)
    }

    /// Everything in asset `i`.
    pub fn unit(labels: Vec<String>, i: usize) -> Result<Self> {
        let mut w = vec![T::zero(); labels.len()];
        *w.get_mut(i).ok_or(Error::DimensionMismatch { expected: labels.len(), found: i + 1 })? = T::one();
        Self::new(w, labels)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.labels.iter().map(String::as_str).zip(self.weights.iter().copied())
    }
}

/// Per-asset expected returns and their covariance (row-major, square).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<Vec<T>>,
}

impl<T: Scalar> MomentEstimates<T> {
    pub fn new(mu: Vec<T>, sigma: Vec<Vec<T>>) -> Result<Self> {
        check_covariance(&sigma, mu.len())?;
        Ok(Self { mu, sigma })
    }

    /// Sample mean and sample covariance (denominator `len - 1`) of equally
    /// long return series.
    pub fn from_returns(series: &[&[T]]) -> Result<Self> {
        let n_assets = series.len();
        if n_assets == 0 {
            return Err(Error::EmptyInput);
        }
        let len = series[0].len();
        if let Some(s) = series.iter().find(|s| s.len() != len) {
            return Err(Error::DimensionMismatch { expected: len, found: s.len() });
        }
        if len < 2 {
            return Err(Error::TooShort { needed: 2, available: len });
        }
        let lenf = T::of_usize(len);
        let mu: Vec<T> = series.iter().map(|s| s.iter().copied().sum::<T>() / lenf).collect();
        let mut sigma = vec![vec![T::zero(); n_assets]; n_assets];
        for i in 0..n_assets {
            for j in i..n_assets {
                let c = series[i]
                    .iter()
                    .zip(series[j].iter())
                    .map(|(&a, &b)| (a - mu[i]) * (b - mu[j]))
                    .sum::<T>()
                    / T::of_usize(len - 1);
                sigma[i][j] = c;
                sigma[j][i] = c;
            }
        }
        Ok(Self { mu, sigma })
    }

    pub fn assets(&self) -> usize {
        self.mu.len()
    }
}

fn check_covariance<T: Scalar>(sigma: &[Vec<T>], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: sigma.len() });
    }
    for (i, row) in sigma.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: row.len() });
        }
        for j in i + 1..n {
            let (a, b) = (row[j], sigma[j][i]);
            if (a - b).abs() > T::of(1e-12) * (a.abs() + b.abs()) {
                return Err(Error::Asymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RiskProfile {
    /// Weights proportional to the entropy index.
    #[default]
    #[serde(rename = "high")]
    HighRisk,
    /// Weights proportional to the inverse entropy index (extension).
    #[serde(rename = "low")]
    LowRisk,
}

pub fn portfolio_mean<T: Scalar>(w: &WeightVector<T>, mu: &[T]) -> Result<T> {
    if mu.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), found: mu.len() });
    }
    Ok(dot(&w.weights, mu))
}

pub fn portfolio_variance<T: Scalar>(w: &WeightVector<T>, sigma: &[Vec<T>]) -> Result<T> {
    check_covariance(sigma, w.len())?;
    let v = quadratic_form(&w.weights, sigma);
    if v < T::of(-1e-12) {
        return Err(Error::NotPositiveSemiDefinite);
    }
    Ok(v.max(T::zero()))
}

/// `mean / sqrt(variance)`; no risk-free rate.
pub fn sharpe_ratio<T: Scalar>(w: &WeightVector<T>, mu: &[T], sigma: &[Vec<T>]) -> Result<T> {
    let mean = portfolio_mean(w, mu)?;
    let var = portfolio_variance(w, sigma)?;
    if var <= T::zero() {
        return Err(Error::ZeroVariance);
    }
    Ok(mean / var.sqrt())
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn mat_vec<T: Scalar>(m: &[Vec<T>], v: &[T]) -> Vec<T> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn quadratic_form<T: Scalar>(w: &[T], sigma: &[Vec<T>]) -> T {
    dot(w, &mat_vec(sigma, w))
}

fn is_positive_definite<T: Scalar>(sigma: &[Vec<T>]) -> bool {
    let n = sigma.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: T = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = sigma[i][i] - s;
                if !(d > T::zero()) {
                    return false;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (sigma[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut theta = T::zero();
    for (j, &x) in u.iter().enumerate() {
        cumulative = cumulative + x;
        let t = (cumulative - T::one()) / T::of_usize(j + 1);
        if x - t > T::zero() {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(T::zero())).collect()
}

struct SharpeObjective<'a, T> {
    mu: &'a [T],
    sigma: &'a [Vec<T>],
}

impl<T: Scalar> SharpeObjective<'_, T> {
    fn value(&self, w: &[T]) -> T {
        let var = quadratic_form(w, self.sigma);
        if var <= T::zero() {
            return T::neg_infinity();
        }
        dot(w, self.mu) / var.sqrt()
    }

    fn gradient(&self, w: &[T]) -> Vec<T> {
        let sw = mat_vec(self.sigma, w);
        let var = dot(w, &sw);
        let sd = var.sqrt();
        let mean = dot(w, self.mu);
        self.mu
            .iter()
            .zip(&sw)
            .map(|(&m, &s)| m / sd - mean * s / (var * sd))
            .collect()
    }

    /// Projected gradient ascent with backtracking line search.
    fn ascend(&self, start: Vec<T>) -> (Vec<T>, T) {
        let mut w = start;
        let mut f = self.value(&w);
        let mut step = T::one();
        let armijo = T::of(1e-4);
        let min_step = T::of(1e-30);
        for _ in 0..10_000 {
            let g = self.gradient(&w);
            let gmax = g.iter().fold(T::zero(), |a, x| a.max(x.abs()));
            if !(gmax > T::zero()) {
                break;
            }
            let mut accepted = None;
            while step > min_step {
                let moved: Vec<T> = w.iter().zip(&g).map(|(&x, &d)| x + step * d).collect();
                let cand = project_to_simplex(&moved);
                let fc = self.value(&cand);
                let ascent: T = g.iter().zip(cand.iter().zip(&w)).map(|(&d, (&c, &x))| d * (c - x)).sum();
                if fc >= f + armijo * ascent {
                    accepted = Some((cand, fc));
                    break;
                }
                step = step * T::of(0.5);
            }
            let Some((cand, fc)) = accepted else { break };
            let moved = cand.iter().zip(&w).fold(T::zero(), |a, (&c, &x)| a.max((c - x).abs()));
            let gain = fc - f;
            w = cand;
            f = fc;
            if moved <= T::of(1e-14) || gain <= T::epsilon() * f.abs() * T::of(1e-2) {
                break;
            }
            step = step * T::of(2.0);
        }
        (w, f)
    }
}

/// Every point of the simplex lattice with spacing `1/steps`.
fn simplex_lattice<T: Scalar>(n: usize, steps: usize, mut visit: impl FnMut(&[T])) {
    fn rec<T: Scalar>(parts: &mut Vec<usize>, n: usize, left: usize, steps: usize, visit: &mut dyn FnMut(&[T])) {
        if parts.len() + 1 == n {
            parts.push(left);
            let w: Vec<T> = parts.iter().map(|&p| T::of_usize(p) / T::of_usize(steps)).collect();
            visit(&w);
            parts.pop();
            return;
        }
        for k in 0..=left {
            parts.push(k);
            rec(parts, n, left - k, steps, visit);
            parts.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), n, steps, steps, &mut visit);
}

/// Long-only weights maximizing the Sharpe ratio. The result is never worse
/// than any vertex, the uniform portfolio or a coarse simplex lattice.
pub fn max_sharpe_weights<T: Scalar>(moments: &MomentEstimates<T>, labels: Vec<String>) -> Result<WeightVector<T>> {
    let n = moments.assets();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
    }
    check_covariance(&moments.sigma, n)?;
    if moments.mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::Data("non-finite expected return".into()));
    }
    if moments.mu.iter().all(|&m| m <= T::zero()) {
        return Err(Error::NoTangency);
    }

    let mut sigma = moments.sigma.clone();
    if !is_positive_definite(&sigma) {
        let trace: T = (0..n).map(|i| sigma[i][i]).sum();
        let ridge = T::of(1e-10) * trace / T::of_usize(n);
        warn!("covariance is singular; adding ridge {ridge} to the diagonal");
        for (i, row) in sigma.iter_mut().enumerate() {
            row[i] = row[i] + ridge;
        }
        if !is_positive_definite(&sigma) {
            return Err(Error::NotPositiveSemiDefinite);
        }
    }
    if n == 1 {
        return WeightVector::new(vec![T::one()], labels);
    }

    let objective = SharpeObjective { mu: &moments.mu, sigma: &sigma };
    let uniform = vec![T::one() / T::of_usize(n); n];
    let mut best = (uniform.clone(), objective.value(&uniform));
    let consider = |w: &[T], best: &mut (Vec<T>, T)| {
        let f = objective.value(w);
        if f > best.1 {
            *best = (w.to_vec(), f);
        }
    };
    for i in 0..n {
        let mut e = vec![T::zero(); n];
        e[i] = T::one();
        consider(&e, &mut best);
    }
    let lattice_steps = match n {
        2..=4 => 20,
        5..=6 => 10,
        7..=9 => 4,
        _ => 0,
    };
    if lattice_steps > 0 {
        simplex_lattice::<T>(n, lattice_steps, |w| consider(w, &mut best));
    }

    let mut starts = vec![best.0.clone()];
    if dot(&uniform, &moments.mu) > T::zero() {
        starts.insert(0, uniform);
    }
    for start in starts {
        let (w, f) = objective.ascend(start);
        if f > best.1 {
            best = (w, f);
        }
    }

    let sum: T = best.0.iter().copied().sum();
    let weights = best.0.into_iter().map(|x| x / sum).collect();
    WeightVector::new(weights, labels)
}

/// Normalized entropy indices: `I_i / sum I` for [`RiskProfile::HighRisk`],
/// `I_i^-1 / sum I^-1` for [`RiskProfile::LowRisk`].
pub fn cluster_entropy_weights<T: Scalar>(indices: &[T], profile: RiskProfile, labels: Vec<String>) -> Result<WeightVector<T>> {
    if indices.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 assets, got {}", indices.len())));
    }
    if let Some(i) = indices.iter().position(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::Data(format!("entropy index of asset {i} is not positive: {}", indices[i])));
    }
    let raw: Vec<T> = match profile {
        RiskProfile::HighRisk => indices.to_vec(),
        RiskProfile::LowRisk => indices.iter().map(|&v| v.recip()).collect(),
    };
    let total: T = raw.iter().copied().sum();
    WeightVector::new(raw.into_iter().map(|v| v / total).collect(), labels)
}

/// Shannon entropy of the weights, `0 ln 0 = 0`.
pub fn weight_entropy<T: Scalar>(w: &WeightVector<T>) -> T {
    w.weights.iter().filter(|&&x| x > T::zero()).map(|&x| -x * x.ln()).sum()
}

/// `-sum w_i ln(w_i / u_i)`: the negated Kullback-Leibler divergence of `w`
/// from `u`, so it is zero at `w = u` and negative elsewhere.
pub fn kl_cross_entropy<T: Scalar>(w: &WeightVector<T>, u: &WeightVector<T>) -> Result<T> {
    if w.len() != u.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), found: u.len() });
    }
    let mut acc = T::zero();
    for (i, (&wi, &ui)) in w.weights.iter().zip(&u.weights).enumerate() {
        if wi > T::zero() {
            if !(ui > T::zero()) {
                return Err(Error::Data(format!("reference weight {i} is zero where w is positive")));
            }
            acc = acc - wi * (wi / ui).ln();
        }
    }
    Ok(acc)
}
