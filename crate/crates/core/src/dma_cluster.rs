//! DMA cluster machinery: trailing moving average, crossings of a series with
//! its moving average, the cluster duration distribution, the entropy curve
//! `S(tau, n)`, the entropy index `I(n)` and the power-law diagnostics.
//!
//! Durations are integers in sampling units. A crossing is the first sample
//! at which `y - ma` takes a nonzero sign different from the last nonzero sign
//! seen; exact zeros never start a cluster and stay in the preceding one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series_io::SampledSeries;

/// Minimum cluster count for a `(asset, n, horizon)` distribution to be used.
pub const DEFAULT_MIN_CLUSTERS: usize = 50;

/// Moving average window lengths in samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovingAverageGrid {
    n_values: Vec<usize>,
}

impl MovingAverageGrid {
    pub fn new(n_values: Vec<usize>) -> Result<Self> {
        if n_values.is_empty() {
            return Err(Error::InvalidArgument("moving average grid is empty".into()));
        }
        if let Some(&n) = n_values.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidArgument(format!("moving average window {n} < 2")));
        }
        if n_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("moving average grid must be strictly ascending".into()));
        }
        Ok(Self { n_values })
    }

    /// `min, min + step, ..., <= max`, all given in ns and divided by `delta`.
    pub fn from_physical(min_ns: i64, max_ns: i64, step_ns: i64, delta_ns: i64) -> Result<Self> {
        if step_ns <= 0 || min_ns <= 0 || max_ns < min_ns || delta_ns <= 0 {
            return Err(Error::InvalidArgument(format!("bad grid {min_ns}..={max_ns} step {step_ns}")));
        }
        let mut n_values = Vec::new();
        let mut t = min_ns;
        while t <= max_ns {
            if t % delta_ns != 0 {
                return Err(Error::InvalidArgument(format!(
                    "moving average window {t} ns is not a multiple of the sampling interval {delta_ns} ns"
                )));
            }
            n_values.push((t / delta_ns) as usize);
            t += step_ns;
        }
        Self::new(n_values)
    }

    pub fn n_values(&self) -> &[usize] {
        &self.n_values
    }
}

/// Trailing average of the last `n` samples, defined from index `n - 1`.
pub fn moving_average<T: Scalar>(y: &SampledSeries<T>, n: usize) -> Result<SampledSeries<T>> {
    let ma = trailing_mean(y.values(), n)?;
    y.derive(ma, n - 1, y.kind())
}

fn trailing_mean<T: Scalar>(y: &[T], n: usize) -> Result<Vec<T>> {
    if n < 2 || n > y.len() {
        return Err(Error::InvalidArgument(format!(
            "moving average window {n} outside 2..={}",
            y.len()
        )));
    }
    let inv = T::one() / T::of_usize(n);
    Ok(y
        .windows(n)
        .map(|w| {
            let anchor = w[0];
            anchor + w.iter().map(|&x| x - anchor).sum::<T>() * inv
        })
        .collect())
}

/// Indices into `y` (within `[n-1, len-1]`) where `y` crosses its trailing
/// moving average.
pub fn crossing_times<T: Scalar>(y: &SampledSeries<T>, n: usize) -> Result<Vec<usize>> {
    let values = y.values();
    let ma = trailing_mean(values, n)?;
    let mut crossings = Vec::new();
    let mut last_sign = 0i8;
    for (k, &m) in ma.iter().enumerate() {
        let t = k + n - 1;
        let diff = values[t] - m;
        let sign = if diff > T::zero() {
            1
        } else if diff < T::zero() {
            -1
        } else {
            0
        };
        if sign == 0 {
            continue;
        }
        if last_sign != 0 && sign != last_sign {
            crossings.push(t);
        }
        last_sign = sign;
    }
    Ok(crossings)
}

/// Cluster durations `t_j - t_{j-1}` between consecutive crossings. Partial
/// segments before the first and after the last crossing are dropped.
pub fn extract_clusters<T: Scalar>(y: &SampledSeries<T>, n: usize) -> Result<Vec<usize>> {
    Ok(durations_from_crossings(&crossing_times(y, n)?))
}

pub fn durations_from_crossings(crossings: &[usize]) -> Vec<usize> {
    crossings.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Histogram of cluster durations and its normalized frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDistribution<T> {
    pub n: usize,
    pub counts: BTreeMap<usize, u64>,
    pub total: u64,
    pub probabilities: BTreeMap<usize, T>,
}

impl<T: Scalar> ClusterDistribution<T> {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }
}

pub fn cluster_distribution<T: Scalar>(durations: &[usize], n: usize, min_clusters: usize) -> Result<ClusterDistribution<T>> {
    let required = min_clusters.max(1);
    if durations.len() < required {
        return Err(Error::InsufficientClusters { found: durations.len(), required });
    }
    if durations.contains(&0) {
        return Err(Error::Data("cluster duration of zero".into()));
    }
    let mut counts = BTreeMap::new();
    for &tau in durations {
        *counts.entry(tau).or_insert(0u64) += 1;
    }
    let total = durations.len() as u64;
    let denom = T::of(total as f64);
    let probabilities = counts.iter().map(|(&tau, &c)| (tau, T::of(c as f64) / denom)).collect();
    Ok(ClusterDistribution { n, counts, total, probabilities })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyEstimator {
    /// `-ln P(tau, n)` per bin.
    #[default]
    Surprisal,
    /// `-P ln P` per bin.
    ShannonTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyCurve<T> {
    pub n: usize,
    pub points: BTreeMap<usize, T>,
}

pub fn entropy_curve<T: Scalar>(dist: &ClusterDistribution<T>, estimator: EntropyEstimator) -> EntropyCurve<T> {
    let points = dist
        .probabilities
        .iter()
        .map(|(&tau, &p)| {
            let s = match estimator {
                EntropyEstimator::Surprisal => -p.ln(),
                EntropyEstimator::ShannonTerm => -p * p.ln(),
            };
            // ln(1) may round to -0.0
            (tau, s.max(T::zero()))
        })
        .collect();
    EntropyCurve { n: dist.n, points }
}

/// Power-law / linear regime threshold `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// `m = n`
    #[default]
    EqualN,
    Fixed(usize),
}

impl Threshold {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Threshold::EqualN => n,
            Threshold::Fixed(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyIndex<T> {
    pub n: usize,
    pub threshold: usize,
    pub value: T,
    pub power_law_part: T,
    pub linear_part: T,
}

/// Sums the curve over observed bins, splitting at `m` (inclusive on the
/// power-law side).
pub fn entropy_index<T: Scalar>(curve: &EntropyCurve<T>, m: usize) -> Result<EntropyIndex<T>> {
    if m < 1 {
        return Err(Error::InvalidArgument("threshold m must be >= 1".into()));
    }
    if curve.points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let power_law_part: T = curve.points.range(..=m).map(|(_, &s)| s).sum();
    let linear_part: T = curve.points.range(m + 1..).map(|(_, &s)| s).sum();
    Ok(EntropyIndex {
        n: curve.n,
        threshold: m,
        value: power_law_part + linear_part,
        power_law_part,
        linear_part,
    })
}

/// How `I(n)` values are combined over the moving average grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

pub fn aggregate_index<T: Scalar>(indices: &[EntropyIndex<T>], aggregation: Aggregation) -> Result<T> {
    if indices.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: T = indices.iter().map(|i| i.value).sum();
    Ok(match aggregation {
        Aggregation::Sum => sum,
        Aggregation::Mean => sum / T::of_usize(indices.len()),
    })
}

/// Binning used by the fit diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FitBinning {
    #[default]
    Raw,
    /// Geometric bins; probability density per unit tau.
    Log { bins_per_decade: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterModelFit<T> {
    /// Fractal dimension `D`.
    pub d: T,
    /// Intercept of `S = S0 + D ln tau`.
    pub s0: T,
    /// Slope of `S(tau)` over `(n, 5n]`, when at least 3 bins are observed there.
    pub linear_slope: Option<T>,
    pub tau_range: (usize, usize),
}

impl<T: Scalar> ClusterModelFit<T> {
    /// `H = 2 - D`
    pub fn hurst(&self) -> T {
        T::of(2.0) - self.d
    }
}

pub fn fit_cluster_model<T: Scalar>(dist: &ClusterDistribution<T>, fit_range: (usize, usize)) -> Result<ClusterModelFit<T>> {
    fit_cluster_model_with(dist, fit_range, FitBinning::Raw)
}

/// Least squares `ln P = -D ln tau + c` over the inclusive `fit_range`,
/// giving `S0 = -c`.
pub fn fit_cluster_model_with<T: Scalar>(
    dist: &ClusterDistribution<T>,
    fit_range: (usize, usize),
    binning: FitBinning,
) -> Result<ClusterModelFit<T>> {
    let (lo, hi) = fit_range;
    if lo < 1 || hi < lo {
        return Err(Error::InvalidArgument(format!("bad fit range [{lo}, {hi}]")));
    }
    if hi > dist.n {
        return Err(Error::InvalidArgument(format!(
            "fit range upper bound {hi} exceeds n = {} (outside the power-law regime)",
            dist.n
        )));
    }
    let points: Vec<(T, T)> = match binning {
        FitBinning::Raw => dist
            .probabilities
            .range(lo..=hi)
            .map(|(&tau, &p)| (T::of_usize(tau).ln(), p.ln()))
            .collect(),
        FitBinning::Log { bins_per_decade } => log_binned(dist, lo, hi, bins_per_decade)?,
    };
    if points.len() < 3 {
        return Err(Error::InsufficientClusters { found: points.len(), required: 3 });
    }
    let (slope, intercept) = least_squares(&points)?;

    let tail: Vec<(T, T)> = dist
        .probabilities
        .range(dist.n + 1..=5 * dist.n)
        .map(|(&tau, &p)| (T::of_usize(tau), -p.ln()))
        .collect();
    let linear_slope = if tail.len() >= 3 { least_squares(&tail).ok().map(|(s, _)| s) } else { None };

    Ok(ClusterModelFit { d: -slope, s0: -intercept, linear_slope, tau_range: fit_range })
}

fn log_binned<T: Scalar>(dist: &ClusterDistribution<T>, lo: usize, hi: usize, bins_per_decade: usize) -> Result<Vec<(T, T)>> {
    if bins_per_decade == 0 {
        return Err(Error::InvalidArgument("bins_per_decade must be positive".into()));
    }
    let ratio = 10f64.powf(1.0 / bins_per_decade as f64);
    let mut points = Vec::new();
    let mut edge = lo as f64;
    while edge <= hi as f64 {
        let next = (edge * ratio).max(edge + 1.0);
        let (a, b) = (edge.ceil() as usize, ((next.ceil() as usize) - 1).min(hi));
        let mass: f64 = dist.probabilities.range(a..=b).map(|(_, p)| p.as_f64()).sum();
        if mass > 0.0 {
            let width = (b - a + 1) as f64;
            let center = ((a as f64) * (b as f64)).sqrt();
            points.push((T::of(center.ln()), T::of((mass / width).ln())));
        }
        edge = next.ceil();
    }
    Ok(points)
}

/// Slope of a linear fit of the curve over `tau` in `(lo, hi]`.
pub fn fit_linear_regime<T: Scalar>(curve: &EntropyCurve<T>, lo_exclusive: usize, hi: usize) -> Result<T> {
    let points: Vec<(T, T)> = curve.points.range(lo_exclusive + 1..=hi).map(|(&tau, &s)| (T::of_usize(tau), s)).collect();
    if points.len() < 3 {
        return Err(Error::InsufficientClusters { found: points.len(), required: 3 });
    }
    Ok(least_squares(&points)?.0)
}

/// Ordinary least squares `y = a x + b`; returns `(a, b)`.
pub fn least_squares<T: Scalar>(points: &[(T, T)]) -> Result<(T, T)> {
    let len = T::of_usize(points.len());
    let mx = points.iter().map(|p| p.0).sum::<T>() / len;
    let my = points.iter().map(|p| p.1).sum::<T>() / len;
    let sxx: T = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= T::zero() {
        return Err(Error::Data("degenerate regression: all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
