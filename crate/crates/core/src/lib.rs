//! Detrending-moving-average (DMA) cluster entropy for high-frequency series,
//! and portfolio weights built from cluster entropy indices alongside a
//! long-only maximum-Sharpe baseline.
//!
//! The numerical core is generic over the floating point type through
//! [`Scalar`]; the aliases at the crate root fix it to `f64`, which is what the
//! pipeline and the CLI use.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dma_cluster;
pub mod error;
pub mod portfolio;
pub mod returns_vol;
pub mod scalar;
pub mod series_io;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Equally spaced `f64` series.
pub type Series = series_io::SampledSeries<f64>;
/// Raw `f64` tick.
pub type Tick = series_io::TickRecord<f64>;
/// Cluster duration histogram with `f64` probabilities.
pub type Distribution = dma_cluster::ClusterDistribution<f64>;
/// Entropy curve `S(tau, n)` in `f64`.
pub type Curve = dma_cluster::EntropyCurve<f64>;
/// Entropy index `I(n)` in `f64`.
pub type Index = dma_cluster::EntropyIndex<f64>;
/// Power-law / exponential fit diagnostics in `f64`.
pub type ModelFit = dma_cluster::ClusterModelFit<f64>;
/// Portfolio allocation in `f64`.
pub type Weights = portfolio::WeightVector<f64>;
/// Mean and covariance estimates in `f64`.
pub type Moments = portfolio::MomentEstimates<f64>;
