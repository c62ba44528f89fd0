//! Returns and rolling expected-return / volatility series.
//!
//! Every window holds exactly `samples` consecutive returns and is fully
//! contained in the input; the output sample is stamped with the time of the
//! window's last return, so output length is `len - samples + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series_io::{SampledSeries, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    /// `(y_t - y_{t-1}) / y_{t-1}`
    #[default]
    Simple,
    /// `ln(y_t / y_{t-1})`
    Log,
}

/// Rolling window length, physical and in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolatilityWindow {
    physical_ns: i64,
    samples: usize,
}

impl VolatilityWindow {
    /// Converts a physical span to samples; the span must be an exact multiple
    /// of the sampling interval.
    pub fn new(physical_ns: i64, delta_ns: i64) -> Result<Self> {
        if delta_ns <= 0 || physical_ns <= 0 {
            return Err(Error::InvalidArgument(format!(
                "window {physical_ns} ns and interval {delta_ns} ns must both be positive"
            )));
        }
        if physical_ns % delta_ns != 0 {
            return Err(Error::InvalidArgument(format!(
                "window {physical_ns} ns is not a multiple of the sampling interval {delta_ns} ns"
            )));
        }
        Ok(Self { physical_ns, samples: (physical_ns / delta_ns) as usize })
    }

    pub fn from_samples(samples: usize, delta_ns: i64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidArgument("window must hold at least one sample".into()));
        }
        Self::new(samples as i64 * delta_ns, delta_ns)
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn physical_ns(&self) -> i64 {
        self.physical_ns
    }

    pub fn seconds(&self) -> f64 {
        self.physical_ns as f64 / 1e9
    }
}

pub fn linear_returns<T: Scalar>(prices: &SampledSeries<T>, kind: ReturnKind) -> Result<SampledSeries<T>> {
    let y = prices.values();
    if y.len() < 2 {
        return Err(Error::TooShort { needed: 2, available: y.len() });
    }
    if let Some(i) = y.iter().position(|&p| p <= T::zero()) {
        return Err(Error::Data(format!("non-positive price at sample {i}")));
    }
    let r = y
        .windows(2)
        .map(|w| match kind {
            ReturnKind::Simple => (w[1] - w[0]) / w[0],
            ReturnKind::Log => (w[1] / w[0]).ln(),
        })
        .collect();
    prices.derive(r, 1, SeriesKind::Return)
}

fn check_window<T: Scalar>(series: &SampledSeries<T>, window: &VolatilityWindow) -> Result<()> {
    if window.delta_mismatch(series.delta()) {
        return Err(Error::InvalidArgument(format!(
            "window sampled at {} ns but series at {} ns",
            window.physical_ns / window.samples as i64,
            series.delta()
        )));
    }
    if window.samples > series.len() {
        return Err(Error::TooShort { needed: window.samples, available: series.len() });
    }
    Ok(())
}

impl VolatilityWindow {
    fn delta_mismatch(&self, delta: i64) -> bool {
        self.physical_ns != self.samples as i64 * delta
    }
}

/// Window mean computed as an offset from the window's first element, which
/// keeps constant windows exact.
fn anchored_mean<T: Scalar>(w: &[T]) -> (T, T) {
    let anchor = w[0];
    let shift = w.iter().map(|&x| x - anchor).sum::<T>() / T::of_usize(w.len());
    (anchor, shift)
}

/// Rolling expected return over each fully contained window.
pub fn rolling_mean<T: Scalar>(returns: &SampledSeries<T>, window: &VolatilityWindow) -> Result<SampledSeries<T>> {
    check_window(returns, window)?;
    let k = window.samples;
    let out = returns
        .values()
        .windows(k)
        .map(|w| {
            let (anchor, shift) = anchored_mean(w);
            anchor + shift
        })
        .collect();
    returns.derive(out, k - 1, returns.kind())
}

/// Rolling sample standard deviation (denominator `samples - 1`).
pub fn rolling_volatility<T: Scalar>(returns: &SampledSeries<T>, window: &VolatilityWindow) -> Result<SampledSeries<T>> {
    if window.samples < 2 {
        return Err(Error::InvalidArgument(format!("volatility needs a window of at least 2 samples, got {}", window.samples)));
    }
    check_window(returns, window)?;
    let k = window.samples;
    let denom = T::of_usize(k - 1);
    let out = returns
        .values()
        .windows(k)
        .map(|w| {
            let (anchor, shift) = anchored_mean(w);
            let ss: T = w
                .iter()
                .map(|&x| {
                    let d = (x - anchor) - shift;
                    d * d
                })
                .sum();
            (ss / denom).sqrt()
        })
        .collect();
    returns.derive(out, k - 1, SeriesKind::Volatility)
}
