//! Seeded synthetic generators: fractional Brownian motion (exact circulant
//! embedding), ARFIMA(0,d,0) and GARCH(1,1).
//!
//! Each generator owns a ChaCha20 stream derived from the seed and a
//! per-generator stream id, so the same spec always yields the same bits.
//!
//! ARFIMA uses the moving-average representation truncated at
//! [`ARFIMA_TRUNCATION`] terms. The weights decay as
//! `psi_k ~ k^(d-1) / Gamma(d)`, so the variance lost to truncation is about
//! `K^(2d-1) / (Gamma(d)^2 (1 - 2d))`; for `K = 10^4` that is below `2e-3`
//! for `d <= 0.3` and grows towards the `d -> 0.5` boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series_io::{SampledSeries, SeriesKind, NANOS_PER_SECOND};

pub const ARFIMA_TRUNCATION: usize = 10_000;

const FBM_STREAM: u64 = 1;
const ARFIMA_STREAM: u64 = 2;
const GARCH_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorKind {
    Fbm { hurst: f64 },
    Arfima { d: f64 },
    Garch { omega: f64, alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub length: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            GeneratorKind::Fbm { hurst } => check_fbm(hurst, self.length),
            GeneratorKind::Arfima { d } => check_arfima(d, self.length),
            GeneratorKind::Garch { omega, alpha, beta } => check_garch(omega, alpha, beta, self.length),
        }
    }

    /// Samples at one-second spacing from t = 0; use
    /// [`SampledSeries::retimed`] to place them elsewhere.
    pub fn generate(&self) -> Result<SampledSeries<f64>> {
        match self.kind {
            GeneratorKind::Fbm { hurst } => fbm_series(hurst, self.length, self.seed),
            GeneratorKind::Arfima { d } => arfima_series(d, self.length, self.seed),
            GeneratorKind::Garch { omega, alpha, beta } => garch_series(omega, alpha, beta, self.length, self.seed),
        }
    }

    /// FBM paths are levels; ARFIMA and GARCH produce increments.
    pub fn is_increment_process(&self) -> bool {
        !matches!(self.kind, GeneratorKind::Fbm { .. })
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normals(rng: &mut ChaCha20Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

fn check_fbm(hurst: f64, length: usize) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidArgument(format!("Hurst exponent must lie in (0, 1), got {hurst}")));
    }
    if length < 2 || !length.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("FBM length must be a power of two >= 2, got {length}")));
    }
    Ok(())
}

fn check_arfima(d: f64, length: usize) -> Result<()> {
    if !(d.abs() < 0.5) {
        return Err(Error::InvalidArgument(format!("ARFIMA d must satisfy |d| < 0.5, got {d}")));
    }
    if length == 0 {
        return Err(Error::InvalidArgument("series length must be positive".into()));
    }
    Ok(())
}

fn check_garch(omega: f64, alpha: f64, beta: f64, length: usize) -> Result<()> {
    if !(omega > 0.0) || !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "GARCH needs omega > 0, alpha >= 0, beta >= 0 (got {omega}, {alpha}, {beta})"
        )));
    }
    if !(alpha + beta < 1.0) {
        return Err(Error::InvalidArgument(format!("GARCH alpha + beta must be < 1, got {}", alpha + beta)));
    }
    if length == 0 {
        return Err(Error::InvalidArgument("series length must be positive".into()));
    }
    Ok(())
}

fn one_second_grid(values: Vec<f64>, kind: SeriesKind) -> Result<SampledSeries<f64>> {
    SampledSeries::new(values, 0, NANOS_PER_SECOND, kind)
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Fractional Gaussian noise of length `length` by circulant embedding of
/// size `2 * length`.
pub fn fgn(hurst: f64, length: usize, seed: u64) -> Result<Vec<f64>> {
    check_fbm(hurst, length)?;
    let m = 2 * length;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= length { j } else { m - j };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let scale = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut eigen = Vec::with_capacity(m);
    for c in &row {
        if c.re < -1e-8 * scale {
            return Err(Error::Data(format!("circulant embedding not non-negative definite (eigenvalue {})", c.re)));
        }
        eigen.push(c.re.max(0.0));
    }

    let mut rng = rng_for(seed, FBM_STREAM);
    let z = normals(&mut rng, m);
    let mf = m as f64;
    let mut a = vec![Complex::new(0.0, 0.0); m];
    a[0] = Complex::new((eigen[0] / mf).sqrt() * z[0], 0.0);
    a[length] = Complex::new((eigen[length] / mf).sqrt() * z[1], 0.0);
    for j in 1..length {
        let s = (eigen[j] / (2.0 * mf)).sqrt();
        let v = Complex::new(s * z[2 * j], s * z[2 * j + 1]);
        a[j] = v;
        a[m - j] = v.conj();
    }
    fft.process(&mut a);
    Ok(a[..length].iter().map(|c| c.re).collect())
}

/// Fractional Brownian motion path: partial sums of fractional Gaussian
/// noise, so `Var[B(t+k) - B(t)] = k^(2H)`.
pub fn fbm_series(hurst: f64, length: usize, seed: u64) -> Result<SampledSeries<f64>> {
    let noise = fgn(hurst, length, seed)?;
    let mut level = 0.0;
    let path = noise
        .iter()
        .map(|x| {
            level += x;
            level
        })
        .collect();
    one_second_grid(path, SeriesKind::Price)
}

/// Moving-average weights of `(1 - L)^(-d)`.
pub fn arfima_weights(d: f64, count: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(count);
    let mut w = 1.0;
    for k in 0..count {
        if k > 0 {
            w *= (k as f64 - 1.0 + d) / k as f64;
        }
        psi.push(w);
    }
    psi
}

pub fn arfima_series(d: f64, length: usize, seed: u64) -> Result<SampledSeries<f64>> {
    check_arfima(d, length)?;
    let k = ARFIMA_TRUNCATION;
    let psi = arfima_weights(d, k);
    let mut rng = rng_for(seed, ARFIMA_STREAM);
    let eps = normals(&mut rng, length + k - 1);

    // x_t = sum_j psi_j eps_{t + k - 1 - j}, t = 0..length
    let size = (eps.len() + k - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let mut e: Vec<Complex<f64>> = eps.iter().map(|&x| Complex::new(x, 0.0)).collect();
    e.resize(size, Complex::new(0.0, 0.0));
    let mut p: Vec<Complex<f64>> = psi.iter().map(|&x| Complex::new(x, 0.0)).collect();
    p.resize(size, Complex::new(0.0, 0.0));
    forward.process(&mut e);
    forward.process(&mut p);
    for (a, b) in e.iter_mut().zip(&p) {
        *a *= *b;
    }
    inverse.process(&mut e);
    let norm = size as f64;
    let x = e[k - 1..k - 1 + length].iter().map(|c| c.re / norm).collect();
    one_second_grid(x, SeriesKind::Return)
}

/// GARCH(1,1) returns started at the unconditional variance.
pub fn garch_series(omega: f64, alpha: f64, beta: f64, length: usize, seed: u64) -> Result<SampledSeries<f64>> {
    check_garch(omega, alpha, beta, length)?;
    let mut rng = rng_for(seed, GARCH_STREAM);
    let mut variance = omega / (1.0 - alpha - beta);
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        let z: f64 = rng.sample(StandardNormal);
        let r = variance.sqrt() * z;
        out.push(r);
        variance = omega + alpha * r * r + beta * variance;
    }
    one_second_grid(out, SeriesKind::Return)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / x.len() as f64
    }

    fn variance(x: &[f64]) -> f64 {
        let m = mean(x);
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
    }

    fn lag_autocorrelation(x: &[f64], lag: usize) -> f64 {
        let m = mean(x);
        let num: f64 = x.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
        let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
        num / den
    }

    #[test]
    fn fbm_bounds() {
        assert!(fbm_series(1.2, 1024, 1).is_err());
        assert!(fbm_series(0.0, 1024, 1).is_err());
        assert!(fbm_series(0.5, 1000, 1).is_err());
        assert!(fbm_series(0.5, 1024, 1).is_ok());
    }

    #[test]
    fn fbm_half_has_uncorrelated_increments() {
        let n = 4096;
        let rhos: Vec<f64> = (0..20).map(|seed| lag_autocorrelation(&fgn(0.5, n, seed).unwrap(), 1)).collect();
        assert!(mean(&rhos).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn fbm_increment_variance_scales_as_k_to_2h() {
        for &h in &[0.5, 0.3, 0.7] {
            let n = 4096;
            for &k in &[1usize, 4, 16] {
                let mut acc = 0.0;
                let seeds = 20;
                for seed in 0..seeds {
                    let b = fbm_series(h, n, seed).unwrap();
                    let inc: Vec<f64> = b.values().windows(k + 1).map(|w| w[k] - w[0]).collect();
                    acc += inc.iter().map(|v| v * v).sum::<f64>() / inc.len() as f64;
                }
                let got = acc / seeds as f64;
                let expect = (k as f64).powf(2.0 * h);
                assert!((got / expect - 1.0).abs() < 0.05, "H={h} k={k}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn arfima_bounds_and_white_noise_limit() {
        assert!(arfima_series(0.6, 100, 1).is_err());
        assert!(arfima_series(-0.5, 100, 1).is_err());
        let n = 20_000;
        let x = arfima_series(0.0, n, 3).unwrap();
        assert!(lag_autocorrelation(x.values(), 1).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn arfima_long_memory_autocorrelation() {
        // rho_k = Gamma(1-d) Gamma(k+d) / (Gamma(d) Gamma(k+1-d)), via its ratio recursion
        let d = 0.3;
        let mut theory = vec![1.0];
        for k in 1..=10 {
            let prev = theory[k - 1];
            theory.push(prev * (k as f64 - 1.0 + d) / (k as f64 - d));
        }
        let seeds = 10;
        let mut acf = [0.0; 11];
        for seed in 0..seeds {
            let x = arfima_series(d, 8192, seed).unwrap();
            for (lag, a) in acf.iter_mut().enumerate().skip(1) {
                *a += lag_autocorrelation(x.values(), lag) / seeds as f64;
            }
        }
        for lag in 1..=10 {
            assert!(acf[lag] > 0.0, "lag {lag}: {}", acf[lag]);
            assert!((acf[lag] - theory[lag]).abs() < 0.1, "lag {lag}: {} vs {}", acf[lag], theory[lag]);
        }
    }

    #[test]
    fn garch_variances() {
        assert!(garch_series(1e-5, 0.5, 0.5, 10, 1).is_err());
        assert!(garch_series(0.0, 0.1, 0.5, 10, 1).is_err());

        let iid = garch_series(2.0, 0.0, 0.0, 100_000, 11).unwrap();
        assert!((variance(iid.values()) / 2.0 - 1.0).abs() < 0.05);

        let g = garch_series(1e-5, 0.1, 0.85, 100_000, 12).unwrap();
        assert!((variance(g.values()) / 2e-4 - 1.0).abs() < 0.10, "{}", variance(g.values()));
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let specs = [
            GeneratorKind::Fbm { hurst: 0.6 },
            GeneratorKind::Arfima { d: 0.2 },
            GeneratorKind::Garch { omega: 1e-5, alpha: 0.1, beta: 0.8 },
        ];
        for kind in specs {
            let a = GeneratorSpec { kind, length: 1024, seed: 5 };
            let b = GeneratorSpec { seed: 6, ..a };
            let x = a.generate().unwrap();
            let y = a.generate().unwrap();
            assert_eq!(
                x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                y.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            assert_ne!(x.values(), b.generate().unwrap().values());
        }
    }

    #[test]
    fn spec_json_shape() {
        let spec: GeneratorSpec =
            serde_json::from_str(r#"{"kind":"garch","omega":1e-5,"alpha":0.1,"beta":0.85,"length":64,"seed":9}"#).unwrap();
        assert_eq!(spec.kind, GeneratorKind::Garch { omega: 1e-5, alpha: 0.1, beta: 0.85 });
        assert!(spec.validate().is_ok());
        let spec: GeneratorSpec = serde_json::from_str(r#"{"kind":"fbm","hurst":0.7,"length":64,"seed":1}"#).unwrap();
        assert!(!spec.is_increment_process());
    }
}
