//! JSON run configuration. Physical quantities are in seconds and are
//! converted to samples through the sampling interval, failing on any
//! non-integer ratio.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dma_cluster::{Aggregation, EntropyEstimator, MovingAverageGrid, Threshold, DEFAULT_MIN_CLUSTERS};
use crate::portfolio::RiskProfile;
use crate::returns_vol::{ReturnKind, VolatilityWindow};
use crate::series_io::{HorizonMode, HorizonSpec};
use crate::synth::GeneratorSpec;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub assets: Vec<AssetInput>,
    #[serde(default = "default_year_start")]
    pub year_start: NaiveDate,
    /// Sampling interval in seconds.
    pub delta_s: f64,
    #[serde(default)]
    pub n_grid: NGrid,
    #[serde(default = "default_windows")]
    pub volatility_windows_s: Vec<f64>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<u32>,
    #[serde(default)]
    pub horizon_mode: HorizonMode,
    #[serde(default)]
    pub risk_profile: RiskProfile,
    #[serde(default)]
    pub entropy_estimator: EntropyEstimator,
    #[serde(default)]
    pub threshold_m: Threshold,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub return_kind: ReturnKind,
    #[serde(default)]
    pub weight_source: WeightSource,
    #[serde(default = "default_min_clusters")]
    pub min_clusters: usize,
    pub output_dir: PathBuf,
    /// Adds wall-clock stage timings to the manifest, which makes it
    /// differ between otherwise identical runs.
    #[serde(default)]
    pub record_timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetInput {
    pub label: String,
    #[serde(flatten)]
    pub source: AssetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AssetSource {
    /// Tick CSV file.
    Ticks { path: PathBuf },
    Synthetic { synthetic: SyntheticAsset },
}

/// Synthetic price path laid on the configured grid from `year_start`.
/// Log prices are `scale * level` for FBM and the running sum of
/// `scale * increment` for ARFIMA/GARCH.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticAsset {
    pub generator: GeneratorSpec,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_initial_price")]
    pub initial_price: f64,
}

/// Which series' cluster entropy drives the entropy weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    #[default]
    Volatility,
    Return,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NGrid {
    pub min_s: f64,
    pub max_s: f64,
    pub step_s: f64,
}

impl Default for NGrid {
    fn default() -> Self {
        Self { min_s: 25.0, max_s: 200.0, step_s: 25.0 }
    }
}

fn default_year_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date")
}

fn default_windows() -> Vec<f64> {
    vec![180.0, 360.0, 720.0]
}

fn default_horizons() -> Vec<u32> {
    (1..=12).collect()
}

fn default_min_clusters() -> usize {
    DEFAULT_MIN_CLUSTERS
}

fn default_scale() -> f64 {
    1e-3
}

fn default_initial_price() -> f64 {
    100.0
}

pub fn seconds_to_ns(seconds: f64) -> Option<i64> {
    if !seconds.is_finite() || seconds <= 0.0 {
        return None;
    }
    let ns = seconds * 1e9;
    let rounded = ns.round();
    ((ns - rounded).abs() < 1e-3 && rounded < i64::MAX as f64).then_some(rounded as i64)
}

/// Configuration with every physical quantity converted to samples.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub delta_ns: i64,
    pub grid: MovingAverageGrid,
    pub windows: Vec<VolatilityWindow>,
    pub horizons: Vec<HorizonSpec>,
    pub output_dir: PathBuf,
    pub asset_paths: Vec<Option<PathBuf>>,
}

impl PipelineConfig {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    /// Makes relative paths relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for asset in &mut self.assets {
            if let AssetSource::Ticks { path } = &mut asset.source {
                fix(path);
            }
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.assets.iter().map(|a| a.label.clone()).collect()
    }

    pub fn resolve(&self) -> Result<ResolvedConfig, PipelineError> {
        let bad = |m: String| PipelineError::Config(m);
        if self.assets.len() < 2 {
            return Err(bad(format!("need at least 2 assets, got {}", self.assets.len())));
        }
        let mut seen = HashSet::new();
        for a in &self.assets {
            if a.label.is_empty() || !seen.insert(a.label.as_str()) {
                return Err(bad(format!("asset labels must be non-empty and unique (`{}`)", a.label)));
            }
            if let AssetSource::Synthetic { synthetic } = &a.source {
                synthetic.generator.validate().map_err(|e| bad(format!("asset {}: {e}", a.label)))?;
                if !(synthetic.scale.is_finite() && synthetic.scale > 0.0) {
                    return Err(bad(format!("asset {}: scale must be positive", a.label)));
                }
                if !(synthetic.initial_price.is_finite() && synthetic.initial_price > 0.0) {
                    return Err(bad(format!("asset {}: initial_price must be positive", a.label)));
                }
            }
        }
        let delta_ns = seconds_to_ns(self.delta_s).ok_or_else(|| bad(format!("delta_s {} is not a positive whole number of ns", self.delta_s)))?;
        let to_ns = |what: &str, s: f64| seconds_to_ns(s).ok_or_else(|| bad(format!("{what} {s} s is not a positive whole number of ns")));

        let grid = MovingAverageGrid::from_physical(
            to_ns("n_grid.min_s", self.n_grid.min_s)?,
            to_ns("n_grid.max_s", self.n_grid.max_s)?,
            to_ns("n_grid.step_s", self.n_grid.step_s)?,
            delta_ns,
        )
        .map_err(|e| bad(e.to_string()))?;

        if self.volatility_windows_s.is_empty() {
            return Err(bad("volatility_windows_s is empty".into()));
        }
        let mut windows = Vec::new();
        for &w in &self.volatility_windows_s {
            let win = VolatilityWindow::new(to_ns("volatility window", w)?, delta_ns).map_err(|e| bad(e.to_string()))?;
            if win.samples() < 2 {
                return Err(bad(format!("volatility window {w} s holds fewer than 2 samples")));
            }
            if windows.iter().any(|x: &VolatilityWindow| x.physical_ns() == win.physical_ns()) {
                return Err(bad(format!("duplicate volatility window {w} s")));
            }
            windows.push(win);
        }

        if self.horizons.is_empty() {
            return Err(bad("horizons is empty".into()));
        }
        let mut horizons = Vec::new();
        for &m in &self.horizons {
            if horizons.iter().any(|h: &HorizonSpec| h.months == m) {
                return Err(bad(format!("duplicate horizon {m}")));
            }
            horizons.push(HorizonSpec::new(self.year_start, m, self.horizon_mode).map_err(|e| bad(e.to_string()))?);
        }
        if let Threshold::Fixed(0) = self.threshold_m {
            return Err(bad("threshold_m must be >= 1".into()));
        }
        if self.min_clusters == 0 {
            return Err(bad("min_clusters must be >= 1".into()));
        }

        let asset_paths = self
            .assets
            .iter()
            .map(|a| match &a.source {
                AssetSource::Ticks { path } => Some(path.clone()),
                AssetSource::Synthetic { .. } => None,
            })
            .collect();

        Ok(ResolvedConfig { delta_ns, grid, windows, horizons, output_dir: self.output_dir.clone(), asset_paths })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
