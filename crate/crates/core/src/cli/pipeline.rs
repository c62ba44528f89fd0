//! Orchestration of the `(asset x horizon x T x n)` sweep.
//!
//! Every `(asset, horizon)` pair is an independent task; results come back in
//! task order and are written in config order, so the worker count never
//! changes a byte of output.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::dma_cluster::{
    aggregate_index, cluster_distribution, entropy_curve, entropy_index, extract_clusters, EntropyCurve, EntropyIndex,
    MovingAverageGrid,
};
use crate::portfolio::{
    cluster_entropy_weights, kl_cross_entropy, max_sharpe_weights, weight_entropy, MomentEstimates, RiskProfile,
    WeightVector,
};
use crate::returns_vol::{linear_returns, rolling_volatility};
use crate::series_io::{align_lengths, date_to_ns, parse_ticks, resample, slice_horizon, SampledSeries, SeriesKind};
use crate::synth::GeneratorSpec;

use super::config::{AssetSource, PipelineConfig, ResolvedConfig, SyntheticAsset, WeightSource};
use super::manifest::{RunManifest, StageTiming};
use super::{PipelineError, WORKERS_ENV};

pub const ENTROPY_CURVES_FILE: &str = "entropy_curves.csv";
pub const INDEX_FILE: &str = "index.csv";
pub const INDEX_AGGREGATED_FILE: &str = "index_aggregated.csv";
pub const RETURN_INDEX_FILE: &str = "return_index.csv";
pub const RETURN_INDEX_AGGREGATED_FILE: &str = "return_index_aggregated.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    ClusterEntropyHigh,
    ClusterEntropyLow,
    MaxSharpe,
    Naive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClusterEntropyHigh => "cluster_entropy_high",
            Method::ClusterEntropyLow => "cluster_entropy_low",
            Method::MaxSharpe => "max_sharpe",
            Method::Naive => "naive_1_over_N",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

type NPoint = (usize, Result<(EntropyCurve<f64>, EntropyIndex<f64>), String>);

/// Entropy results of one series over the moving average grid.
struct GridEntropy {
    points: Vec<NPoint>,
}

impl GridEntropy {
    fn valid(&self) -> impl Iterator<Item = (usize, &EntropyCurve<f64>, &EntropyIndex<f64>)> {
        self.points.iter().filter_map(|(n, r)| r.as_ref().ok().map(|(c, i)| (*n, c, i)))
    }

    fn index_at(&self, n: usize) -> Option<&EntropyIndex<f64>> {
        self.points.iter().find(|(k, _)| *k == n).and_then(|(_, r)| r.as_ref().ok().map(|(_, i)| i))
    }
}

/// Everything computed for one `(asset, horizon)` pair.
struct HorizonResult {
    returns: Vec<f64>,
    /// One entry per configured volatility window.
    volatility: Vec<Result<GridEntropy, String>>,
    return_entropy: GridEntropy,
}

/// Builds synthetic log prices on the run grid.
pub fn synthetic_prices(asset: &SyntheticAsset, start_ns: i64, delta_ns: i64) -> crate::Result<SampledSeries<f64>> {
    let raw = asset.generator.generate()?;
    let mut level = 0.0;
    let prices = raw
        .values()
        .iter()
        .map(|&x| {
            let log_price = if GeneratorSpec::is_increment_process(&asset.generator) {
                level += asset.scale * x;
                level
            } else {
                asset.scale * x
            };
            asset.initial_price * log_price.exp()
        })
        .collect();
    SampledSeries::new(prices, start_ns, delta_ns, SeriesKind::Price)
}

fn grid_entropy(series: &SampledSeries<f64>, grid: &MovingAverageGrid, config: &PipelineConfig) -> GridEntropy {
    let points = grid
        .n_values()
        .iter()
        .map(|&n| {
            let outcome = (|| {
                if n > series.len() {
                    return Err(format!("series of {} samples shorter than n", series.len()));
                }
                let durations = extract_clusters(series, n).map_err(|e| e.to_string())?;
                let dist = cluster_distribution(&durations, n, config.min_clusters).map_err(|e| e.to_string())?;
                let curve = entropy_curve(&dist, config.entropy_estimator);
                let index = entropy_index(&curve, config.threshold_m.resolve(n)).map_err(|e| e.to_string())?;
                Ok((curve, index))
            })();
            (n, outcome)
        })
        .collect();
    GridEntropy { points }
}

fn load_assets(config: &PipelineConfig, resolved: &ResolvedConfig) -> Result<Vec<SampledSeries<f64>>, PipelineError> {
    for path in resolved.asset_paths.iter().flatten() {
        if !path.is_file() {
            return Err(PipelineError::Input(format!("missing input file {}", path.display())));
        }
    }
    let start_ns = date_to_ns(config.year_start).map_err(|e| PipelineError::Config(e.to_string()))?;
    let series: Vec<_> = config
        .assets
        .par_iter()
        .map(|asset| match &asset.source {
            AssetSource::Ticks { path } => {
                let file = File::open(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
                let ticks = parse_ticks::<f64, _>(std::io::BufReader::new(file))
                    .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
                resample(&ticks, resolved.delta_ns).map_err(|e| PipelineError::Input(format!("{}: {e}", asset.label)))
            }
            AssetSource::Synthetic { synthetic } => synthetic_prices(synthetic, start_ns, resolved.delta_ns)
                .map_err(|e| PipelineError::Config(format!("asset {}: {e}", asset.label))),
        })
        .collect::<Result<_, _>>()?;
    align_lengths(series).map_err(|e| PipelineError::Input(e.to_string()))
}

fn analyze_horizon(
    prices: &SampledSeries<f64>,
    horizon_idx: usize,
    config: &PipelineConfig,
    resolved: &ResolvedConfig,
) -> Result<HorizonResult, String> {
    let sliced = slice_horizon(prices, &resolved.horizons[horizon_idx]).map_err(|e| e.to_string())?;
    let returns = linear_returns(&sliced, config.return_kind).map_err(|e| e.to_string())?;
    let volatility = resolved
        .windows
        .iter()
        .map(|w| {
            rolling_volatility(&returns, w)
                .map(|vol| grid_entropy(&vol, &resolved.grid, config))
                .map_err(|e| e.to_string())
        })
        .collect();
    let return_entropy = grid_entropy(&returns, &resolved.grid, config);
    Ok(HorizonResult { returns: returns.into_values(), volatility, return_entropy })
}

fn worker_count() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

fn seconds(ns: i64) -> String {
    format!("{}", ns as f64 / 1e9)
}

struct Stages {
    started: Instant,
    stages: Vec<StageTiming>,
}

impl Stages {
    fn mark(&mut self, name: &str) {
        let now = Instant::now();
        let elapsed = now.duration_since(self.started).as_secs_f64() * 1e3;
        info!("stage {name}: {elapsed:.1} ms");
        self.stages.push(StageTiming { name: name.into(), elapsed_ms: elapsed });
        self.started = now;
    }
}

/// Aggregated index per asset for one `(horizon, T)` cell over the n values
/// usable for every asset, or the reason there is none.
fn common_grid_indices(
    per_asset: &[Option<&GridEntropy>],
    grid: &MovingAverageGrid,
    config: &PipelineConfig,
) -> Result<(Vec<f64>, Vec<usize>), String> {
    let assets: Vec<&GridEntropy> = per_asset.iter().map(|g| g.ok_or_else(|| "asset data unavailable".to_string())).collect::<Result<_, _>>()?;
    let common: Vec<usize> = grid
        .n_values()
        .iter()
        .copied()
        .filter(|&n| assets.iter().all(|g| g.index_at(n).is_some()))
        .collect();
    if common.is_empty() {
        return Err("no moving average window has enough clusters for every asset".into());
    }
    let values = assets
        .iter()
        .map(|g| {
            let idx: Vec<EntropyIndex<f64>> = common.iter().filter_map(|&n| g.index_at(n).copied()).collect();
            aggregate_index(&idx, config.aggregation).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    Ok((values, common))
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutcome, PipelineError> {
    let resolved = config.resolve()?;
    let mut stages = Stages { started: Instant::now(), stages: Vec::new() };
    let mut warnings = Vec::new();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;

    let prices = pool.install(|| load_assets(config, &resolved))?;
    stages.mark("load");

    let labels = config.labels();
    let n_assets = labels.len();
    let n_horizons = resolved.horizons.len();
    let tasks: Vec<(usize, usize)> = (0..n_assets).flat_map(|a| (0..n_horizons).map(move |h| (a, h))).collect();
    let results: Vec<Result<HorizonResult, String>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(a, h)| analyze_horizon(&prices[a], h, config, &resolved))
            .collect()
    });
    let result = |a: usize, h: usize| &results[a * n_horizons + h];
    stages.mark("entropy");

    // per-point drop warnings, and whole-asset failure
    for (a, label) in labels.iter().enumerate() {
        let mut usable = 0usize;
        for (h, spec) in resolved.horizons.iter().enumerate() {
            match result(a, h) {
                Err(e) => warnings.push(format!("asset {label} horizon {}: {e}", spec.months)),
                Ok(r) => {
                    for (w, win) in resolved.windows.iter().enumerate() {
                        match &r.volatility[w] {
                            Err(e) => warnings.push(format!("asset {label} horizon {} T_s {}: {e}", spec.months, seconds(win.physical_ns()))),
                            Ok(g) => {
                                for (n, p) in &g.points {
                                    match p {
                                        Ok(_) => usable += usize::from(config.weight_source == WeightSource::Volatility),
                                        Err(e) => warnings.push(format!(
                                            "asset {label} horizon {} T_s {} n {n}: dropped ({e})",
                                            spec.months,
                                            seconds(win.physical_ns())
                                        )),
                                    }
                                }
                            }
                        }
                    }
                    for (n, p) in &r.return_entropy.points {
                        match p {
                            Ok(_) => usable += usize::from(config.weight_source == WeightSource::Return),
                            Err(e) => warnings.push(format!("asset {label} horizon {} return series n {n}: dropped ({e})", spec.months)),
                        }
                    }
                }
            }
        }
        if usable == 0 {
            return Err(PipelineError::InsufficientClusters(format!(
                "asset {label} has no moving average window with at least {} clusters in any horizon",
                config.min_clusters
            )));
        }
    }

    let mut curve_rows: Vec<[String; 6]> = Vec::new();
    let mut index_rows: Vec<[String; 5]> = Vec::new();
    let mut agg_rows: Vec<[String; 4]> = Vec::new();
    let mut ret_index_rows: Vec<[String; 4]> = Vec::new();
    let mut ret_agg_rows: Vec<[String; 3]> = Vec::new();
    // (method, horizon position, window position) -> weights
    let mut weights: BTreeMap<(Method, usize, usize), WeightVector<f64>> = BTreeMap::new();
    let entropy_method = match config.risk_profile {
        RiskProfile::HighRisk => Method::ClusterEntropyHigh,
        RiskProfile::LowRisk => Method::ClusterEntropyLow,
    };

    for (h, spec) in resolved.horizons.iter().enumerate() {
        let m = spec.months.to_string();
        for (a, label) in labels.iter().enumerate() {
            let Ok(r) = result(a, h) else { continue };
            for (w, win) in resolved.windows.iter().enumerate() {
                let Ok(g) = &r.volatility[w] else { continue };
                let t_s = seconds(win.physical_ns());
                for (n, curve, index) in g.valid() {
                    for (tau, s) in &curve.points {
                        curve_rows.push([label.clone(), m.clone(), t_s.clone(), n.to_string(), tau.to_string(), s.to_string()]);
                    }
                    index_rows.push([label.clone(), m.clone(), t_s.clone(), n.to_string(), index.value.to_string()]);
                }
            }
            for (n, _, index) in r.return_entropy.valid() {
                ret_index_rows.push([label.clone(), m.clone(), n.to_string(), index.value.to_string()]);
            }
        }

        let returns_entropy: Vec<Option<&GridEntropy>> =
            (0..n_assets).map(|a| result(a, h).as_ref().ok().map(|r| &r.return_entropy)).collect();
        let return_aggregate = common_grid_indices(&returns_entropy, &resolved.grid, config);
        match &return_aggregate {
            Ok((values, _)) => {
                for (label, v) in labels.iter().zip(values) {
                    ret_agg_rows.push([label.clone(), m.clone(), v.to_string()]);
                }
            }
            Err(e) => warnings.push(format!("horizon {m} return series: {e}")),
        }

        for (w, win) in resolved.windows.iter().enumerate() {
            let t_s = seconds(win.physical_ns());
            let vol_entropy: Vec<Option<&GridEntropy>> = (0..n_assets)
                .map(|a| result(a, h).as_ref().ok().and_then(|r| r.volatility[w].as_ref().ok()))
                .collect();
            let vol_aggregate = common_grid_indices(&vol_entropy, &resolved.grid, config);
            match &vol_aggregate {
                Ok((values, common)) => {
                    for (label, v) in labels.iter().zip(values) {
                        agg_rows.push([label.clone(), m.clone(), t_s.clone(), v.to_string()]);
                    }
                    let excluded: Vec<usize> =
                        resolved.grid.n_values().iter().copied().filter(|n| !common.contains(n)).collect();
                    if !excluded.is_empty() {
                        warnings.push(format!("horizon {m} T_s {t_s}: n {excluded:?} excluded from the common grid"));
                    }
                }
                Err(e) => warnings.push(format!("horizon {m} T_s {t_s}: {e}")),
            }

            let source = match config.weight_source {
                WeightSource::Volatility => &vol_aggregate,
                WeightSource::Return => &return_aggregate,
            };
            match source {
                Ok((values, _)) => match cluster_entropy_weights(values, config.risk_profile, labels.clone()) {
                    Ok(wv) => {
                        weights.insert((entropy_method, h, w), wv);
                    }
                    Err(e) => warnings.push(format!("{} horizon {m} T_s {t_s}: {e}", entropy_method.as_str())),
                },
                Err(_) => warnings.push(format!("{} horizon {m} T_s {t_s}: omitted", entropy_method.as_str())),
            }
            if let Ok(u) = WeightVector::uniform(labels.clone()) {
                weights.insert((Method::Naive, h, w), u);
            }
        }

        match baseline(&results, n_assets, n_horizons, h, labels.clone()) {
            Ok(wv) => {
                for w in 0..resolved.windows.len() {
                    weights.insert((Method::MaxSharpe, h, w), wv.clone());
                }
            }
            Err(e) => warnings.push(format!("max_sharpe horizon {m}: omitted ({e})")),
        }
    }
    stages.mark("weights");

    for w in &warnings {
        warn!("{w}");
    }

    let out = &resolved.output_dir;
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut write = |name: &str, header: &[&str], rows: &mut dyn Iterator<Item = Vec<String>>| -> Result<(), PipelineError> {
        let path = out.join(name);
        write_csv(&path, header, rows)?;
        files.push(path);
        Ok(())
    };
    write(ENTROPY_CURVES_FILE, &["asset", "horizon", "T_s", "n", "tau", "S"], &mut curve_rows.into_iter().map(Vec::from))?;
    write(INDEX_FILE, &["asset", "horizon", "T_s", "n", "I_n"], &mut index_rows.into_iter().map(Vec::from))?;
    write(INDEX_AGGREGATED_FILE, &["asset", "horizon", "T_s", "I"], &mut agg_rows.into_iter().map(Vec::from))?;
    write(RETURN_INDEX_FILE, &["asset", "horizon", "n", "I_n"], &mut ret_index_rows.into_iter().map(Vec::from))?;
    write(RETURN_INDEX_AGGREGATED_FILE, &["asset", "horizon", "I"], &mut ret_agg_rows.into_iter().map(Vec::from))?;

    let t_label = |w: usize| seconds(resolved.windows[w].physical_ns());
    let m_label = |h: usize| resolved.horizons[h].months.to_string();
    let mut weight_rows = weights.iter().flat_map(|((method, h, w), wv)| {
        wv.iter()
            .map(|(asset, x)| vec![method.as_str().into(), m_label(*h), t_label(*w), asset.to_string(), x.to_string()])
            .collect::<Vec<_>>()
    });
    write(WEIGHTS_FILE, &["method", "horizon", "T_s", "asset", "weight"], &mut weight_rows)?;

    let uniform = WeightVector::uniform(labels.clone()).map_err(PipelineError::Output)?;
    let mut diag_rows = weights.iter().map(|((method, h, w), wv)| {
        let kl = kl_cross_entropy(wv, &uniform).map(|k| k.to_string()).unwrap_or_else(|_| "NaN".into());
        vec![method.as_str().into(), m_label(*h), t_label(*w), weight_entropy(wv).to_string(), kl]
    });
    write(DIAGNOSTICS_FILE, &["method", "horizon", "T_s", "weight_entropy", "kl_vs_uniform"], &mut diag_rows)?;
    stages.mark("write");

    let manifest_path = out.join(MANIFEST_FILE);
    let mut listed: Vec<String> = files.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect();
    listed.push(MANIFEST_FILE.into());
    let manifest = RunManifest::new(config, listed, warnings.clone(), config.record_timings.then(|| stages.stages.clone()));
    manifest.write(&manifest_path)?;
    files.push(manifest_path);

    Ok(RunOutcome { output_dir: out.clone(), files, warnings })
}

fn baseline(
    results: &[Result<HorizonResult, String>],
    n_assets: usize,
    n_horizons: usize,
    h: usize,
    labels: Vec<String>,
) -> Result<WeightVector<f64>, String> {
    let returns: Vec<&[f64]> = (0..n_assets)
        .map(|a| match &results[a * n_horizons + h] {
            Ok(r) => Ok(r.returns.as_slice()),
            Err(e) => Err(e.clone()),
        })
        .collect::<Result<_, _>>()?;
    let len = returns.iter().map(|r| r.len()).min().unwrap_or(0);
    let trimmed: Vec<&[f64]> = returns.iter().map(|r| &r[..len]).collect();
    let moments = MomentEstimates::from_returns(&trimmed).map_err(|e| e.to_string())?;
    max_sharpe_weights(&moments, labels).map_err(|e| e.to_string())
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &mut dyn Iterator<Item = Vec<String>>) -> Result<(), PipelineError> {
    let file = File::create(path)?;
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
    writer.write_record(header).map_err(crate::Error::from)?;
    for row in rows {
        writer.write_record(&row).map_err(crate::Error::from)?;
    }
    writer.flush()?;
    Ok(())
}
