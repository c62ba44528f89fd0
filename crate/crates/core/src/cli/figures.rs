//! Plot-ready files derived from a finished run directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::pipeline::{write_csv, ENTROPY_CURVES_FILE, WEIGHTS_FILE};
use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// One `n,tau,S` file per `(asset, horizon, T)`.
    EntropyCurves,
    /// `method,T_s,M,asset,weight`.
    WeightsVsHorizon,
}

impl Figure {
    pub const ALL: [Figure; 2] = [Figure::EntropyCurves, Figure::WeightsVsHorizon];
}

impl FromStr for Figure {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entropy_curves" => Ok(Figure::EntropyCurves),
            "weights_vs_horizon" => Ok(Figure::WeightsVsHorizon),
            other => Err(PipelineError::Config(format!(
                "unknown figure `{other}` (expected entropy_curves or weights_vs_horizon)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub asset: String,
    pub horizon: String,
    pub t_s: String,
    pub n: String,
    pub tau: String,
    pub s: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub method: String,
    pub horizon: String,
    pub t_s: String,
    pub asset: String,
    pub weight: String,
}

/// Rows of a run, kept as the exact strings written by `analyze`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunResults {
    pub curves: Vec<CurveRow>,
    pub weights: Vec<WeightRow>,
}

impl RunResults {
    pub fn is_empty(&self) -> bool {
        self.curves.is_empty() && self.weights.is_empty()
    }
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
    let found = reader.headers().map_err(|e| PipelineError::Input(e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(PipelineError::Input(format!("{}: unexpected header", path.display())));
    }
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(String::from).collect())
                .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
        })
        .collect()
}

pub fn load_results(run_dir: &Path) -> Result<RunResults, PipelineError> {
    let curves_path = run_dir.join(ENTROPY_CURVES_FILE);
    let weights_path = run_dir.join(WEIGHTS_FILE);
    if !curves_path.is_file() || !weights_path.is_file() {
        return Err(PipelineError::Input(format!("{} is not a run directory", run_dir.display())));
    }
    let curves = read_rows(&curves_path, &["asset", "horizon", "T_s", "n", "tau", "S"])?
        .into_iter()
        .map(|mut r| CurveRow {
            s: r.pop().unwrap_or_default(),
            tau: r.pop().unwrap_or_default(),
            n: r.pop().unwrap_or_default(),
            t_s: r.pop().unwrap_or_default(),
            horizon: r.pop().unwrap_or_default(),
            asset: r.pop().unwrap_or_default(),
        })
        .collect();
    let weights = read_rows(&weights_path, &["method", "horizon", "T_s", "asset", "weight"])?
        .into_iter()
        .map(|mut r| WeightRow {
            weight: r.pop().unwrap_or_default(),
            asset: r.pop().unwrap_or_default(),
            t_s: r.pop().unwrap_or_default(),
            horizon: r.pop().unwrap_or_default(),
            method: r.pop().unwrap_or_default(),
        })
        .collect();
    Ok(RunResults { curves, weights })
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

/// Writes the files for `figure` under `out_dir`, returning their paths.
pub fn emit_figure_data(results: &RunResults, figure: Figure, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if results.is_empty() {
        return Err(PipelineError::Input("run has no results".into()));
    }
    fs::create_dir_all(out_dir)?;
    match figure {
        Figure::EntropyCurves => {
            let dir = out_dir.join("entropy_curves");
            fs::create_dir_all(&dir)?;
            // keep first-seen order of (asset, horizon, T)
            let mut order = Vec::new();
            let mut groups: BTreeMap<usize, Vec<Vec<String>>> = BTreeMap::new();
            let mut slot: BTreeMap<(String, String, String), usize> = BTreeMap::new();
            for row in &results.curves {
                let key = (row.asset.clone(), row.horizon.clone(), row.t_s.clone());
                let id = *slot.entry(key.clone()).or_insert_with(|| {
                    order.push(key);
                    order.len() - 1
                });
                groups.entry(id).or_default().push(vec![row.n.clone(), row.tau.clone(), row.s.clone()]);
            }
            let mut paths = Vec::new();
            for (id, rows) in groups {
                let (asset, horizon, t_s) = &order[id];
                let path = dir.join(format!("{}_M{}_T{}s.csv", file_safe(asset), file_safe(horizon), file_safe(t_s)));
                write_csv(&path, &["n", "tau", "S"], &mut rows.into_iter())?;
                paths.push(path);
            }
            Ok(paths)
        }
        Figure::WeightsVsHorizon => {
            let path = out_dir.join("weights_vs_horizon.csv");
            let mut rows = results.weights.iter().map(|r| {
                vec![r.method.clone(), r.t_s.clone(), r.horizon.clone(), r.asset.clone(), r.weight.clone()]
            });
            write_csv(&path, &["method", "T_s", "M", "asset", "weight"], &mut rows)?;
            Ok(vec![path])
        }
    }
}
