use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub elapsed_ms: f64,
}

/// Run summary, written once as the last file of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageTiming>>,
}

impl RunManifest {
    pub fn new(config: &PipelineConfig, files: Vec<String>, warnings: Vec<String>, stages: Option<Vec<StageTiming>>) -> Self {
        let notes = vec![
            "kl_vs_uniform = -sum_i w_i ln(w_i / u_i): the negated Kullback-Leibler divergence from the 1/N weights (0 at uniform, negative elsewhere)".to_string(),
            "cluster_entropy_low normalizes inverse entropy indices; it is an extension for low-risk profiles".to_string(),
            format!(
                "entropy weights use the {:?} series; indices aggregated by {:?} over the n values usable for every asset",
                config.weight_source, config.aggregation
            ),
        ];
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            files,
            warnings,
            notes,
            stages,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(self).map_err(crate::Error::from)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
    }
}
