#![allow(dead_code)]

use std::path::Path;

use serde_json::{json, Value};

/// Config with synthetic i.i.d./long-memory assets on a 60 s grid.
pub fn small_config(out: &Path, labels: &[&str], horizons: &[u32], windows: &[f64]) -> Value {
    let assets: Vec<Value> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            json!({
                "label": l,
                "synthetic": {
                    "generator": {"kind": "arfima", "d": 0.1, "length": 131072, "seed": 9 + i as u64},
                    "scale": 0.001
                }
            })
        })
        .collect();
    json!({
        "assets": assets,
        "delta_s": 60,
        "n_grid": {"min_s": 300, "max_s": 1200, "step_s": 300},
        "volatility_windows_s": windows,
        "horizons": horizons,
        "output_dir": out,
    })
}

pub fn write_json(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// `(method, rows)` counts of a weights file.
pub fn rows_per_method(text: &str) -> std::collections::BTreeMap<String, usize> {
    let mut counts = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        *counts.entry(line.split(',').next().unwrap().to_string()).or_insert(0) += 1;
    }
    counts
}
