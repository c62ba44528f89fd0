mod common;

use std::path::Path;
use std::process::Command;

use common::{rows_per_method, small_config, write_json};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cluster-entropy"))
}

fn analyze(config: &Path) -> std::process::Output {
    bin().arg("analyze").arg(config).output().unwrap()
}

#[test]
fn structural_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("config.json");
    write_json(&cfg, &small_config(&out, &["A", "B"], &[1, 2], &[180.0]));
    let o = analyze(&cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let weights = std::fs::read_to_string(out.join("weights.csv")).unwrap();
    assert!(weights.starts_with("method,horizon,T_s,asset,weight\n"));
    let counts = rows_per_method(&weights);
    assert_eq!(counts.get("cluster_entropy_high"), Some(&4));
    assert_eq!(counts.get("naive_1_over_N"), Some(&4));
    assert_eq!(counts.get("max_sharpe"), Some(&4));

    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("method,horizon,T_s,weight_entropy,kl_vs_uniform\n"));
    let curves = std::fs::read_to_string(out.join("entropy_curves.csv")).unwrap();
    assert!(curves.starts_with("asset,horizon,T_s,n,tau,S\n"));
    let index = std::fs::read_to_string(out.join("index.csv")).unwrap();
    assert!(index.starts_with("asset,horizon,T_s,n,I_n\n"));
    let agg = std::fs::read_to_string(out.join("index_aggregated.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 2 * 2);
}

#[test]
fn missing_input_exits_3_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut cfg = small_config(&out, &["A", "B"], &[1], &[180.0]);
    cfg["assets"][0] = serde_json::json!({"label": "A", "path": "does-not-exist.csv"});
    let path = dir.path().join("config.json");
    write_json(&path, &cfg);
    let o = analyze(&path);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.join("weights.csv").exists());
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut cfg = small_config(&out, &["A", "B"], &[1], &[180.0]);
    cfg["volatility_windows_s"] = serde_json::json!([170]);
    let path = dir.path().join("config.json");
    write_json(&path, &cfg);
    assert_eq!(analyze(&path).status.code(), Some(2));

    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(analyze(&path).status.code(), Some(2));

    let mut cfg = small_config(&out, &["A", "B"], &[13], &[180.0]);
    cfg["horizons"] = serde_json::json!([13]);
    write_json(&path, &cfg);
    assert_eq!(analyze(&path).status.code(), Some(2));
}

#[test]
fn starved_asset_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut cfg = small_config(&out, &["A", "B"], &[1], &[180.0]);
    cfg["min_clusters"] = serde_json::json!(100_000_000);
    let path = dir.path().join("config.json");
    write_json(&path, &cfg);
    let o = analyze(&path);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.join("weights.csv").exists());
}

#[test]
fn tick_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // two assets of irregular ticks over January 2018
    let start: i64 = 1_514_764_800_000_000_000;
    for (name, phase) in [("a.csv", 0.0f64), ("b.csv", 1.3)] {
        let mut text = String::from("timestamp_ns,price\n");
        let mut t = start;
        let mut k = 0u64;
        let end = start + 31 * 86_400 * 1_000_000_000;
        while t < end {
            let x = k as f64;
            let price = 100.0 * (1.0 + 0.01 * (x * 0.013 + phase).sin() + 0.004 * (x * 0.31).cos() + 0.002 * (x * 1.7 + phase).sin());
            text.push_str(&format!("{t},{price}\n"));
            t += 20_000_000_000 + ((k * 7919) % 50) as i64 * 1_000_000_000;
            k += 1;
        }
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    let cfg = serde_json::json!({
        "assets": [{"label": "A", "path": "a.csv"}, {"label": "B", "path": "b.csv"}],
        "delta_s": 60,
        "n_grid": {"min_s": 300, "max_s": 600, "step_s": 300},
        "volatility_windows_s": [180],
        "horizons": [1],
        "output_dir": "run",
        "min_clusters": 10
    });
    let path = dir.path().join("config.json");
    write_json(&path, &cfg);
    let o = analyze(&path);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let weights = std::fs::read_to_string(dir.path().join("run/weights.csv")).unwrap();
    assert_eq!(rows_per_method(&weights)["cluster_entropy_high"], 2);
    drop(out);
}

#[test]
fn malformed_tick_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "timestamp_ns,price\n0,1\nxx,2\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "timestamp_ns,price\n0,1\n").unwrap();
    let cfg = serde_json::json!({
        "assets": [{"label": "A", "path": "a.csv"}, {"label": "B", "path": "b.csv"}],
        "delta_s": 5,
        "output_dir": "run"
    });
    let path = dir.path().join("config.json");
    write_json(&path, &cfg);
    let o = analyze(&path);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn synth_emits_cache_format() {
    let o = bin()
        .args(["synth", r#"{"kind":"fbm","hurst":0.5,"length":8,"seed":3}"#, "--delta-ns", "500"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# kind=price delta_ns=500"));
    assert_eq!(lines.next(), Some("t_ns,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[1].starts_with("500,"));

    let series = cluster_entropy::series_io::read_series_csv::<f64, _>(text.as_bytes()).unwrap();
    assert_eq!(series.len(), 8);

    let bad = bin().args(["synth", r#"{"kind":"fbm","hurst":1.2,"length":8,"seed":3}"#]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn figures_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("config.json");
    write_json(&cfg, &small_config(&out, &["A", "B"], &[1, 2], &[180.0]));
    assert!(analyze(&cfg).status.success());

    let o = bin().arg("figures").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let weights = std::fs::read_to_string(out.join("figures/weights_vs_horizon.csv")).unwrap();
    assert!(weights.starts_with("method,T_s,M,asset,weight\n"));
    let curve = std::fs::read_to_string(out.join("figures/entropy_curves/A_M1_T180s.csv")).unwrap();
    assert!(curve.starts_with("n,tau,S\n"));

    let o = bin().arg("figures").arg(&out).args(["--figure", "fig3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let empty = tempfile::tempdir().unwrap();
    let o = bin().arg("figures").arg(empty.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}
