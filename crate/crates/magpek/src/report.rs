//! Machine-readable experiment reports: a JSON document per run plus CSV
//! tables for anything plottable. Every report embeds the config hash,
//! seed, grid parameters and tool version so a result can be traced back
//! to the exact invocation. Files are written atomically (temp + rename)
//! so a crashed run never leaves a truncated report behind.

use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::Result;

/// Common header stamped into every JSON report.
pub fn envelope(cfg: &ExperimentConfig) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "grid": { "n": cfg.grid.n(), "h": cfg.grid.h() },
    })
}

/// Merge experiment-specific payload into the envelope.
pub fn with_payload(cfg: &ExperimentConfig, payload: Value) -> Value {
    let mut doc = envelope(cfg);
    if let (Value::Object(doc), Value::Object(extra)) = (&mut doc, payload) {
        for (k, v) in extra {
            doc.insert(k, v);
        }
    }
    doc
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json(path: &Path, doc: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc).expect("report serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// CSV with a header row; every row must match the header arity.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_carries_provenance() {
        let cfg = ExperimentConfig::parse("seed = 9\ngrid.n = 16\ngrid.h = 0.5\n").unwrap();
        let doc = with_payload(&cfg, json!({"answer": 42}));
        assert_eq!(doc["seed"], 9);
        assert_eq!(doc["grid"]["n"][0], 16);
        assert_eq!(doc["answer"], 42);
        assert_eq!(doc["config_hash"], Value::String(cfg.hash.clone()));
        assert!(doc["version"].as_str().unwrap().contains('.'));
    }

    #[test]
    fn atomic_writers_round_trip() {
        let dir = std::env::temp_dir().join(format!("magpek-report-{}", std::process::id()));
        let jpath = dir.join("report.json");
        write_json(&jpath, &json!({"x": 1})).unwrap();
        let back: Value = serde_json::from_str(&std::fs::read_to_string(&jpath).unwrap()).unwrap();
        assert_eq!(back["x"], 1);
        let cpath = dir.join("table.csv");
        write_csv(&cpath, &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        let text = std::fs::read_to_string(&cpath).unwrap();
        assert_eq!(text, "a,b\n1,2\n");
        assert!(!jpath.with_extension("tmp").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
