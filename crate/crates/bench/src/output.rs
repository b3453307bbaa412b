//! Result records: one JSON summary per run plus CSV tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// A CSV table written next to the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = T>, T: ToString>(&mut self, row: I) {
        let row: Vec<String> = row.into_iter().map(|v| v.to_string()).collect();
        debug_assert!(self.header.is_empty() || row.len() == self.header.len());
        self.rows.push(row);
    }

    /// Row-major grid without a header.
    pub fn grid(name: &str, values: &[f64], width: usize) -> Self {
        let mut t = Self::new(name, &[]);
        for row in values.chunks(width.max(1)) {
            t.push(row.iter());
        }
        t
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::WriterBuilder::new().flexible(self.header.is_empty()).from_writer(Vec::new());
        if !self.header.is_empty() {
            w.write_record(&self.header)?;
        }
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Everything a run reports. `metrics` is the reproducible part; timing is kept apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, f64>,
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub tables: Vec<Table>,
    /// Extra files (name, contents), e.g. trained networks as JSON.
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
}

impl RunRecord {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment.name().to_string(),
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
            metrics: BTreeMap::new(),
            runtime_seconds: 0.0,
            tables: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    /// `metric,value,seed,config_hash` rows.
    pub fn metrics_table(&self) -> Table {
        let mut t = Table::new("metrics", &["metric", "value", "seed", "config_hash"]);
        for (k, v) in &self.metrics {
            t.push([k.clone(), v.to_string(), self.seed.to_string(), self.config_hash.clone()]);
        }
        t
    }

    /// Writes `summary.json`, `metrics.csv`, every table and artifact into `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        let mut put = |name: &str, text: String| -> anyhow::Result<()> {
            let path = dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
            Ok(())
        };
        put("summary.json", serde_json::to_string_pretty(self)?)?;
        put("metrics.csv", self.metrics_table().to_csv()?)?;
        for t in &self.tables {
            put(&format!("{}.csv", t.name), t.to_csv()?)?;
        }
        for (name, text) in &self.artifacts {
            put(name, text.clone())?;
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    #[test]
    fn tables_render_as_csv() {
        let mut t = Table::new("g", &["a", "b"]);
        t.push([1.5, 2.0]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.5,2\n");
        assert_eq!(Table::grid("m", &[1.0, 2.0, 3.0, 4.0], 2).to_csv().unwrap(), "1,2\n3,4\n");
    }

    #[test]
    fn record_embeds_config_and_hash() {
        let c = ExperimentConfig::new(ExperimentKind::Agent).with_seed(9);
        let mut r = RunRecord::new(&c);
        r.metric("x", 0.25);
        let json = serde_json::to_string(&r).unwrap();
        let back: RunRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.config, c);
        assert_eq!(back.config_hash, c.hash());
        assert_eq!(back.metrics["x"], 0.25);
        let csv = r.metrics_table().to_csv().unwrap();
        assert!(csv.ends_with(&format!("x,0.25,9,{}\n", c.hash())));
    }
}
