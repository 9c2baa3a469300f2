use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One test accuracy of one configuration under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub config: String,
    pub seed: u64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub config: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single seed.
    pub std: Option<f64>,
}

/// Mean and sample standard deviation per configuration, in order of first
/// appearance.
pub fn aggregate(rows: &[MetricRow]) -> Vec<MetricSummary> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(c, _)| *c == r.config) {
            Some((_, v)) => v.push(r.test_acc),
            None => groups.push((r.config.clone(), vec![r.test_acc])),
        }
    }
    groups
        .into_iter()
        .map(|(config, v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let std = (n > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
            MetricSummary { config, n, mean, std }
        })
        .collect()
}

/// Columns `config,n,mean,std`; `std` is empty when absent.
pub fn write_summary_csv(path: &Path, summary: &[MetricSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["config", "n", "mean", "std"])?;
    for s in summary {
        let std = s.std.map(|v| format!("{:.4}", v)).unwrap_or_default();
        w.write_record([s.config.clone(), s.n.to_string(), format!("{:.4}", s.mean), std])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_json(path: &Path, summary: &[MetricSummary]) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
