//! Experiment reports: full JSON plus aggregate and plot CSVs.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::config::ExperimentConfig;

pub type Stats = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Excluded,
}

/// One replication (or one oracle evaluation for the bias experiment).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replication: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub values: Stats,
}

impl Record {
    pub fn replication(n: usize, replication: usize, seed: u64, values: Stats) -> Self {
        Self {
            n: Some(n),
            replication: Some(replication),
            seed: Some(seed),
            status: RecordStatus::Ok,
            reason: None,
            values,
        }
    }

    pub fn excluded(n: usize, replication: usize, seed: u64, reason: String) -> Self {
        Self {
            n: Some(n),
            replication: Some(replication),
            seed: Some(seed),
            status: RecordStatus::Excluded,
            reason: Some(reason),
            values: Stats::new(),
        }
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

/// Statistics for one group of records: one sample size, or one labelled
/// setting such as a bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub stats: Stats,
}

impl Aggregate {
    pub fn for_n(n: usize, stats: Stats) -> Self {
        Self { n: Some(n), label: None, stats }
    }

    pub fn labelled(label: impl Into<String>, stats: Stats) -> Self {
        Self {
            n: None,
            label: Some(label.into()),
            stats,
        }
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.stats.get(key).copied()
    }

    pub fn key(&self) -> String {
        match (&self.n, &self.label) {
            (Some(n), _) => n.to_string(),
            (None, Some(l)) => l.clone(),
            (None, None) => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub aggregates: Vec<Aggregate>,
    pub summary: Stats,
    pub notes: Vec<String>,
}

impl SimulationReport {
    pub fn new(experiment: impl Into<String>, config: &ExperimentConfig) -> Self {
        Self {
            experiment: experiment.into(),
            config: config.clone(),
            records: Vec::new(),
            aggregates: Vec::new(),
            summary: Stats::new(),
            notes: Vec::new(),
        }
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.summary.get(key).copied()
    }

    pub fn aggregate(&self, n: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == Some(n))
    }

    pub fn excluded(&self) -> usize {
        self.records.iter().filter(|r| r.status == RecordStatus::Excluded).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Columns `experiment,n,stat,value`. Labelled aggregates put their
    /// label in the `n` column; summary rows use `all`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "experiment,n,stat,value")?;
        for agg in &self.aggregates {
            for (k, v) in &agg.stats {
                writeln!(out, "{},{},{},{}", self.experiment, agg.key(), k, v)?;
            }
        }
        for (k, v) in &self.summary {
            writeln!(out, "{},all,{},{}", self.experiment, k, v)?;
        }
        Ok(())
    }

    /// `log_n,log_median` pairs for the aggregates carrying `median`.
    pub fn write_plot_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "log_n,log_median")?;
        for agg in &self.aggregates {
            if let (Some(n), Some(m)) = (agg.n, agg.stat("median")) {
                writeln!(out, "{},{}", (n as f64).ln(), m.ln())?;
            }
        }
        Ok(())
    }
}

/// Builds a [`Stats`] map from `(key, value)` pairs.
pub fn stats<const N: usize>(pairs: [(&str, f64); N]) -> Stats {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
