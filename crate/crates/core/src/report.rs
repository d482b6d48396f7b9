//! Result records for single computed quantities.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::Estimate;

/// CSV header shared by every result export.
pub const CSV_COLUMNS: [&str; 9] = [
    "quantity",
    "body",
    "indices",
    "permutation",
    "mean",
    "std_error",
    "samples",
    "seed",
    "wall_time_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub quantity: String,
    pub body: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub wall_time_ms: f64,
    /// Deterministic right-hand side for inequality quantities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

fn join(v: &Option<Vec<usize>>) -> String {
    v.as_ref()
        .map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
        .unwrap_or_default()
}

impl ResultRecord {
    pub fn new(quantity: impl Into<String>, body: serde_json::Value, est: &Estimate, wall_time_ms: f64) -> Self {
        ResultRecord {
            quantity: quantity.into(),
            body,
            indices: None,
            permutation: None,
            mean: est.mean,
            std_error: est.std_error,
            samples: est.samples,
            seed: est.seed,
            wall_time_ms,
            bound: None,
        }
    }

    pub fn with_indices(mut self, indices: &[usize]) -> Self {
        self.indices = Some(indices.to_vec());
        self
    }

    pub fn with_permutation(mut self, values: &[usize]) -> Self {
        self.permutation = Some(values.to_vec());
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn csv_row(&self) -> [String; 9] {
        [
            self.quantity.clone(),
            self.body.to_string(),
            join(&self.indices),
            join(&self.permutation),
            format!("{:e}", self.mean),
            format!("{:e}", self.std_error),
            self.samples.to_string(),
            self.seed.to_string(),
            format!("{:.3}", self.wall_time_ms),
        ]
    }

    /// One-line human summary; never prints a value without its SE and seed.
    pub fn text(&self) -> String {
        let mut label = self.quantity.clone();
        if let Some(i) = &self.indices {
            label.push_str(&format!(" ({})", join(&Some(i.clone()))));
        }
        if let Some(p) = &self.permutation {
            label.push_str(&format!(" ω=({})", join(&Some(p.clone()))));
        }
        let mut line = format!(
            "{label}: {:.8} ± {:.2e} (samples {}, seed {}, {:.0} ms)",
            self.mean, self.std_error, self.samples, self.seed, self.wall_time_ms
        );
        if let Some(b) = self.bound {
            line.push_str(&format!("\nbound: {b:.8} (exact), ratio {:.6} ± {:.2e}", self.mean / b, self.std_error / b));
        }
        line
    }
}

pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(records: &[ResultRecord]) -> Result<String> {
    Ok(if records.len() == 1 {
        serde_json::to_string_pretty(&records[0])?
    } else {
        serde_json::to_string_pretty(records)?
    })
}
