use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Column order of `report.csv`.
pub const REPORT_COLUMNS: [&str; 8] = [
    "algo",
    "noise_kind",
    "noise_level",
    "sigma",
    "seed",
    "kendall_tau",
    "upset_fraction",
    "wall_time_ms",
];

/// One (algorithm, cell, seed) run. Metrics are `None` when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub algo: String,
    pub noise_kind: String,
    pub noise_level: f64,
    pub sigma: f64,
    pub seed: u64,
    pub kendall_tau: Option<f64>,
    pub upset_fraction: Option<f64>,
    pub wall_time_ms: Option<f64>,
    /// Hyperparameters chosen for this run, if any were tuned.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lengthscale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation, 0 for a single value.
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Summary {
            mean,
            std,
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub algo: String,
    pub noise_kind: String,
    pub noise_level: f64,
    pub sigma: f64,
    pub kendall_tau: Option<Summary>,
    pub upset_fraction: Option<Summary>,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<ExperimentRecord>,
    pub aggregates: Vec<Aggregate>,
}

fn record_key(r: &ExperimentRecord) -> (String, String, u64, u64, u64) {
    (
        r.algo.clone(),
        r.noise_kind.clone(),
        r.noise_level.to_bits(),
        r.sigma.to_bits(),
        r.seed,
    )
}

impl ExperimentReport {
    /// Sorts records by key and computes per-cell aggregates.
    pub fn from_records(mut records: Vec<ExperimentRecord>) -> Self {
        records.sort_by(|a, b| {
            a.algo
                .cmp(&b.algo)
                .then_with(|| a.noise_kind.cmp(&b.noise_kind))
                .then_with(|| a.noise_level.total_cmp(&b.noise_level))
                .then_with(|| a.sigma.total_cmp(&b.sigma))
                .then_with(|| a.seed.cmp(&b.seed))
        });
        let mut cells: BTreeMap<(String, String, u64, u64), Vec<&ExperimentRecord>> = BTreeMap::new();
        let mut order = Vec::new();
        for r in &records {
            let (a, k, l, s, _) = record_key(r);
            let key = (a, k, l, s);
            if !cells.contains_key(&key) {
                order.push(key.clone());
            }
            cells.entry(key).or_default().push(r);
        }
        let aggregates = order
            .into_iter()
            .map(|key| {
                let rs = &cells[&key];
                let taus: Vec<f64> = rs.iter().filter_map(|r| r.kendall_tau).collect();
                let ufs: Vec<f64> = rs.iter().filter_map(|r| r.upset_fraction).collect();
                Aggregate {
                    algo: rs[0].algo.clone(),
                    noise_kind: rs[0].noise_kind.clone(),
                    noise_level: rs[0].noise_level,
                    sigma: rs[0].sigma,
                    kendall_tau: Summary::of(&taus),
                    upset_fraction: Summary::of(&ufs),
                    failed: rs.iter().filter(|r| r.error.is_some()).count(),
                }
            })
            .collect();
        ExperimentReport { records, aggregates }
    }

    /// Aggregate for one algorithm at one noise level and σ.
    pub fn aggregate(&self, algo: &str, noise_level: f64, sigma: f64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.algo == algo && a.noise_level == noise_level && a.sigma == sigma)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(REPORT_COLUMNS)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            out.write_record([
                r.algo.clone(),
                r.noise_kind.clone(),
                r.noise_level.to_string(),
                r.sigma.to_string(),
                r.seed.to_string(),
                opt(r.kendall_tau),
                opt(r.upset_fraction),
                opt(r.wall_time_ms),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join("report.csv"))?)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(dir.join("report.json"), json)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(algo: &str, seed: u64, tau: Option<f64>) -> ExperimentRecord {
        ExperimentRecord {
            algo: algo.into(),
            noise_kind: "flip".into(),
            noise_level: 0.1,
            sigma: 0.0,
            seed,
            kendall_tau: tau,
            upset_fraction: tau.map(|t| 1.0 - t),
            wall_time_ms: None,
            lambda: None,
            lengthscale: None,
            error: if tau.is_none() { Some("failed".into()) } else { None },
        }
    }

    #[test]
    fn aggregates_and_csv() {
        let report = ExperimentReport::from_records(vec![
            rec("svd", 1, Some(0.5)),
            rec("svd", 0, Some(0.7)),
            rec("serial", 0, None),
        ]);
        assert_eq!(report.records[0].algo, "serial");
        assert_eq!(report.records[1].seed, 0);
        let svd = report.aggregate("svd", 0.1, 0.0).unwrap();
        let tau = svd.kendall_tau.unwrap();
        assert!((tau.mean - 0.6).abs() < 1e-12);
        assert!((tau.std - 0.02f64.sqrt()).abs() < 1e-12);
        let serial = report.aggregate("serial", 0.1, 0.0).unwrap();
        assert_eq!(serial.failed, 1);
        assert!(serial.kendall_tau.is_none());

        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "serial,flip,0.1,0,0,,,");
        assert_eq!(text.lines().count(), 4);
    }
}
