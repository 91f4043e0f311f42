use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, TrialResult};
use crate::error::Result;
use crate::pipeline::DecoderMode;

const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `n` Bernoulli draws.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Aggregate for one `(K_a, M, mode)`. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub ka: usize,
    pub m: usize,
    pub mode: DecoderMode,
    pub trials: usize,
    pub pupe: f64,
    pub pupe_ci_lo: f64,
    pub pupe_ci_hi: f64,
    pub mean_decode_seconds: f64,
    pub mean_support_sum: f64,
    /// Mean SCLD decode time over mean baseline decode time at this point.
    pub runtime_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerical_failures: Option<usize>,
}

pub(super) fn aggregate(ka: usize, m: usize, modes: &[DecoderMode], trials: &[TrialResult]) -> Vec<PointReport> {
    let mut rows: Vec<PointReport> = modes
        .iter()
        .map(|&mode| {
            let outcomes: Vec<_> = trials.iter().filter_map(|t| t.mode(mode)).collect();
            let count = outcomes.len();
            let missed: usize = outcomes.iter().map(|o| o.missed).sum();
            let failures = outcomes.iter().filter(|o| o.failure.is_some()).count();
            let draws = count * ka;
            let (lo, hi) = wilson_interval(missed, draws);
            let mean = |f: &dyn Fn(&super::ModeOutcome) -> f64| {
                if count == 0 {
                    0.0
                } else {
                    outcomes.iter().map(|o| f(o)).sum::<f64>() / count as f64
                }
            };
            PointReport {
                ka,
                m,
                mode,
                trials: count,
                pupe: if draws == 0 { 0.0 } else { missed as f64 / draws as f64 },
                pupe_ci_lo: lo,
                pupe_ci_hi: hi,
                mean_decode_seconds: mean(&|o| o.decode_seconds),
                mean_support_sum: mean(&|o| o.support_sum() as f64),
                runtime_ratio: None,
                missed: Some(missed),
                numerical_failures: Some(failures),
            }
        })
        .collect();

    let time = |mode| rows.iter().find(|r| r.mode == mode).map(|r| r.mean_decode_seconds);
    if let (Some(base), Some(scld)) = (time(DecoderMode::Baseline), time(DecoderMode::Scld)) {
        let ratio = if base > 0.0 { Some(scld / base) } else { None };
        rows.iter_mut().for_each(|r| r.runtime_ratio = ratio);
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Derived per-symbol power.
    pub power: f64,
    pub points: Vec<PointReport>,
    pub wall_seconds: f64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    ka: usize,
    m: usize,
    mode: &'a str,
    trials: usize,
    pupe: f64,
    pupe_ci_lo: f64,
    pupe_ci_hi: f64,
    mean_decode_seconds: f64,
    mean_support_sum: f64,
    runtime_ratio: Option<f64>,
}

impl ExperimentReport {
    pub fn point(&self, ka: usize, m: usize, mode: DecoderMode) -> Option<&PointReport> {
        self.points.iter().find(|p| p.ka == ka && p.m == m && p.mode == mode)
    }

    /// Copy with every wall-clock derived field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_seconds = 0.0;
        for p in &mut r.points {
            p.mean_decode_seconds = 0.0;
            p.runtime_ratio = None;
        }
        r
    }

    pub fn numerical_failure_rate(&self) -> f64 {
        let decodes: usize = self.points.iter().map(|p| p.trials).sum();
        let failures: usize = self.points.iter().filter_map(|p| p.numerical_failures).sum();
        if decodes == 0 {
            0.0
        } else {
            failures as f64 / decodes as f64
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(CsvRow {
                ka: p.ka,
                m: p.m,
                mode: p.mode.name(),
                trials: p.trials,
                pupe: p.pupe,
                pupe_ci_lo: p.pupe_ci_lo,
                pupe_ci_hi: p.pupe_ci_hi,
                mean_decode_seconds: p.mean_decode_seconds,
                mean_support_sum: p.mean_support_sum,
                runtime_ratio: p.runtime_ratio,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `report.json` and `report.csv` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join("report.json");
        let csv = dir.join("report.csv");
        std::fs::write(&json, self.to_json()?)?;
        std::fs::write(&csv, self.to_csv()?)?;
        Ok((json, csv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ModeOutcome;

    #[test]
    fn wilson_zero_and_full() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100);
        assert!(lo > 0.95 && hi == 1.0);
    }

    #[test]
    fn wilson_reference_value() {
        // 10/100: p = 0.1, interval (0.0552, 0.1744).
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.05522854).abs() < 1e-6, "{lo}");
        assert!((hi - 0.17436566).abs() < 1e-6, "{hi}");
    }

    fn trial(t: usize, base: (usize, f64), scld: (usize, f64)) -> TrialResult {
        let outcome = |mode, (missed, secs)| ModeOutcome {
            mode,
            missed,
            recovered: 0,
            failure: None,
            decode_seconds: secs,
            support_sizes: vec![10, 5],
            pattern_counts: vec![1, 1],
        };
        TrialResult {
            trial: t,
            active_users: 4,
            antennas: 8,
            observation_fingerprint: 0,
            modes: vec![outcome(DecoderMode::Baseline, base), outcome(DecoderMode::Scld, scld)],
        }
    }

    #[test]
    fn aggregation_and_csv() {
        let modes = [DecoderMode::Baseline, DecoderMode::Scld];
        let rows = aggregate(4, 8, &modes, &[trial(0, (1, 2.0), (0, 0.5)), trial(1, (2, 4.0), (1, 1.5))]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].pupe, 3.0 / 8.0);
        assert_eq!(rows[1].pupe, 1.0 / 8.0);
        assert_eq!(rows[0].mean_support_sum, 15.0);
        assert_eq!(rows[0].runtime_ratio, Some(1.0 / 3.0));

        let report = ExperimentReport { config: ExperimentConfig::default(), power: 0.03, points: rows, wall_seconds: 1.0 };
        let csv = report.to_csv().unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "ka,m,mode,trials,pupe,pupe_ci_lo,pupe_ci_hi,mean_decode_seconds,mean_support_sum,runtime_ratio"
        );
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().starts_with("4,8,scld,2,0.125,"));
    }
}
