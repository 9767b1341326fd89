use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{Metric, SweepConfig};
use super::run::{run_scenario, Summary};
use super::HarnessError;
use crate::analysis::Estimator;

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub scenario: String,
    /// The scenario's summary, or the error that stopped it.
    pub outcome: Result<Summary, String>,
}

/// Runs every axis value concurrently. Rows come back in axis order and a
/// failing value is recorded in its row without stopping the others.
pub fn run_sweep(
    sweep: &SweepConfig,
    out_dir: &Path,
    emit_series: bool,
    dt: Option<f64>,
    estimator: Option<Estimator>,
) -> Vec<SweepRow> {
    (0..sweep.values.len())
        .into_par_iter()
        .map(|index| {
            let scenario = format!("{}_{index}", sweep.name);
            let outcome = sweep
                .scenario(index)
                .and_then(|c| match dt {
                    Some(dt) => c.with_dt(dt),
                    None => Ok(c),
                })
                .map(|c| match estimator {
                    Some(e) => c.with_estimator(e),
                    None => c,
                })
                .and_then(|c| run_scenario(&c, out_dir, emit_series))
                .map(|(_, s)| s)
                .map_err(|e| e.to_string());
            SweepRow {
                index,
                value: sweep.values[index],
                scenario,
                outcome,
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:?}"))
}

/// Writes one CSV row per axis value with the configured metrics.
pub fn write_sweep_table(sweep: &SweepConfig, rows: &[SweepRow], path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display(), e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["index".to_string(), sweep.axis.clone(), "scenario".to_string()];
    for m in &sweep.metrics {
        header.push(
            match m {
                Metric::PeakPsi => "peak_psi",
                Metric::SettleTime => "settle_time",
                Metric::Verdict => "verdict",
            }
            .to_string(),
        );
    }
    header.extend(["diverged".to_string(), "error".to_string()]);
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.index.to_string(), format!("{:?}", row.value), row.scenario.clone()];
        match &row.outcome {
            Ok(s) => {
                for m in &sweep.metrics {
                    rec.push(match m {
                        Metric::PeakPsi => format!("{:?}", s.peak_psi),
                        Metric::SettleTime => opt(s.settle_time),
                        Metric::Verdict => s.verdict.to_string(),
                    });
                }
                rec.push(s.diverged.to_string());
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(sweep.metrics.iter().map(|_| String::new()));
                rec.push(String::new());
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| HarnessError::io(path.display(), e))?;
    Ok(())
}
