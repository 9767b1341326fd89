use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SystemConfig};
use super::HarnessError;
use crate::analysis::{analyze, Analysis, Estimator};
use crate::signal::{ParkSeries, TimeGrid};
use crate::sim::{smib_simulate_capped, synthetic_signal, SimResult};
use crate::sync::{classify_sync, SyncStatus, SyncVerdict};

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    /// `None` for synthetic systems.
    pub sim: Option<SimResult>,
    pub v: ParkSeries,
    pub i: ParkSeries,
    pub analysis: Analysis,
    pub verdict: SyncVerdict,
}

/// One scenario's headline numbers, written as JSON next to the series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub verdict: SyncStatus,
    pub peak_psi: f64,
    pub settle_time: Option<f64>,
    pub tail_mean_psi: f64,
    /// Largest interior `|psi_cf - psi_numeric|` relative to the largest
    /// interior `|psi_numeric|`.
    pub max_relative_gap: f64,
    pub max_abs_gap: f64,
    pub diverged: bool,
    pub diverged_at: Option<f64>,
    pub samples: usize,
    pub dt: f64,
    pub estimator: Estimator,
    pub fd_order: usize,
}

impl ScenarioRun {
    pub fn summary(&self) -> Summary {
        let gap = self.analysis.formulation_gap();
        let diverged_at = self.sim.as_ref().and_then(|s| s.diverged_at);
        Summary {
            scenario: self.config.name.clone(),
            verdict: self.verdict.status,
            peak_psi: self.verdict.peak_psi,
            settle_time: self.verdict.settle_time,
            tail_mean_psi: self.verdict.tail_mean_psi,
            max_relative_gap: gap.max_rel,
            max_abs_gap: gap.max_abs,
            diverged: diverged_at.is_some(),
            diverged_at,
            samples: self.analysis.grid.len(),
            dt: self.analysis.grid.dt(),
            estimator: self.config.analysis.estimator,
            fd_order: self.config.analysis.fd_order,
        }
    }
}

/// Segment starts implied by the fault schedule on a grid of `n` samples.
pub fn fault_breaks(config: &ScenarioConfig, grid: &TimeGrid) -> Vec<usize> {
    let Some(f) = config.fault else {
        return Vec::new();
    };
    [f.t_apply, f.t_clear]
        .into_iter()
        .map(|t| ((t - grid.t0()) / grid.dt()).round() as usize)
        .filter(|&b| b > 0 && b < grid.len())
        .collect()
}

pub fn simulate_and_analyze(config: &ScenarioConfig) -> Result<ScenarioRun, HarnessError> {
    config.validate()?;
    let grid = config.time_grid()?;
    let (sim, v, i, breaks) = match &config.system {
        SystemConfig::Smib(c) => {
            let r = smib_simulate_capped(&c.params(), config.fault.as_ref(), &grid, c.delta_cap())?;
            let (v, i, b) = (r.v_bus.clone(), r.i_inj.clone(), r.breaks.clone());
            (Some(r), v, i, b)
        }
        SystemConfig::Synthetic(spec) => {
            let (v, i) = synthetic_signal(spec, &grid)?;
            (None, v, i, Vec::new())
        }
    };
    let analysis = analyze(&v, &i, &breaks, &config.options())?;
    let verdict = classify_sync(&analysis.se, &config.policy());
    Ok(ScenarioRun {
        config: config.clone(),
        sim,
        v,
        i,
        analysis,
        verdict,
    })
}

/// Simulates, analyses and classifies one scenario, then writes the summary
/// JSON and (optionally) the series CSV into `out_dir`.
pub fn run_scenario(
    config: &ScenarioConfig,
    out_dir: &Path,
    emit_series: bool,
) -> Result<(ScenarioRun, Summary), HarnessError> {
    let run = simulate_and_analyze(config)?;
    let summary = run.summary();
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir.display(), e))?;
    if emit_series {
        let path = out_dir.join(config.series_file());
        write_series(&run, &path)?;
    }
    let path = out_dir.join(config.summary_file());
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| HarnessError::io(path.display(), e))?;
    Ok((run, summary))
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn column(run: &ScenarioRun, name: &str, k: usize) -> f64 {
    let a = &run.analysis;
    let nan = f64::NAN;
    match name {
        "t" => a.grid.time(k),
        "delta" => run.sim.as_ref().map_or(nan, |s| s.delta[k]),
        "omega_pu" => run.sim.as_ref().map_or(nan, |s| s.omega_pu[k]),
        "v_d" => run.v.d[k],
        "v_q" => run.v.q[k],
        "i_d" => run.i.d[k],
        "i_q" => run.i.q[k],
        "p" => a.s.d[k],
        "q" => a.s.q[k],
        "rho_v" => a.cf_v.rho[k],
        "omega_v" => a.cf_v.omega[k],
        "rho_i" => a.cf_i.rho[k],
        "omega_i" => a.cf_i.omega[k],
        "psi_cf" => a.se.psi[k],
        "psi_numeric" => a.psi_numeric[k],
        "psi_normalized" => a.normalized[k].unwrap_or(nan),
        "freq_term" => a.se.freq_term[k],
        "var_term" => a.se.var_term[k],
        _ => nan,
    }
}

/// Writes the selected columns with shortest round-trip float formatting.
/// Invalid samples are written as `NaN`.
pub fn write_series(run: &ScenarioRun, path: &Path) -> Result<(), HarnessError> {
    let columns = run.config.columns();
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path.display(), e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(&columns)?;
    for k in 0..run.analysis.grid.len() {
        w.write_record(columns.iter().map(|c| fmt(column(run, c, k))))?;
    }
    let mut inner = w.into_inner().map_err(|e| HarnessError::io(path.display(), e.into_error()))?;
    inner.flush().map_err(|e| HarnessError::io(path.display(), e))?;
    Ok(())
}

/// Re-runs the analysis stage on the voltage and current columns of a
/// series CSV written for `config`, skipping simulation.
pub fn reanalyze(config: &ScenarioConfig, path: &Path) -> Result<Analysis, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let idx = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Config {
                path: path.display().to_string(),
                message: format!("missing column `{name}`"),
            })
    };
    let cols = [idx("v_d")?, idx("v_q")?, idx("i_d")?, idx("i_q")?];
    let mut data: [Vec<f64>; 4] = Default::default();
    for rec in r.records() {
        let rec = rec?;
        for (c, out) in cols.iter().zip(data.iter_mut()) {
            let x: f64 = rec[*c].parse().map_err(|_| HarnessError::Config {
                path: path.display().to_string(),
                message: format!("bad number `{}`", &rec[*c]),
            })?;
            out.push(x);
        }
    }
    let grid = TimeGrid::new(0.0, config.grid.dt, data[0].len()).map_err(crate::error::ParamError::from)?;
    let [vd, vq, id, iq] = data;
    let v = ParkSeries::new(grid, vd, vq).map_err(crate::error::ParamError::from)?;
    let i = ParkSeries::new(grid, id, iq).map_err(crate::error::ParamError::from)?;
    Ok(analyze(&v, &i, &fault_breaks(config, &grid), &config.options())?)
}
