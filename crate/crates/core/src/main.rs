use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use syncenergy::analysis::Estimator;
use syncenergy::harness::bundled::{self, Kind};
use syncenergy::harness::{
    run_scenario, run_sweep, verify_identity, write_sweep_table, HarnessError, ScenarioConfig, SweepConfig,
};

#[derive(Parser)]
#[command(name = "syncenergy", version, about = "Synchronization energy scenarios: simulate, analyse, classify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Directory for CSV and summary files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Override the grid step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Override the frequency estimator.
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    /// Write per-scenario time-series CSVs.
    #[arg(long, overrides_with = "no_emit_series")]
    emit_series: bool,
    /// Skip per-scenario time-series CSVs.
    #[arg(long)]
    no_emit_series: bool,
    /// Reserved; every current scenario is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn emit(&self, default: bool) -> bool {
        if self.emit_series {
            true
        } else if self.no_emit_series {
            false
        } else {
            default
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EstimatorArg {
    Pll,
    Fd,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Pll => Estimator::Pll,
            EstimatorArg::Fd => Estimator::Fd,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (a file path or a bundled name).
    Run {
        config: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a parameter sweep and write its summary table.
    Sweep {
        config: String,
        #[command(flatten)]
        common: Common,
    },
    /// Compare both energy routes at dt and dt/2.
    Verify {
        config: String,
        #[command(flatten)]
        common: Common,
    },
    /// Bundled scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenariosAction,
    },
}

#[derive(Subcommand)]
enum ScenariosAction {
    /// List bundled scenarios and sweeps.
    List,
}

fn load_scenario(spec: &str, common: &Common) -> Result<ScenarioConfig, HarnessError> {
    let path = Path::new(spec);
    let mut c = if path.exists() {
        ScenarioConfig::load(path)?
    } else {
        bundled::scenario(spec)?
    };
    if let Some(dt) = common.dt {
        c = c.with_dt(dt)?;
    }
    if let Some(e) = common.estimator {
        c = c.with_estimator(e.into());
    }
    Ok(c)
}

fn load_sweep(spec: &str) -> Result<SweepConfig, HarnessError> {
    let path = Path::new(spec);
    if path.exists() {
        SweepConfig::load(path)
    } else {
        bundled::sweep(spec)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn execute(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run { config, common } => {
            let c = load_scenario(&config, &common)?;
            let (_, s) = run_scenario(&c, &common.out_dir, common.emit(true))?;
            println!(
                "{}: {} peak_psi={:.6e} settle_time={} max_relative_gap={:.3e}{}",
                s.scenario,
                s.verdict,
                s.peak_psi,
                fmt_opt(s.settle_time),
                s.max_relative_gap,
                s.diverged_at.map_or_else(String::new, |t| format!(" diverged_at={t:.3}")),
            );
        }
        Command::Sweep { config, common } => {
            let sweep = load_sweep(&config)?;
            let rows = run_sweep(
                &sweep,
                &common.out_dir,
                common.emit(false),
                common.dt,
                common.estimator.map(Into::into),
            );
            let path = common.out_dir.join(sweep.summary_file());
            write_sweep_table(&sweep, &rows, &path)?;
            for r in &rows {
                match &r.outcome {
                    Ok(s) => println!(
                        "{} = {}: {} peak_psi={:.6e} settle_time={}",
                        sweep.axis,
                        r.value,
                        s.verdict,
                        s.peak_psi,
                        fmt_opt(s.settle_time)
                    ),
                    Err(e) => println!("{} = {}: error: {e}", sweep.axis, r.value),
                }
            }
            println!("wrote {}", path.display());
        }
        Command::Verify { config, common } => {
            let c = load_scenario(&config, &common)?;
            let r = verify_identity(&c)?;
            println!(
                "{}: max_relative_gap={:.3e} (dt={}) {:.3e} (dt={}) order={} bound={:e} {}",
                r.scenario,
                r.gap.max_rel,
                r.dt,
                r.gap_half_dt.max_rel,
                r.dt / 2.0,
                r.order.map_or_else(|| "-".to_string(), |o| format!("{o:.3}")),
                r.bound,
                if r.passed { "PASS" } else { "FAIL" }
            );
            if !r.passed {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Scenarios {
            action: ScenariosAction::List,
        } => {
            for b in bundled::BUNDLED {
                let kind = match b.kind {
                    Kind::Scenario => "scenario",
                    Kind::Sweep => "sweep",
                };
                println!("{:<22} {:<9} {}", b.name, kind, b.description());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
