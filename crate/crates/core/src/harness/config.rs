//! Scenario and sweep files.
//!
//! A scenario is one TOML document with the tables `[system]`, `[fault]`
//! (optional), `[grid]`, `[analysis]` and `[output]`. A sweep file is a
//! scenario plus a `[sweep]` table naming one numeric field and the values
//! it takes. Unknown keys are rejected everywhere and every error carries
//! the dotted path of the offending field.

use std::f64::consts::PI;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::analysis::{AnalysisOptions, Estimator};
use crate::error::ParamError;
use crate::pll::PllParams;
use crate::signal::{Stencil, TimeGrid};
use crate::sim::{FaultSchedule, SmibParams, SyntheticSpec, DELTA_CAP};
use crate::sync::ClassifierPolicy;

/// Every column the series CSV can hold, in output order.
pub const COLUMNS: [&str; 18] = [
    "t",
    "delta",
    "omega_pu",
    "v_d",
    "v_q",
    "i_d",
    "i_q",
    "p",
    "q",
    "rho_v",
    "omega_v",
    "rho_i",
    "omega_i",
    "psi_cf",
    "psi_numeric",
    "psi_normalized",
    "freq_term",
    "var_term",
];

fn one() -> f64 {
    1.0
}

fn sixty() -> f64 {
    60.0
}

/// `[system]` with `kind = "smib"`. Reactances and powers in pu.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmibConfig {
    #[serde(rename = "H")]
    pub inertia: f64,
    #[serde(rename = "D")]
    pub damping: f64,
    pub x_gen: f64,
    pub x_line_prefault: f64,
    pub x_line_fault: f64,
    pub x_line_postfault: f64,
    /// Scales all three line reactances.
    #[serde(default = "one")]
    pub x_line_multiplier: f64,
    #[serde(rename = "E")]
    pub emf: f64,
    #[serde(rename = "V_inf")]
    pub v_inf: f64,
    #[serde(rename = "Pm")]
    pub p_mech: f64,
    /// Nominal frequency (Hz).
    #[serde(default = "sixty")]
    pub f_n: f64,
    /// Integration stops once `|delta|` exceeds this (rad).
    #[serde(default)]
    pub delta_cap: Option<f64>,
}

impl SmibConfig {
    pub fn params(&self) -> SmibParams {
        let m = self.x_line_multiplier;
        SmibParams {
            inertia: self.inertia,
            damping: self.damping,
            x_gen: self.x_gen,
            x_line_prefault: self.x_line_prefault * m,
            x_line_fault: self.x_line_fault * m,
            x_line_postfault: self.x_line_postfault * m,
            emf: self.emf,
            v_inf: self.v_inf,
            p_mech: self.p_mech,
            omega_n: 2.0 * PI * self.f_n,
        }
    }

    pub fn delta_cap(&self) -> f64 {
        self.delta_cap.unwrap_or(DELTA_CAP)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemConfig {
    Smib(SmibConfig),
    Synthetic(SyntheticSpec),
}

impl SystemConfig {
    /// Rotation speed of the synchronous frame (rad/s).
    pub fn omega_n(&self) -> f64 {
        match self {
            Self::Smib(c) => 2.0 * PI * c.f_n,
            Self::Synthetic(_) => 2.0 * PI * 60.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PllConfig {
    pub kp: f64,
    pub ki: f64,
}

impl Default for PllConfig {
    fn default() -> Self {
        let p = PllParams::default();
        Self { kp: p.kp, ki: p.ki }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub estimator: Estimator,
    /// Finite-difference order: 2, 4 or 6.
    pub fd_order: usize,
    /// Emit the `psi_normalized` column.
    pub normalize: bool,
    pub classifier: ClassifierPolicy,
    pub pll: PllConfig,
    /// Largest acceptable relative gap between the two energy routes.
    pub verify_bound: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Fd,
            fd_order: 2,
            normalize: true,
            classifier: ClassifierPolicy::default(),
            pll: PllConfig::default(),
            verify_bound: 1e-2,
        }
    }
}

/// Output file names are relative to the output directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub series: Option<String>,
    pub summary: Option<String>,
    pub columns: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    system: toml::Table,
    #[serde(default)]
    fault: Option<FaultSchedule>,
    grid: GridConfig,
    #[serde(default)]
    analysis: AnalysisConfig,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: SystemConfig,
    pub fault: Option<FaultSchedule>,
    pub grid: GridConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

fn config_err(path: impl Into<String>, message: impl ToString) -> HarnessError {
    HarnessError::Config {
        path: path.into(),
        message: message.to_string(),
    }
}

fn join(prefix: &str, inner: &str) -> String {
    match (prefix.is_empty(), inner.is_empty() || inner == ".") {
        (_, true) => prefix.to_string(),
        (true, false) => inner.to_string(),
        (false, false) => format!("{prefix}.{inner}"),
    }
}

fn deserialize_at<T: DeserializeOwned>(prefix: &str, value: toml::Value) -> Result<T, HarnessError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = join(prefix, &e.path().to_string());
        config_err(path, e.into_inner())
    })
}

fn param_err(section: &str, e: ParamError) -> HarnessError {
    match e {
        ParamError::OutOfRange { name, .. } => {
            let field = match name {
                "omega_n" => "f_n",
                other => other,
            };
            if field.contains('.') {
                config_err(field, e)
            } else {
                config_err(join(section, field), e)
            }
        }
        ParamError::NoEquilibrium(_) => config_err("system.Pm", e),
        ParamError::Misaligned(_) => config_err("fault", e),
        ParamError::Signal(_) => config_err("grid", e),
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            context: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&stem(path), &text)
    }

    pub fn from_toml_str(name: &str, text: &str) -> Result<Self, HarnessError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err("", e.message()))?;
        Self::from_table(name, table)
    }

    fn from_table(name: &str, table: toml::Table) -> Result<Self, HarnessError> {
        let raw: RawScenario = deserialize_at("", toml::Value::Table(table))?;
        let mut system = raw.system;
        let kind = match system.remove("kind") {
            Some(toml::Value::String(s)) => s,
            Some(_) => return Err(config_err("system.kind", "expected a string")),
            None => return Err(config_err("system.kind", "missing field `kind`")),
        };
        let system = match kind.as_str() {
            "smib" => SystemConfig::Smib(deserialize_at("system", toml::Value::Table(system))?),
            "synthetic" => SystemConfig::Synthetic(deserialize_at("system", toml::Value::Table(system))?),
            other => {
                return Err(config_err(
                    "system.kind",
                    format!("unknown kind `{other}`, expected `smib` or `synthetic`"),
                ))
            }
        };
        let config = Self {
            name: name.to_string(),
            system,
            fault: raw.fault,
            grid: raw.grid,
            analysis: raw.analysis,
            output: raw.output,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks every semantic constraint so that a validated scenario can
    /// only fail at run time through I/O.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let grid = self.time_grid()?;
        match &self.system {
            SystemConfig::Smib(c) => {
                if !(c.x_line_multiplier.is_finite() && c.x_line_multiplier > 0.0) {
                    return Err(config_err("system.x_line_multiplier", "must be positive and finite"));
                }
                if let Some(cap) = c.delta_cap {
                    if !(cap.is_finite() && cap > 0.0) {
                        return Err(config_err("system.delta_cap", "must be positive and finite"));
                    }
                }
                let p = c.params();
                p.validate().map_err(|e| param_err("system", e))?;
                p.equilibrium_angle().map_err(|e| param_err("system", e))?;
            }
            SystemConfig::Synthetic(spec) => {
                spec.validate().map_err(|e| param_err("system", e))?;
                if self.fault.is_some() {
                    return Err(config_err("fault", "synthetic systems take no fault schedule"));
                }
            }
        }
        if let Some(f) = &self.fault {
            f.validate().map_err(|e| param_err("fault", e))?;
            for (field, t) in [("fault.t_apply", f.t_apply), ("fault.t_clear", f.t_clear)] {
                let x = t / grid.dt();
                if t < 0.0 || (x - x.round()).abs() > 1e-6 {
                    return Err(config_err(field, "must be a non-negative multiple of grid.dt"));
                }
            }
        }
        let a = &self.analysis;
        if Stencil::from_order(a.fd_order).is_none() {
            return Err(config_err("analysis.fd_order", format!("must be 2, 4 or 6, got {}", a.fd_order)));
        }
        a.classifier.validate().map_err(|e| param_err("analysis.classifier", e))?;
        if let Some(t) = a.classifier.disturbance_end {
            if !t.is_finite() {
                return Err(config_err("analysis.classifier.disturbance_end", "must be finite"));
            }
        }
        self.pll_params().validate().map_err(|e| param_err("analysis.pll", e))?;
        if !(a.verify_bound.is_finite() && a.verify_bound > 0.0) {
            return Err(config_err("analysis.verify_bound", "must be positive and finite"));
        }
        if let Some(cols) = &self.output.columns {
            for (k, c) in cols.iter().enumerate() {
                if !COLUMNS.contains(&c.as_str()) {
                    return Err(config_err(format!("output.columns[{k}]"), format!("unknown column `{c}`")));
                }
            }
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid, HarnessError> {
        let g = &self.grid;
        if !(g.dt.is_finite() && g.dt > 0.0) {
            return Err(config_err("grid.dt", format!("must be positive and finite, got {}", g.dt)));
        }
        TimeGrid::spanning(0.0, g.t_end, g.dt).map_err(|e| config_err("grid.t_end", e))
    }

    pub fn stencil(&self) -> Stencil {
        Stencil::from_order(self.analysis.fd_order).unwrap_or_default()
    }

    pub fn pll_params(&self) -> PllParams {
        PllParams {
            kp: self.analysis.pll.kp,
            ki: self.analysis.pll.ki,
            omega_o: self.system.omega_n(),
            align_initial_phase: true,
        }
    }

    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            stencil: self.stencil(),
            estimator: self.analysis.estimator,
            pll: self.pll_params(),
        }
    }

    /// Classifier policy with the disturbance end defaulting to the fault
    /// clearing time.
    pub fn policy(&self) -> ClassifierPolicy {
        let mut p = self.analysis.classifier.clone();
        if p.disturbance_end.is_none() {
            p.disturbance_end = self.fault.map(|f| f.t_clear);
        }
        p
    }

    /// Selected columns in output order.
    pub fn columns(&self) -> Vec<&'static str> {
        COLUMNS
            .iter()
            .copied()
            .filter(|c| match &self.output.columns {
                Some(sel) => sel.iter().any(|s| s == c),
                None => true,
            })
            .filter(|c| self.analysis.normalize || *c != "psi_normalized")
            .collect()
    }

    pub fn series_file(&self) -> String {
        self.output.series.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }

    pub fn summary_file(&self) -> String {
        self.output.summary.clone().unwrap_or_else(|| format!("{}.summary.json", self.name))
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self, HarnessError> {
        self.grid.dt = dt;
        self.validate()?;
        Ok(self)
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.analysis.estimator = estimator;
        self
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PeakPsi,
    SettleTime,
    Verdict,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    axis: String,
    values: Vec<f64>,
    #[serde(default)]
    metrics: Option<Vec<Metric>>,
    #[serde(default)]
    summary: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub name: String,
    pub base: ScenarioConfig,
    base_table: toml::Table,
    /// Dotted path of the swept field, e.g. `system.H`.
    pub axis: String,
    pub values: Vec<f64>,
    pub metrics: Vec<Metric>,
    pub summary: Option<String>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            context: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&stem(path), &text)
    }

    pub fn from_toml_str(name: &str, text: &str) -> Result<Self, HarnessError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err("", e.message()))?;
        let section = table
            .remove("sweep")
            .ok_or_else(|| config_err("sweep", "missing table `sweep`"))?;
        let sweep: SweepSection = deserialize_at("sweep", section)?;
        let base = ScenarioConfig::from_table(name, table.clone())?;

        match lookup(&table, &sweep.axis) {
            Some(toml::Value::Float(_)) | Some(toml::Value::Integer(_)) => {}
            Some(_) => return Err(config_err("sweep.axis", format!("`{}` is not a numeric field", sweep.axis))),
            None => {
                return Err(config_err(
                    "sweep.axis",
                    format!("`{}` is not set in the base scenario", sweep.axis),
                ))
            }
        }
        if sweep.values.is_empty() {
            return Err(config_err("sweep.values", "must not be empty"));
        }
        if let Some(k) = sweep.values.iter().position(|v| !v.is_finite()) {
            return Err(config_err(format!("sweep.values[{k}]"), "must be finite"));
        }
        Ok(Self {
            name: name.to_string(),
            base,
            base_table: table,
            axis: sweep.axis,
            values: sweep.values,
            metrics: sweep
                .metrics
                .unwrap_or_else(|| vec![Metric::PeakPsi, Metric::SettleTime, Metric::Verdict]),
            summary: sweep.summary,
        })
    }

    /// The base scenario with the axis set to `values[index]`.
    pub fn scenario(&self, index: usize) -> Result<ScenarioConfig, HarnessError> {
        let mut table = self.base_table.clone();
        let slot = lookup_mut(&mut table, &self.axis).ok_or_else(|| config_err("sweep.axis", "not found"))?;
        *slot = toml::Value::Float(self.values[index]);
        ScenarioConfig::from_table(&format!("{}_{index}", self.name), table)
            .map_err(|e| config_err(format!("sweep.values[{index}]"), e))
    }

    pub fn summary_file(&self) -> String {
        self.summary.clone().unwrap_or_else(|| format!("{}.sweep.csv", self.name))
    }
}

fn lookup<'a>(table: &'a toml::Table, path: &str) -> Option<&'a toml::Value> {
    let mut parts = path.split('.');
    let mut value = table.get(parts.next()?)?;
    for p in parts {
        value = value.as_table()?.get(p)?;
    }
    Some(value)
}

fn lookup_mut<'a>(table: &'a mut toml::Table, path: &str) -> Option<&'a mut toml::Value> {
    let mut parts = path.split('.');
    let mut value = table.get_mut(parts.next()?)?;
    for p in parts {
        value = value.as_table_mut()?.get_mut(p)?;
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMIB: &str = r#"
[system]
kind = "smib"
H = 5.0
D = 5.0
x_gen = 0.2
x_line_prefault = 0.2
x_line_fault = 2.0
x_line_postfault = 0.2
E = 1.1
V_inf = 1.0
Pm = 1.0

[fault]
t_apply = 1.0
t_clear = 1.1

[grid]
t_end = 5.0
dt = 1e-3
"#;

    fn err_path(r: Result<ScenarioConfig, HarnessError>) -> String {
        match r {
            Err(HarnessError::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_smib_with_defaults() {
        let c = ScenarioConfig::from_toml_str("x", SMIB).unwrap();
        let SystemConfig::Smib(s) = &c.system else { panic!() };
        assert_eq!(s.x_line_multiplier, 1.0);
        assert_eq!(s.f_n, 60.0);
        assert_eq!(c.analysis.fd_order, 2);
        assert_eq!(c.policy().disturbance_end, Some(1.1));
        assert_eq!(c.columns().len(), COLUMNS.len());
        assert_eq!(c.series_file(), "x.csv");
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let text = SMIB.replace("dt = 1e-3", "dt = 1e-3\nstep = 2");
        assert_eq!(err_path(ScenarioConfig::from_toml_str("x", &text)), "grid.step");
        let text = format!("{SMIB}\n[analysis.classifier]\ntail = 1.0\n");
        let e = ScenarioConfig::from_toml_str("x", &text).unwrap_err().to_string();
        assert!(e.starts_with("analysis.classifier"), "{e}");
        assert!(e.contains("tail"), "{e}");
    }

    #[test]
    fn type_errors_name_the_field() {
        let text = SMIB.replace("H = 5.0", "H = \"five\"");
        assert_eq!(err_path(ScenarioConfig::from_toml_str("x", &text)), "system.H");
        let text = SMIB.replace("dt = 1e-3", "dt = \"small\"");
        assert_eq!(err_path(ScenarioConfig::from_toml_str("x", &text)), "grid.dt");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let cases = [
            (SMIB.replace("H = 5.0", "H = -1.0"), "system.H"),
            (SMIB.replace("Pm = 1.0", "Pm = 9.0"), "system.Pm"),
            (SMIB.replace("t_clear = 1.1", "t_clear = 1.1005"), "fault.t_clear"),
            (SMIB.replace("t_clear = 1.1", "t_clear = 0.5"), "fault.t_clear"),
            (SMIB.replace("dt = 1e-3", "dt = 0.0"), "grid.dt"),
            (format!("{SMIB}\n[analysis]\nfd_order = 3\n"), "analysis.fd_order"),
            (format!("{SMIB}\n[analysis.pll]\nkp = 0.0\n"), "analysis.pll.kp"),
            (format!("{SMIB}\n[output]\ncolumns = [\"t\", \"psi\"]\n"), "output.columns[1]"),
            (SMIB.replace("kind = \"smib\"", "kind = \"grid\""), "system.kind"),
        ];
        for (text, path) in cases {
            assert_eq!(err_path(ScenarioConfig::from_toml_str("x", &text)), path);
        }
    }

    #[test]
    fn parses_synthetic() {
        let text = r#"
[system]
kind = "synthetic"
template = "dual_frequency"
omega_v = 3.0
omega_i = 1.0
v_mag = 1.0
i_mag = 1.0

[grid]
t_end = 2.0
dt = 1e-3
"#;
        let c = ScenarioConfig::from_toml_str("d", text).unwrap();
        assert!(matches!(c.system, SystemConfig::Synthetic(SyntheticSpec::DualFrequency { .. })));
        let bad = text.replace("omega_i", "omega_x");
        let e = ScenarioConfig::from_toml_str("d", &bad).unwrap_err().to_string();
        assert!(e.starts_with("system") && e.contains("omega_x"), "{e}");
    }

    #[test]
    fn sweep_axis_must_be_numeric_and_present() {
        let ok = format!("{SMIB}\n[sweep]\naxis = \"system.H\"\nvalues = [5.0, 10.0]\n");
        let s = SweepConfig::from_toml_str("s", &ok).unwrap();
        let c = s.scenario(1).unwrap();
        let SystemConfig::Smib(p) = &c.system else { panic!() };
        assert_eq!(p.inertia, 10.0);
        assert_eq!(c.name, "s_1");

        let missing = format!("{SMIB}\n[sweep]\naxis = \"system.X\"\nvalues = [1.0]\n");
        assert!(SweepConfig::from_toml_str("s", &missing).is_err());
        let text_axis = format!("{SMIB}\n[sweep]\naxis = \"system.kind\"\nvalues = [1.0]\n");
        assert!(SweepConfig::from_toml_str("s", &text_axis).is_err());
        let bad_value = format!("{SMIB}\n[sweep]\naxis = \"system.H\"\nvalues = [-1.0]\n");
        let s = SweepConfig::from_toml_str("s", &bad_value).unwrap();
        assert!(s.scenario(0).is_err());
    }
}
