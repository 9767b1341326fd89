//! Scenario and sweep files compiled into the binary.

use super::config::{ScenarioConfig, SweepConfig};
use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Scenario,
    Sweep,
}

#[derive(Clone, Copy, Debug)]
pub struct Bundled {
    pub name: &'static str,
    pub kind: Kind,
    pub text: &'static str,
}

macro_rules! bundle {
    ($kind:ident, $name:literal) => {
        Bundled {
            name: $name,
            kind: Kind::$kind,
            text: include_str!(concat!("../../scenarios/", $name, ".toml")),
        }
    };
}

pub const BUNDLED: &[Bundled] = &[
    bundle!(Scenario, "smib_h5_d0"),
    bundle!(Scenario, "smib_h10_d0"),
    bundle!(Scenario, "smib_h5_d5"),
    bundle!(Scenario, "smib_h10_d5"),
    bundle!(Scenario, "smib_x1"),
    bundle!(Scenario, "smib_x3"),
    bundle!(Scenario, "smib_x4"),
    bundle!(Scenario, "constant_phasor"),
    bundle!(Scenario, "dual_frequency"),
    bundle!(Scenario, "frequency_drift"),
    bundle!(Scenario, "variance_cancelling"),
    bundle!(Scenario, "limit_cycle"),
    bundle!(Sweep, "sweep_inertia"),
    bundle!(Sweep, "sweep_damping"),
    bundle!(Sweep, "sweep_reactance"),
];

impl Bundled {
    /// First line of the leading comment block.
    pub fn description(&self) -> &'static str {
        self.text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .map(str::trim)
            .unwrap_or("")
    }
}

pub fn find(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

fn not_found(name: &str, kind: &str) -> HarnessError {
    HarnessError::Config {
        path: name.to_string(),
        message: format!("no bundled {kind} with this name"),
    }
}

pub fn scenario(name: &str) -> Result<ScenarioConfig, HarnessError> {
    match find(name) {
        Some(b) if b.kind == Kind::Scenario => ScenarioConfig::from_toml_str(b.name, b.text),
        _ => Err(not_found(name, "scenario")),
    }
}

pub fn sweep(name: &str) -> Result<SweepConfig, HarnessError> {
    match find(name) {
        Some(b) if b.kind == Kind::Sweep => SweepConfig::from_toml_str(b.name, b.text),
        _ => Err(not_found(name, "sweep")),
    }
}
