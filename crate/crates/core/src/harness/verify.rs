use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::run::simulate_and_analyze;
use super::HarnessError;
use crate::analysis::FormulationGap;

/// Absolute gap below which the two routes count as agreeing regardless of
/// the relative bound (both are then at rounding level).
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub dt: f64,
    pub gap: FormulationGap,
    pub gap_half_dt: FormulationGap,
    /// `log2` of the relative-gap ratio between `dt` and `dt/2`; `None`
    /// when either gap is at rounding level.
    pub order: Option<f64>,
    pub bound: f64,
    pub passed: bool,
}

/// Compares the complex-frequency and direct-TEO energy routes at the
/// configured step and at half of it.
pub fn verify_identity(config: &ScenarioConfig) -> Result<VerifyReport, HarnessError> {
    let dt = config.grid.dt;
    let gap = simulate_and_analyze(config)?.analysis.formulation_gap();
    let half = config.clone().with_dt(dt / 2.0)?;
    let gap_half_dt = simulate_and_analyze(&half)?.analysis.formulation_gap();
    let order = (gap.max_abs > ABS_FLOOR && gap_half_dt.max_abs > ABS_FLOOR)
        .then(|| (gap.max_rel / gap_half_dt.max_rel).log2());
    let bound = config.analysis.verify_bound;
    Ok(VerifyReport {
        scenario: config.name.clone(),
        dt,
        gap,
        gap_half_dt,
        order,
        bound,
        passed: gap.max_rel <= bound || gap.max_abs <= ABS_FLOOR,
    })
}
