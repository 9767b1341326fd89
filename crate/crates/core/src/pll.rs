//! Synchronous-reference-frame PLL.
//!
//! The input Park vector is expressed in a frame rotating at `omega_o`.
//! The loop tracks the phase of the input relative to that frame:
//!
//! ```text
//! e         = Im(v e^{-j theta}) / max(|v|, EPS_MAG)   phase detector
//! d_omega   = kp e + ki integral(e)                     loop filter
//! theta'    = d_omega                                   oscillator
//! omega_hat = omega_o + d_omega
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ParamError, SignalError};
use crate::ode::rk4_step;
use crate::signal::{ParkSeries, TimeGrid, EPS_MAG};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PllParams {
    pub kp: f64,
    pub ki: f64,
    /// Rotation speed of the reference frame (rad/s).
    pub omega_o: f64,
    /// Start the oscillator at the phase of the first sample instead of 0.
    pub align_initial_phase: bool,
}

impl Default for PllParams {
    fn default() -> Self {
        Self {
            kp: 10.0,
            ki: 20.0,
            omega_o: 2.0 * std::f64::consts::PI * 60.0,
            align_initial_phase: false,
        }
    }
}

impl PllParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    requirement: "positive",
                    value,
                })
            }
        };
        positive("kp", self.kp)?;
        positive("ki", self.ki)?;
        if !self.omega_o.is_finite() {
            return Err(ParamError::OutOfRange {
                name: "omega_o",
                requirement: "finite",
                value: self.omega_o,
            });
        }
        Ok(())
    }

    /// Roots of the linearised closed loop `s^2 + kp s + ki`.
    pub fn closed_loop_poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.kp * self.kp - 4.0 * self.ki, 0.0).sqrt();
        [(-self.kp + disc) / 2.0, (-self.kp - disc) / 2.0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PllTrace {
    pub grid: TimeGrid,
    /// Estimated phase relative to the reference frame (rad, continuous).
    pub theta_hat: Vec<f64>,
    /// Estimated absolute frequency `omega_o + d_omega` (rad/s).
    pub omega_hat: Vec<f64>,
    omega_o: f64,
}

impl PllTrace {
    /// Frequency estimate relative to the reference frame.
    pub fn deviation(&self) -> Vec<f64> {
        self.omega_hat.iter().map(|w| w - self.omega_o).collect()
    }
}

fn detector(v: Complex64, theta: f64) -> Option<f64> {
    let mag = v.norm();
    (mag >= EPS_MAG).then(|| (v * Complex64::from_polar(1.0, -theta)).im / mag.max(EPS_MAG))
}

/// Runs the loop over `v` with the same fixed-step RK4 used by the
/// simulator. Between samples the input is linearly interpolated.
pub fn pll_run(v: &ParkSeries, params: &PllParams) -> Result<PllTrace, ParamError> {
    params.validate()?;
    let n = v.len();
    if n < 2 {
        return Err(SignalError::TooShort { need: 2, got: n }.into());
    }
    let dt = v.grid.dt();
    let (kp, ki) = (params.kp, params.ki);

    let theta0 = if params.align_initial_phase {
        let z = v.get(0);
        if z.norm() >= EPS_MAG {
            z.arg()
        } else {
            0.0
        }
    } else {
        0.0
    };
    // state: [theta, integral of e]
    let mut y = [theta0, 0.0];
    let mut held = 0.0;
    let mut theta_hat = Vec::with_capacity(n);
    let mut omega_hat = Vec::with_capacity(n);

    for k in 0..n {
        let e = detector(v.get(k), y[0]).unwrap_or(held);
        held = e;
        theta_hat.push(y[0]);
        omega_hat.push(params.omega_o + kp * e + ki * y[1]);
        if k + 1 == n {
            break;
        }
        let (a, b) = (v.get(k), v.get(k + 1));
        let t0 = v.grid.time(k);
        let hold = held;
        let rhs = |t: f64, s: &[f64; 2]| -> [f64; 2] {
            let frac = ((t - t0) / dt).clamp(0.0, 1.0);
            let z = a + (b - a) * frac;
            let e = detector(z, s[0]).unwrap_or(hold);
            [kp * e + ki * s[1], e]
        };
        y = rk4_step(rhs, t0, &y, dt);
    }
    Ok(PllTrace {
        grid: v.grid,
        theta_hat,
        omega_hat,
        omega_o: params.omega_o,
    })
}
