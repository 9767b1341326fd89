//! Single-machine infinite-bus swing dynamics with fault switching, its
//! linearised eigenvalues, and closed-form synthetic Park signals.
//!
//! Machine model: constant EMF `E` behind `x_gen`, second-order swing
//! equation in per unit on the machine base,
//!
//! ```text
//! delta'       = omega_n (omega - 1)
//! 2 H omega'   = Pm - E V sin(delta) / x_total - D (omega - 1)
//! ```
//!
//! with `x_total = x_gen + x_line` and `x_line` switched between the
//! pre-fault, fault-on and post-fault values. All Park vectors are in the
//! synchronous frame with the infinite bus at angle zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::ode::rk4_step;
use crate::signal::{complex_power, ParkSeries, TimeGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmibParams {
    /// Inertia constant H (s).
    pub inertia: f64,
    /// Damping D (pu torque per pu speed deviation).
    pub damping: f64,
    pub x_gen: f64,
    pub x_line_prefault: f64,
    pub x_line_fault: f64,
    pub x_line_postfault: f64,
    /// Internal EMF magnitude (pu).
    pub emf: f64,
    pub v_inf: f64,
    /// Mechanical power (pu).
    pub p_mech: f64,
    /// Nominal angular frequency (rad/s).
    pub omega_n: f64,
}

impl Default for SmibParams {
    fn default() -> Self {
        Self {
            inertia: 5.0,
            damping: 0.0,
            x_gen: 0.2,
            x_line_prefault: 0.1,
            x_line_fault: 1.0,
            x_line_postfault: 0.1,
            emf: 1.1,
            v_inf: 1.0,
            p_mech: 0.8,
            omega_n: 2.0 * PI * 60.0,
        }
    }
}

/// Network configuration in force during an integration step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Network {
    PreFault,
    Fault,
    PostFault,
}

impl SmibParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let checks: [(&'static str, f64, bool, &'static str); 10] = [
            ("H", self.inertia, self.inertia > 0.0, "positive"),
            ("D", self.damping, self.damping >= 0.0, "non-negative"),
            ("x_gen", self.x_gen, self.x_gen > 0.0, "positive"),
            ("x_line_prefault", self.x_line_prefault, self.x_line_prefault > 0.0, "positive"),
            ("x_line_fault", self.x_line_fault, self.x_line_fault > 0.0, "positive"),
            ("x_line_postfault", self.x_line_postfault, self.x_line_postfault > 0.0, "positive"),
            ("E", self.emf, self.emf > 0.0, "positive"),
            ("V_inf", self.v_inf, self.v_inf > 0.0, "positive"),
            ("Pm", self.p_mech, true, "finite"),
            ("omega_n", self.omega_n, self.omega_n > 0.0, "positive"),
        ];
        for (name, value, ok, requirement) in checks {
            if !value.is_finite() || !ok {
                return Err(ParamError::OutOfRange {
                    name,
                    requirement,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn x_total(&self, net: Network) -> f64 {
        self.x_gen
            + match net {
                Network::PreFault => self.x_line_prefault,
                Network::Fault => self.x_line_fault,
                Network::PostFault => self.x_line_postfault,
            }
    }

    /// Peak electrical power `E V / x_total`.
    pub fn p_max(&self, net: Network) -> f64 {
        self.emf * self.v_inf / self.x_total(net)
    }

    /// Stable pre-fault equilibrium angle `asin(Pm x / (E V))`.
    pub fn equilibrium_angle(&self) -> Result<f64, ParamError> {
        let ratio = self.p_mech / self.p_max(Network::PreFault);
        if ratio.abs() > 1.0 {
            return Err(ParamError::NoEquilibrium(ratio));
        }
        Ok(ratio.asin())
    }

    /// Classical energy function `H omega_n dw^2 - Pm delta - Pmax cos(delta)`
    /// (pu power x rad), conserved when `D = 0` within one network
    /// configuration.
    pub fn energy(&self, net: Network, delta: f64, omega_pu: f64) -> f64 {
        let dw = omega_pu - 1.0;
        self.inertia * self.omega_n * dw * dw - self.p_mech * delta - self.p_max(net) * delta.cos()
    }

    fn rhs(&self, net: Network, y: &[f64; 2]) -> [f64; 2] {
        let dw = y[1] - 1.0;
        let pe = self.p_max(net) * y[0].sin();
        [
            self.omega_n * dw,
            (self.p_mech - pe - self.damping * dw) / (2.0 * self.inertia),
        ]
    }

    /// Terminal voltage and injected current for rotor angle `delta`.
    pub fn phasors(&self, net: Network, delta: f64) -> (Complex64, Complex64) {
        let e = Complex64::from_polar(self.emf, delta);
        let current = (e - self.v_inf) / Complex64::new(0.0, self.x_total(net));
        let v_bus = e - Complex64::new(0.0, self.x_gen) * current;
        (v_bus, current)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSchedule {
    pub t_apply: f64,
    pub t_clear: f64,
}

impl FaultSchedule {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.t_apply.is_finite() && self.t_clear.is_finite() && self.t_apply < self.t_clear) {
            return Err(ParamError::OutOfRange {
                name: "fault.t_clear",
                requirement: "finite and later than fault.t_apply",
                value: self.t_clear,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub grid: TimeGrid,
    pub delta: Vec<f64>,
    pub omega_pu: Vec<f64>,
    pub v_bus: ParkSeries,
    pub i_inj: ParkSeries,
    pub s_inj: ParkSeries,
    /// Indices where a new network configuration takes effect. Algebraic
    /// quantities jump there; the state does not.
    pub breaks: Vec<usize>,
    /// Time of the first sample whose angle exceeded the cap, if any; the
    /// series stop just before it.
    pub diverged_at: Option<f64>,
}

impl SimResult {
    /// Sample ranges with a single network configuration.
    pub fn segments(&self) -> Vec<std::ops::Range<usize>> {
        segments(self.grid.len(), &self.breaks)
    }
}

pub(crate) fn segments(n: usize, breaks: &[usize]) -> Vec<std::ops::Range<usize>> {
    let mut edges = vec![0];
    edges.extend(breaks.iter().copied().filter(|b| *b > 0 && *b < n));
    edges.push(n);
    edges.windows(2).map(|w| w[0]..w[1]).collect()
}

/// Default rotor-angle divergence cap (rad).
pub const DELTA_CAP: f64 = 10.0 * 2.0 * PI;

pub fn smib_simulate(
    params: &SmibParams,
    fault: Option<&FaultSchedule>,
    grid: &TimeGrid,
) -> Result<SimResult, ParamError> {
    smib_simulate_capped(params, fault, grid, DELTA_CAP)
}

/// Integrates from the pre-fault equilibrium with fixed-step RK4. Sample
/// `k` and the step leaving it use the network in force at `t_k`; fault
/// times must fall on grid points.
pub fn smib_simulate_capped(
    params: &SmibParams,
    fault: Option<&FaultSchedule>,
    grid: &TimeGrid,
    delta_cap: f64,
) -> Result<SimResult, ParamError> {
    params.validate()?;
    let n = grid.len();
    let (k_apply, k_clear) = match fault {
        Some(f) => {
            f.validate()?;
            let step = |t: f64| -> Result<usize, ParamError> {
                let x = (t - grid.t0()) / grid.dt();
                if (x - x.round()).abs() > 1e-6 || x < 0.0 {
                    return Err(ParamError::Misaligned(t));
                }
                Ok(x.round() as usize)
            };
            (step(f.t_apply)?, step(f.t_clear)?)
        }
        None => (usize::MAX, usize::MAX),
    };
    let network = |k: usize| {
        if k < k_apply {
            Network::PreFault
        } else if k < k_clear {
            Network::Fault
        } else {
            Network::PostFault
        }
    };

    let mut y = [params.equilibrium_angle()?, 1.0];
    let mut delta = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut i = Vec::with_capacity(n);
    let mut diverged_at = None;
    for k in 0..n {
        if !(y[0].abs() <= delta_cap && y[1].is_finite()) {
            diverged_at = Some(grid.time(k));
            break;
        }
        let net = network(k);
        delta.push(y[0]);
        omega.push(y[1]);
        let (vb, ii) = params.phasors(net, y[0]);
        v.push(vb);
        i.push(ii);
        if k + 1 < n {
            y = rk4_step(|_, s| params.rhs(net, s), grid.time(k), &y, grid.dt());
        }
    }

    let len = delta.len();
    let grid = grid.truncated(len)?;
    let breaks = [k_apply, k_clear]
        .into_iter()
        .filter(|&b| b > 0 && b < len)
        .collect();
    let v_bus = ParkSeries::from_complex(grid, &v)?;
    let i_inj = ParkSeries::from_complex(grid, &i)?;
    let s_inj = complex_power(&v_bus, &i_inj)?;
    Ok(SimResult {
        grid,
        delta,
        omega_pu: omega,
        v_bus,
        i_inj,
        s_inj,
        breaks,
        diverged_at,
    })
}

/// Eigenvalues of the swing equation linearised about `delta_eq`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmibEigen {
    pub pair: [Complex64; 2],
    /// `true` when the equilibrium is a saddle (`cos(delta_eq) < 0`).
    pub saddle: bool,
}

/// Roots of `lambda^2 + D/(2H) lambda + Ks omega_n / (2H)` with
/// `Ks = E V cos(delta_eq) / x_total`, using the post-fault network.
pub fn smib_eigenvalues(params: &SmibParams, delta_eq: f64) -> SmibEigen {
    let ks = params.p_max(Network::PostFault) * delta_eq.cos();
    let b = params.damping / (2.0 * params.inertia);
    let c = ks * params.omega_n / (2.0 * params.inertia);
    let disc = Complex64::new(b * b - 4.0 * c, 0.0).sqrt();
    SmibEigen {
        pair: [(-b + disc) / 2.0, (-b - disc) / 2.0],
        saddle: ks < 0.0,
    }
}

/// Closed-form signal templates for exercising the energy metric without a
/// network model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticSpec {
    /// Constant voltage and current phasors.
    ConstantPhasor {
        v_mag: f64,
        v_angle: f64,
        i_mag: f64,
        i_angle: f64,
    },
    /// `v = v_mag e^{j omega_v t}`, `i = i_mag e^{j omega_i t}`.
    DualFrequency {
        omega_v: f64,
        omega_i: f64,
        v_mag: f64,
        i_mag: f64,
    },
    /// Voltage magnitude `v_mag (1 + m sin(omega_m t))`, constant current.
    /// Produces a bounded periodic energy, a signal-level limit cycle.
    AmplitudeModulated {
        m: f64,
        omega_m: f64,
        v_mag: f64,
        i_mag: f64,
        i_angle: f64,
    },
    /// Both phasors rotate with the common drifting frequency
    /// `drift_rate * t`; magnitudes are constant.
    FrequencyDrift {
        drift_rate: f64,
        v_mag: f64,
        i_mag: f64,
        i_angle: f64,
    },
    /// Voltage magnitude `v_mag (1 + m sin(omega_m t))` and current
    /// magnitude `s_mag e^{beta t} / v(t)`, both rotating at `omega`, so
    /// the two conditional frequency spreads cancel exactly.
    VarianceCancelling {
        m: f64,
        omega_m: f64,
        v_mag: f64,
        s_mag: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default)]
        omega: f64,
    },
}

impl SyntheticSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ConstantPhasor { .. } => "constant_phasor",
            Self::DualFrequency { .. } => "dual_frequency",
            Self::AmplitudeModulated { .. } => "amplitude_modulated",
            Self::FrequencyDrift { .. } => "frequency_drift",
            Self::VarianceCancelling { .. } => "variance_cancelling",
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn check(name: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<(), ParamError> {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    requirement,
                    value,
                })
            }
        }
        let pos = "positive";
        let fin = "finite";
        match *self {
            Self::ConstantPhasor {
                v_mag,
                v_angle,
                i_mag,
                i_angle,
            } => {
                check("v_mag", v_mag, v_mag > 0.0, pos)?;
                check("i_mag", i_mag, i_mag > 0.0, pos)?;
                check("v_angle", v_angle, true, fin)?;
                check("i_angle", i_angle, true, fin)
            }
            Self::DualFrequency {
                omega_v,
                omega_i,
                v_mag,
                i_mag,
            } => {
                check("omega_v", omega_v, true, fin)?;
                check("omega_i", omega_i, true, fin)?;
                check("v_mag", v_mag, v_mag > 0.0, pos)?;
                check("i_mag", i_mag, i_mag > 0.0, pos)
            }
            Self::AmplitudeModulated {
                m,
                omega_m,
                v_mag,
                i_mag,
                i_angle,
            } => {
                check("m", m, (0.0..1.0).contains(&m), "in [0, 1)")?;
                check("omega_m", omega_m, true, fin)?;
                check("v_mag", v_mag, v_mag > 0.0, pos)?;
                check("i_mag", i_mag, i_mag > 0.0, pos)?;
                check("i_angle", i_angle, true, fin)
            }
            Self::FrequencyDrift {
                drift_rate,
                v_mag,
                i_mag,
                i_angle,
            } => {
                check("drift_rate", drift_rate, true, fin)?;
                check("v_mag", v_mag, v_mag > 0.0, pos)?;
                check("i_mag", i_mag, i_mag > 0.0, pos)?;
                check("i_angle", i_angle, true, fin)
            }
            Self::VarianceCancelling {
                m,
                omega_m,
                v_mag,
                s_mag,
                beta,
                omega,
            } => {
                check("m", m, (0.0..1.0).contains(&m), "in [0, 1)")?;
                check("omega_m", omega_m, true, fin)?;
                check("v_mag", v_mag, v_mag > 0.0, pos)?;
                check("s_mag", s_mag, s_mag > 0.0, pos)?;
                check("beta", beta, true, fin)?;
                check("omega", omega, true, fin)
            }
        }
    }
}

/// Voltage and current Park series for a synthetic template.
pub fn synthetic_signal(
    spec: &SyntheticSpec,
    grid: &TimeGrid,
) -> Result<(ParkSeries, ParkSeries), ParamError> {
    spec.validate()?;
    let g = *grid;
    let pair = match *spec {
        SyntheticSpec::ConstantPhasor {
            v_mag,
            v_angle,
            i_mag,
            i_angle,
        } => (
            ParkSeries::from_fn(g, |_| Complex64::from_polar(v_mag, v_angle))?,
            ParkSeries::from_fn(g, |_| Complex64::from_polar(i_mag, i_angle))?,
        ),
        SyntheticSpec::DualFrequency {
            omega_v,
            omega_i,
            v_mag,
            i_mag,
        } => (
            ParkSeries::from_fn(g, |t| Complex64::from_polar(v_mag, omega_v * t))?,
            ParkSeries::from_fn(g, |t| Complex64::from_polar(i_mag, omega_i * t))?,
        ),
        SyntheticSpec::AmplitudeModulated {
            m,
            omega_m,
            v_mag,
            i_mag,
            i_angle,
        } => (
            ParkSeries::from_fn(g, |t| Complex64::new(v_mag * (1.0 + m * (omega_m * t).sin()), 0.0))?,
            ParkSeries::from_fn(g, |_| Complex64::from_polar(i_mag, i_angle))?,
        ),
        SyntheticSpec::FrequencyDrift {
            drift_rate,
            v_mag,
            i_mag,
            i_angle,
        } => (
            ParkSeries::from_fn(g, |t| Complex64::from_polar(v_mag, 0.5 * drift_rate * t * t))?,
            ParkSeries::from_fn(g, |t| Complex64::from_polar(i_mag, 0.5 * drift_rate * t * t + i_angle))?,
        ),
        SyntheticSpec::VarianceCancelling {
            m,
            omega_m,
            v_mag,
            s_mag,
            beta,
            omega,
        } => {
            let vm = move |t: f64| v_mag * (1.0 + m * (omega_m * t).sin());
            (
                ParkSeries::from_fn(g, |t| Complex64::from_polar(vm(t), omega * t))?,
                ParkSeries::from_fn(g, |t| Complex64::from_polar(s_mag * (beta * t).exp() / vm(t), omega * t))?,
            )
        }
    };
    Ok(pair)
}
