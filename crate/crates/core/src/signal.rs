//! Uniform time series, polar decomposition, phase unwrapping, finite
//! differences, complex frequency and complex power.
//!
//! Park vectors are stored as two real sequences (`d`, `q`) sharing a
//! [`TimeGrid`]. Everything here is a pure function of its inputs.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::SignalError;

/// Magnitudes below this (pu) are treated as degenerate: `ln |x|` and the
/// phase are not usable there.
pub const EPS_MAG: f64 = 1e-6;

/// Uniform sampling grid `t_k = t0 + k * dt`, `k = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self, SignalError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SignalError::InvalidStep(dt));
        }
        if !t0.is_finite() {
            return Err(SignalError::NonFinite { index: 0 });
        }
        if n < 3 {
            return Err(SignalError::TooShort { need: 3, got: n });
        }
        Ok(Self { t0, dt, n })
    }

    /// Grid covering `[t0, t_end]` inclusive. `t_end - t0` is rounded to the
    /// nearest whole number of steps.
    pub fn spanning(t0: f64, t_end: f64, dt: f64) -> Result<Self, SignalError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SignalError::InvalidStep(dt));
        }
        let steps = ((t_end - t0) / dt).round();
        if !steps.is_finite() || steps < 2.0 {
            return Err(SignalError::TooShort {
                need: 3,
                got: steps.max(0.0) as usize + 1,
            });
        }
        Self::new(t0, dt, steps as usize + 1)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.time(k))
    }

    /// Index of the sample at time `t`, if `t` lies on the grid (within a
    /// millionth of a step).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let k = x.round();
        if (x - k).abs() > 1e-6 || k < 0.0 || k >= self.n as f64 {
            return None;
        }
        Some(k as usize)
    }

    /// Sub-grid covering `range`.
    pub fn slice(&self, range: Range<usize>) -> Result<Self, SignalError> {
        if range.end > self.n || range.start >= range.end {
            return Err(SignalError::LengthMismatch {
                expected: self.n,
                got: range.end,
            });
        }
        Self::new(self.time(range.start), self.dt, range.len())
    }

    /// Same grid truncated to its first `n` samples.
    pub fn truncated(&self, n: usize) -> Result<Self, SignalError> {
        self.slice(0..n.min(self.n))
    }

    /// Grids are compatible when they have the same length and agree on
    /// `t0`/`dt` to rounding.
    pub fn matches(&self, other: &TimeGrid) -> bool {
        self.n == other.n
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt.abs()
            && (self.t0 - other.t0).abs() <= 1e-9 * self.dt
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<(), SignalError> {
        if got != self.n {
            return Err(SignalError::LengthMismatch {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }
}

/// Complex dq-frame signal `x = d + j q` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ParkSeries {
    pub grid: TimeGrid,
    pub d: Vec<f64>,
    pub q: Vec<f64>,
}

impl ParkSeries {
    pub fn new(grid: TimeGrid, d: Vec<f64>, q: Vec<f64>) -> Result<Self, SignalError> {
        grid.check_len(d.len())?;
        grid.check_len(q.len())?;
        if let Some(index) = d
            .iter()
            .zip(&q)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(SignalError::NonFinite { index });
        }
        Ok(Self { grid, d, q })
    }

    /// Samples `f(t_k)` on every grid point.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Result<Self, SignalError> {
        let (d, q) = grid.times().map(|t| {
            let z = f(t);
            (z.re, z.im)
        }).unzip();
        Self::new(grid, d, q)
    }

    pub fn from_complex(grid: TimeGrid, z: &[Complex64]) -> Result<Self, SignalError> {
        Self::new(grid, z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn get(&self, k: usize) -> Complex64 {
        Complex64::new(self.d[k], self.q[k])
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        (0..self.len()).map(|k| self.get(k)).collect()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.d.iter().zip(&self.q).map(|(d, q)| d.hypot(*q)).collect()
    }

    /// Multiplies every sample by the complex constant `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let z: Vec<Complex64> = self.to_complex().into_iter().map(|x| x * c).collect();
        Self::from_complex(self.grid, &z).expect("scaling preserves length")
    }

    pub fn slice(&self, range: Range<usize>) -> Result<Self, SignalError> {
        let grid = self.grid.slice(range.clone())?;
        Ok(Self {
            grid,
            d: self.d[range.clone()].to_vec(),
            q: self.q[range].to_vec(),
        })
    }
}

/// Magnitude / unwrapped phase form of a [`ParkSeries`].
#[derive(Clone, Debug, PartialEq)]
pub struct PolarSeries {
    pub grid: TimeGrid,
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
    /// `true` where the magnitude is below [`EPS_MAG`]; the phase there is
    /// carried over from the nearest valid sample.
    pub degenerate: Vec<bool>,
}

impl PolarSeries {
    pub fn reconstruct(&self) -> ParkSeries {
        let (d, q) = self
            .magnitude
            .iter()
            .zip(&self.phase)
            .map(|(m, p)| (m * p.cos(), m * p.sin()))
            .unzip();
        ParkSeries {
            grid: self.grid,
            d,
            q,
        }
    }
}

/// Per-sample complex frequency `rho + j omega` of a complex signal.
#[derive(Clone, Debug, PartialEq)]
pub struct CFSeries {
    pub grid: TimeGrid,
    /// Instantaneous bandwidth `d ln|x| / dt` (1/s).
    pub rho: Vec<f64>,
    /// Instantaneous frequency `d phase / dt` (rad/s).
    pub omega: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Finite-difference stencil family used for every time derivative.
///
/// All variants are centred in the interior and switch to one-sided
/// stencils of the same order within [`Stencil::reach`] samples of either
/// end, so that the whole series is differentiated at a single order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Stencil {
    #[default]
    Central2,
    Central4,
    Central6,
}

impl Stencil {
    pub fn from_order(order: usize) -> Option<Self> {
        match order {
            2 => Some(Self::Central2),
            4 => Some(Self::Central4),
            6 => Some(Self::Central6),
            _ => None,
        }
    }

    pub fn order(self) -> usize {
        match self {
            Self::Central2 => 2,
            Self::Central4 => 4,
            Self::Central6 => 6,
        }
    }

    /// Half-width of the centred stencil.
    pub fn reach(self) -> usize {
        self.order() / 2
    }

    /// Minimum series length one pass can differentiate.
    pub fn min_len(self) -> usize {
        self.order() + 1
    }

    fn weights(self) -> StencilWeights {
        let p = self.order() as i32;
        let r = self.reach() as i32;
        let centre: Vec<i32> = (-r..=r).collect();
        // Left boundary row k uses offsets -k..=p-k.
        let left = (0..r)
            .map(|k| {
                let offs: Vec<i32> = (-k..=p - k).collect();
                (first_derivative_weights(&offs), offs)
            })
            .collect();
        StencilWeights {
            centre: first_derivative_weights(&centre),
            centre_offsets: centre,
            left,
        }
    }
}

struct StencilWeights {
    centre: Vec<f64>,
    centre_offsets: Vec<i32>,
    left: Vec<(Vec<f64>, Vec<i32>)>,
}

/// Weights `w_j` such that `f'(0) ~ sum_j w_j f(x_j)` for unit spacing,
/// from the derivative of the Lagrange basis at zero.
fn first_derivative_weights(offsets: &[i32]) -> Vec<f64> {
    let x: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    (0..x.len())
        .map(|j| {
            let mut w = 0.0;
            for m in 0..x.len() {
                if m == j {
                    continue;
                }
                let mut term = 1.0 / (x[j] - x[m]);
                for l in 0..x.len() {
                    if l != j && l != m {
                        term *= (0.0 - x[l]) / (x[j] - x[l]);
                    }
                }
                w += term;
            }
            w
        })
        .collect()
}

/// Wraps a jump into `(-pi, pi]`.
fn wrap_jump(jump: f64) -> f64 {
    let mut j = jump % (2.0 * PI);
    if j > PI {
        j -= 2.0 * PI;
    } else if j <= -PI {
        j += 2.0 * PI;
    }
    j
}

/// Removes `2 pi` discontinuities so that consecutive differences lie in
/// `(-pi, pi]`. The first sample is kept as is.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let Some(&first) = phase.first() else {
        return out;
    };
    out.push(first);
    let mut correction = 0.0;
    for w in phase.windows(2) {
        let raw = w[1] - w[0];
        correction += wrap_jump(raw) - raw;
        out.push(w[1] + correction);
    }
    out
}

pub fn polar_decompose(x: &ParkSeries) -> PolarSeries {
    let n = x.len();
    let magnitude = x.magnitude();
    let degenerate: Vec<bool> = magnitude.iter().map(|m| *m < EPS_MAG).collect();
    let raw: Vec<f64> = x.d.iter().zip(&x.q).map(|(d, q)| q.atan2(*d)).collect();
    let first_valid = degenerate.iter().position(|d| !d);

    let mut wrapped = Vec::with_capacity(n);
    let mut last = first_valid.map(|k| raw[k]).unwrap_or(0.0);
    for k in 0..n {
        if !degenerate[k] {
            last = raw[k];
        }
        wrapped.push(last);
    }
    PolarSeries {
        grid: x.grid,
        magnitude,
        phase: unwrap_phase(&wrapped),
        degenerate,
    }
}

/// Second-order finite-difference derivative: central in the interior,
/// one-sided three-point at both ends.
pub fn differentiate(x: &[f64], grid: &TimeGrid) -> Result<Vec<f64>, SignalError> {
    differentiate_with(x, grid, Stencil::Central2)
}

pub fn differentiate_with(
    x: &[f64],
    grid: &TimeGrid,
    stencil: Stencil,
) -> Result<Vec<f64>, SignalError> {
    grid.check_len(x.len())?;
    derivative(x, grid.dt(), stencil)
}

pub(crate) fn derivative(x: &[f64], dt: f64, stencil: Stencil) -> Result<Vec<f64>, SignalError> {
    let n = x.len();
    if n < stencil.min_len() {
        return Err(SignalError::TooShort {
            need: stencil.min_len(),
            got: n,
        });
    }
    let w = stencil.weights();
    let r = stencil.reach();
    // Weights sum to zero, so differences from x[k] give the same value
    // while making constants differentiate to exactly zero.
    let apply = |k: usize, weights: &[f64], offs: &[i32], sign: f64| -> f64 {
        let mut acc = 0.0;
        for (wj, &o) in weights.iter().zip(offs) {
            let idx = (k as i64 + sign as i64 * o as i64) as usize;
            acc += wj * (x[idx] - x[k]);
        }
        sign * acc / dt
    };
    let mut out = vec![0.0; n];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = if k < r {
            let (wts, offs) = &w.left[k];
            apply(k, wts, offs, 1.0)
        } else if k >= n - r {
            // Mirror of the left boundary: f'(t) = -g'(-t) with g(s) = f(-s).
            let (wts, offs) = &w.left[n - 1 - k];
            apply(k, wts, offs, -1.0)
        } else {
            apply(k, &w.centre, &w.centre_offsets, 1.0)
        };
    }
    Ok(out)
}

/// Marks every sample within `radius` of a `true` entry.
pub(crate) fn dilate(mask: &[bool], radius: usize) -> Vec<bool> {
    let n = mask.len();
    let mut out = vec![false; n];
    for (k, &m) in mask.iter().enumerate() {
        if m {
            let lo = k.saturating_sub(radius);
            let hi = (k + radius).min(n - 1);
            out[lo..=hi].iter_mut().for_each(|o| *o = true);
        }
    }
    out
}

/// Replaces samples flagged `bad` with the nearest preceding good value
/// (or the first good value for a leading run).
pub(crate) fn carry_forward(x: &[f64], bad: &[bool]) -> Vec<f64> {
    let first_good = bad.iter().position(|b| !b).map(|k| x[k]).unwrap_or(0.0);
    let mut last = first_good;
    x.iter()
        .zip(bad)
        .map(|(v, b)| {
            if !b {
                last = *v;
            }
            last
        })
        .collect()
}

pub fn complex_frequency(x: &ParkSeries) -> Result<CFSeries, SignalError> {
    complex_frequency_with(x, Stencil::Central2)
}

/// `rho = d ln|x|/dt`, `omega = d phase/dt`. Degenerate samples, and every
/// sample whose stencil touches one, are flagged invalid and set to NaN.
pub fn complex_frequency_with(x: &ParkSeries, stencil: Stencil) -> Result<CFSeries, SignalError> {
    let polar = polar_decompose(x);
    let log_mag: Vec<f64> = polar
        .magnitude
        .iter()
        .zip(&polar.degenerate)
        .map(|(m, d)| if *d { 0.0 } else { m.ln() })
        .collect();
    let log_mag = carry_forward(&log_mag, &polar.degenerate);
    let mut rho = differentiate_with(&log_mag, &x.grid, stencil)?;
    let mut omega = differentiate_with(&polar.phase, &x.grid, stencil)?;
    let invalid = dilate(&polar.degenerate, stencil.reach());
    for (k, bad) in invalid.iter().enumerate() {
        if *bad {
            rho[k] = f64::NAN;
            omega[k] = f64::NAN;
        }
    }
    Ok(CFSeries {
        grid: x.grid,
        rho,
        omega,
        valid: invalid.iter().map(|b| !b).collect(),
    })
}

/// `s = v * conj(i)`, i.e. `p = v_d i_d + v_q i_q`, `q = v_q i_d - v_d i_q`.
pub fn complex_power(v: &ParkSeries, i: &ParkSeries) -> Result<ParkSeries, SignalError> {
    if !v.grid.matches(&i.grid) {
        return Err(SignalError::GridMismatch);
    }
    let (p, q) = (0..v.len())
        .map(|k| {
            let s = v.get(k) * i.get(k).conj();
            (s.re, s.im)
        })
        .unzip();
    ParkSeries::new(v.grid, p, q)
}
