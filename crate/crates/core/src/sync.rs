//! Synchronization energy of a device from the complex frequencies of its
//! voltage and current, the direct numerical estimate from `p` and `q`,
//! and the asymptotic-synchronization classifier.

use serde::{Deserialize, Serialize};

use crate::energy::{teo_real_with, ConditionalVarianceSeries, TeoSeries};
use crate::error::{ParamError, SignalError};
use crate::signal::{CFSeries, ParkSeries, Stencil, TimeGrid, EPS_MAG};

/// Synchronization energy and its decomposition, per sample.
///
/// `psi = freq_term + var_term` where
/// `freq_term = 2 |s|^2 (omega_v - omega_i)^2` and
/// `var_term = 2 |s|^2 (sigma2_v + sigma2_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SESeries {
    pub grid: TimeGrid,
    pub psi: Vec<f64>,
    pub freq_term: Vec<f64>,
    pub var_term: Vec<f64>,
    /// Conditional frequency spread of the complex power (rad^2/s^2).
    pub sigma2_s: Vec<f64>,
    pub s_mag2: Vec<f64>,
    /// `false` at degenerate samples; all value fields are NaN there.
    pub valid: Vec<bool>,
    /// `true` where the value depends on one-sided boundary stencils.
    pub edge: Vec<bool>,
}

impl SESeries {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Valid, non-edge sample.
    pub fn is_interior(&self, k: usize) -> bool {
        self.valid[k] && !self.edge[k]
    }
}

/// Combines CF and conditional variances of voltage and current with the
/// complex power into the synchronization energy.
pub fn se_from_cf(
    cf_v: &CFSeries,
    cf_i: &CFSeries,
    var_v: &ConditionalVarianceSeries,
    var_i: &ConditionalVarianceSeries,
    s: &ParkSeries,
) -> Result<SESeries, SignalError> {
    let grid = s.grid;
    for g in [&cf_v.grid, &cf_i.grid, &var_v.grid, &var_i.grid] {
        if !g.matches(&grid) {
            return Err(SignalError::GridMismatch);
        }
    }
    let n = grid.len();
    let mut out = SESeries {
        grid,
        psi: Vec::with_capacity(n),
        freq_term: Vec::with_capacity(n),
        var_term: Vec::with_capacity(n),
        sigma2_s: Vec::with_capacity(n),
        s_mag2: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
        edge: vec![false; n],
    };
    let floor = EPS_MAG.powi(4);
    for k in 0..n {
        let s_mag2 = s.d[k] * s.d[k] + s.q[k] * s.q[k];
        let ok = cf_v.valid[k] && cf_i.valid[k] && var_v.valid[k] && var_i.valid[k] && s_mag2 >= floor;
        if !ok {
            out.psi.push(f64::NAN);
            out.freq_term.push(f64::NAN);
            out.var_term.push(f64::NAN);
            out.sigma2_s.push(f64::NAN);
            out.s_mag2.push(s_mag2);
            out.valid.push(false);
            continue;
        }
        let dw = cf_v.omega[k] - cf_i.omega[k];
        let sigma2 = var_v.value[k] + var_i.value[k];
        let freq = dw * dw * 2.0 * s_mag2;
        let var = sigma2 * 2.0 * s_mag2;
        out.psi.push(freq + var);
        out.freq_term.push(freq);
        out.var_term.push(var);
        out.sigma2_s.push(sigma2);
        out.s_mag2.push(s_mag2);
        out.valid.push(true);
    }
    Ok(out)
}

pub fn se_numeric(p: &[f64], q: &[f64], grid: &TimeGrid) -> Result<TeoSeries, SignalError> {
    se_numeric_with(p, q, grid, Stencil::Central2)
}

/// `psi(p) + psi(q)`.
pub fn se_numeric_with(
    p: &[f64],
    q: &[f64],
    grid: &TimeGrid,
    stencil: Stencil,
) -> Result<TeoSeries, SignalError> {
    let mut a = teo_real_with(p, grid, stencil)?;
    let b = teo_real_with(q, grid, stencil)?;
    a.value.iter_mut().zip(&b.value).for_each(|(x, y)| *x += y);
    Ok(a)
}

/// `psi / (2 |s|^2)`; `None` where the sample is invalid or `|s|` is
/// degenerate.
pub fn normalized_se(se: &SESeries) -> Vec<Option<f64>> {
    let floor = EPS_MAG.powi(4);
    (0..se.len())
        .map(|k| {
            (se.valid[k] && se.s_mag2[k] >= floor).then(|| se.psi[k] / (2.0 * se.s_mag2[k]))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyncStatus {
    Synchronized,
    BoundedNotSynchronized,
    LossOfSynchronism,
    Indeterminate,
}

impl std::fmt::Display for SyncStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Synchronized => "Synchronized",
            Self::BoundedNotSynchronized => "BoundedNotSynchronized",
            Self::LossOfSynchronism => "LossOfSynchronism",
            Self::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

/// Finite-horizon thresholds for judging asymptotic behaviour of `psi`.
///
/// All thresholds are relative to quantities measured on the series, so the
/// verdict is invariant to a positive rescaling of `psi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierPolicy {
    /// Settled when `|psi|` stays below `eps_sync` times the post-disturbance
    /// peak.
    pub eps_sync: f64,
    /// Length (s) of the reference and trailing windows.
    pub tail_window: f64,
    /// Divergence when `|psi|` exceeds this multiple of the reference-window
    /// peak anywhere after the reference window.
    pub divergence_factor: f64,
    /// Divergence when the trailing-window peak is at least this multiple of
    /// the reference-window peak.
    pub growth_factor: f64,
    /// Only samples at or after this time are judged (s). `None` judges
    /// the whole series.
    pub disturbance_end: Option<f64>,
}

impl Default for ClassifierPolicy {
    fn default() -> Self {
        Self {
            eps_sync: 1e-6,
            tail_window: 1.0,
            divergence_factor: 1e6,
            growth_factor: 10.0,
            disturbance_end: None,
        }
    }
}

impl ClassifierPolicy {
    pub fn validate(&self) -> Result<(), ParamError> {
        let checks: [(&'static str, f64, bool); 4] = [
            ("eps_sync", self.eps_sync, self.eps_sync > 0.0 && self.eps_sync < 1.0),
            ("tail_window", self.tail_window, self.tail_window > 0.0),
            ("divergence_factor", self.divergence_factor, self.divergence_factor > 1.0),
            ("growth_factor", self.growth_factor, self.growth_factor > 1.0),
        ];
        for (name, value, ok) in checks {
            if !(value.is_finite() && ok) {
                return Err(ParamError::OutOfRange {
                    name,
                    requirement: match name {
                        "eps_sync" => "in (0, 1)",
                        "tail_window" => "positive",
                        _ => "greater than 1",
                    },
                    value,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncVerdict {
    pub status: SyncStatus,
    /// Time after which `|psi|` never again reaches the settling threshold.
    pub settle_time: Option<f64>,
    pub peak_psi: f64,
    pub tail_mean_psi: f64,
}

impl SyncVerdict {
    fn indeterminate() -> Self {
        Self {
            status: SyncStatus::Indeterminate,
            settle_time: None,
            peak_psi: f64::NAN,
            tail_mean_psi: f64::NAN,
        }
    }
}

/// Classifies the trajectory of `psi` after the last disturbance.
///
/// * `LossOfSynchronism`: the trailing-window peak has grown to
///   `growth_factor` times the reference-window peak (the first
///   `tail_window` after the disturbance), or `|psi|` exceeds
///   `divergence_factor` times that reference peak.
/// * `Synchronized`: the whole trailing window lies below
///   `eps_sync * peak`.
/// * `BoundedNotSynchronized`: neither.
/// * `Indeterminate`: less than `tail_window` of valid data after the
///   disturbance.
pub fn classify_sync(se: &SESeries, policy: &ClassifierPolicy) -> SyncVerdict {
    classify_values(&se.grid, &se.psi, &se.valid, policy)
}

/// [`classify_sync`] on a bare `psi` sequence.
pub fn classify_values(
    grid: &TimeGrid,
    psi: &[f64],
    valid: &[bool],
    policy: &ClassifierPolicy,
) -> SyncVerdict {
    let start = policy.disturbance_end.unwrap_or(f64::NEG_INFINITY);
    let post: Vec<(f64, f64)> = (0..psi.len())
        .filter(|&k| valid[k] && psi[k].is_finite())
        .map(|k| (grid.time(k), psi[k].abs()))
        .filter(|(t, _)| *t >= start - 1e-9 * grid.dt())
        .collect();
    let (Some(first), Some(last)) = (post.first(), post.last()) else {
        return SyncVerdict::indeterminate();
    };
    let (t_first, t_last) = (first.0, last.0);
    let slack = 1e-9 * grid.dt();
    if t_last - t_first + slack < policy.tail_window {
        return SyncVerdict::indeterminate();
    }

    let peak = post.iter().map(|p| p.1).fold(0.0, f64::max);
    let ref_end = t_first + policy.tail_window;
    let tail_start = t_last - policy.tail_window;
    let window_max = |lo: f64, hi: f64| {
        post.iter()
            .filter(|(t, _)| *t >= lo - slack && *t <= hi + slack)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    };
    let ref_peak = window_max(t_first, ref_end);
    let tail: Vec<f64> = post
        .iter()
        .filter(|(t, _)| *t >= tail_start - slack)
        .map(|p| p.1)
        .collect();
    let tail_peak = tail.iter().copied().fold(0.0, f64::max);
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;

    let after_ref_max = window_max(ref_end + grid.dt(), t_last);
    let diverged = tail_peak >= policy.growth_factor * ref_peak && tail_peak > 0.0
        || after_ref_max > policy.divergence_factor * ref_peak && after_ref_max > 0.0;

    let threshold = policy.eps_sync * peak;
    let settle_time = if peak == 0.0 {
        Some(t_first)
    } else {
        match post.iter().rposition(|p| p.1 >= threshold) {
            Some(i) if i + 1 < post.len() => Some(post[i + 1].0),
            Some(_) => None,
            None => Some(t_first),
        }
    };
    let status = if diverged {
        SyncStatus::LossOfSynchronism
    } else if tail_peak < threshold || peak == 0.0 {
        SyncStatus::Synchronized
    } else {
        SyncStatus::BoundedNotSynchronized
    };
    SyncVerdict {
        status,
        settle_time: if status == SyncStatus::Synchronized {
            settle_time
        } else {
            None
        },
        peak_psi: peak,
        tail_mean_psi: tail_mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::conditional_variance;
    use crate::signal::{complex_frequency, complex_power, polar_decompose};
    use num_complex::Complex64;

    fn se_of(v: &ParkSeries, i: &ParkSeries) -> SESeries {
        let s = complex_power(v, i).unwrap();
        let cv = complex_frequency(v).unwrap();
        let ci = complex_frequency(i).unwrap();
        let mv = polar_decompose(v).magnitude;
        let mi = polar_decompose(i).magnitude;
        let vv = conditional_variance(&mv, &v.grid).unwrap();
        let vi = conditional_variance(&mi, &i.grid).unwrap();
        se_from_cf(&cv, &ci, &vv, &vi, &s).unwrap()
    }

    fn grid(dt: f64, n: usize) -> TimeGrid {
        TimeGrid::new(0.0, dt, n).unwrap()
    }

    #[test]
    fn steady_state_has_zero_energy() {
        let g = grid(1e-3, 1000);
        let v = ParkSeries::from_fn(g, |_| Complex64::from_polar(1.0, 0.2)).unwrap();
        let i = ParkSeries::from_fn(g, |_| Complex64::from_polar(0.8, -0.1)).unwrap();
        let se = se_of(&v, &i);
        assert!(se.psi.iter().all(|p| *p == 0.0));
        assert!(normalized_se(&se).iter().all(|p| *p == Some(0.0)));
    }

    #[test]
    fn dual_frequency_gives_eight() {
        let g = grid(1e-3, 3000);
        let v = ParkSeries::from_fn(g, |t| Complex64::from_polar(1.0, 3.0 * t)).unwrap();
        let i = ParkSeries::from_fn(g, |t| Complex64::from_polar(1.0, 1.0 * t)).unwrap();
        let se = se_of(&v, &i);
        for k in 0..g.len() {
            assert!((se.psi[k] - 8.0).abs() < 1e-8);
            assert!(se.var_term[k].abs() < 1e-8);
            assert_eq!(se.psi[k], se.freq_term[k] + se.var_term[k]);
        }
        for n in normalized_se(&se) {
            assert!((n.unwrap() - 4.0).abs() < 1e-9);
        }
        let s = complex_power(&v, &i).unwrap();
        let num = se_numeric(&s.d, &s.q, &g).unwrap();
        for k in 2..g.len() - 2 {
            assert!((num.value[k] - 8.0).abs() < 8.0 * 2e-6);
        }
    }

    #[test]
    fn voltage_scaling_scales_energy_quadratically() {
        let g = grid(1e-3, 2000);
        let v = ParkSeries::from_fn(g, |t| Complex64::from_polar(1.0 + 0.1 * t.sin(), 2.0 * t)).unwrap();
        let i = ParkSeries::from_fn(g, |t| Complex64::from_polar(0.5, 0.3 * t)).unwrap();
        let base = se_of(&v, &i);
        let k = 3.0;
        let scaled = se_of(&v.scaled(Complex64::new(k, 0.0)), &i);
        for n in 0..g.len() {
            assert!((scaled.psi[n] - k * k * base.psi[n]).abs() <= 1e-9 * base.psi[n].abs().max(1.0));
        }
        let both = se_of(&v.scaled(Complex64::new(k, 0.0)), &i.scaled(Complex64::new(k, 0.0)));
        let a = normalized_se(&base);
        let b = normalized_se(&both);
        for n in 0..g.len() {
            assert!((a[n].unwrap() - b[n].unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn numeric_examples() {
        let g = grid(1e-3, 4000);
        let ones = vec![1.0; 4000];
        let zeros = vec![0.0; 4000];
        assert!(se_numeric(&ones, &zeros, &g).unwrap().value.iter().all(|v| *v == 0.0));

        let p: Vec<f64> = g.times().map(|t| (-t).exp()).collect();
        let psi = se_numeric(&p, &zeros, &g).unwrap();
        for k in 2..g.len() - 2 {
            assert!(psi.value[k].abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_power_is_flagged() {
        let g = grid(1e-3, 50);
        let v = ParkSeries::from_fn(g, |t| Complex64::from_polar(1.0, t)).unwrap();
        let mut i = ParkSeries::from_fn(g, |t| Complex64::from_polar(1.0, t)).unwrap();
        i.d[20] = 0.0;
        i.q[20] = 0.0;
        let se = se_of(&v, &i);
        assert!(!se.valid[20]);
        assert!(se.psi[20].is_nan());
        assert!(se.valid[0] && se.valid[49]);
        assert_eq!(normalized_se(&se)[20], None);
    }

    fn classify_fn(t_end: f64, f: impl Fn(f64) -> f64) -> SyncVerdict {
        let g = TimeGrid::spanning(0.0, t_end, 1e-3).unwrap();
        let psi: Vec<f64> = g.times().map(f).collect();
        classify_values(&g, &psi, &vec![true; g.len()], &ClassifierPolicy::default())
    }

    #[test]
    fn decaying_energy_is_synchronized() {
        let v = classify_fn(20.0, |t| 8.0 * (-t).exp());
        assert_eq!(v.status, SyncStatus::Synchronized);
        // 8 e^{-t} = 8e-6  =>  t = ln(1e6)
        let expect = 1e6f64.ln();
        assert!((v.settle_time.unwrap() - expect).abs() < 2e-3, "{:?}", v.settle_time);
        assert_eq!(v.peak_psi, 8.0);
    }

    #[test]
    fn constant_energy_is_bounded() {
        let v = classify_fn(20.0, |_| 8.0);
        assert_eq!(v.status, SyncStatus::BoundedNotSynchronized);
        assert_eq!(v.settle_time, None);
        assert_eq!(v.tail_mean_psi, 8.0);
    }

    #[test]
    fn growing_energy_is_loss_of_synchronism() {
        let v = classify_fn(20.0, f64::exp);
        assert_eq!(v.status, SyncStatus::LossOfSynchronism);
    }

    #[test]
    fn short_window_is_indeterminate() {
        let v = classify_fn(0.5, |_| 1.0);
        assert_eq!(v.status, SyncStatus::Indeterminate);
        let g = grid(1e-3, 5000);
        let policy = ClassifierPolicy {
            disturbance_end: Some(4.5),
            ..Default::default()
        };
        let v = classify_values(&g, &vec![1.0; 5000], &vec![true; 5000], &policy);
        assert_eq!(v.status, SyncStatus::Indeterminate);
    }

    #[test]
    fn zero_energy_is_synchronized() {
        let v = classify_fn(5.0, |_| 0.0);
        assert_eq!(v.status, SyncStatus::Synchronized);
        assert_eq!(v.settle_time, Some(0.0));
    }

    #[test]
    fn verdict_ignores_pre_disturbance_samples() {
        let g = TimeGrid::spanning(0.0, 20.0, 1e-3).unwrap();
        // Huge pre-disturbance value would otherwise set the peak.
        let psi: Vec<f64> = g.times().map(|t| if t < 1.0 { 1e9 } else { 8.0 }).collect();
        let policy = ClassifierPolicy {
            disturbance_end: Some(1.0),
            ..Default::default()
        };
        let v = classify_values(&g, &psi, &vec![true; g.len()], &policy);
        assert_eq!(v.status, SyncStatus::BoundedNotSynchronized);
        assert_eq!(v.peak_psi, 8.0);
    }
}
