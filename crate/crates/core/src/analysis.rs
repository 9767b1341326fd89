//! End-to-end synchronization-energy analysis of a voltage/current pair.
//!
//! Time derivatives are taken piecewise over segments separated by
//! `breaks` (network switching instants, where algebraic quantities jump),
//! so no stencil straddles a discontinuity.

use serde::{Deserialize, Serialize};

use crate::energy::conditional_variance_with;
use crate::error::ParamError;
use crate::pll::{pll_run, PllParams};
use crate::signal::{
    complex_frequency_with, complex_power, polar_decompose, CFSeries, ParkSeries, Stencil, TimeGrid,
};
use crate::sim::segments;
use crate::sync::{normalized_se, se_from_cf, se_numeric_with, SESeries};

/// How the instantaneous frequencies of voltage and current are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Finite differences of the unwrapped phase.
    #[default]
    Fd,
    /// SRF-PLL frequency estimate; `rho` still comes from finite differences.
    Pll,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub stencil: Stencil,
    pub estimator: Estimator,
    pub pll: PllParams,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            stencil: Stencil::Central2,
            estimator: Estimator::Fd,
            pll: PllParams {
                align_initial_phase: true,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub grid: TimeGrid,
    pub s: ParkSeries,
    pub cf_v: CFSeries,
    pub cf_i: CFSeries,
    /// Energy from the complex-frequency decomposition.
    pub se: SESeries,
    /// Energy from `psi(p) + psi(q)`; NaN where `se` is invalid.
    pub psi_numeric: Vec<f64>,
    pub normalized: Vec<Option<f64>>,
}

/// Agreement between the two energy routes on interior samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulationGap {
    pub max_abs: f64,
    /// `max_abs` over the largest `|psi_numeric|` on the same samples.
    pub max_rel: f64,
    pub peak: f64,
    pub samples: usize,
}

impl Analysis {
    pub fn formulation_gap(&self) -> FormulationGap {
        let mut max_abs: f64 = 0.0;
        let mut peak: f64 = 0.0;
        let mut samples = 0;
        for k in 0..self.se.len() {
            if !self.se.is_interior(k) {
                continue;
            }
            max_abs = max_abs.max((self.se.psi[k] - self.psi_numeric[k]).abs());
            peak = peak.max(self.psi_numeric[k].abs());
            samples += 1;
        }
        let max_rel = if peak > 0.0 {
            max_abs / peak
        } else if max_abs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        FormulationGap {
            max_abs,
            max_rel,
            peak,
            samples,
        }
    }
}

fn nan_cf(grid: TimeGrid) -> CFSeries {
    let n = grid.len();
    CFSeries {
        grid,
        rho: vec![f64::NAN; n],
        omega: vec![f64::NAN; n],
        valid: vec![false; n],
    }
}

pub fn analyze(
    v: &ParkSeries,
    i: &ParkSeries,
    breaks: &[usize],
    opts: &AnalysisOptions,
) -> Result<Analysis, ParamError> {
    let s = complex_power(v, i)?;
    let grid = v.grid;
    let n = grid.len();
    let stencil = opts.stencil;
    let edge_width = 2 * stencil.reach();
    let min_len = (2 * edge_width + 1).max(stencil.min_len());

    let mut cf_v = nan_cf(grid);
    let mut cf_i = nan_cf(grid);
    let mut se = SESeries {
        grid,
        psi: vec![f64::NAN; n],
        freq_term: vec![f64::NAN; n],
        var_term: vec![f64::NAN; n],
        sigma2_s: vec![f64::NAN; n],
        s_mag2: s.d.iter().zip(&s.q).map(|(p, q)| p * p + q * q).collect(),
        valid: vec![false; n],
        edge: vec![true; n],
    };
    let mut psi_numeric = vec![f64::NAN; n];

    let pll_dev = match opts.estimator {
        Estimator::Fd => None,
        Estimator::Pll => Some((
            pll_run(v, &opts.pll)?.deviation(),
            pll_run(i, &opts.pll)?.deviation(),
        )),
    };

    for seg in segments(n, breaks) {
        if seg.len() < min_len {
            continue;
        }
        let vs = v.slice(seg.clone())?;
        let is = i.slice(seg.clone())?;
        let ss = s.slice(seg.clone())?;
        let g = vs.grid;
        let mut cv = complex_frequency_with(&vs, stencil)?;
        let mut ci = complex_frequency_with(&is, stencil)?;
        if let Some((dv, di)) = &pll_dev {
            for (local, k) in seg.clone().enumerate() {
                if cv.valid[local] {
                    cv.omega[local] = dv[k];
                }
                if ci.valid[local] {
                    ci.omega[local] = di[k];
                }
            }
        }
        let var_v = conditional_variance_with(&polar_decompose(&vs).magnitude, &g, stencil)?;
        let var_i = conditional_variance_with(&polar_decompose(&is).magnitude, &g, stencil)?;
        let part = se_from_cf(&cv, &ci, &var_v, &var_i, &ss)?;
        let num = se_numeric_with(&ss.d, &ss.q, &g, stencil)?;

        for (local, k) in seg.clone().enumerate() {
            cf_v.rho[k] = cv.rho[local];
            cf_v.omega[k] = cv.omega[local];
            cf_v.valid[k] = cv.valid[local];
            cf_i.rho[k] = ci.rho[local];
            cf_i.omega[k] = ci.omega[local];
            cf_i.valid[k] = ci.valid[local];
            se.psi[k] = part.psi[local];
            se.freq_term[k] = part.freq_term[local];
            se.var_term[k] = part.var_term[local];
            se.sigma2_s[k] = part.sigma2_s[local];
            se.valid[k] = part.valid[local];
            se.edge[k] = !num.is_interior(local);
            if part.valid[local] {
                psi_numeric[k] = num.value[local];
            }
        }
    }
    let normalized = normalized_se(&se);
    Ok(Analysis {
        grid,
        s,
        cf_v,
        cf_i,
        se,
        psi_numeric,
        normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{smib_simulate, FaultSchedule, SmibParams};

    #[test]
    fn segmented_analysis_has_no_switching_spikes() {
        let p = SmibParams {
            damping: 5.0,
            ..Default::default()
        };
        let fault = FaultSchedule {
            t_apply: 1.0,
            t_clear: 1.1,
        };
        let g = TimeGrid::spanning(0.0, 5.0, 1e-3).unwrap();
        let r = smib_simulate(&p, Some(&fault), &g).unwrap();
        let a = analyze(&r.v_bus, &r.i_inj, &r.breaks, &AnalysisOptions::default()).unwrap();
        assert!(a.se.valid.iter().all(|v| *v));
        // edges: both ends of three segments
        assert_eq!(a.se.edge.iter().filter(|e| **e).count(), 12);
        let gap = a.formulation_gap();
        assert!(gap.max_rel < 1e-2, "{gap:?}");

        let unsegmented = analyze(&r.v_bus, &r.i_inj, &[], &AnalysisOptions::default()).unwrap();
        let peak = |x: &[f64]| x.iter().cloned().fold(0.0, |a: f64, b| a.max(b.abs()));
        assert!(peak(&unsegmented.psi_numeric) > 100.0 * peak(&a.psi_numeric));
    }

    #[test]
    fn pll_estimator_tracks_fd_on_smooth_signal() {
        let g = TimeGrid::spanning(0.0, 10.0, 1e-3).unwrap();
        let v = ParkSeries::from_fn(g, |t| num_complex::Complex64::from_polar(1.0, 3.0 * t)).unwrap();
        let i = ParkSeries::from_fn(g, |t| num_complex::Complex64::from_polar(1.0, t)).unwrap();
        let fd = analyze(&v, &i, &[], &AnalysisOptions::default()).unwrap();
        let pll = analyze(
            &v,
            &i,
            &[],
            &AnalysisOptions {
                estimator: Estimator::Pll,
                ..Default::default()
            },
        )
        .unwrap();
        let last = g.len() - 1;
        assert!((fd.se.psi[last] - 8.0).abs() < 1e-8);
        assert!((pll.se.psi[last] - 8.0).abs() < 1e-2);
    }

    #[test]
    fn short_segments_are_left_invalid() {
        let g = TimeGrid::spanning(0.0, 1.0, 1e-3).unwrap();
        let v = ParkSeries::from_fn(g, |t| num_complex::Complex64::from_polar(1.0, t)).unwrap();
        let a = analyze(&v, &v, &[500, 502], &AnalysisOptions::default()).unwrap();
        assert!(!a.se.valid[500] && !a.se.valid[501]);
        assert!(a.se.valid[499] && a.se.valid[502]);
    }
}
