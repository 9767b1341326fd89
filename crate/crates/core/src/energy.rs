//! Teager energy operator (real and complex), Lie bracket, and the
//! conditional frequency spread of the Wigner distribution.
//!
//! Second derivatives are the first-derivative stencil applied twice, so
//! the complex operator equals the sum of the real operators on the two
//! components as an exact algebraic identity in discrete form.

use num_complex::Complex64;

use crate::error::SignalError;
use crate::signal::{carry_forward, derivative, dilate, ParkSeries, Stencil, TimeGrid, EPS_MAG};

/// Teager energy `psi(x)` per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TeoSeries {
    pub grid: TimeGrid,
    pub value: Vec<f64>,
    /// Samples at each end whose value depends on one-sided stencils.
    pub edge: usize,
}

impl TeoSeries {
    /// `true` if sample `k` is not within [`TeoSeries::edge`] of either end.
    pub fn is_interior(&self, k: usize) -> bool {
        k >= self.edge && k + self.edge < self.value.len()
    }
}

/// Conditional variance of frequency given time, `1/2 [(a'/a)^2 - a''/a]`.
/// May be negative.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalVarianceSeries {
    pub grid: TimeGrid,
    pub value: Vec<f64>,
    pub valid: Vec<bool>,
}

fn two_pass_len(stencil: Stencil) -> usize {
    (stencil.min_len()).max(2 * stencil.reach() + 3)
}

fn first_and_second(
    x: &[f64],
    grid: &TimeGrid,
    stencil: Stencil,
) -> Result<(Vec<f64>, Vec<f64>), SignalError> {
    grid.check_len(x.len())?;
    let need = two_pass_len(stencil);
    if x.len() < need {
        return Err(SignalError::TooShort {
            need,
            got: x.len(),
        });
    }
    let d1 = derivative(x, grid.dt(), stencil)?;
    let d2 = derivative(&d1, grid.dt(), stencil)?;
    Ok((d1, d2))
}

pub fn teo_real(x: &[f64], grid: &TimeGrid) -> Result<TeoSeries, SignalError> {
    teo_real_with(x, grid, Stencil::Central2)
}

/// `psi(x) = x'^2 - x x''`.
pub fn teo_real_with(x: &[f64], grid: &TimeGrid, stencil: Stencil) -> Result<TeoSeries, SignalError> {
    let (d1, d2) = first_and_second(x, grid, stencil)?;
    let value = x
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(x, (v, a))| v * v - x * a)
        .collect();
    Ok(TeoSeries {
        grid: *grid,
        value,
        edge: 2 * stencil.reach(),
    })
}

/// Classic discrete Teager-Kaiser operator `x[k]^2 - x[k-1] x[k+1]`, in
/// units of signal squared per sample squared. Endpoints copy the nearest
/// interior value.
pub fn teo_discrete_kaiser(x: &[f64]) -> Result<Vec<f64>, SignalError> {
    let n = x.len();
    if n < 3 {
        return Err(SignalError::TooShort { need: 3, got: n });
    }
    let mut out: Vec<f64> = Vec::with_capacity(n);
    out.push(0.0);
    out.extend(x.windows(3).map(|w| w[1] * w[1] - w[0] * w[2]));
    out[0] = out[1];
    out.push(out[n - 2]);
    Ok(out)
}

pub fn lie_bracket(x: &[f64], y: &[f64], grid: &TimeGrid) -> Result<Vec<f64>, SignalError> {
    lie_bracket_with(x, y, grid, Stencil::Central2)
}

/// `[x, y] = x' y - x y'`.
pub fn lie_bracket_with(
    x: &[f64],
    y: &[f64],
    grid: &TimeGrid,
    stencil: Stencil,
) -> Result<Vec<f64>, SignalError> {
    grid.check_len(x.len())?;
    grid.check_len(y.len())?;
    let dx = derivative(x, grid.dt(), stencil)?;
    let dy = derivative(y, grid.dt(), stencil)?;
    Ok((0..x.len()).map(|k| dx[k] * y[k] - x[k] * dy[k]).collect())
}

pub fn teo_complex(x: &ParkSeries) -> Result<TeoSeries, SignalError> {
    teo_complex_with(x, Stencil::Central2)
}

/// `psi_c(x) = |x'|^2 - 1/2 (x'' conj(x) + x conj(x''))`, evaluated in
/// complex arithmetic.
pub fn teo_complex_with(x: &ParkSeries, stencil: Stencil) -> Result<TeoSeries, SignalError> {
    let (dd1, dd2) = first_and_second(&x.d, &x.grid, stencil)?;
    let (dq1, dq2) = first_and_second(&x.q, &x.grid, stencil)?;
    let value = (0..x.len())
        .map(|k| {
            let z = x.get(k);
            let z1 = Complex64::new(dd1[k], dq1[k]);
            let z2 = Complex64::new(dd2[k], dq2[k]);
            let cross = z2 * z.conj() + z * z2.conj();
            (z1.conj() * z1).re - 0.5 * cross.re
        })
        .collect();
    Ok(TeoSeries {
        grid: x.grid,
        value,
        edge: 2 * stencil.reach(),
    })
}

pub fn conditional_variance(a: &[f64], grid: &TimeGrid) -> Result<ConditionalVarianceSeries, SignalError> {
    conditional_variance_with(a, grid, Stencil::Central2)
}

/// Computed from the amplitude `a` directly. Samples with `a < EPS_MAG`
/// and everything within two stencil passes of them are flagged invalid
/// (value NaN).
pub fn conditional_variance_with(
    a: &[f64],
    grid: &TimeGrid,
    stencil: Stencil,
) -> Result<ConditionalVarianceSeries, SignalError> {
    grid.check_len(a.len())?;
    let degenerate: Vec<bool> = a.iter().map(|v| !(v.abs() >= EPS_MAG)).collect();
    let filled = carry_forward(a, &degenerate);
    let (d1, d2) = first_and_second(&filled, grid, stencil)?;
    let invalid = dilate(&degenerate, 2 * stencil.reach());
    let value = (0..a.len())
        .map(|k| {
            if invalid[k] {
                return f64::NAN;
            }
            let rho = d1[k] / filled[k];
            0.5 * (rho * rho - d2[k] / filled[k])
        })
        .collect();
    Ok(ConditionalVarianceSeries {
        grid: *grid,
        value,
        valid: invalid.iter().map(|b| !b).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dt: f64, n: usize) -> TimeGrid {
        TimeGrid::new(0.0, dt, n).unwrap()
    }

    fn sample(g: &TimeGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        g.times().map(f).collect()
    }

    #[test]
    fn teo_of_cosine_is_a2w2() {
        let g = grid(1e-3, 5000);
        let x = sample(&g, |t| (2.0 * t).cos());
        let psi = teo_real(&x, &g).unwrap();
        for k in psi.edge..g.len() - psi.edge {
            assert!((psi.value[k] - 4.0).abs() < 1e-5, "{}", psi.value[k]);
        }
    }

    #[test]
    fn teo_of_decaying_exponential_vanishes() {
        let g = grid(1e-3, 5000);
        let x = sample(&g, |t| (-t).exp());
        let psi = teo_real(&x, &g).unwrap();
        for k in 2..g.len() - 2 {
            assert!(psi.value[k].abs() < 1e-5);
        }
    }

    #[test]
    fn teo_of_ramp_is_one() {
        let g = grid(0.1, 20);
        let x = sample(&g, |t| t);
        let psi = teo_real(&x, &g).unwrap();
        for k in 2..18 {
            assert!((psi.value[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn teo_needs_five_samples() {
        let g = grid(0.1, 4);
        assert!(teo_real(&[1.0, 2.0, 3.0, 4.0], &g).is_err());
        assert_eq!(Stencil::Central2.min_len().max(5), two_pass_len(Stencil::Central2));
    }

    #[test]
    fn kaiser_examples() {
        assert_eq!(teo_discrete_kaiser(&[1.0; 4]).unwrap(), vec![0.0; 4]);
        assert_eq!(teo_discrete_kaiser(&[0.0, 1.0, 2.0, 3.0]).unwrap(), vec![1.0; 4]);
        let omega: f64 = 0.1;
        let x: Vec<f64> = (0..200).map(|k| (omega * k as f64).cos()).collect();
        let expected = omega.sin().powi(2);
        assert!((expected - 9.966711079379187e-3).abs() < 1e-15);
        for v in teo_discrete_kaiser(&x).unwrap() {
            assert!((v - expected).abs() < 1e-14);
        }
        assert!(teo_discrete_kaiser(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn lie_bracket_examples() {
        let g = grid(1e-3, 4000);
        let x = sample(&g, |t| (2.0 * t).cos());
        assert!(lie_bracket(&x, &x, &g).unwrap().iter().all(|v| *v == 0.0));

        let dx = derivative(&x, g.dt(), Stencil::Central2).unwrap();
        let bracket = lie_bracket(&x, &dx, &g).unwrap();
        let psi = teo_real(&x, &g).unwrap();
        for k in 2..g.len() - 2 {
            assert_eq!(bracket[k], psi.value[k]);
            assert!((bracket[k] - 4.0).abs() < 1e-5);
        }

        let g = grid(0.1, 30);
        let x = sample(&g, |t| t);
        let y = sample(&g, |t| t * t);
        let b = lie_bracket(&x, &y, &g).unwrap();
        for (k, t) in g.times().enumerate() {
            assert!((b[k] + t * t).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn complex_teo_examples() {
        let g = grid(1e-3, 3000);
        let c = ParkSeries::new(g, vec![3.0; 3000], vec![4.0; 3000]).unwrap();
        assert!(teo_complex(&c).unwrap().value.iter().all(|v| *v == 0.0));

        let rot = ParkSeries::from_fn(g, |t| Complex64::from_polar(1.0, 2.0 * t)).unwrap();
        let psi = teo_complex(&rot).unwrap();
        for k in 2..g.len() - 2 {
            assert!((psi.value[k] - 8.0).abs() < 1e-4);
        }

        // eta = -1 + 2j: psi_c = (|eta|^2 - Re(eta^2)) |x|^2 = 8 e^{-2t}
        let eta = Complex64::new(-1.0, 2.0);
        let x = ParkSeries::from_fn(g, |t| (eta * t).exp()).unwrap();
        let psi = teo_complex(&x).unwrap();
        for k in 2..g.len() - 2 {
            let t = g.time(k);
            let expect = 8.0 * (-2.0 * t).exp();
            assert!((psi.value[k] - expect).abs() < 1e-5 * expect, "k={k}");
        }
    }

    #[test]
    fn conditional_variance_examples() {
        let g = grid(1e-3, 3000);
        let ones = vec![1.0; 3000];
        assert!(conditional_variance(&ones, &g).unwrap().value.iter().all(|v| *v == 0.0));

        let a = sample(&g, |t| (-1.5 * t).exp());
        let cv = conditional_variance(&a, &g).unwrap();
        for k in 4..g.len() - 4 {
            assert!(cv.value[k].abs() < 1e-8);
        }

        let alpha = 0.8;
        let g = TimeGrid::new(-3.0, 1e-3, 6001).unwrap();
        let a = sample(&g, |t| (-alpha * t * t / 2.0).exp());
        let cv = conditional_variance(&a, &g).unwrap();
        for k in 2..g.len() - 2 {
            assert!((cv.value[k] - 0.4).abs() < 4e-5, "{}", cv.value[k]);
        }
    }

    #[test]
    fn conditional_variance_can_be_negative() {
        // a = cosh(t): a'/a = tanh, a''/a = 1, so the spread is -sech^2 / 2.
        let g = TimeGrid::new(-2.0, 1e-3, 4001).unwrap();
        let a = sample(&g, f64::cosh);
        let cv = conditional_variance(&a, &g).unwrap();
        let mid = 2000;
        assert!((cv.value[mid] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn conditional_variance_flags_degenerate_amplitude() {
        let g = grid(1e-3, 50);
        let mut a = vec![1.0; 50];
        a[25] = 0.0;
        let cv = conditional_variance(&a, &g).unwrap();
        for k in 0..50 {
            let bad = (23..=27).contains(&k);
            assert_eq!(cv.valid[k], !bad);
            assert_eq!(cv.value[k].is_nan(), bad);
        }
    }
}
