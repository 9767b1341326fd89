//! Fixed-step classical Runge-Kutta integration.

/// One RK4 step of `y' = f(t, y)` from `t` to `t + h`.
pub fn rk4_step<const N: usize, F>(f: F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| -> [f64; N] {
        std::array::from_fn(|i| a[i] + s * b[i])
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let run = |h: f64| {
            let steps = (1.0 / h).round() as usize;
            let mut y = [1.0];
            for k in 0..steps {
                y = rk4_step(|_, y: &[f64; 1]| [-y[0]], k as f64 * h, &y, h);
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let order = (run(0.1) / run(0.05)).log2();
        assert!((order - 4.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn harmonic_oscillator_stays_on_circle() {
        let h = 1e-3;
        let mut y = [1.0, 0.0];
        for k in 0..10_000 {
            y = rk4_step(|_, y: &[f64; 2]| [y[1], -y[0]], k as f64 * h, &y, h);
        }
        assert!((y[0] - 10.0f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10.0f64.sin()).abs() < 1e-10);
    }
}
