//! Classical fixed-step fourth-order Runge-Kutta.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) trait Axpy: Sized {
    /// `self + a·k`
    fn add_scaled(&self, a: f64, k: &Self) -> Self;
}

impl Axpy for DMatrix<Complex64> {
    fn add_scaled(&self, a: f64, k: &Self) -> Self {
        let mut out = self.clone();
        out.zip_apply(k, |o, ki| *o += ki * a);
        out
    }
}

pub(crate) fn rk4_step<S: Axpy>(y: &S, t: f64, h: f64, mut f: impl FnMut(f64, &S) -> S) -> S {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &y.add_scaled(0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &y.add_scaled(0.5 * h, &k2));
    let k4 = f(t + h, &y.add_scaled(h, &k3));
    y.add_scaled(h / 6.0, &k1)
        .add_scaled(h / 3.0, &k2)
        .add_scaled(h / 3.0, &k3)
        .add_scaled(h / 6.0, &k4)
}

/// Uniform grid of `n` steps covering `[t0, t1]` with step `≤ dt`.
pub(crate) fn step_count(t0: f64, t1: f64, dt: f64) -> usize {
    let n = ((t1 - t0) / dt - 1e-9).ceil();
    (n.max(0.0)) as usize
}
