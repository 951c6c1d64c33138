//! Fixed-step classical Runge-Kutta for linear matrix ODEs `dY/dt = A(t) Y`,
//! with a step-halving error estimate.

use std::ops::Mul;

use ndarray::{Array2, LinalgScalar, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real or complex state entries.
pub trait Scalar: LinalgScalar + Mul<f64, Output = Self> {
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Right-hand side of a linear system: writes `A(t) y` into `out`.
pub trait LinearRhs<T = Complex64> {
    fn apply(&self, t: f64, y: &Array2<T>, out: &mut Array2<T>);
}

impl<T, F> LinearRhs<T> for F
where
    F: Fn(f64, &Array2<T>, &mut Array2<T>),
{
    fn apply(&self, t: f64, y: &Array2<T>, out: &mut Array2<T>) {
        self(t, y, out)
    }
}

/// Integrates from `t0` to `t1` in `steps` equal RK4 steps.
pub fn rk4<T: Scalar, R: LinearRhs<T> + ?Sized>(
    rhs: &R,
    y0: &Array2<T>,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Array2<T> {
    assert!(steps > 0);
    let h = (t1 - t0) / steps as f64;
    let half = 0.5 * h;
    let full = h;
    let sixth = h / 6.0;

    let mut y = y0.clone();
    let mut k1 = Array2::zeros(y.raw_dim());
    let mut k2 = Array2::zeros(y.raw_dim());
    let mut k3 = Array2::zeros(y.raw_dim());
    let mut k4 = Array2::zeros(y.raw_dim());
    let mut stage = Array2::zeros(y.raw_dim());

    for step in 0..steps {
        // t from the step index so rounding does not drift over long runs
        let t = t0 + step as f64 * h;
        let t_next = t0 + (step + 1) as f64 * h;
        rhs.apply(t, &y, &mut k1);
        Zip::from(&mut stage).and(&y).and(&k1).for_each(|s, &y, &k| *s = y + k * half);
        rhs.apply(t + 0.5 * h, &stage, &mut k2);
        Zip::from(&mut stage).and(&y).and(&k2).for_each(|s, &y, &k| *s = y + k * half);
        rhs.apply(t + 0.5 * h, &stage, &mut k3);
        Zip::from(&mut stage).and(&y).and(&k3).for_each(|s, &y, &k| *s = y + k * full);
        rhs.apply(t_next, &stage, &mut k4);
        Zip::from(&mut y)
            .and(&k1)
            .and(&k2)
            .and(&k3)
            .and(&k4)
            .for_each(|y, &a, &b, &c, &d| *y = *y + (a + (b + c) * 2.0 + d) * sixth);
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegrationReport {
    /// Steps of the accepted (finest) run.
    pub steps: usize,
    pub step_size: f64,
    /// Estimated relative global error of the accepted run.
    pub error_estimate: f64,
    /// Number of times the step was halved beyond the first comparison.
    pub refinements: usize,
    /// Total right-hand-side evaluations across all runs.
    pub evaluations: usize,
}

/// Largest element modulus.
pub fn max_norm<T: Scalar>(a: &Array2<T>) -> f64 {
    a.iter().map(|z| z.modulus()).fold(0.0, f64::max)
}

/// Runs RK4 with `initial_steps` and with half the step, halving further
/// until the Richardson estimate `max|Y_h - Y_{h/2}| / 15 / max|Y_{h/2}|`
/// drops to `rel_tolerance`. Returns the finest solution.
pub fn integrate_with_halving<T: Scalar, R: LinearRhs<T> + ?Sized>(
    rhs: &R,
    y0: &Array2<T>,
    t0: f64,
    t1: f64,
    initial_steps: usize,
    rel_tolerance: f64,
    max_refinements: usize,
) -> Result<(Array2<T>, IntegrationReport)> {
    let mut steps = initial_steps.max(1);
    let mut evaluations = 4 * steps;
    let mut coarse = rk4(rhs, y0, t0, t1, steps);
    let mut refinements = 0;
    loop {
        steps *= 2;
        evaluations += 4 * steps;
        let fine = rk4(rhs, y0, t0, t1, steps);
        let scale = max_norm(&fine);
        let diff = fine
            .iter()
            .zip(coarse.iter())
            .map(|(&a, &b)| (a - b).modulus())
            .fold(0.0, f64::max);
        let error_estimate = if scale > 0.0 { diff / 15.0 / scale } else { diff };
        let report = IntegrationReport {
            steps,
            step_size: (t1 - t0) / steps as f64,
            error_estimate,
            refinements,
            evaluations,
        };
        if !error_estimate.is_finite() {
            return Err(Error::Integration {
                tolerance: rel_tolerance,
                achieved: error_estimate,
                steps,
                step: report.step_size,
            });
        }
        if error_estimate <= rel_tolerance {
            return Ok((fine, report));
        }
        if refinements >= max_refinements {
            return Err(Error::Integration {
                tolerance: rel_tolerance,
                achieved: error_estimate,
                steps,
                step: report.step_size,
            });
        }
        refinements += 1;
        coarse = fine;
    }
}
