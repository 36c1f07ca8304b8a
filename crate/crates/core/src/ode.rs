//! Adaptive Dormand-Prince 5(4) integration of linear matrix ODEs `Y' = A(x) Y`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::CMatrix;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_STEPS: usize = 10_000_000;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Difference between the fifth- and embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions {
    /// Mixed absolute/relative local error bound per step.
    pub tol: f64,
    /// Initial step as a fraction of the interval length.
    pub initial_step_fraction: f64,
    pub max_steps: usize,
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorOptions {
            tol,
            ..Self::default()
        }
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: DEFAULT_TOL,
            initial_step_fraction: 1e-3,
            max_steps: MAX_STEPS,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest accepted scaled local error estimate (1.0 means exactly at `tol`).
    pub max_local_error: f64,
}

fn combo(y: &CMatrix, h: f64, ks: &[CMatrix], weights: &[f64]) -> CMatrix {
    let mut out = y.clone();
    for (k, w) in ks.iter().zip(weights) {
        if *w != 0.0 {
            out += k * Complex64::new(h * w, 0.0);
        }
    }
    out
}

/// Integrates `Y' = rhs(x, Y)` from `x0` to `x1 > x0`.
pub fn integrate<F>(
    rhs: F,
    x0: f64,
    x1: f64,
    y0: CMatrix,
    opts: &IntegratorOptions,
) -> Result<(CMatrix, IntegratorStats)>
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    let span = x1 - x0;
    let mut x = x0;
    let mut y = y0;
    let mut h = span * opts.initial_step_fraction;
    let mut k1 = rhs(x, &y);
    let mut stats = IntegratorStats::default();
    let mut last_rejected = false;

    while x < x1 {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::MaxSteps {
                steps: opts.max_steps,
                x,
            });
        }
        if h < 1e-14 * span.max(x.abs()) {
            return Err(Error::StepUnderflow { x, h });
        }
        let last = x + h >= x1;
        if last {
            h = x1 - x;
        }

        let mut ks: Vec<CMatrix> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for (i, a) in [&A2[..], &A3, &A4, &A5, &A6].into_iter().enumerate() {
            let yi = combo(&y, h, &ks, a);
            ks.push(rhs(x + C[i + 1] * h, &yi));
        }
        let y_new = combo(&y, h, &ks, &B);
        ks.push(rhs(x + C[6] * h, &y_new));

        let mut err_mat = CMatrix::zeros(y.nrows(), y.ncols());
        for (k, e) in ks.iter().zip(E) {
            if e != 0.0 {
                err_mat += k * Complex64::new(h * e, 0.0);
            }
        }
        let mut acc = 0.0;
        for ((e, a), b) in err_mat.iter().zip(y.iter()).zip(y_new.iter()) {
            let sc = opts.tol * (1.0 + a.norm().max(b.norm()));
            acc += (e.norm() / sc).powi(2);
        }
        let err = (acc / err_mat.len() as f64).sqrt();

        if err <= 1.0 {
            x = if last { x1 } else { x + h };
            y = y_new;
            k1 = ks.pop().expect("seven stages");
            stats.steps += 1;
            stats.max_local_error = stats.max_local_error.max(err);
            let grow = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= if last_rejected { grow.min(1.0) } else { grow };
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_exponential() {
        let a = Complex64::new(-0.5, 2.0);
        let y0 = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let (y, stats) =
            integrate(|_, y| y * a, 0.0, 3.0, y0, &IntegratorOptions::default()).unwrap();
        let exact = (a * 3.0).exp();
        assert!((y[(0, 0)] - exact).norm() < 1e-9);
        assert!(stats.steps > 0);
    }

    #[test]
    fn rotation_returns_to_identity() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let (y, _) = integrate(
            |_, y| &a * y,
            0.0,
            2.0 * std::f64::consts::PI,
            CMatrix::identity(2, 2),
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert!((y - CMatrix::identity(2, 2)).norm() < 1e-9);
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = IntegratorOptions {
            max_steps: 3,
            ..IntegratorOptions::default()
        };
        let y0 = CMatrix::identity(1, 1);
        let r = integrate(|_, y| y * Complex64::new(0.0, 50.0), 0.0, 10.0, y0, &opts);
        assert!(matches!(r, Err(Error::MaxSteps { .. })));
    }
}
