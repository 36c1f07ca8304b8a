//! Gardner's periodic Evans function `E(lambda) = det(Psi(X) - I)` from the monodromy
//! matrix of the first-order system `W' = A(lambda, x) W`, `W = (U, U')`, with
//! `A = [[0, I], [lambda B0 - A0 - A1', -A1]]`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::bridge::log_gamma;
use crate::error::{Error, Result};
use crate::fourier::{CMatrix, FourierSeries};
use crate::logdet::{log_det, LogDet};
use crate::ode::{integrate, IntegratorOptions, IntegratorStats};
use crate::problem::SpectralProblem;

pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-6;

/// Relative agreement required between the two closed-form expressions for `F`.
pub const CLOSED_FORM_AGREEMENT: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FirstOrderSystem {
    pub lambda: Complex64,
    n: usize,
    period: f64,
    a1: FourierSeries,
    a0: FourierSeries,
    b0: FourierSeries,
    da1: FourierSeries,
}

impl FirstOrderSystem {
    pub fn new(problem: &SpectralProblem, lambda: Complex64) -> Self {
        FirstOrderSystem {
            lambda,
            n: problem.n(),
            period: problem.period(),
            a1: problem.a1().clone(),
            a0: problem.a0().clone(),
            b0: problem.b0().clone(),
            da1: problem.a1().differentiate(),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// The `2n x 2n` coefficient matrix at `x`.
    pub fn matrix_at(&self, x: f64) -> CMatrix {
        let n = self.n;
        let mut a = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            a[(i, n + i)] = Complex64::new(1.0, 0.0);
        }
        let lower_left =
            self.b0.evaluate(x) * self.lambda - self.a0.evaluate(x) - self.da1.evaluate(x);
        a.view_mut((n, 0), (n, n)).copy_from(&lower_left);
        a.view_mut((n, n), (n, n))
            .copy_from(&(-self.a1.evaluate(x)));
        a
    }
}

#[derive(Clone, Debug)]
pub struct Monodromy {
    /// Fundamental solution at `x = X` with `Psi(0) = I`.
    pub psi: CMatrix,
    pub stats: IntegratorStats,
}

impl Monodromy {
    /// Relative deviation of `det Psi(X)` from `exp(-X tr mean(A1))`.
    pub fn abel_residual(&self, problem: &SpectralProblem) -> f64 {
        let expected = (-problem.a1().mean().trace() * problem.period()).exp();
        let det = log_det(&self.psi).to_complex();
        (det - expected).norm() / expected.norm()
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if (MIN_TOL..=MAX_TOL).contains(&tol) {
        Ok(())
    } else {
        Err(Error::Tolerance(tol))
    }
}

/// Integrates the first-order system over one period, all columns with a shared step.
pub fn monodromy(system: &FirstOrderSystem, tol: f64) -> Result<Monodromy> {
    check_tol(tol)?;
    let (psi, stats) = integrate(
        |x, y| system.matrix_at(x) * y,
        0.0,
        system.period(),
        CMatrix::identity(system.dim(), system.dim()),
        &IntegratorOptions::with_tol(tol),
    )?;
    Ok(Monodromy { psi, stats })
}

fn psi_minus_identity_det(psi: &CMatrix) -> Complex64 {
    let m = psi - CMatrix::identity(psi.nrows(), psi.ncols());
    log_det(&m).to_complex()
}

/// `E(lambda) = det(Psi(X) - I)`.
pub fn gardner_e(problem: &SpectralProblem, lambda: Complex64, tol: f64) -> Result<Complex64> {
    Ok(evans_sample(problem, lambda, tol)?.e)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EvansSample {
    pub lambda: Complex64,
    pub e: Complex64,
    pub abel_residual: f64,
    pub steps: usize,
}

pub fn evans_sample(problem: &SpectralProblem, lambda: Complex64, tol: f64) -> Result<EvansSample> {
    let mono = monodromy(&FirstOrderSystem::new(problem, lambda), tol)?;
    Ok(EvansSample {
        lambda,
        e: psi_minus_identity_det(&mono.psi),
        abel_residual: mono.abel_residual(problem),
        steps: mono.stats.steps,
    })
}

/// CSV with columns `re,im,re_E,im_E,abel_residual,steps`.
pub fn evans_samples_to_csv(samples: &[EvansSample]) -> String {
    let mut s = String::from("re,im,re_E,im_E,abel_residual,steps\n");
    for e in samples {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            e.lambda.re, e.lambda.im, e.e.re, e.e.im, e.abel_residual, e.steps
        )
        .unwrap();
    }
    s
}

/// `ln(gamma (e^X - 1)^{-2n})`.
pub fn log_bridge_scale(problem: &SpectralProblem) -> Complex64 {
    let x = problem.period();
    let n = problem.n() as f64;
    // ln(e^X - 1) = X + ln(1 - e^{-X})
    log_gamma(problem) - 2.0 * n * (x + (-(-x).exp()).ln_1p())
}

/// `F(lambda)` from an already computed monodromy matrix, checked against the
/// equivalent form `gamma det(I - e^X/(1 - e^X) (e^{-X} Psi - I))`.
pub fn closed_form_f_from_monodromy(
    problem: &SpectralProblem,
    mono: &Monodromy,
) -> Result<Complex64> {
    let dim = mono.psi.nrows();
    let x = problem.period();
    let scale = log_bridge_scale(problem);
    let e = LogDet::from_complex(psi_minus_identity_det(&mono.psi));
    let primary = (LogDet::exp(scale) * e).to_complex();

    let c = Complex64::new(x.exp() / (1.0 - x.exp()), 0.0);
    let inner = (&mono.psi * Complex64::new((-x).exp(), 0.0)) - CMatrix::identity(dim, dim);
    let m = CMatrix::identity(dim, dim) - inner * c;
    let alternate = (LogDet::exp(log_gamma(problem)) * log_det(&m)).to_complex();

    // Near zeros of E both forms cancel; fall back to an absolute floor on the natural scale.
    let natural = scale.re.exp() * (1.0 + mono.psi.norm()).powi(dim as i32);
    let denom = primary.norm().max(1e-6 * natural);
    let rel = (primary - alternate).norm() / denom;
    // The identity parts of `I - c (e^{-X} Psi - I)` cancel to O(e^{-X}), which costs
    // the alternate form about eps e^X of relative accuracy per entry.
    let allowed = CLOSED_FORM_AGREEMENT.max(8.0 * dim as f64 * f64::EPSILON * x.exp());
    if rel > allowed {
        return Err(Error::ClosedFormMismatch(rel));
    }
    Ok(primary)
}

/// `F(lambda) = gamma (e^X - 1)^{-2n} E(lambda)`.
pub fn closed_form_f(problem: &SpectralProblem, lambda: Complex64, tol: f64) -> Result<Complex64> {
    let mono = monodromy(&FirstOrderSystem::new(problem, lambda), tol)?;
    closed_form_f_from_monodromy(problem, &mono)
}

/// `det(I - Psi(X)^{-1})`.
pub fn backward_evans(problem: &SpectralProblem, lambda: Complex64, tol: f64) -> Result<Complex64> {
    let mono = monodromy(&FirstOrderSystem::new(problem, lambda), tol)?;
    backward_evans_from_monodromy(&mono)
}

pub fn backward_evans_from_monodromy(mono: &Monodromy) -> Result<Complex64> {
    let det = log_det(&mono.psi).to_complex().norm();
    if !(det >= 1e-12) {
        return Err(Error::SingularMonodromy(det));
    }
    let inv = mono
        .psi
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMonodromy(det))?;
    let dim = inv.nrows();
    Ok(log_det(&(CMatrix::identity(dim, dim) - inv)).to_complex())
}
