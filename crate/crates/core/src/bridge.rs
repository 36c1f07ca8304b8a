//! Constants relating the second-order determinant `D`, the first-order determinant `F`
//! and Gardner's Evans function `E`, and an end-to-end verifier for
//! `D(lambda) = c(lambda) E(lambda)`.
//!
//! Two conventions are provided. `Printed` is the textbook statement
//! `D = e^{delta - delta_hat} / epsilon * F` with `epsilon = prod (1 + 2/(ij+1))`.
//! `Corrected` is what the finite truncations actually satisfy with the sign conventions
//! of [`crate::fredholm`]: `D_J / F_J = (-1)^n exp(tr K_J - tr Khat_J)`, i.e. exponent
//! `-delta - delta_hat` and `epsilon = prod (1 - 2/(ij+1))^n = (-1)^n`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evans::{closed_form_f_from_monodromy, monodromy, FirstOrderSystem};
use crate::fredholm::{dj_det, fj_det};
use crate::hill::TruncatedSystem;
use crate::logdet::{log_det, LogDet};
use crate::problem::SpectralProblem;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaReading {
    /// Trace of the zero mode of `A0`.
    A0,
    /// Trace of the zero mode of `A1`.
    A1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Printed,
    Corrected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsMode {
    /// Infinite sums and products in closed form.
    Closed,
    /// Sums and products truncated at `|j| <= J`.
    Partial(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorOptions {
    pub mode: ConstantsMode,
    pub reading: DeltaReading,
    pub convention: Convention,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            mode: ConstantsMode::Closed,
            reading: DeltaReading::A0,
            convention: Convention::Corrected,
        }
    }
}

pub fn pi_coth_pi() -> f64 {
    PI / PI.tanh()
}

/// `sum_{|j| <= J} 1 / (j^2 + 1)`, summed from the small end.
pub fn inv_square_sum(j_max: usize) -> f64 {
    let tail: f64 = (1..=j_max)
        .rev()
        .map(|j| 1.0 / ((j * j) as f64 + 1.0))
        .sum();
    1.0 + 2.0 * tail
}

/// `1 + sum_{1 <= |j| <= J} 1 / (j^2 + ij)`, evaluated term by term in complex arithmetic.
pub fn hat_series(j_max: usize) -> Complex64 {
    let mut s = c(0.0, 0.0);
    for j in (1..=j_max).rev() {
        let jf = j as f64;
        s += c(1.0, 0.0) / c(jf * jf, jf) + c(1.0, 0.0) / c(jf * jf, -jf);
    }
    s + 1.0
}

fn series_values(mode: ConstantsMode) -> (f64, Complex64) {
    match mode {
        ConstantsMode::Closed => (pi_coth_pi(), c(pi_coth_pi(), 0.0)),
        ConstantsMode::Partial(j) => (inv_square_sum(j), hat_series(j)),
    }
}

/// `ln gamma = e^X / (e^X - 1) (tr mean(A1) + 2n) X`.
pub fn log_gamma(problem: &SpectralProblem) -> Complex64 {
    let x = problem.period();
    let weight = 1.0 / -(-x).exp_m1();
    (problem.a1().mean().trace() + 2.0 * problem.n() as f64) * (weight * x)
}

pub fn gamma_const(problem: &SpectralProblem) -> Complex64 {
    log_gamma(problem).exp()
}

fn require_normalized(problem: &SpectralProblem) -> Result<()> {
    if problem.is_normalized() {
        Ok(())
    } else {
        Err(Error::PeriodNotNormalized(problem.period()))
    }
}

/// `(delta, delta_hat)` with
/// `delta = -tr(A_r + I - lambda B0_0) sum 1/(j^2+1)` (`A_r` the zero mode selected by `reading`)
/// and `delta_hat = tr(A1_0 + 2I) (1 + sum 1/(j^2+ij))`.
pub fn delta_consts(
    problem: &SpectralProblem,
    lambda: Complex64,
    mode: ConstantsMode,
    reading: DeltaReading,
) -> Result<(Complex64, Complex64)> {
    require_normalized(problem)?;
    if mode == ConstantsMode::Partial(0) {
        return Err(Error::Schema("partial constants need J >= 1".into()));
    }
    let n = problem.n() as f64;
    let (s, s_hat) = series_values(mode);
    let zero_mode = match reading {
        DeltaReading::A0 => problem.a0().mean(),
        DeltaReading::A1 => problem.a1().mean(),
    };
    let tr = zero_mode.trace() + n - lambda * problem.b0().mean().trace();
    let delta = -tr * s;
    let delta_hat = (problem.a1().mean().trace() + 2.0 * n) * s_hat;
    Ok((delta, delta_hat))
}

fn pair_product(j_max: usize, sign: f64) -> Complex64 {
    let factor = |j: f64| c(1.0, 0.0) + c(2.0 * sign, 0.0) / c(1.0, j);
    let mut p = factor(0.0);
    for j in 1..=j_max {
        let jf = j as f64;
        p *= factor(jf) * factor(-jf);
    }
    p
}

/// `prod_{|j| <= J} (1 + 2/(ij + 1))` with complex intermediates.
pub fn epsilon_partial_complex(j_max: usize) -> Complex64 {
    pair_product(j_max, 1.0)
}

pub fn epsilon_const(j_max: usize) -> f64 {
    epsilon_partial_complex(j_max).re
}

/// `sinh(3 pi) / sinh(pi)`, from `prod_j (1 + a^2/j^2) = sinh(pi a) / (pi a)` with `a = 3, 1`.
pub fn epsilon_closed() -> f64 {
    (3.0 * PI).sinh() / PI.sinh()
}

/// `prod_{|j| <= J} (1 - 2/(ij + 1))`, which is `-1` for every `J`. Each of the `n`
/// components contributes one such factor.
pub fn epsilon_corrected(j_max: usize) -> f64 {
    pair_product(j_max, -1.0).re
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BridgeConstants {
    pub gamma: Complex64,
    pub delta: Complex64,
    pub delta_hat: Complex64,
    pub epsilon: f64,
    pub j_used: ConstantsMode,
    pub period: f64,
}

impl BridgeConstants {
    pub fn compute(
        problem: &SpectralProblem,
        lambda: Complex64,
        mode: ConstantsMode,
        reading: DeltaReading,
    ) -> Result<Self> {
        let (delta, delta_hat) = delta_consts(problem, lambda, mode, reading)?;
        let epsilon = match mode {
            ConstantsMode::Closed => epsilon_closed(),
            ConstantsMode::Partial(j) => epsilon_const(j),
        };
        Ok(BridgeConstants {
            gamma: gamma_const(problem),
            delta,
            delta_hat,
            epsilon,
            j_used: mode,
            period: problem.period(),
        })
    }
}

/// Predicted `D(lambda) / E(lambda)`.
pub fn predicted_factor(
    problem: &SpectralProblem,
    lambda: Complex64,
    opts: FactorOptions,
) -> Result<LogDet> {
    let (delta, delta_hat) = delta_consts(problem, lambda, opts.mode, opts.reading)?;
    let (exponent, epsilon) = match opts.convention {
        Convention::Printed => (
            delta - delta_hat,
            match opts.mode {
                ConstantsMode::Closed => epsilon_closed(),
                ConstantsMode::Partial(j) => epsilon_const(j),
            },
        ),
        Convention::Corrected => (
            -delta - delta_hat,
            match opts.mode {
                ConstantsMode::Closed => -1.0,
                ConstantsMode::Partial(j) => epsilon_corrected(j),
            }
            .powi(problem.n() as i32),
        ),
    };
    let scale = crate::evans::log_bridge_scale(problem);
    Ok(LogDet::exp(exponent + scale) * LogDet::from_complex(c(epsilon, 0.0)).inv())
}

/// Points with `|E| < MIN_EVANS` are skipped by [`verify_relation`].
pub const MIN_EVANS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// `D_J / (c E)`.
    R1,
    /// `F_J / F`.
    R2,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioEntry {
    pub lambda: Complex64,
    #[serde(rename = "J")]
    pub j: usize,
    pub quantity: Quantity,
    pub convention: Option<Convention>,
    pub delta_reading: Option<DeltaReading>,
    pub ratio_logmag_error: f64,
    pub ratio_phase_error: f64,
    /// `|r - 1|`.
    pub abs_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioSeries {
    pub quantity: Quantity,
    pub convention: Option<Convention>,
    pub delta_reading: Option<DeltaReading>,
    pub js: Vec<usize>,
    /// Median of `|r - 1|` over the accepted lambda points, per `J`.
    pub median_errors: Vec<f64>,
    pub decreasing: bool,
    pub final_within_tol: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedPoint {
    pub lambda: Complex64,
    pub evans_magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub tol: f64,
    pub constants_mode: ConstantsMode,
    pub entries: Vec<RatioEntry>,
    pub series: Vec<RatioSeries>,
    pub skipped: Vec<SkippedPoint>,
}

impl RelationReport {
    pub fn series_for(
        &self,
        quantity: Quantity,
        convention: Option<Convention>,
        reading: Option<DeltaReading>,
    ) -> Option<&RatioSeries> {
        self.series.iter().find(|s| {
            s.quantity == quantity && s.convention == convention && s.delta_reading == reading
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,J,quantity,convention,delta_reading,ratio_logmag_error,ratio_phase_error,abs_error\n");
        let label = |v: Option<&str>| v.unwrap_or("").to_string();
        for e in &self.entries {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                e.lambda.re,
                e.lambda.im,
                e.j,
                match e.quantity {
                    Quantity::R1 => "r1",
                    Quantity::R2 => "r2",
                },
                label(e.convention.map(|c| match c {
                    Convention::Printed => "printed",
                    Convention::Corrected => "corrected",
                })),
                label(e.delta_reading.map(|r| match r {
                    DeltaReading::A0 => "a0",
                    DeltaReading::A1 => "a1",
                })),
                e.ratio_logmag_error,
                e.ratio_phase_error,
                e.abs_error
            )
            .unwrap();
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub constants_mode: ConstantsMode,
    /// Integrator tolerance for the monodromy matrix.
    pub ode_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            constants_mode: ConstantsMode::Closed,
            ode_tol: 1e-11,
        }
    }
}

fn abs_error(dlog: f64, dphase: f64) -> f64 {
    (Complex64::new(dlog, dphase).exp() - 1.0).norm()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Compares `D_J` and `F_J` against the Evans-function predictions for every
/// `(lambda, J)`, under both conventions and both delta readings.
pub fn verify_relation(
    problem: &SpectralProblem,
    lambdas: &[Complex64],
    js: &[usize],
    tol: f64,
    opts: VerifyOptions,
) -> Result<RelationReport> {
    require_normalized(problem)?;
    if js.is_empty() || js.contains(&0) {
        return Err(Error::Schema("J list must be nonempty and positive".into()));
    }

    // One monodromy per lambda gives E and the closed-form F.
    let evans: Vec<(Complex64, LogDet, LogDet)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let mono = monodromy(&FirstOrderSystem::new(problem, lambda), opts.ode_tol)?;
            let dim = mono.psi.nrows();
            let e = log_det(&(&mono.psi - crate::fourier::CMatrix::identity(dim, dim)));
            let f = if e.log_mag.exp() < MIN_EVANS {
                LogDet::ZERO
            } else {
                LogDet::from_complex(closed_form_f_from_monodromy(problem, &mono)?)
            };
            Ok((lambda, e, f))
        })
        .collect::<Result<_>>()?;

    let mut skipped = Vec::new();
    let mut accepted = Vec::new();
    for (lambda, e, f) in evans {
        let magnitude = e.log_mag.exp();
        if magnitude < MIN_EVANS {
            skipped.push(SkippedPoint {
                lambda,
                evans_magnitude: magnitude,
            });
        } else {
            accepted.push((lambda, e, f));
        }
    }
    if accepted.is_empty() {
        if let Some(s) = skipped.first() {
            return Err(Error::NearEigenvalue {
                lambda: s.lambda,
                magnitude: s.evans_magnitude,
            });
        }
    }

    let variants: Vec<(Convention, DeltaReading)> = [Convention::Corrected, Convention::Printed]
        .into_iter()
        .flat_map(|cv| [DeltaReading::A0, DeltaReading::A1].map(|r| (cv, r)))
        .collect();

    let tasks: Vec<(usize, usize)> = (0..accepted.len())
        .flat_map(|i| js.iter().map(move |&j| (i, j)))
        .collect();
    let per_task: Vec<Vec<RatioEntry>> = tasks
        .par_iter()
        .map(|&(i, j)| {
            let (lambda, e, f) = accepted[i];
            let trunc = TruncatedSystem::new(problem, j);
            let d_j = dj_det(&trunc, lambda);
            let f_j = fj_det(&trunc, lambda);
            let mode = match opts.constants_mode {
                ConstantsMode::Closed => ConstantsMode::Closed,
                ConstantsMode::Partial(_) => ConstantsMode::Partial(j),
            };
            let mut out = Vec::with_capacity(variants.len() + 1);
            for &(convention, reading) in &variants {
                let factor = predicted_factor(
                    problem,
                    lambda,
                    FactorOptions {
                        mode,
                        reading,
                        convention,
                    },
                )?;
                let (dl, dp) = d_j.ratio(factor * e);
                out.push(RatioEntry {
                    lambda,
                    j,
                    quantity: Quantity::R1,
                    convention: Some(convention),
                    delta_reading: Some(reading),
                    ratio_logmag_error: dl,
                    ratio_phase_error: dp,
                    abs_error: abs_error(dl, dp),
                });
            }
            let (dl, dp) = f_j.ratio(f);
            out.push(RatioEntry {
                lambda,
                j,
                quantity: Quantity::R2,
                convention: None,
                delta_reading: None,
                ratio_logmag_error: dl,
                ratio_phase_error: dp,
                abs_error: abs_error(dl, dp),
            });
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let entries: Vec<RatioEntry> = per_task.into_iter().flatten().collect();

    let keys: Vec<(Quantity, Option<Convention>, Option<DeltaReading>)> = variants
        .iter()
        .map(|&(cv, r)| (Quantity::R1, Some(cv), Some(r)))
        .chain(std::iter::once((Quantity::R2, None, None)))
        .collect();
    let series = keys
        .into_iter()
        .map(|(quantity, convention, delta_reading)| {
            let median_errors: Vec<f64> = js
                .iter()
                .map(|&j| {
                    let mut errs: Vec<f64> = entries
                        .iter()
                        .filter(|e| {
                            e.j == j
                                && e.quantity == quantity
                                && e.convention == convention
                                && e.delta_reading == delta_reading
                        })
                        .map(|e| e.abs_error)
                        .collect();
                    median(&mut errs)
                })
                .collect();
            let decreasing = median_errors.windows(2).all(|w| w[1] < w[0]);
            let final_within_tol = median_errors.last().is_some_and(|v| *v <= tol);
            RatioSeries {
                quantity,
                convention,
                delta_reading,
                js: js.to_vec(),
                median_errors,
                decreasing,
                final_within_tol,
            }
        })
        .collect();

    Ok(RelationReport {
        tol,
        constants_mode: opts.constants_mode,
        entries,
        series,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::FourierSeries;

    fn free() -> SpectralProblem {
        SpectralProblem::free(1, 2.0 * PI).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let x = 2.0 * PI;
        let g = gamma_const(&free());
        let want = (4.0 * PI * x.exp() / (x.exp() - 1.0)).exp();
        assert!((g.re / want - 1.0).abs() < 1e-13 && g.im == 0.0);

        // tr mean(A1) = -2n makes the exponent vanish
        let p = SpectralProblem::new(
            FourierSeries::scalar(x, &[(0, c(-2.0, 0.0))]).unwrap(),
            FourierSeries::zeros(1, x).unwrap(),
            FourierSeries::identity(1, x).unwrap(),
        )
        .unwrap();
        assert!((gamma_const(&p) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn free_closed_form_constants() {
        let (d, dh) = delta_consts(
            &free(),
            c(0.0, 0.0),
            ConstantsMode::Closed,
            DeltaReading::A0,
        )
        .unwrap();
        assert!((d.re + 3.153348).abs() < 1e-6 && d.im == 0.0);
        assert!((dh.re - 6.306696).abs() < 1e-6);
    }

    #[test]
    fn pi_coth_pi_from_partial_sums() {
        // Tail of 2 sum_{j>J} 1/j^2 is ~2/J.
        let s = inv_square_sum(1_000_000);
        assert!((s - pi_coth_pi()).abs() < 2.1e-6);
        let h = hat_series(1_000_000);
        assert!((h.re - pi_coth_pi()).abs() < 2.1e-6 && h.im.abs() < 1e-12);
    }

    #[test]
    fn delta_is_affine_and_delta_hat_constant() {
        let p = SpectralProblem::mathieu(0.5).unwrap();
        let mode = ConstantsMode::Partial(20);
        let l = c(0.3, -0.7);
        let (d0, h0) = delta_consts(&p, l, mode, DeltaReading::A0).unwrap();
        let (d1, h1) = delta_consts(&p, l + 1.0, mode, DeltaReading::A0).unwrap();
        let step = p.b0().mean().trace() * inv_square_sum(20);
        assert!((d1 - d0 - step).norm() < 1e-13);
        assert_eq!(h0, h1);
    }

    #[test]
    fn epsilon_values() {
        assert!((epsilon_const(1) - 15.0).abs() < 1e-12);
        let mut prev = 0.0;
        for j in [1, 2, 5, 10, 100, 1000] {
            let z = epsilon_partial_complex(j);
            assert!(z.im.abs() < 1e-12);
            assert!(z.re > prev);
            prev = z.re;
        }
        let rel = (epsilon_const(10_000) / epsilon_closed() - 1.0).abs();
        assert!(rel < 1e-3, "{rel}");
        assert!((epsilon_closed() - 536.5).abs() < 0.1);
        for j in [1, 7, 64] {
            assert!((epsilon_corrected(j) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_require_normalized_period() {
        let p = SpectralProblem::free(1, 3.0).unwrap();
        assert!(matches!(
            delta_consts(&p, c(0.0, 0.0), ConstantsMode::Closed, DeltaReading::A0),
            Err(Error::PeriodNotNormalized(_))
        ));
    }

    #[test]
    fn factor_ratio_is_exp_delta_difference() {
        let p = SpectralProblem::mathieu(0.5).unwrap();
        let (l1, l2) = (c(0.2, 0.1), c(-1.5, 2.0));
        for convention in [Convention::Printed, Convention::Corrected] {
            let opts = FactorOptions {
                convention,
                ..FactorOptions::default()
            };
            let f1 = predicted_factor(&p, l1, opts).unwrap();
            let f2 = predicted_factor(&p, l2, opts).unwrap();
            let (d1, _) = delta_consts(&p, l1, opts.mode, opts.reading).unwrap();
            let (d2, _) = delta_consts(&p, l2, opts.mode, opts.reading).unwrap();
            let sign = if convention == Convention::Printed {
                1.0
            } else {
                -1.0
            };
            let want = LogDet::exp((d1 - d2) * sign);
            let (dl, dp) = f1.ratio(f2);
            assert!((dl - want.log_mag).abs() < 1e-12);
            assert!(crate::logdet::wrap_phase(dp - want.phase).abs() < 1e-12);
        }
    }

    #[test]
    fn free_factor_matches_analytic_ratio() {
        // D/E for the free scalar problem: D = sinh^2(pi s)/sinh^2(pi) e^{(1-l) c},
        // E = -4 sinh^2(pi s), so D/E = -e^{(1-l)c} / (4 sinh^2 pi).
        let l = c(0.4, 0.3);
        let cc = pi_coth_pi();
        let want = -((c(1.0, 0.0) - l) * cc).exp() / (4.0 * PI.sinh().powi(2));
        let got = predicted_factor(&free(), l, FactorOptions::default())
            .unwrap()
            .to_complex();
        assert!((got / want - 1.0).norm() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn free_verify_relation_converges() {
        let report = verify_relation(
            &free(),
            &[c(1.0, 0.0), c(0.5, 0.5)],
            &[4, 8, 16],
            1.0,
            VerifyOptions::default(),
        )
        .unwrap();
        let s = report
            .series_for(
                Quantity::R1,
                Some(Convention::Corrected),
                Some(DeltaReading::A0),
            )
            .unwrap();
        assert!(s.decreasing, "{:?}", s.median_errors);
        let printed = report
            .series_for(
                Quantity::R1,
                Some(Convention::Printed),
                Some(DeltaReading::A0),
            )
            .unwrap();
        assert!(printed.median_errors.last().unwrap() > &1.0);
        assert!(report.to_csv().lines().count() == 1 + 2 * 3 * 5);
    }

    #[test]
    fn eigenvalue_points_are_skipped() {
        let report = verify_relation(
            &free(),
            &[c(-1.0, 0.0), c(0.5, 0.0)],
            &[4],
            1.0,
            VerifyOptions::default(),
        )
        .unwrap();
        assert_eq!(report.skipped.len(), 1);
        assert!(verify_relation(
            &free(),
            &[c(-1.0, 0.0)],
            &[4],
            1.0,
            VerifyOptions::default()
        )
        .is_err());
    }
}
