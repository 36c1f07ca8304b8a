//! Determinants stored as `(log |det|, arg det)`.
//!
//! `det(D_J^2 - I)` alone overflows `f64` near `J = 40`, so every determinant of a
//! truncated operator is accumulated pivot by pivot in log form.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogDet {
    pub log_mag: f64,
    /// Argument in `(-pi, pi]`.
    pub phase: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

impl LogDet {
    pub const ONE: LogDet = LogDet {
        log_mag: 0.0,
        phase: 0.0,
    };

    pub const ZERO: LogDet = LogDet {
        log_mag: f64::NEG_INFINITY,
        phase: 0.0,
    };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogDet {
            log_mag,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.norm() == 0.0 {
            Self::ZERO
        } else {
            LogDet::new(z.norm().ln(), z.arg())
        }
    }

    /// `exp(t)` for complex `t`.
    pub fn exp(t: Complex64) -> Self {
        LogDet::new(t.re, t.im)
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.log_mag.exp(), self.phase)
        }
    }

    /// Reciprocal. The reciprocal of zero is reported as `+inf` magnitude.
    pub fn inv(self) -> Self {
        if self.is_zero() {
            return LogDet {
                log_mag: f64::INFINITY,
                phase: 0.0,
            };
        }
        LogDet::new(-self.log_mag, -self.phase)
    }

    pub fn powi(self, k: i32) -> Self {
        if self.is_zero() {
            return match k.signum() {
                1 => Self::ZERO,
                0 => Self::ONE,
                _ => Self::ZERO.inv(),
            };
        }
        LogDet::new(self.log_mag * k as f64, self.phase * k as f64)
    }

    /// `self / other` as `(log-magnitude difference, wrapped phase difference)`.
    pub fn ratio(self, other: LogDet) -> (f64, f64) {
        (
            self.log_mag - other.log_mag,
            wrap_phase(self.phase - other.phase),
        )
    }

    /// Natural logarithm on the principal branch.
    pub fn ln(self) -> Complex64 {
        Complex64::new(self.log_mag, self.phase)
    }
}

impl Mul for LogDet {
    type Output = LogDet;

    fn mul(self, rhs: LogDet) -> LogDet {
        if self.is_zero() || rhs.is_zero() {
            return LogDet::ZERO;
        }
        LogDet::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl std::iter::Product for LogDet {
    fn product<I: Iterator<Item = LogDet>>(iter: I) -> LogDet {
        iter.fold(LogDet::ONE, |a, b| a * b)
    }
}

/// Determinant of a square complex matrix through LU with partial pivoting.
///
/// Pivot magnitudes are summed as logarithms and pivot arguments as angles, so the
/// result never overflows. An exactly zero pivot yields [`LogDet::ZERO`].
pub fn log_det(m: &DMatrix<Complex64>) -> LogDet {
    assert!(m.is_square(), "determinant of a non-square matrix");
    if m.nrows() == 0 {
        return LogDet::ONE;
    }
    let lu = m.clone().lu();
    let sign: Complex64 = lu.p().determinant();
    let mut log_mag = 0.0;
    let mut phase = sign.arg();
    for z in lu.u().diagonal().iter() {
        let r = z.norm();
        if r == 0.0 || !r.is_finite() {
            return if r == 0.0 {
                LogDet::ZERO
            } else {
                LogDet {
                    log_mag: f64::NAN,
                    phase: f64::NAN,
                }
            };
        }
        log_mag += r.ln();
        phase += z.arg();
    }
    LogDet::new(log_mag, phase)
}

/// Product of the entries of a diagonal, in log form.
pub fn log_det_diagonal<'a>(diag: impl IntoIterator<Item = &'a Complex64>) -> LogDet {
    diag.into_iter().map(|z| LogDet::from_complex(*z)).product()
}
