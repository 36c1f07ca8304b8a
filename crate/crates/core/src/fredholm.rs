//! 2-modified Fredholm determinants of the truncated Birman-Schwinger operators.
//!
//! Sign convention: `K_J` is chosen so that
//! `I - K_J = (D_J^2 - I)^{-1} (D_J^2 + D_J A1J + A0J - lambda B0J)`,
//! hence `det2(I - K_J)` vanishes exactly at the eigenvalues of `L_J`. The first-order
//! matrix `Khat_J` satisfies `I - Khat_J = diag(D_J - I, D_J - I)^{-1} Mhat_J` with
//! `Mhat_J = [[D_J, -I], [A0J - lambda B0J + (A1')_J, D_J + A1J]]`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::fourier::CMatrix;
use crate::hill::TruncatedSystem;
use crate::logdet::{log_det, log_det_diagonal, LogDet};

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `det2(I - A) = det(I - A) exp(tr A)`.
pub fn det2_finite(a: &CMatrix) -> LogDet {
    assert!(a.is_square(), "det2 of a non-square matrix");
    let n = a.nrows();
    let i_minus_a = CMatrix::identity(n, n) - a;
    log_det(&i_minus_a) * LogDet::exp(a.trace())
}

/// `D_J A1J + A0J + I - lambda B0J`.
fn shifted_coefficients(trunc: &TruncatedSystem, lambda: Complex64) -> CMatrix {
    let mut m = trunc.a1j.clone();
    for (r, d) in trunc.dj.iter().enumerate() {
        {
            let s = *d;
            m.row_mut(r).iter_mut().for_each(|v| *v *= s);
        }
    }
    m += &trunc.a0j;
    m -= &trunc.b0j * lambda;
    for r in 0..m.nrows() {
        m[(r, r)] += one();
    }
    m
}

/// `K_J(lambda) = -(D_J^2 - I)^{-1} (D_J A1J + A0J + I - lambda B0J)`.
pub fn build_kj(trunc: &TruncatedSystem, lambda: Complex64) -> CMatrix {
    let mut k = shifted_coefficients(trunc, lambda);
    for (r, d) in trunc.dj.iter().enumerate() {
        {
            let s = -one() / (d * d - one());
            k.row_mut(r).iter_mut().for_each(|v| *v *= s);
        }
    }
    k
}

/// `tr K_J(lambda)` from the diagonal entries of `K_J`.
pub fn trace_kj(trunc: &TruncatedSystem, lambda: Complex64) -> Complex64 {
    trunc
        .dj
        .iter()
        .enumerate()
        .map(|(r, d)| {
            let diag =
                d * trunc.a1j[(r, r)] + trunc.a0j[(r, r)] + one() - lambda * trunc.b0j[(r, r)];
            -diag / (d * d - one())
        })
        .sum()
}

/// Truncated Birman-Schwinger Evans function `D_J(lambda) = det2(I - K_J(lambda))`.
pub fn dj_det(trunc: &TruncatedSystem, lambda: Complex64) -> LogDet {
    det2_finite(&build_kj(trunc, lambda))
}

/// First-order matrix `Khat_J(lambda)` of size `2N`.
pub fn build_khat_j(trunc: &TruncatedSystem, lambda: Complex64) -> CMatrix {
    let n = trunc.dim();
    let mut mhat = CMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        mhat[(r, r)] = trunc.dj[r];
        mhat[(r, n + r)] = -one();
    }
    let lower_left = &trunc.a0j - &trunc.b0j * lambda + &trunc.da1j;
    mhat.view_mut((n, 0), (n, n)).copy_from(&lower_left);
    let mut lower_right = trunc.a1j.clone();
    for r in 0..n {
        lower_right[(r, r)] += trunc.dj[r];
    }
    mhat.view_mut((n, n), (n, n)).copy_from(&lower_right);

    // Khat = I - P^{-1} Mhat with P = diag(D - I, D - I).
    let mut k = -mhat;
    for r in 0..2 * n {
        let p = trunc.dj[r % n] - one();
        {
            let s = one() / p;
            k.row_mut(r).iter_mut().for_each(|v| *v *= s);
        }
        k[(r, r)] += one();
    }
    k
}

/// `tr Khat_J`, lambda-independent.
pub fn trace_khat_j(trunc: &TruncatedSystem) -> Complex64 {
    trunc
        .dj
        .iter()
        .enumerate()
        .map(|(r, d)| {
            let p = d - one();
            let upper = one() - d / p;
            let lower = one() - (d + trunc.a1j[(r, r)]) / p;
            upper + lower
        })
        .sum()
}

/// Truncated first-order Birman-Schwinger Evans function `F_J(lambda) = det2(I - Khat_J)`.
pub fn fj_det(trunc: &TruncatedSystem, lambda: Complex64) -> LogDet {
    det2_finite(&build_khat_j(trunc, lambda))
}

/// The lambda-independent pieces of the factored determinant formulas.
#[derive(Clone, Debug)]
pub struct FactoredForms {
    lj: CMatrix,
    det_b0j: LogDet,
    /// `det(D_J^2 - I)`.
    det_d2_minus_1: LogDet,
    /// `det(D_J - I)`.
    det_d_minus_1: LogDet,
    trace_khat: Complex64,
}

impl FactoredForms {
    pub fn new(trunc: &TruncatedSystem) -> Result<Self> {
        let lj = trunc.assemble_lj()?;
        let d2: Vec<Complex64> = trunc.dj.iter().map(|d| d * d - one()).collect();
        let d1: Vec<Complex64> = trunc.dj.iter().map(|d| d - one()).collect();
        Ok(FactoredForms {
            lj,
            det_b0j: log_det(&trunc.b0j),
            det_d2_minus_1: log_det_diagonal(&d2),
            det_d_minus_1: log_det_diagonal(&d1),
            trace_khat: trace_khat_j(trunc),
        })
    }

    pub fn lj(&self) -> &CMatrix {
        &self.lj
    }

    /// `det(L_J - lambda)`.
    pub fn char_poly(&self, lambda: Complex64) -> LogDet {
        let mut m = self.lj.clone();
        for r in 0..m.nrows() {
            m[(r, r)] -= lambda;
        }
        log_det(&m)
    }

    /// `det(D_J^2 - I)^{-1} det B0J exp(tr K_J) det(L_J - lambda)`.
    pub fn dj(&self, trunc: &TruncatedSystem, lambda: Complex64) -> LogDet {
        self.det_d2_minus_1.inv()
            * self.det_b0j
            * LogDet::exp(trace_kj(trunc, lambda))
            * self.char_poly(lambda)
    }

    /// `det(D_J - I)^{-2} det B0J exp(tr Khat_J) det(L_J - lambda)`.
    pub fn fj(&self, lambda: Complex64) -> LogDet {
        self.det_d_minus_1.powi(-2)
            * self.det_b0j
            * LogDet::exp(self.trace_khat)
            * self.char_poly(lambda)
    }
}

/// `D_J(lambda)` through the factorization over `det(L_J - lambda)`.
pub fn dj_factored(trunc: &TruncatedSystem, lambda: Complex64) -> Result<LogDet> {
    Ok(FactoredForms::new(trunc)?.dj(trunc, lambda))
}

/// `F_J(lambda)` through the factorization over `det(L_J - lambda)`.
pub fn fj_factored(trunc: &TruncatedSystem, lambda: Complex64) -> Result<LogDet> {
    Ok(FactoredForms::new(trunc)?.fj(lambda))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeterminantSample {
    pub lambda: Complex64,
    pub j: usize,
    pub dj: LogDet,
    pub fj: LogDet,
}

impl DeterminantSample {
    pub fn evaluate(trunc: &TruncatedSystem, lambda: Complex64) -> Self {
        DeterminantSample {
            lambda,
            j: trunc.j,
            dj: dj_det(trunc, lambda),
            fj: fj_det(trunc, lambda),
        }
    }
}

/// CSV with columns `re,im,J,DJ_logmag,DJ_phase,FJ_logmag,FJ_phase`.
pub fn samples_to_csv(samples: &[DeterminantSample]) -> String {
    let mut s = String::from("re,im,J,DJ_logmag,DJ_phase,FJ_logmag,FJ_phase\n");
    for d in samples {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            d.lambda.re, d.lambda.im, d.j, d.dj.log_mag, d.dj.phase, d.fj.log_mag, d.fj.phase
        )
        .unwrap();
    }
    s
}
