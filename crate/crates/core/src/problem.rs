//! The periodic eigenvalue problem `(d^2 + d A1 + A0 - lambda B0) U = 0` on `[0, X]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{CMatrix, FourierSeries};

/// Smallest admissible eigenvalue of `sign * Re B0` on the validation grid.
pub const DEFINITENESS_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralProblem {
    a1: FourierSeries,
    a0: FourierSeries,
    b0: FourierSeries,
    definiteness_sign: i8,
    definiteness_margin: f64,
}

impl SpectralProblem {
    pub fn new(a1: FourierSeries, a0: FourierSeries, b0: FourierSeries) -> Result<Self> {
        let n = a1.n();
        let period = a1.period();
        for (name, s) in [("A0", &a0), ("B0", &b0)] {
            if s.n() != n || s.period() != period {
                return Err(Error::DimensionMismatch {
                    expected: format!("n = {n}, X = {period} (from A1)"),
                    got: format!("{name}: n = {}, X = {}", s.n(), s.period()),
                });
            }
        }
        let (definiteness_sign, definiteness_margin) = definiteness(&b0)?;
        Ok(SpectralProblem {
            a1,
            a0,
            b0,
            definiteness_sign,
            definiteness_margin,
        })
    }

    /// `A1 = A0 = 0`, `B0 = I`.
    pub fn free(n: usize, period: f64) -> Result<Self> {
        Self::new(
            FourierSeries::zeros(n, period)?,
            FourierSeries::zeros(n, period)?,
            FourierSeries::identity(n, period)?,
        )
    }

    /// Scalar Mathieu-type problem `U'' + 2 q cos(x) U = lambda U` with period `2 pi`.
    pub fn mathieu(q: f64) -> Result<Self> {
        let x = 2.0 * PI;
        let q = Complex64::new(q, 0.0);
        Self::new(
            FourierSeries::zeros(1, x)?,
            FourierSeries::scalar(x, &[(1, q), (-1, q)])?,
            FourierSeries::identity(1, x)?,
        )
    }

    pub fn n(&self) -> usize {
        self.a1.n()
    }

    pub fn period(&self) -> f64 {
        self.a1.period()
    }

    pub fn a1(&self) -> &FourierSeries {
        &self.a1
    }

    pub fn a0(&self) -> &FourierSeries {
        &self.a0
    }

    pub fn b0(&self) -> &FourierSeries {
        &self.b0
    }

    /// `+1` when `Re B0` is positive definite, `-1` when negative definite.
    pub fn definiteness_sign(&self) -> i8 {
        self.definiteness_sign
    }

    /// Smallest eigenvalue of `sign * Re B0` over the validation grid.
    pub fn definiteness_margin(&self) -> f64 {
        self.definiteness_margin
    }

    /// All three coefficients are real-valued functions.
    pub fn is_real(&self) -> bool {
        self.a1.is_real() && self.a0.is_real() && self.b0.is_real()
    }

    pub fn is_normalized(&self) -> bool {
        (self.period() - 2.0 * PI).abs() <= 1e-12 * 2.0 * PI
    }

    /// Change of variable `y = 2 pi x / X`; the periodic spectrum is unchanged.
    pub fn normalize_period(&self) -> Self {
        if self.period() == 2.0 * PI {
            return self.clone();
        }
        self.rescale_period(2.0 * PI)
            .expect("2 pi is a valid period")
    }

    /// Maps the problem to period `target` without changing its periodic spectrum.
    pub fn rescale_period(&self, target: f64) -> Result<Self> {
        let s = self.period() / target;
        let a1 = self.a1.scaled(Complex64::new(s, 0.0)).with_period(target)?;
        let a0 = self
            .a0
            .scaled(Complex64::new(s * s, 0.0))
            .with_period(target)?;
        let b0 = self
            .b0
            .scaled(Complex64::new(s * s, 0.0))
            .with_period(target)?;
        Self::new(a1, a0, b0)
    }

    /// Hilbert-Schmidt norm of the truncated Birman-Schwinger matrix `K_J(lambda)`.
    pub fn hs_norm(&self, lambda: Complex64, j: usize) -> f64 {
        let trunc = crate::hill::TruncatedSystem::new(self, j);
        crate::fredholm::build_kj(&trunc, lambda).norm()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(s)?;
        file.into_problem()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ProblemFile::from_problem(self))
            .expect("problem file serializes")
    }
}

fn definiteness(b0: &FourierSeries) -> Result<(i8, f64)> {
    let samples = 64 * (b0.k_max() + 1);
    let mut sign = 0i8;
    let mut margin = f64::INFINITY;
    for i in 0..samples {
        let x = i as f64 * b0.period() / samples as f64;
        let v = b0.evaluate(x);
        let herm = (&v + v.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm).eigenvalues;
        let lo = eig.min();
        let hi = eig.max();
        if sign == 0 {
            sign = if lo > 0.0 {
                1
            } else if hi < 0.0 {
                -1
            } else {
                return Err(Error::Indefinite {
                    margin: lo.min(-hi),
                    x,
                });
            };
        }
        let m = if sign > 0 { lo } else { -hi };
        if m < margin {
            margin = m;
        }
        if m < DEFINITENESS_FLOOR {
            return Err(Error::Indefinite { margin: m, x });
        }
    }
    Ok((sign, margin))
}

/// On-disk problem description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub period: Period,
    #[serde(rename = "A1", default)]
    pub a1: Vec<ModeEntry>,
    #[serde(rename = "A0", default)]
    pub a0: Vec<ModeEntry>,
    #[serde(rename = "B0")]
    pub b0: Vec<ModeEntry>,
}

/// A period is either a number or the literal string `"2pi"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Period {
    Value(f64),
    Named(String),
}

impl Period {
    fn value(&self) -> Result<f64> {
        match self {
            Period::Value(v) => Ok(*v),
            Period::Named(s) => match s.replace(['*', ' '], "").to_ascii_lowercase().as_str() {
                "2pi" => Ok(2.0 * PI),
                "pi" => Ok(PI),
                _ => Err(Error::Schema(format!("unrecognised period {s:?}"))),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeEntry {
    pub k: i64,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<SpectralProblem> {
        let period = self.period.value()?;
        let series = |name: &str, entries: &[ModeEntry]| -> Result<FourierSeries> {
            let mut map: BTreeMap<i64, CMatrix> = BTreeMap::new();
            for e in entries {
                let m = entry_matrix(self.n, e).map_err(|msg| Error::DimensionMismatch {
                    expected: format!("{n}x{n} arrays", n = self.n),
                    got: format!("{name} mode {}: {msg}", e.k),
                })?;
                *map.entry(e.k)
                    .or_insert_with(|| CMatrix::zeros(self.n, self.n)) += m;
            }
            FourierSeries::new(self.n, period, map)
        };
        SpectralProblem::new(
            series("A1", &self.a1)?,
            series("A0", &self.a0)?,
            series("B0", &self.b0)?,
        )
    }

    pub fn from_problem(p: &SpectralProblem) -> Self {
        let entries = |s: &FourierSeries| -> Vec<ModeEntry> {
            s.modes()
                .filter(|(_, m)| m.iter().any(|z| z.norm() != 0.0))
                .map(|(k, m)| {
                    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
                        (0..m.nrows())
                            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                            .collect()
                    };
                    let im = rows(|z| z.im);
                    ModeEntry {
                        k,
                        re: rows(|z| z.re),
                        im: im.iter().flatten().any(|v| *v != 0.0).then_some(im),
                    }
                })
                .collect()
        };
        ProblemFile {
            n: p.n(),
            period: Period::Value(p.period()),
            a1: entries(p.a1()),
            a0: entries(p.a0()),
            b0: entries(p.b0()),
        }
    }
}

fn entry_matrix(n: usize, e: &ModeEntry) -> std::result::Result<CMatrix, String> {
    let shape_ok = |a: &Vec<Vec<f64>>| a.len() == n && a.iter().all(|r| r.len() == n);
    if !shape_ok(&e.re) {
        return Err("re has the wrong shape".into());
    }
    if let Some(im) = &e.im {
        if !shape_ok(im) {
            return Err("im has the wrong shape".into());
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(e.re[i][j], e.im.as_ref().map_or(0.0, |im| im[i][j]))
    }))
}
