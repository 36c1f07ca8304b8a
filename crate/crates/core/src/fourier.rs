//! Matrix-valued periodic coefficient functions stored as finite Fourier series.
//!
//! A series with period `X` represents `f(x) = sum_k F_k exp(2 pi i k x / X)` where each
//! `F_k` is an `n x n` complex matrix and `|k| <= k_max`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const REALNESS_TOL: f64 = 1e-14;
const GRID_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    n: usize,
    period: f64,
    k_max: usize,
    /// Mode `k` lives at index `k + k_max`.
    coeffs: Vec<CMatrix>,
    real: bool,
}

impl FourierSeries {
    /// Builds a series from a sparse map of modes. Missing modes (including zero) are zero.
    pub fn new(n: usize, period: f64, modes: BTreeMap<i64, CMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: "n >= 1".into(),
                got: "n = 0".into(),
            });
        }
        check_period(period)?;
        let k_max = modes
            .keys()
            .map(|k| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![CMatrix::zeros(n, n); 2 * k_max + 1];
        for (k, m) in modes {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n}x{n} coefficient"),
                    got: format!("{}x{} at mode {k}", m.nrows(), m.ncols()),
                });
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite(format!("Fourier mode {k}")));
            }
            coeffs[(k + k_max as i64) as usize] = m;
        }
        Ok(Self::from_dense(n, period, coeffs))
    }

    fn from_dense(n: usize, period: f64, coeffs: Vec<CMatrix>) -> Self {
        let k_max = (coeffs.len() - 1) / 2;
        let mut s = FourierSeries {
            n,
            period,
            k_max,
            coeffs,
            real: false,
        };
        s.real = s.detect_realness();
        s
    }

    pub fn zeros(n: usize, period: f64) -> Result<Self> {
        Self::new(n, period, BTreeMap::new())
    }

    pub fn constant(value: CMatrix, period: f64) -> Result<Self> {
        let n = value.nrows();
        Self::new(n, period, BTreeMap::from([(0, value)]))
    }

    pub fn identity(n: usize, period: f64) -> Result<Self> {
        Self::constant(CMatrix::identity(n, n), period)
    }

    /// Scalar (`n = 1`) series from `(k, coefficient)` pairs.
    pub fn scalar(period: f64, modes: &[(i64, Complex64)]) -> Result<Self> {
        let mut map: BTreeMap<i64, CMatrix> = BTreeMap::new();
        for &(k, c) in modes {
            let e = map.entry(k).or_insert_with(|| CMatrix::zeros(1, 1));
            e[(0, 0)] += c;
        }
        Self::new(1, period, map)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// True when `F_{-k}` is the entrywise conjugate of `F_k` for every `k`.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient of mode `k`, or `None` outside the stored support.
    pub fn mode(&self, k: i64) -> Option<&CMatrix> {
        if k.unsigned_abs() as usize > self.k_max {
            None
        } else {
            Some(&self.coeffs[(k + self.k_max as i64) as usize])
        }
    }

    pub fn mode_or_zero(&self, k: i64) -> CMatrix {
        self.mode(k)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.n, self.n))
    }

    /// Period average, i.e. the zero mode.
    pub fn mean(&self) -> &CMatrix {
        &self.coeffs[self.k_max]
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, &CMatrix)> {
        let k_max = self.k_max as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, m)| (i as i64 - k_max, m))
    }

    pub fn evaluate(&self, x: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        let w = 2.0 * PI * x / self.period;
        for (k, m) in self.modes() {
            if m.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let phase = Complex64::from_polar(1.0, w * k as f64);
            out += m * phase;
        }
        out
    }

    /// Reconstructs a series of support `k_max` from `M` uniform samples starting at 0.
    pub fn from_samples(
        n: usize,
        period: f64,
        samples: &[(f64, CMatrix)],
        k_max: usize,
    ) -> Result<Self> {
        check_period(period)?;
        let m = samples.len();
        if m < 2 * k_max + 1 {
            return Err(Error::SampleGrid(format!(
                "{m} samples cannot resolve modes up to {k_max} (need {})",
                2 * k_max + 1
            )));
        }
        let h = period / m as f64;
        for (j, (x, v)) in samples.iter().enumerate() {
            if (x - j as f64 * h).abs() > GRID_TOL * period {
                return Err(Error::SampleGrid(format!(
                    "sample {j} at x = {x} is off the uniform grid (expected {})",
                    j as f64 * h
                )));
            }
            if v.nrows() != n || v.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: format!("{n}x{n} sample"),
                    got: format!("{}x{} at sample {j}", v.nrows(), v.ncols()),
                });
            }
        }
        let coeffs = (-(k_max as i64)..=k_max as i64)
            .map(|k| {
                let mut acc = CMatrix::zeros(n, n);
                for (j, (_, v)) in samples.iter().enumerate() {
                    let ang = -2.0 * PI * ((k * j as i64).rem_euclid(m as i64)) as f64 / m as f64;
                    acc += v * Complex64::from_polar(1.0, ang);
                }
                acc / Complex64::new(m as f64, 0.0)
            })
            .collect();
        Ok(Self::from_dense(n, period, coeffs))
    }

    /// Term-by-term derivative: mode `k` is multiplied by `2 pi i k / X`.
    pub fn differentiate(&self) -> Self {
        let coeffs = self
            .modes()
            .map(|(k, m)| m * Complex64::new(0.0, 2.0 * PI * k as f64 / self.period))
            .collect();
        Self::from_dense(self.n, self.period, coeffs)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let coeffs = self.coeffs.iter().map(|m| m * c).collect();
        Self::from_dense(self.n, self.period, coeffs)
    }

    /// Same modes, reinterpreted on a different period.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        check_period(period)?;
        Ok(Self::from_dense(self.n, period, self.coeffs.clone()))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.period != other.period {
            return Err(Error::DimensionMismatch {
                expected: format!("n = {}, X = {}", self.n, self.period),
                got: format!("n = {}, X = {}", other.n, other.period),
            });
        }
        let k_max = self.k_max.max(other.k_max) as i64;
        let coeffs = (-k_max..=k_max)
            .map(|k| self.mode_or_zero(k) + other.mode_or_zero(k))
            .collect();
        Ok(Self::from_dense(self.n, self.period, coeffs))
    }

    fn detect_realness(&self) -> bool {
        let scale = self
            .coeffs
            .iter()
            .flat_map(|m| m.iter())
            .map(|z| z.norm())
            .fold(1.0_f64, f64::max);
        (0..=self.k_max as i64).all(|k| {
            let pos = self.mode(k).unwrap();
            let neg = self.mode(-k).unwrap();
            pos.iter()
                .zip(neg.iter())
                .all(|(a, b)| (a.conj() - b).norm() <= REALNESS_TOL * scale)
        })
    }
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPeriod(period))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn cosine() -> FourierSeries {
        FourierSeries::scalar(2.0 * PI, &[(1, c(0.5)), (-1, c(0.5))]).unwrap()
    }

    #[test]
    fn zero_series_evaluates_to_zero() {
        let s = FourierSeries::scalar(2.0 * PI, &[(0, c(0.0))]).unwrap();
        for x in [0.0, 0.3, 2.0, 5.9] {
            assert_eq!(s.evaluate(x)[(0, 0)], c(0.0));
        }
        assert!(s.is_real());
        assert_eq!(s.k_max(), 0);
    }

    #[test]
    fn cosine_values() {
        let s = cosine();
        assert!((s.evaluate(0.0)[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert!((s.evaluate(PI)[(0, 0)] - c(-1.0)).norm() < 1e-15);
        assert!(s.is_real());
    }

    #[test]
    fn direct_sum() {
        let s = FourierSeries::scalar(2.0 * PI, &[(0, c(2.0)), (2, c(1.0)), (-2, c(1.0))]).unwrap();
        assert!((s.evaluate(0.0)[(0, 0)] - c(4.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_series() {
        let s = FourierSeries::identity(2, 2.0 * PI).unwrap();
        let v = s.evaluate(1.234);
        assert_eq!(v, CMatrix::identity(2, 2));
    }

    #[test]
    fn periodicity() {
        let s = FourierSeries::scalar(3.0, &[(1, Complex64::new(0.3, 0.2)), (-3, c(1.1))]).unwrap();
        for x in [0.0, 0.7, 2.2] {
            let a = s.evaluate(x)[(0, 0)];
            let b = s.evaluate(x + 3.0)[(0, 0)];
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
        assert!(!s.is_real());
    }

    #[test]
    fn rejects_bad_input() {
        let bad = BTreeMap::from([(0, CMatrix::zeros(2, 2))]);
        assert!(matches!(
            FourierSeries::new(1, 1.0, bad),
            Err(Error::DimensionMismatch { .. })
        ));
        let nan = BTreeMap::from([(1, CMatrix::from_element(1, 1, c(f64::NAN)))]);
        assert!(matches!(
            FourierSeries::new(1, 1.0, nan),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            FourierSeries::zeros(1, -1.0),
            Err(Error::InvalidPeriod(_))
        ));
    }

    #[test]
    fn samples_of_cosine() {
        let m = 8;
        let samples: Vec<_> = (0..m)
            .map(|j| {
                let x = j as f64 * 2.0 * PI / m as f64;
                (x, CMatrix::from_element(1, 1, c(x.cos())))
            })
            .collect();
        let s = FourierSeries::from_samples(1, 2.0 * PI, &samples, 1).unwrap();
        assert!((s.mode(1).unwrap()[(0, 0)] - c(0.5)).norm() < 1e-15);
        assert!((s.mode(-1).unwrap()[(0, 0)] - c(0.5)).norm() < 1e-15);
        assert!(s.mode(0).unwrap()[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn samples_of_constant() {
        let samples: Vec<_> = (0..5)
            .map(|j| (j as f64 * 0.2, CMatrix::from_element(1, 1, c(1.0))))
            .collect();
        let s = FourierSeries::from_samples(1, 1.0, &samples, 2).unwrap();
        assert!((s.mode(0).unwrap()[(0, 0)] - c(1.0)).norm() < 1e-15);
        for k in [-2, -1, 1, 2] {
            assert!(s.mode(k).unwrap()[(0, 0)].norm() < 1e-15);
        }
    }

    #[test]
    fn sample_grid_errors() {
        let few: Vec<_> = (0..4)
            .map(|j| (j as f64 * 0.25, CMatrix::zeros(1, 1)))
            .collect();
        assert!(matches!(
            FourierSeries::from_samples(1, 1.0, &few, 2),
            Err(Error::SampleGrid(_))
        ));
        let mut skewed: Vec<_> = (0..5)
            .map(|j| (j as f64 * 0.2, CMatrix::zeros(1, 1)))
            .collect();
        skewed[3].0 += 0.01;
        assert!(matches!(
            FourierSeries::from_samples(1, 1.0, &skewed, 2),
            Err(Error::SampleGrid(_))
        ));
    }

    #[test]
    fn derivatives() {
        let k = FourierSeries::identity(1, 2.0 * PI)
            .unwrap()
            .differentiate();
        assert!(k.modes().all(|(_, m)| m[(0, 0)].norm() == 0.0));

        let ds = cosine().differentiate();
        assert!((ds.evaluate(PI / 2.0)[(0, 0)] - c(-1.0)).norm() < 1e-15);

        let e = FourierSeries::scalar(2.0 * PI, &[(1, c(1.0))]).unwrap();
        let dd = e.differentiate().differentiate();
        assert!((dd.mode(1).unwrap()[(0, 0)] - c(-1.0)).norm() < 1e-15);
    }
}
