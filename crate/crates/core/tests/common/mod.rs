#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use periodic_evans::{CMatrix, Complex64, FourierSeries, SpectralProblem};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_complex(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(rng, scale))
}

fn random_real_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-scale..scale), 0.0))
}

/// Random series on `[0, 2 pi]` with modes `|k| <= k_max`. Real-valued functions get
/// conjugate-paired modes.
pub fn random_series(
    rng: &mut ChaCha8Rng,
    n: usize,
    k_max: usize,
    scale: f64,
    real: bool,
) -> FourierSeries {
    let mut modes = BTreeMap::new();
    for k in 0..=k_max as i64 {
        if real {
            let m = if k == 0 {
                random_real_matrix(rng, n, scale)
            } else {
                random_matrix(rng, n, n, scale)
            };
            if k > 0 {
                modes.insert(-k, m.map(|z| z.conj()));
            }
            modes.insert(k, m);
        } else {
            modes.insert(k, random_matrix(rng, n, n, scale));
            if k > 0 {
                modes.insert(-k, random_matrix(rng, n, n, scale));
            }
        }
    }
    FourierSeries::new(n, 2.0 * PI, modes).unwrap()
}

/// Random trig-polynomial problem with `B0 = I + small`, which keeps `Re B0` definite.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, k_max: usize, real: bool) -> SpectralProblem {
    let a1 = random_series(rng, n, k_max, 0.3, real);
    let a0 = random_series(rng, n, k_max, 0.5, real);
    let small = random_series(rng, n, k_max, 0.08 / ((2 * k_max + 1) * n) as f64, real);
    let b0 = FourierSeries::identity(n, 2.0 * PI)
        .unwrap()
        .try_add(&small)
        .unwrap();
    SpectralProblem::new(a1, a0, b0).unwrap()
}

/// Constant-coefficient problem: every coefficient is its zero mode.
pub fn constant_problem(rng: &mut ChaCha8Rng, n: usize) -> SpectralProblem {
    random_problem(rng, n, 0, false)
}

/// `exp(M)` by scaling and squaring with a Taylor polynomial.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm = m.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let s = (norm / 0.25).log2().ceil().max(0.0) as i32;
    let a = m * c(0.5f64.powi(s), 0.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &a * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// First-order generator `[[0, I], [lambda B0 - A0, -A1]]` of a constant-coefficient problem.
pub fn constant_generator(p: &SpectralProblem, lambda: Complex64) -> CMatrix {
    let n = p.n();
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    let lower_left = p.b0().mean() * lambda - p.a0().mean();
    for i in 0..n {
        g[(i, n + i)] = c(1.0, 0.0);
        for j in 0..n {
            g[(n + i, j)] = lower_left[(i, j)];
            g[(n + i, n + j)] = -p.a1().mean()[(i, j)];
        }
    }
    g
}

pub fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

pub fn sample(name: &str) -> SpectralProblem {
    SpectralProblem::load(problems_dir().join(name)).unwrap()
}

pub const SAMPLES: [&str; 4] = [
    "free_scalar.json",
    "mathieu_q0.5.json",
    "system_2x2.json",
    "complex_scalar.json",
];

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Product of column norms over `|det|`: 1 for orthogonal columns, large under cancellation.
pub fn hadamard_ratio(m: &CMatrix) -> f64 {
    let det = periodic_evans::logdet::log_det(m);
    m.column_iter()
        .map(|col| col.norm().ln())
        .sum::<f64>()
        .exp()
        / det.log_mag.exp()
}
