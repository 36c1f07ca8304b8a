//! Hill's method: Fourier truncation at wave number `J` and the Galerkin operator `L_J`.
//!
//! Modes are ordered `j = -J, ..., J`; block row `j` starts at `(j + J) * n`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Schur;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{CMatrix, FourierSeries};
use crate::problem::SpectralProblem;
use crate::region::Region;

/// Largest acceptable 1-norm condition estimate of `B0J`.
pub const MAX_B0J_CONDITION: f64 = 1e12;

/// Radius below which Hill eigenvalues are merged into one cluster.
pub const CLUSTER_RADIUS: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct TruncatedSystem {
    pub j: usize,
    pub n: usize,
    pub period: f64,
    /// Diagonal of `D_J`: entry `(j + J) n + r` is `2 pi i j / X`.
    pub dj: Vec<Complex64>,
    pub a1j: CMatrix,
    pub a0j: CMatrix,
    pub b0j: CMatrix,
    /// Truncation of the derivative `d/dx A1`.
    pub da1j: CMatrix,
}

/// Block-Toeplitz matrix whose `(j, k)` block is mode `j - k` of `series`.
pub fn block_toeplitz(series: &FourierSeries, j_max: usize) -> CMatrix {
    let n = series.n();
    let modes = 2 * j_max + 1;
    let mut out = CMatrix::zeros(modes * n, modes * n);
    for row in 0..modes {
        for col in 0..modes {
            if let Some(m) = series.mode(row as i64 - col as i64) {
                out.view_mut((row * n, col * n), (n, n)).copy_from(m);
            }
        }
    }
    out
}

impl TruncatedSystem {
    pub fn new(problem: &SpectralProblem, j: usize) -> Self {
        let n = problem.n();
        let w = 2.0 * PI / problem.period();
        let dj = (-(j as i64)..=j as i64)
            .flat_map(|m| std::iter::repeat_n(Complex64::new(0.0, w * m as f64), n))
            .collect();
        TruncatedSystem {
            j,
            n,
            period: problem.period(),
            dj,
            a1j: block_toeplitz(problem.a1(), j),
            a0j: block_toeplitz(problem.a0(), j),
            b0j: block_toeplitz(problem.b0(), j),
            da1j: block_toeplitz(&problem.a1().differentiate(), j),
        }
    }

    /// Matrix size `(2J + 1) n`.
    pub fn dim(&self) -> usize {
        self.dj.len()
    }

    pub fn dj_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.dj))
    }

    /// `D_J^2 + D_J A1J + A0J`, the lambda-free part of the truncated operator.
    pub fn stiffness(&self) -> CMatrix {
        let mut m = self.a1j.clone();
        for (r, d) in self.dj.iter().enumerate() {
            {
                let s = *d;
                m.row_mut(r).iter_mut().for_each(|v| *v *= s);
            }
        }
        m += &self.a0j;
        for (r, d) in self.dj.iter().enumerate() {
            m[(r, r)] += d * d;
        }
        m
    }

    /// `L_J = B0J^{-1} (D_J^2 + D_J A1J + A0J)`.
    pub fn assemble_lj(&self) -> Result<CMatrix> {
        let lu = self.b0j.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or(Error::IllConditioned(f64::INFINITY))?;
        let cond = one_norm(&self.b0j) * one_norm(&inv);
        if !(cond <= MAX_B0J_CONDITION) {
            return Err(Error::IllConditioned(cond));
        }
        Ok(inv * self.stiffness())
    }

    /// Eigenvalues of `L_J`, sorted by real then imaginary part, with repeats.
    pub fn hill_eigenvalues(&self) -> Result<Vec<Complex64>> {
        let lj = self.assemble_lj()?;
        eigenvalues(lj)
    }
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn eigenvalues(m: CMatrix) -> Result<Vec<Complex64>> {
    let dim = m.nrows();
    let schur =
        Schur::try_new(m, f64::EPSILON, 100 * dim.max(10)).ok_or(Error::Eigensolver(dim))?;
    let mut ev: Vec<Complex64> = schur
        .eigenvalues()
        .ok_or(Error::Eigensolver(dim))?
        .iter()
        .copied()
        .collect();
    ev.sort_by(cmp_complex);
    Ok(ev)
}

pub fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// A group of eigenvalues closer than the merge radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub center: Complex64,
    pub multiplicity: usize,
    /// Largest distance from a member to the center.
    pub spread: f64,
}

/// Single-linkage groups of indices of points within `radius` of each other.
pub fn single_linkage(values: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..values.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            if (values[a] - values[b]).norm() <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[rb] = ra;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; values.len()];
    for i in 0..values.len() {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Single-linkage clustering of eigenvalues at the given radius.
pub fn cluster_eigenvalues(values: &[Complex64], radius: f64) -> Vec<Cluster> {
    let groups: Vec<Vec<Complex64>> = single_linkage(values, radius)
        .into_iter()
        .map(|g| g.into_iter().map(|i| values[i]).collect())
        .collect();
    let mut out: Vec<Cluster> = groups
        .into_iter()
        .map(|g| {
            let center = g.iter().sum::<Complex64>() / g.len() as f64;
            let spread = g.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);
            Cluster {
                center,
                multiplicity: g.len(),
                spread,
            }
        })
        .collect();
    out.sort_by(|a, b| cmp_complex(&a.center, &b.center));
    out
}

/// Greedy nearest-point matching: repeatedly pairs the globally closest unmatched
/// `(current, previous)` points. Returns, for each current point, its partner and distance.
pub fn greedy_match(previous: &[Complex64], current: &[Complex64]) -> Vec<Option<(usize, f64)>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(previous.len() * current.len());
    for (c, zc) in current.iter().enumerate() {
        for (p, zp) in previous.iter().enumerate() {
            pairs.push(((zc - zp).norm(), c, p));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; current.len()];
    let mut used = vec![false; previous.len()];
    for (d, c, p) in pairs {
        if out[c].is_none() && !used[p] {
            out[c] = Some((p, d));
            used[p] = true;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepLevel {
    pub j: usize,
    pub eigenvalues: Vec<Complex64>,
    /// Distance of each eigenvalue to its greedy partner at the previous `J`.
    pub match_distances: Vec<Option<f64>>,
}

impl SweepLevel {
    /// Largest matching distance, ignoring unmatched points. `None` for the first level.
    pub fn max_match_distance(&self) -> Option<f64> {
        self.match_distances
            .iter()
            .flatten()
            .copied()
            .reduce(f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceSweep {
    pub levels: Vec<SweepLevel>,
}

impl ConvergenceSweep {
    /// CSV with columns `J,re,im,match_distance_to_previous_J` (empty when unmatched).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("J,re,im,match_distance_to_previous_J\n");
        for level in &self.levels {
            for (z, d) in level.eigenvalues.iter().zip(&level.match_distances) {
                let d = d.map(|d| d.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{},{}", level.j, z.re, z.im, d).unwrap();
            }
        }
        s
    }
}

/// Hill eigenvalues inside `region` for each `J`, with successive-`J` matching distances.
pub fn convergence_sweep(
    problem: &SpectralProblem,
    js: &[usize],
    region: &Region,
) -> Result<ConvergenceSweep> {
    if js.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Schema(format!(
            "J list must be strictly increasing: {js:?}"
        )));
    }
    let spectra: Vec<Vec<Complex64>> = js
        .par_iter()
        .map(|&j| {
            let ev = TruncatedSystem::new(problem, j).hill_eigenvalues()?;
            Ok(ev.into_iter().filter(|z| region.contains(*z)).collect())
        })
        .collect::<Result<_>>()?;
    let mut levels: Vec<SweepLevel> = Vec::with_capacity(js.len());
    for (i, (&j, ev)) in js.iter().zip(spectra).enumerate() {
        let match_distances = if i == 0 {
            vec![None; ev.len()]
        } else {
            greedy_match(&levels[i - 1].eigenvalues, &ev)
                .into_iter()
                .map(|m| m.map(|(_, d)| d))
                .collect()
        };
        levels.push(SweepLevel {
            j,
            eigenvalues: ev,
            match_distances,
        });
    }
    Ok(ConvergenceSweep { levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn free_truncation_j1() {
        let p = SpectralProblem::free(1, 2.0 * PI).unwrap();
        let t = TruncatedSystem::new(&p, 1);
        assert_eq!(
            t.dj,
            vec![Complex64::new(0.0, -1.0), c(0.0), Complex64::new(0.0, 1.0)]
        );
        assert_eq!(t.a0j, CMatrix::zeros(3, 3));
        assert_eq!(t.b0j, CMatrix::identity(3, 3));
    }

    #[test]
    fn cosine_toeplitz() {
        let one = c(1.0);
        let a0 = FourierSeries::scalar(2.0 * PI, &[(1, one), (-1, one)]).unwrap();
        let m = block_toeplitz(&a0, 1);
        let expect = CMatrix::from_row_slice(
            3,
            3,
            &[c(0.0), one, c(0.0), one, c(0.0), one, c(0.0), one, c(0.0)],
        );
        assert_eq!(m, expect);
    }

    #[test]
    fn constant_block_diagonal() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let s = FourierSeries::constant(m.clone(), 2.0 * PI).unwrap();
        let t = block_toeplitz(&s, 2);
        for r in 0..5 {
            for col in 0..5 {
                let blk = t.view((2 * r, 2 * col), (2, 2)).into_owned();
                if r == col {
                    assert_eq!(blk, m);
                } else {
                    assert_eq!(blk, CMatrix::zeros(2, 2));
                }
            }
        }
    }

    #[test]
    fn free_lj_is_minus_j_squared() {
        let p = SpectralProblem::free(1, 2.0 * PI).unwrap();
        let lj = TruncatedSystem::new(&p, 2).assemble_lj().unwrap();
        let expect = [-4.0, -1.0, 0.0, -1.0, -4.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((lj[(i, i)] - c(*e)).norm() < 1e-14);
        }
        assert!((lj.clone() - CMatrix::from_diagonal(&lj.diagonal())).norm() < 1e-14);
    }

    #[test]
    fn scaled_b0_with_shift() {
        let x = 2.0 * PI;
        let p = SpectralProblem::new(
            FourierSeries::zeros(1, x).unwrap(),
            FourierSeries::scalar(x, &[(0, c(0.7))]).unwrap(),
            FourierSeries::scalar(x, &[(0, c(2.0))]).unwrap(),
        )
        .unwrap();
        let lj = TruncatedSystem::new(&p, 2).assemble_lj().unwrap();
        for (i, j) in (-2..=2).enumerate() {
            let want = (0.7 - (j * j) as f64) / 2.0;
            assert!((lj[(i, i)] - c(want)).norm() < 1e-14);
        }
    }

    #[test]
    fn free_eigenvalues_with_pairing() {
        let p = SpectralProblem::free(1, 2.0 * PI).unwrap();
        let ev = TruncatedSystem::new(&p, 2).hill_eigenvalues().unwrap();
        let expect = [-4.0, -4.0, -1.0, -1.0, 0.0];
        for (z, e) in ev.iter().zip(expect) {
            assert!((z - c(e)).norm() < 1e-13);
        }
    }

    #[test]
    fn shifted_eigenvalues() {
        let x = 2.0 * PI;
        let p = SpectralProblem::new(
            FourierSeries::zeros(1, x).unwrap(),
            FourierSeries::scalar(x, &[(0, c(1.5))]).unwrap(),
            FourierSeries::identity(1, x).unwrap(),
        )
        .unwrap();
        let ev = TruncatedSystem::new(&p, 3).hill_eigenvalues().unwrap();
        let mut expect: Vec<f64> = (-3i32..=3).map(|j| 1.5 - (j * j) as f64).collect();
        expect.sort_by(f64::total_cmp);
        for (z, e) in ev.iter().zip(expect) {
            assert!((z - c(e)).norm() < 1e-13);
        }
    }

    #[test]
    fn ill_conditioned_b0_rejected() {
        let x = 2.0 * PI;
        let b0 = CMatrix::from_row_slice(2, 2, &[c(1e6), c(0.0), c(0.0), c(1e-9)]);
        let p = SpectralProblem::new(
            FourierSeries::zeros(2, x).unwrap(),
            FourierSeries::zeros(2, x).unwrap(),
            FourierSeries::constant(b0, x).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            TruncatedSystem::new(&p, 1).assemble_lj(),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn clustering_and_matching() {
        let v = [c(-1.0), c(-1.0 + 1e-9), c(0.0), c(-4.0), c(-4.0)];
        let cl = cluster_eigenvalues(&v, CLUSTER_RADIUS);
        let mult: Vec<_> = cl.iter().map(|c| c.multiplicity).collect();
        assert_eq!(mult, vec![2, 2, 1]);

        let m = greedy_match(&[c(0.0), c(1.0)], &[c(1.1), c(0.05), c(5.0)]);
        assert_eq!(m[0].unwrap().0, 1);
        assert_eq!(m[1].unwrap().0, 0);
        assert!(m[2].is_none());
    }

    #[test]
    fn free_sweep_is_exact() {
        let p = SpectralProblem::free(1, 2.0 * PI).unwrap();
        let region = Region::disk(c(0.0), 5.0).unwrap();
        let sweep = convergence_sweep(&p, &[4, 8], &region).unwrap();
        assert_eq!(sweep.levels[0].eigenvalues.len(), 5);
        assert_eq!(sweep.levels[1].eigenvalues.len(), 5);
        assert!(sweep.levels[1].max_match_distance().unwrap() < 1e-12);
        assert!(convergence_sweep(&p, &[8, 4], &region).is_err());
        let csv = sweep.to_csv();
        assert!(csv.starts_with("J,re,im,match_distance_to_previous_J\n"));
        assert_eq!(csv.lines().count(), 11);
    }
}
