//! Argument-principle root finding for `E(lambda)` and `D_J(lambda)`, and comparison
//! with the Hill eigenvalues.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evans::{monodromy, FirstOrderSystem};
use crate::fourier::CMatrix;
use crate::fredholm::dj_det;
use crate::hill::{
    cluster_eigenvalues, cmp_complex, single_linkage, TruncatedSystem, CLUSTER_RADIUS,
};
use crate::logdet::{log_det, wrap_phase, LogDet};
use crate::problem::SpectralProblem;
use crate::region::{Contour, Region, MIN_CONTOUR_SAMPLES};

/// `|f|` below this on a contour sample counts as a zero on the contour.
pub const ZERO_FLOOR: f64 = 1e-12;
pub const MAX_CONTOUR_SAMPLES: usize = 1 << 16;
const MAX_PHASE_STEP: f64 = PI / 2.0;
const MAX_LOG_CURVATURE: f64 = 0.3;
const MAX_JITTERS: usize = 5;
const ZOOM: f64 = 16.0;
/// Outer-contour inflation per retry when a zero lies on it.
const JITTER: f64 = 1e-7;
/// Split-line displacement per retry, as a fraction of the cell side.
const SPLIT_JITTER: f64 = 0.037;
/// Off-centre split fractions keep real-axis roots off shared edges.
const SPLIT: (f64, f64) = (0.5 - 0.0123, 0.5 + 0.0271);

#[derive(Clone, Debug)]
struct Scan {
    winding: i64,
    /// Median of `ln |f|` over the boundary samples.
    median_log_mag: f64,
    /// `(1 / 2 pi i) \oint z d(ln f)`, the sum of the enclosed zeros.
    first_moment: Complex64,
}

#[derive(Clone, Copy)]
struct Sample {
    t: f64,
    z: Complex64,
    v: LogDet,
}

/// `(z_a + z_b)/2 * (ln f(b) - ln f(a))` with the given unwrapped phase step.
fn moment_step(a: &Sample, b: &Sample, dphase: f64) -> Complex64 {
    (a.z + b.z) * 0.5 * Complex64::new(b.v.log_mag - a.v.log_mag, dphase)
}

fn scan<F>(f: &F, contour: &Contour) -> Result<Scan>
where
    F: Fn(Complex64) -> Result<LogDet> + Sync,
{
    let n = contour.samples;
    let eval = |t: f64| -> Result<Sample> {
        let z = contour.point(t);
        let v = f(z)?;
        if v.is_zero() || v.log_mag < ZERO_FLOOR.ln() {
            return Err(Error::ZeroOnContour(z));
        }
        Ok(Sample { t, z, v })
    };
    let values: Vec<Sample> = (0..n)
        .into_par_iter()
        .map(|i| eval(i as f64 / n as f64))
        .collect::<Result<_>>()?;

    // Each interval is bisected until both halves turn by less than pi/2, agree with the
    // whole, and ln|f| is nearly linear across it. A zero close to the contour bends ln|f|
    // at the midpoint, so the curvature test forces refinement where a multiple zero
    // could otherwise alias a full turn into a small step. The finest admissible spacing
    // corresponds to MAX_CONTOUR_SAMPLES points on the contour.
    let min_dt = 1.0 / MAX_CONTOUR_SAMPLES as f64;
    fn refine<G: Fn(f64) -> Result<Sample>>(
        eval: &G,
        a: Sample,
        b: Sample,
        min_dt: f64,
        total: &mut usize,
    ) -> Result<(f64, Complex64)> {
        if b.t - a.t <= min_dt * 1.0000001 {
            return Err(Error::PhaseStep(MAX_CONTOUR_SAMPLES));
        }
        let m = eval(0.5 * (a.t + b.t))?;
        *total += 1;
        if *total > MAX_CONTOUR_SAMPLES {
            return Err(Error::PhaseStep(*total));
        }
        let whole = wrap_phase(b.v.phase - a.v.phase);
        let first = wrap_phase(m.v.phase - a.v.phase);
        let second = wrap_phase(b.v.phase - m.v.phase);
        if whole.abs() < MAX_PHASE_STEP
            && first.abs() < MAX_PHASE_STEP
            && second.abs() < MAX_PHASE_STEP
            && (first + second - whole).abs() < 1e-6
            && (m.v.log_mag - 0.5 * (a.v.log_mag + b.v.log_mag)).abs() < MAX_LOG_CURVATURE
        {
            return Ok((
                whole,
                moment_step(&a, &m, first) + moment_step(&m, &b, second),
            ));
        }
        let (p1, m1) = refine(eval, a, m, min_dt, total)?;
        let (p2, m2) = refine(eval, m, b, min_dt, total)?;
        Ok((p1 + p2, m1 + m2))
    }
    let steps: Vec<(f64, Complex64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut total = n;
            let mut b = values[(i + 1) % n];
            b.t = (i + 1) as f64 / n as f64;
            refine(&eval, values[i], b, min_dt, &mut total)
        })
        .collect::<Result<_>>()?;
    let turn: f64 = steps.iter().map(|s| s.0).sum();
    let moment: Complex64 = steps.iter().map(|s| s.1).sum();
    let mut logs: Vec<f64> = values.iter().map(|s| s.v.log_mag).collect();
    logs.sort_by(|a, b| a.total_cmp(b));
    Ok(Scan {
        winding: (turn / (2.0 * PI)).round() as i64,
        median_log_mag: logs[logs.len() / 2],
        first_moment: moment / Complex64::new(0.0, 2.0 * PI),
    })
}

/// Number of zeros of `f` inside the contour, counted with multiplicity.
pub fn winding_number<F>(f: F, contour: &Contour) -> Result<i64>
where
    F: Fn(Complex64) -> Result<LogDet> + Sync,
{
    Ok(scan(&f, contour)?.winding)
}

#[derive(Clone, Copy, Debug)]
pub struct LocatorOptions {
    /// Cells with winding >= 2 smaller than this are reported as clusters.
    pub cluster_diameter: f64,
    /// Roots closer than this are merged into one eigenvalue with summed multiplicity.
    pub merge_radius: f64,
    /// Secant refinement target `|f| <= residual_tol * median boundary |f|`.
    pub residual_tol: f64,
    pub samples: usize,
}

impl Default for LocatorOptions {
    fn default() -> Self {
        LocatorOptions {
            cluster_diameter: 1e-6,
            merge_radius: 1e-4,
            residual_tol: 1e-10,
            samples: MIN_CONTOUR_SAMPLES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Root {
    pub z: Complex64,
    pub multiplicity: usize,
    /// `|f(z)|` relative to the median `|f|` on the boundary of the isolating cell.
    pub residual: f64,
    /// True when the multiplicity comes from an unresolved cell or a merge of nearby roots.
    pub cluster: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellFailure {
    pub region: Region,
    pub winding: i64,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ZeroSearch {
    pub roots: Vec<Root>,
    pub total_winding: i64,
    pub failures: Vec<CellFailure>,
}

type Rect = (f64, f64, f64, f64);

fn rect_of(region: &Region) -> Result<Rect> {
    match *region {
        Region::Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        } => Ok((re_min, re_max, im_min, im_max)),
        Region::Disk { .. } => Err(Error::InvalidContour(
            "the locator needs a rectangular region".into(),
        )),
    }
}

fn rect_region(r: Rect) -> Result<Region> {
    Region::rect(r.0, r.1, r.2, r.3)
}

struct Searcher<'a, F> {
    f: &'a F,
    opts: LocatorOptions,
}

impl<F> Searcher<'_, F>
where
    F: Fn(Complex64) -> Result<LogDet> + Sync,
{
    fn scan_rect(&self, r: Rect) -> Result<Scan> {
        self.scan_rect_with(r, self.opts.samples)
    }

    fn scan_rect_with(&self, r: Rect, samples: usize) -> Result<Scan> {
        scan(self.f, &Contour::new(rect_region(r)?, samples)?)
    }

    fn scaled(&self, z: Complex64, log_scale: f64) -> Result<Complex64> {
        let v = (self.f)(z)?;
        if v.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(Complex64::from_polar(
            (v.log_mag - log_scale).exp(),
            v.phase,
        ))
    }

    /// Secant iteration from the cell centre; `None` if it leaves the cell or stalls.
    fn secant(&self, r: Rect, log_scale: f64) -> Result<Option<Root>> {
        let (w, h) = (r.1 - r.0, r.3 - r.2);
        let inside = |z: Complex64| {
            let pad = 1e-9 * w.max(h);
            z.re >= r.0 - pad && z.re <= r.1 + pad && z.im >= r.2 - pad && z.im <= r.3 + pad
        };
        let mut z0 = Complex64::new(r.0 + 0.5 * w, r.2 + 0.5 * h);
        let mut z1 = z0 + Complex64::new(0.05 * w, 0.03 * h);
        let mut g0 = self.scaled(z0, log_scale)?;
        let mut g1 = self.scaled(z1, log_scale)?;
        for _ in 0..100 {
            if g1.norm() <= self.opts.residual_tol {
                break;
            }
            let dg = g1 - g0;
            if dg.norm() == 0.0 {
                break;
            }
            let z2 = z1 - g1 * (z1 - z0) / dg;
            if !z2.re.is_finite() || !z2.im.is_finite() || !inside(z2) {
                return Ok(None);
            }
            let stalled = (z2 - z1).norm() <= 4.0 * f64::EPSILON * (1.0 + z2.norm());
            (z0, g0) = (z1, g1);
            z1 = z2;
            g1 = self.scaled(z1, log_scale)?;
            if stalled {
                break;
            }
        }
        if !inside(z1) {
            return Ok(None);
        }
        Ok(Some(Root {
            z: z1,
            multiplicity: 1,
            residual: g1.norm(),
            cluster: false,
        }))
    }

    fn children(&self, r: Rect, attempt: usize) -> [Rect; 4] {
        let (w, h) = (r.1 - r.0, r.3 - r.2);
        let shift = SPLIT_JITTER * attempt as f64 * if attempt % 2 == 1 { 1.0 } else { -1.0 };
        let xm = r.0 + (SPLIT.0 + shift) * w;
        let ym = r.2 + (SPLIT.1 - shift) * h;
        [
            (r.0, xm, r.2, ym),
            (xm, r.1, r.2, ym),
            (r.0, xm, ym, r.3),
            (xm, r.1, ym, r.3),
        ]
    }

    /// For a cell holding several zeros, tries a box `ZOOM` times smaller around their
    /// centroid; it is used only if it encloses all of them.
    fn zoom(&self, r: Rect, s: &Scan) -> Result<Option<(Rect, Scan)>> {
        let centroid = s.first_moment / s.winding as f64;
        let half = (0.5 / ZOOM) * (r.1 - r.0).max(r.3 - r.2);
        let zr = (
            (centroid.re - half).max(r.0),
            (centroid.re + half).min(r.1),
            (centroid.im - half).max(r.2),
            (centroid.im + half).min(r.3),
        );
        if !(zr.0 < zr.1 && zr.2 < zr.3)
            || (zr.1 - zr.0) > 0.75 * (r.1 - r.0) && (zr.3 - zr.2) > 0.75 * (r.3 - r.2)
        {
            return Ok(None);
        }
        match self.scan_rect(zr) {
            Ok(zs) if zs.winding == s.winding => Ok(Some((zr, zs))),
            Ok(_) | Err(Error::ZeroOnContour(_) | Error::PhaseStep(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Splits a cell into four children whose windings add up to the parent's.
    ///
    /// A multiple zero very close to an edge can turn the phase by a full `2 pi` between
    /// two samples and go unseen. When parent and children disagree, the split lines are
    /// moved and the children rescanned at doubled density; two differently placed
    /// partitions that agree with each other override the parent count.
    fn split(&self, r: Rect, winding: i64) -> Result<(Vec<(Rect, Scan)>, i64)> {
        let mut last_err = None;
        let mut previous_total = None;
        for attempt in 0..=MAX_JITTERS {
            let samples = (self.opts.samples << attempt).min(MAX_CONTOUR_SAMPLES / 8);
            let cells = self.children(r, attempt);
            let scans: Vec<Result<Scan>> = cells
                .par_iter()
                .map(|c| self.scan_rect_with(*c, samples))
                .collect();
            match scans.into_iter().collect::<Result<Vec<_>>>() {
                Ok(scans) => {
                    let total: i64 = scans.iter().map(|s| s.winding).sum();
                    if total == winding || previous_total == Some(total) {
                        return Ok((cells.into_iter().zip(scans).collect(), total));
                    }
                    previous_total = Some(total);
                    last_err = Some(Error::PhaseStep(samples));
                }
                Err(e @ (Error::ZeroOnContour(_) | Error::PhaseStep(_))) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn solve(&self, r: Rect, s: Scan, depth: usize) -> Result<ZeroSearch> {
        let mut out = ZeroSearch {
            total_winding: s.winding,
            ..ZeroSearch::default()
        };
        if s.winding <= 0 {
            if s.winding < 0 {
                out.failures.push(CellFailure {
                    region: rect_region(r)?,
                    winding: s.winding,
                    reason: "negative winding number".into(),
                });
            }
            return Ok(out);
        }
        if s.winding == 1 {
            if let Some(root) = self.secant(r, s.median_log_mag)? {
                out.roots.push(root);
                return Ok(out);
            }
        }
        let diameter = (r.1 - r.0).hypot(r.3 - r.2);
        if s.winding > 1 && diameter >= self.opts.cluster_diameter && depth <= 60 {
            if let Some((zr, zs)) = self.zoom(r, &s)? {
                return self.solve(zr, zs, depth + 1);
            }
        }
        if diameter < self.opts.cluster_diameter || depth > 60 {
            let z = Complex64::new(0.5 * (r.0 + r.1), 0.5 * (r.2 + r.3));
            out.roots.push(Root {
                z,
                multiplicity: s.winding as usize,
                residual: self.scaled(z, s.median_log_mag)?.norm(),
                cluster: s.winding > 1,
            });
            return Ok(out);
        }
        let children = match self.split(r, s.winding) {
            Ok((c, w)) => {
                out.total_winding = w;
                if w == 0 {
                    return Ok(out);
                }
                c
            }
            // Below the zero floor a multiple root cannot be separated further.
            Err(Error::ZeroOnContour(_)) if s.winding > 1 => {
                let z = Complex64::new(0.5 * (r.0 + r.1), 0.5 * (r.2 + r.3));
                out.roots.push(Root {
                    z,
                    multiplicity: s.winding as usize,
                    residual: self.scaled(z, s.median_log_mag)?.norm(),
                    cluster: true,
                });
                return Ok(out);
            }
            Err(e @ (Error::ZeroOnContour(_) | Error::PhaseStep(_))) => {
                out.failures.push(CellFailure {
                    region: rect_region(r)?,
                    winding: s.winding,
                    reason: e.to_string(),
                });
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        let parts: Vec<ZeroSearch> = children
            .into_par_iter()
            .map(|(c, cs)| self.solve(c, cs, depth + 1))
            .collect::<Result<_>>()?;
        out.total_winding = parts.iter().map(|p| p.total_winding).sum();
        for p in parts {
            out.roots.extend(p.roots);
            out.failures.extend(p.failures);
        }
        Ok(out)
    }
}

/// Merges roots closer than `radius`, summing multiplicities.
fn merge_roots(roots: Vec<Root>, radius: f64) -> Vec<Root> {
    let points: Vec<Complex64> = roots.iter().map(|r| r.z).collect();
    single_linkage(&points, radius)
        .into_iter()
        .map(|group| {
            let members: Vec<&Root> = group.iter().map(|&i| &roots[i]).collect();
            let mult: usize = members.iter().map(|r| r.multiplicity).sum();
            let weighted: Complex64 = members.iter().map(|r| r.z * r.multiplicity as f64).sum();
            Root {
                z: weighted / mult as f64,
                multiplicity: mult,
                residual: members.iter().map(|r| r.residual).fold(0.0, f64::max),
                cluster: members.len() > 1 || members.iter().any(|r| r.cluster),
            }
        })
        .collect()
}

/// All zeros of `f` inside a rectangular region by recursive subdivision.
pub fn find_zeros<F>(f: F, region: &Region, opts: LocatorOptions) -> Result<ZeroSearch>
where
    F: Fn(Complex64) -> Result<LogDet> + Sync,
{
    let mut r = rect_of(region)?;
    let searcher = Searcher { f: &f, opts };
    let mut attempt = 0;
    let outer = loop {
        match searcher.scan_rect(r) {
            Ok(s) => break s,
            Err(Error::ZeroOnContour(_) | Error::PhaseStep(_)) if attempt < MAX_JITTERS => {
                attempt += 1;
                r = (r.0 - JITTER, r.1 + JITTER, r.2 - JITTER, r.3 + JITTER);
            }
            Err(e) => return Err(e),
        }
    };
    let mut search = searcher.solve(r, outer, 0)?;
    search.roots = merge_roots(search.roots, opts.merge_radius);
    search.roots.sort_by(|a, b| cmp_complex(&a.z, &b.z));
    Ok(search)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Hill {
        #[serde(rename = "J")]
        j: usize,
    },
    Fredholm {
        #[serde(rename = "J")]
        j: usize,
    },
    Evans {
        tol: f64,
    },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Hill { .. } => "hill",
            Method::Fredholm { .. } => "fredholm",
            Method::Evans { .. } => "evans",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub mult: usize,
    pub residual: f64,
    pub cluster: bool,
}

impl Eigenvalue {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    pub method: Method,
    pub eigenvalues: Vec<Eigenvalue>,
    pub region: Region,
    pub total_winding: i64,
    pub failures: Vec<CellFailure>,
}

impl EigenReport {
    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.mult).sum()
    }
}

/// `E(lambda)` in log form, for use as a locator input.
pub fn evans_logdet(problem: &SpectralProblem, lambda: Complex64, tol: f64) -> Result<LogDet> {
    let mono = monodromy(&FirstOrderSystem::new(problem, lambda), tol)?;
    let dim = mono.psi.nrows();
    Ok(log_det(&(&mono.psi - CMatrix::identity(dim, dim))))
}

pub fn locate_eigenvalues(
    problem: &SpectralProblem,
    region: &Region,
    method: Method,
    opts: LocatorOptions,
) -> Result<EigenReport> {
    rect_of(region)?;
    let search = match method {
        Method::Hill { j } => {
            let ev: Vec<Complex64> = TruncatedSystem::new(problem, j)
                .hill_eigenvalues()?
                .into_iter()
                .filter(|z| region.contains(*z))
                .collect();
            let roots: Vec<Root> = cluster_eigenvalues(&ev, CLUSTER_RADIUS)
                .into_iter()
                .map(|c| Root {
                    z: c.center,
                    multiplicity: c.multiplicity,
                    residual: c.spread,
                    cluster: false,
                })
                .collect();
            ZeroSearch {
                total_winding: roots.iter().map(|r| r.multiplicity as i64).sum(),
                roots,
                failures: Vec::new(),
            }
        }
        Method::Fredholm { j } => {
            let trunc = TruncatedSystem::new(problem, j);
            find_zeros(|z| Ok(dj_det(&trunc, z)), region, opts)?
        }
        Method::Evans { tol } => find_zeros(|z| evans_logdet(problem, z, tol), region, opts)?,
    };
    Ok(EigenReport {
        method,
        eigenvalues: search
            .roots
            .iter()
            .map(|r| Eigenvalue {
                re: r.z.re,
                im: r.z.im,
                mult: r.multiplicity,
                residual: r.residual,
                cluster: r.cluster,
            })
            .collect(),
        region: *region,
        total_winding: search.total_winding,
        failures: search.failures,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchedTriple {
    pub hill: Eigenvalue,
    pub fredholm: Option<Eigenvalue>,
    pub evans: Option<Eigenvalue>,
    pub hill_fredholm: Option<f64>,
    pub hill_evans: Option<f64>,
    pub fredholm_evans: Option<f64>,
    pub multiplicities_agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodComparison {
    pub reports: [EigenReport; 3],
    pub triples: Vec<MatchedTriple>,
    pub totals: [usize; 3],
    pub totals_agree: bool,
    pub max_distance: f64,
}

fn nearest(target: Complex64, pool: &[Eigenvalue], used: &mut [bool]) -> Option<(Eigenvalue, f64)> {
    let (i, d) = pool
        .iter()
        .enumerate()
        .filter(|(i, _)| !used[*i])
        .map(|(i, e)| (i, (e.z() - target).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    used[i] = true;
    Some((pool[i], d))
}

/// Locates eigenvalues with Hill's method, `D_J` and `E`, and matches them.
pub fn compare_methods(
    problem: &SpectralProblem,
    region: &Region,
    j: usize,
    tol: f64,
    opts: LocatorOptions,
) -> Result<MethodComparison> {
    let methods = [
        Method::Hill { j },
        Method::Fredholm { j },
        Method::Evans { tol },
    ];
    let reports: Vec<EigenReport> = methods
        .par_iter()
        .map(|m| locate_eigenvalues(problem, region, *m, opts))
        .collect::<Result<_>>()?;
    let [hill, fredholm, evans]: [EigenReport; 3] = reports.try_into().expect("three methods");

    let mut used_f = vec![false; fredholm.eigenvalues.len()];
    let mut used_e = vec![false; evans.eigenvalues.len()];
    let mut max_distance: f64 = 0.0;
    let triples: Vec<MatchedTriple> = hill
        .eigenvalues
        .iter()
        .map(|h| {
            let f = nearest(h.z(), &fredholm.eigenvalues, &mut used_f);
            let e = nearest(h.z(), &evans.eigenvalues, &mut used_e);
            let fe = match (&f, &e) {
                (Some((a, _)), Some((b, _))) => Some((a.z() - b.z()).norm()),
                _ => None,
            };
            for d in [f.map(|x| x.1), e.map(|x| x.1), fe].into_iter().flatten() {
                max_distance = max_distance.max(d);
            }
            if f.is_none() || e.is_none() {
                max_distance = f64::INFINITY;
            }
            let agree = matches!((&f, &e), (Some((a, _)), Some((b, _))) if a.mult == h.mult && b.mult == h.mult);
            MatchedTriple {
                hill: *h,
                fredholm: f.map(|x| x.0),
                evans: e.map(|x| x.0),
                hill_fredholm: f.map(|x| x.1),
                hill_evans: e.map(|x| x.1),
                fredholm_evans: fe,
                multiplicities_agree: agree,
            }
        })
        .collect();
    let totals = [
        hill.total_multiplicity(),
        fredholm.total_multiplicity(),
        evans.total_multiplicity(),
    ];
    let totals_agree = totals[0] == totals[1]
        && totals[1] == totals[2]
        && fredholm.total_winding as usize == totals[1]
        && evans.total_winding as usize == totals[2];
    Ok(MethodComparison {
        reports: [hill, fredholm, evans],
        triples,
        totals,
        totals_agree,
        max_distance,
    })
}
