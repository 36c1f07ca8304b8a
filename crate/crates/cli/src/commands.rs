use std::fmt::Write as _;

use num_complex::Complex64;
use periodic_evans::bridge::{
    self, ConstantsMode, Convention, DeltaReading, Quantity, VerifyOptions,
};
use periodic_evans::evans::{self, EvansSample};
use periodic_evans::fredholm::{self, DeterminantSample};
use periodic_evans::hill::{self, TruncatedSystem};
use periodic_evans::locator::{self, EigenReport, LocatorOptions, Method};
use periodic_evans::{Region, SpectralProblem};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{emit, resolve_format, to_json};
use crate::{
    Command, CommonArgs, ConstantsModeArg, DeltaReadingArg, Failure, Format, HillArgs, LocateArgs,
    MethodArg, PointArgs, RegionArg, VerifyArgs,
};

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Describe(args) => describe(&args),
        Command::Hill(args) => hill_sweep(&args),
        Command::Evans(args) => evans_points(&args),
        Command::Det(args) => det_points(&args),
        Command::Verify(args) => verify(&args),
        Command::Locate(args) => locate(&args),
        Command::Sweep(args) => sweep(&args),
    }
}

fn load(common: &CommonArgs) -> Result<SpectralProblem, Failure> {
    Ok(SpectralProblem::load(&common.problem)?)
}

fn write(
    common: &CommonArgs,
    csv: impl FnOnce() -> String,
    json: impl FnOnce() -> Result<String, Failure>,
) -> Result<(), Failure> {
    let path = common.output.as_deref();
    let content = match resolve_format(common.format, path) {
        Format::Csv => csv(),
        Format::Json => json()?,
    };
    emit(&content, path)
}

fn region(r: RegionArg) -> Result<Region, Failure> {
    Ok(Region::rect(r.re_min, r.re_max, r.im_min, r.im_max)?)
}

fn check_j(j: usize) -> Result<(), Failure> {
    if j == 0 {
        return Err(Failure::config("J must be positive"));
    }
    Ok(())
}

fn points(args: &PointArgs) -> Result<Vec<Complex64>, Failure> {
    match (&args.grid, args.lambda.is_empty()) {
        (Some(_), false) => Err(Failure::config("give either --lambda or --grid, not both")),
        (Some(g), true) => Ok(g.points()),
        (None, false) => Ok(args.lambda.iter().map(|c| c.0).collect()),
        (None, true) => Err(Failure::config(
            "no spectral parameter: give --lambda or --grid",
        )),
    }
}

#[derive(Serialize)]
struct Description {
    n: usize,
    period: f64,
    normalized: bool,
    max_mode: usize,
    real: bool,
    definiteness_sign: i8,
    definiteness_margin: f64,
}

fn describe(args: &CommonArgs) -> Result<(), Failure> {
    let p = load(args)?;
    let max_mode = [p.a1(), p.a0(), p.b0()]
        .iter()
        .map(|s| s.k_max())
        .max()
        .unwrap_or(0);
    let d = Description {
        n: p.n(),
        period: p.period(),
        normalized: p.is_normalized(),
        max_mode,
        real: p.is_real(),
        definiteness_sign: p.definiteness_sign(),
        definiteness_margin: p.definiteness_margin(),
    };
    write(
        args,
        || {
            format!(
                "n,period,normalized,max_mode,real,definiteness_sign,definiteness_margin\n{},{},{},{},{},{},{}\n",
                d.n, d.period, d.normalized, d.max_mode, d.real, d.definiteness_sign, d.definiteness_margin
            )
        },
        || to_json(&d),
    )
}

fn hill_sweep(args: &HillArgs) -> Result<(), Failure> {
    if args.j.is_empty() || args.j.contains(&0) {
        return Err(Failure::config("J list must be nonempty and positive"));
    }
    let p = load(&args.common)?;
    let sweep = hill::convergence_sweep(&p, &args.j, &region(args.region)?)?;
    write(&args.common, || sweep.to_csv(), || to_json(&sweep))
}

fn evans_points(args: &PointArgs) -> Result<(), Failure> {
    let lambdas = points(args)?;
    let p = load(&args.common)?;
    let samples: Vec<EvansSample> = lambdas
        .par_iter()
        .map(|&l| evans::evans_sample(&p, l, args.tol))
        .collect::<periodic_evans::Result<_>>()?;
    write(
        &args.common,
        || evans::evans_samples_to_csv(&samples),
        || to_json(&samples),
    )
}

fn det_points(args: &PointArgs) -> Result<(), Failure> {
    check_j(args.j)?;
    let lambdas = points(args)?;
    let p = load(&args.common)?;
    let trunc = TruncatedSystem::new(&p, args.j);
    let samples: Vec<DeterminantSample> = lambdas
        .par_iter()
        .map(|&l| DeterminantSample::evaluate(&trunc, l))
        .collect();
    write(
        &args.common,
        || fredholm::samples_to_csv(&samples),
        || to_json(&samples),
    )
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    if args.j.is_empty() || args.j.contains(&0) {
        return Err(Failure::config("J list must be nonempty and positive"));
    }
    let mut p = load(&args.common)?;
    if !p.is_normalized() {
        eprintln!("note: period {} rescaled to 2pi", p.period());
        p = p.normalize_period();
    }
    let lambdas: Vec<Complex64> = if args.lambda.is_empty() {
        vec![
            Complex64::new(0.1, 0.2),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.5),
        ]
    } else {
        args.lambda.iter().map(|c| c.0).collect()
    };
    let opts = VerifyOptions {
        constants_mode: match args.constants_mode {
            ConstantsModeArg::Closed => ConstantsMode::Closed,
            ConstantsModeArg::Partial => ConstantsMode::Partial(0),
        },
        ..VerifyOptions::default()
    };
    let report = bridge::verify_relation(&p, &lambdas, &args.j, args.tol, opts)?;

    let reading = match args.delta_reading {
        DeltaReadingArg::A0 => DeltaReading::A0,
        DeltaReadingArg::A1 => DeltaReading::A1,
    };
    for s in &report.skipped {
        eprintln!(
            "skipped lambda={}: |E|={:.3e} (near an eigenvalue)",
            s.lambda, s.evans_magnitude
        );
    }
    let lines = [
        (
            Quantity::R1,
            Some(Convention::Corrected),
            Some(reading),
            "r1 corrected",
        ),
        (
            Quantity::R1,
            Some(Convention::Printed),
            Some(reading),
            "r1 printed",
        ),
        (Quantity::R2, None, None, "r2"),
    ];
    for (q, c, r, label) in lines {
        if let Some(s) = report.series_for(q, c, r) {
            let errs: Vec<String> = s.median_errors.iter().map(|e| format!("{e:.3e}")).collect();
            eprintln!(
                "{label}: median |r-1| over J={:?}: [{}] decreasing={} final<tol={}",
                s.js,
                errs.join(", "),
                s.decreasing,
                s.final_within_tol
            );
        }
    }
    write(&args.common, || report.to_csv(), || to_json(&report))
}

#[derive(Serialize)]
struct LocateOutput<'a> {
    reports: &'a [EigenReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<ComparisonSummary>,
}

#[derive(Serialize)]
struct ComparisonSummary {
    totals: [usize; 3],
    totals_agree: bool,
    max_distance: f64,
}

fn locate(args: &LocateArgs) -> Result<(), Failure> {
    check_j(args.j)?;
    let p = load(&args.common)?;
    let r = region(args.region)?;
    let opts = LocatorOptions::default();
    let (reports, comparison) = match args.method {
        MethodArg::All => {
            let c = locator::compare_methods(&p, &r, args.j, args.tol, opts)?;
            let summary = ComparisonSummary {
                totals: c.totals,
                totals_agree: c.totals_agree,
                max_distance: c.max_distance,
            };
            (c.reports.to_vec(), Some(summary))
        }
        m => {
            let method = match m {
                MethodArg::Hill => Method::Hill { j: args.j },
                MethodArg::Fredholm => Method::Fredholm { j: args.j },
                _ => Method::Evans { tol: args.tol },
            };
            (
                vec![locator::locate_eigenvalues(&p, &r, method, opts)?],
                None,
            )
        }
    };
    for rep in &reports {
        for f in &rep.failures {
            eprintln!(
                "{}: unresolved cell (winding {}): {}",
                rep.method.name(),
                f.winding,
                f.reason
            );
        }
    }
    if let Some(c) = &comparison {
        if !c.totals_agree {
            eprintln!(
                "warning: multiplicity totals differ (hill, fredholm, evans) = {:?}",
                c.totals
            );
        }
    }
    write(
        &args.common,
        || {
            let mut s = String::from("method,re,im,mult,residual,cluster\n");
            for rep in &reports {
                for e in &rep.eigenvalues {
                    writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        rep.method.name(),
                        e.re,
                        e.im,
                        e.mult,
                        e.residual,
                        e.cluster
                    )
                    .unwrap();
                }
            }
            s
        },
        || {
            to_json(&LocateOutput {
                reports: &reports,
                comparison,
            })
        },
    )
}

#[derive(Serialize)]
struct SweepPoint {
    re: f64,
    im: f64,
    log10_abs_e: f64,
    arg_e: f64,
    dj_logmag: f64,
    dj_phase: f64,
}

fn sweep(args: &PointArgs) -> Result<(), Failure> {
    check_j(args.j)?;
    let lambdas = points(args)?;
    let p = load(&args.common)?;
    let trunc = TruncatedSystem::new(&p, args.j);
    let field: Vec<SweepPoint> = lambdas
        .par_iter()
        .map(|&l| {
            let e = locator::evans_logdet(&p, l, args.tol)?;
            let d = fredholm::dj_det(&trunc, l);
            Ok(SweepPoint {
                re: l.re,
                im: l.im,
                log10_abs_e: e.log_mag / std::f64::consts::LN_10,
                arg_e: e.phase,
                dj_logmag: d.log_mag,
                dj_phase: d.phase,
            })
        })
        .collect::<periodic_evans::Result<_>>()?;
    write(
        &args.common,
        || {
            let mut s = String::from("re,im,log10_abs_E,arg_E,DJ_logmag,DJ_phase\n");
            for q in &field {
                writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    q.re, q.im, q.log10_abs_e, q.arg_e, q.dj_logmag, q.dj_phase
                )
                .unwrap();
            }
            s
        },
        || to_json(&field),
    )
}
