mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use periodic_evans::ErrorKind;

/// Periodic eigenvalue problems by Hill's method, Fredholm determinants and the Evans function.
#[derive(Parser, Debug)]
#[command(name = "periodic-evans", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the problem summary and the definiteness margin of Re B0.
    Describe(CommonArgs),
    /// Hill eigenvalues inside a region for a list of truncations.
    Hill(HillArgs),
    /// Gardner's Evans function on a list or grid of lambda values.
    Evans(PointArgs),
    /// Truncated determinants D_J and F_J on a list or grid of lambda values.
    Det(PointArgs),
    /// Check the relation between D_J, F_J and the Evans function.
    Verify(VerifyArgs),
    /// Locate eigenvalues in a rectangle by the argument principle.
    Locate(LocateArgs),
    /// |E| and ln|D_J| fields on a grid, for plotting.
    Sweep(PointArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Problem description (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Output file; written atomically. Defaults to standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
struct PointArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Spectral parameter, e.g. `0.1+0.2i`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Vec<Complex>,
    /// Grid `re_min,re_max,im_min,im_max,nx,ny`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<Grid>,
    /// Truncation level.
    #[arg(long = "J", default_value_t = 32)]
    j: usize,
    /// Integrator tolerance.
    #[arg(long, value_parser = parse_tol, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug, Clone)]
struct HillArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Truncation levels, strictly increasing.
    #[arg(long = "J", value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
    j: Vec<usize>,
    /// Rectangle `re_min,re_max,im_min,im_max`.
    #[arg(long, allow_hyphen_values = true, default_value = "-10,10,-10,10")]
    region: RegionArg,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Vec<Complex>,
    #[arg(long = "J", value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
    j: Vec<usize>,
    /// Threshold for the final median |r - 1|.
    #[arg(long, value_parser = parse_tol, default_value_t = 1e-3)]
    tol: f64,
    /// Reading of the trace in delta used for the summary line.
    #[arg(long, value_enum, default_value_t = DeltaReadingArg::A0)]
    delta_reading: DeltaReadingArg,
    #[arg(long, value_enum, default_value_t = ConstantsModeArg::Closed)]
    constants_mode: ConstantsModeArg,
}

#[derive(Args, Debug, Clone)]
struct LocateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    region: RegionArg,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,
    #[arg(long = "J", default_value_t = 64)]
    j: usize,
    /// Integrator tolerance for the Evans method.
    #[arg(long, value_parser = parse_tol, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DeltaReadingArg {
    A0,
    A1,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ConstantsModeArg {
    Closed,
    Partial,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Hill,
    Fredholm,
    Evans,
    All,
}

#[derive(Clone, Copy, Debug)]
struct Complex(Complex64);

impl FromStr for Complex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let z = Complex64::from_str(&s.replace(' ', ""))
            .map_err(|e| format!("bad complex number {s:?}: {e}"))?;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(format!("non-finite complex number {s:?}"));
        }
        Ok(Complex(z))
    }
}

fn parse_floats(s: &str, count: usize, what: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("{what} {s:?}: {e}"))?;
    if v.len() != count {
        return Err(format!(
            "{what} needs {count} comma-separated values, got {}",
            v.len()
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format!("{what} {s:?} has non-finite values"));
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug)]
struct RegionArg {
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
}

impl FromStr for RegionArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = parse_floats(s, 4, "region")?;
        if !(v[0] < v[1] && v[2] < v[3]) {
            return Err(format!("region {s:?} is degenerate"));
        }
        Ok(RegionArg {
            re_min: v[0],
            re_max: v[1],
            im_min: v[2],
            im_max: v[3],
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct Grid {
    region: RegionArg,
    nx: usize,
    ny: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 6 {
            return Err(format!(
                "grid needs re_min,re_max,im_min,im_max,nx,ny, got {s:?}"
            ));
        }
        let v = parse_floats(&parts[..4].join(","), 4, "grid")?;
        let count = |t: &str| -> Result<usize, String> {
            match t.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(format!("grid counts must be positive integers, got {t:?}")),
            }
        };
        if v[0] > v[1] || v[2] > v[3] {
            return Err(format!("grid {s:?} has reversed bounds"));
        }
        Ok(Grid {
            region: RegionArg {
                re_min: v[0],
                re_max: v[1],
                im_min: v[2],
                im_max: v[3],
            },
            nx: count(parts[4])?,
            ny: count(parts[5])?,
        })
    }
}

impl Grid {
    /// Row-major points, imaginary part outermost.
    fn points(&self) -> Vec<Complex64> {
        let axis = |lo: f64, hi: f64, n: usize, i: usize| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let r = self.region;
        (0..self.ny)
            .flat_map(|iy| {
                (0..self.nx).map(move |ix| {
                    Complex64::new(
                        axis(r.re_min, r.re_max, self.nx, ix),
                        axis(r.im_min, r.im_max, self.ny, iy),
                    )
                })
            })
            .collect()
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("tolerance {s:?}: {e}"))?;
    if (1e-13..=1e-3).contains(&t) {
        Ok(t)
    } else {
        Err(format!("tolerance {t:e} outside [1e-13, 1e-3]"))
    }
}

/// Failure with an exit status: 1 configuration, 2 problem validation, 3 numerical.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<periodic_evans::Error> for Failure {
    fn from(e: periodic_evans::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Config => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
        };
        Failure {
            code,
            message: format!("[{}] {e}", e.module()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            let _ = e.print();
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
