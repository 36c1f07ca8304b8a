use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),

    #[error("invalid sample grid: {0}")]
    SampleGrid(String),

    #[error("Re B0 is not definite: smallest signed eigenvalue {margin:.3e} at x = {x:.6}")]
    Indefinite { margin: f64, x: f64 },

    #[error("period must be 2*pi for the bridge constants, got {0}")]
    PeriodNotNormalized(f64),

    #[error("B0J is ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("eigensolver failed on a {0}x{0} matrix")]
    Eigensolver(usize),

    #[error("tolerance {0:.3e} outside the admissible range")]
    Tolerance(f64),

    #[error("integrator step size underflow at x = {x:.6e} (h = {h:.3e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("integrator exceeded {steps} steps at x = {x:.6e}")]
    MaxSteps { steps: usize, x: f64 },

    #[error("closed-form F evaluations disagree: relative difference {0:.3e}")]
    ClosedFormMismatch(f64),

    #[error("monodromy matrix is numerically singular (|det| = {0:.3e})")]
    SingularMonodromy(f64),

    #[error("function vanishes on the contour near {0}")]
    ZeroOnContour(Complex64),

    #[error("phase step too large after refining to {0} contour samples")]
    PhaseStep(usize),

    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("lambda = {lambda} is too close to an eigenvalue (|E| = {magnitude:.3e})")]
    NearEigenvalue { lambda: Complex64, magnitude: f64 },

    #[error("problem file: {0}")]
    Schema(String),

    #[error("problem file: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse classification used by front ends to pick an exit status.
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Json(_) | Schema(_) | Io(_) | Tolerance(_) | SampleGrid(_) | InvalidContour(_) => {
                ErrorKind::Config
            }
            DimensionMismatch { .. } | NonFinite(_) | InvalidPeriod(_) | Indefinite { .. } => {
                ErrorKind::Validation
            }
            PeriodNotNormalized(_) | NearEigenvalue { .. } => ErrorKind::Config,
            _ => ErrorKind::Numerical,
        }
    }

    /// Name of the module that raised a numerical failure.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            IllConditioned(_) | Eigensolver(_) => "hill_galerkin",
            StepUnderflow { .. }
            | MaxSteps { .. }
            | ClosedFormMismatch(_)
            | SingularMonodromy(_) => "ode_evans",
            ZeroOnContour(_) | PhaseStep(_) | InvalidContour(_) => "spectral_locator",
            PeriodNotNormalized(_) | NearEigenvalue { .. } => "bridge_constants",
            DimensionMismatch { .. }
            | NonFinite(_)
            | InvalidPeriod(_)
            | Indefinite { .. }
            | SampleGrid(_) => "fourier_coeffs",
            Tolerance(_) | Json(_) | Schema(_) | Io(_) => "cli",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Validation,
    Numerical,
}
