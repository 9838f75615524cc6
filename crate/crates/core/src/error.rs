use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("x = {x} outside [0, {period}]")]
    Domain { x: f64, period: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: relative error estimate {estimate:.3e} exceeds {tolerance:.1e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("adaptive integrator stalled at x = {x} (step {step:.3e}) for lambda = {lambda}")]
    StepSizeUnderflow { x: f64, step: f64, lambda: Complex64 },

    #[error("discriminant {discriminant} is within tolerance of +-2 at lambda = {lambda}; Floquet eigenvectors undefined")]
    DegenerateMultiplier { lambda: Complex64, discriminant: Complex64 },

    #[error("lambda = {lambda} lies on the essential spectrum")]
    EssentialSpectrum { lambda: Complex64 },

    #[error("Green's kernel is not defined on the diagonal x = t = {x}")]
    DiagonalEvaluation { x: f64 },

    #[error("edge at lambda = {lambda}: ||M - sI||_F = {distance:.3e} falls inside the ambiguity band")]
    ClassificationAmbiguous { lambda: f64, distance: f64 },

    #[error("edge candidate lambda = {lambda} does not satisfy D = {sign}*2 (residual {residual:.3e})")]
    NotAnEdge { lambda: f64, sign: i8, residual: f64 },

    #[error("overflow: {0}")]
    Overflow(String),
}

impl Error {
    /// Spectral parameter at which a numerical failure happened, if any.
    pub fn lambda(&self) -> Option<Complex64> {
        match self {
            Error::StepSizeUnderflow { lambda, .. } | Error::DegenerateMultiplier { lambda, .. } | Error::EssentialSpectrum { lambda } => {
                Some(*lambda)
            }
            Error::ClassificationAmbiguous { lambda, .. } | Error::NotAnEdge { lambda, .. } => Some(Complex64::new(*lambda, 0.0)),
            _ => None,
        }
    }
}
