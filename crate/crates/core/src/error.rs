use num_complex::Complex64;
use thiserror::Error;

use crate::flowint::PoleEstimate;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate modulus k^2 = {ksq}: {what} diverges")]
    DegenerateModulus { ksq: Complex64, what: &'static str },

    #[error("nome |q| = {0} is outside the unit disc")]
    NomeOutOfRange(f64),

    #[error("integration path passes within {distance:e} of the branch point {branch_point}")]
    PathThroughBranchPoint { branch_point: Complex64, distance: f64 },

    #[error("point lies on a branch point of the curve (w = 0)")]
    BranchPointInput,

    #[error("point {x} is within {distance:e} of the branch point {branch_point}")]
    NearBranchPoint {
        x: Complex64,
        branch_point: Complex64,
        distance: f64,
    },

    #[error("degenerate spectral data: {0}")]
    DegenerateCurve(String),

    #[error("z0 = 0: the RH offset xi0 is undefined")]
    ZeroZ0,

    #[error("solution blows up near t = {} (exponent {:.3})", .0.t_star, .0.exponent)]
    BlowUp(PoleEstimate),

    #[error("adaptive step collapsed at t = {t} without norm growth")]
    StepCollapse { t: Complex64 },

    #[error("no blow-up up to radius {radius}")]
    NoBlowUp { radius: f64 },

    #[error("factor G+ is numerically singular at lambda = {lambda}")]
    SingularFactor { lambda: Complex64 },

    #[error("Fourier tail beyond |k| = {cutoff} has relative mass {tail:e}")]
    AliasRisk { cutoff: usize, tail: f64 },

    #[error("truncation is not singular: sigma_min = {sigma:e} above threshold {threshold:e}")]
    NotSingular { sigma: f64, threshold: f64 },

    #[error("refinement did not converge: last displacement {displacement:e}")]
    NoConvergence { displacement: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
