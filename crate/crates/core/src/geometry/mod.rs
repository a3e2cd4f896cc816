//! Warped-product charts, tensors, flows and the residuals of the identities
//! satisfied by solutions of `∇dw + f(w) g = 0`.

mod chart;
mod field;
mod flow;
mod residual;
mod tensor;

use thiserror::Error;

use crate::classify::HError;
use crate::expr::EvalError;
use crate::profile::ProfileError;

pub use chart::{Fiber, Warp, WarpedChart, ANGLE_CAP, FLAT_REACH, SAMPLE_INSET};
pub use field::{FieldKind, Jet, SolutionField};
pub use flow::{
    flowline_geodesic_residual, geodesic, jacobi_residual, FlowlineReport, GeodesicPath, JacobiReport, ZoneExit,
    GRADIENT_FLOOR,
};
pub use residual::{
    gradient_norm_residual, gradient_norm_sq, levelset_constancy, obata_residual, obata_residual_at, radial_root,
    shape_operator_residual, trace_z, warp_factorization_residual, GridSpec, LevelSetStats, ResidualReport,
};
pub use tensor::{
    christoffel_at, gradient, hessian, hessian_with_jet, riemann_at, sectional_curvature, Christoffel, Riemann,
    CURVATURE_STEP, DEFAULT_STEP,
};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point in exclusion zone ({zone}): coordinate {coordinate} = {value}")]
    ExclusionZone {
        zone: String,
        coordinate: usize,
        value: f64,
    },
    #[error("expected a point of dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite point {0:?}")]
    NonFinitePoint(Vec<f64>),
    #[error("singular metric at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("degenerate tangent plane")]
    DegeneratePlane,
    #[error("gradient collapse at {point:?}")]
    GradientCollapse { point: Vec<f64> },
    #[error("level {level} not attained on the sampled radial line")]
    LevelNotAttained { level: f64 },
    #[error("h(s) = {value} is not positive at s = {s}; the band crosses a critical level")]
    NonPositiveH { s: f64, value: f64 },
    #[error("warp: {0}")]
    Warp(#[from] ProfileError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("antiderivative: {0}")]
    Antiderivative(#[from] HError),
    #[error("integration: {0}")]
    Integration(String),
}
