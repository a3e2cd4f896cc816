//! Model manifolds `M_{f,μ}`, warping towers, Euclidean products, their
//! solution bases and the recovery of `f` from a solution.

mod basis;
mod model;
mod recover;
mod verify;

use thiserror::Error;

use crate::classify::ClassifyError;
use crate::expr::ParseError;
use crate::geometry::GeometryError;
use crate::profile::ProfileError;

pub use basis::{
    base_point, build_cosh_tower, build_exp_warping, circle_obstruction, euclidean_basis, euclidean_product,
    evaluation_matrix, evaluation_rank, exp_basis, hyperbolic_basis, inner_hyperbolic_seed, oscillator_fixed_dim,
    ElementReport, Obstruction, SolutionBasis, SpaceTag, ELEMENT_TOL, TOWER_REACH,
};
pub use model::{
    build_model, model_curvature_oracle, ClosureChecks, Model, Topology, BAND_REACH, BAND_U_BOUND, POLE_CAP,
};
pub use recover::{
    recover_f, Bin, RecoverGrid, Recovered, BIN_WIDTH, BLOWUP_RATIO, MIN_BIN_SAMPLES, SINGLE_VALUED_TOL,
};
pub use verify::{verify_model, Check, VerifyConfig, VerifyReport, VerifyTolerances};

#[derive(Debug, Error)]
pub enum SpacesError {
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("radius must be positive, got {0}")]
    Radius(f64),
    #[error("verification band too short: profile usable only up to t = {0}")]
    BandTooShort(f64),
    #[error("z is not a function of w: spread {residual:e} within a bin")]
    FunctionalDependenceFailed { residual: f64 },
    #[error("only {0} populated bins; refine the grid")]
    SparseBins(usize),
    #[error("integration: {0}")]
    Integration(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl From<ProfileError> for SpacesError {
    fn from(e: ProfileError) -> Self {
        SpacesError::Geometry(GeometryError::Warp(e))
    }
}
