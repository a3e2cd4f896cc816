//! Model manifolds of the generalized Obata equation `∇dw + f(w) g = 0`.
//!
//! The crate is organized bottom-up:
//!
//! * [`expr`] parses and differentiates closed-form profile functions `f(s)`.
//! * [`profile`] solves `u'' + f(u) = 0` with event detection.
//! * [`classify`] builds antiderivatives `h`, classifies pairs `(f, μ)` and
//!   the coercivity type of `f`.
//! * [`geometry`] evaluates warped-product metrics, curvature, geodesics and
//!   the residuals of the identities solutions must satisfy.
//! * [`spaces`] assembles model spaces, solution bases and dimension evidence.
//!
//! [`ode`] and [`quad`] are the numerical kernels shared by all of the above.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too; index loops
// mirror the tensor formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod expr;
pub mod geometry;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod spaces;

pub use classify::{
    classify_coercivity, classify_pair, ClassifyOptions, CoercivityLabel, HFunc, PairClass, PairKind, Window,
};
pub use expr::{parse, EvalError, Expr, ParseError};
pub use geometry::{Fiber, SolutionField, Warp, WarpedChart};
pub use profile::{solve_profile, Profile, ProfileOptions};
pub use spaces::{build_model, recover_f, verify_model, Model, SolutionBasis, SpacesError, Topology};
