//! Antiderivatives, pair types `(f, μ)` and coercivity of `f`.

mod antiderivative;
mod coercivity;
mod pair;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::EvalError;
use crate::profile::{ProfileError, ProfileOptions};
use crate::quad::QuadError;

pub use antiderivative::{HError, HFunc};
pub use coercivity::{classify_coercivity, CoercivityClass, CoercivityLabel, OffsetVerdict, Witness};
pub use pair::{
    classify_pair, classify_with_profile, find_nu, period_quadrature, NuSearch, PairClass, PairEvidence, PairKind,
};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("degenerate pair: |f({mu})| = {f_mu} is below tol_f")]
    DegeneratePair { mu: f64, f_mu: f64 },
    #[error("h vanishes identically on the search window")]
    FlatAntiderivative,
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError<EvalError>),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("profile: {0}")]
    Profile(#[from] ProfileError),
    #[error("invalid window [{lo}, {hi}]")]
    BadWindow { lo: f64, hi: f64 },
}

/// Closed search interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn symmetric(half_width: f64) -> Window {
        Window {
            lo: -half_width,
            hi: half_width,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo && s <= self.hi
    }
}

/// Tolerances and budgets shared by the classifiers.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    /// Half-width of the ν search measured from μ.
    pub window: f64,
    /// Time budget for the profile run.
    pub t_max: f64,
    /// `|f| <= tol_f` counts as zero.
    pub tol_f: f64,
    /// `|h| <= tol_h` counts as zero.
    pub tol_h: f64,
    pub profile: ProfileOptions,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            window: 10.0,
            t_max: 50.0,
            tol_f: 1e-8,
            tol_h: 1e-9,
            profile: ProfileOptions::default(),
        }
    }
}

/// Bisection on a sign change of `g` in `[a, b]` down to width `tol`.
pub(crate) fn bisect<G, E>(mut g: G, mut a: f64, mut b: f64, tol: f64) -> Result<f64, E>
where
    G: FnMut(f64) -> Result<f64, E>,
{
    let mut ga = g(a)?;
    if ga == 0.0 {
        return Ok(a);
    }
    if g(b)? == 0.0 {
        return Ok(b);
    }
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
