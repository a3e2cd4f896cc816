use serde::{Deserialize, Serialize};

use super::{bisect, ClassifyError, ClassifyOptions, HFunc};
use crate::expr::Expr;
use crate::profile::{solve_profile, CriticalTime, EventKind, Profile, ProfileOptions};
use crate::quad::{self, QuadOptions};

/// Pair types of `(f, μ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    NoncompactI,
    NoncompactII,
    Compact,
    Undetermined,
}

/// Outcome of [`find_nu`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuSearch {
    pub nu: Option<f64>,
    pub f_at_nu: Option<f64>,
    pub h_at_nu: Option<f64>,
    /// ν was found as a critical point of `h` (zero of `f`) where `h` is
    /// within `tol_h` of zero.
    pub double_root: bool,
}

impl NuSearch {
    fn none() -> Self {
        NuSearch {
            nu: None,
            f_at_nu: None,
            h_at_nu: None,
            double_root: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEvidence {
    pub ode_event: CriticalTime,
    /// `|h(ν)|`.
    pub nu_root_residual: Option<f64>,
    /// `|f(ν)|`.
    pub f_nu_magnitude: Option<f64>,
    pub t_quadrature: Option<f64>,
    pub t_ode: Option<f64>,
    pub double_root: bool,
}

/// Classification record for `(f, μ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairClass {
    pub kind: PairKind,
    pub mu: f64,
    pub f_mu: f64,
    pub nu: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// `|f(μ) + f(ν)|`; zero when the model closes smoothly.
    pub coincidence_residual: Option<f64>,
    pub evidence: PairEvidence,
    pub caveat: Option<String>,
}

const SCAN_STEP: f64 = 0.01;

/// Nearest zero of `h` strictly on the `direction` side of its base point,
/// within `window`.
pub fn find_nu(h: &HFunc, direction: f64, window: f64, tol_h: f64) -> Result<NuSearch, ClassifyError> {
    let mu = h.base();
    let f = h.f();
    let dir = if direction < 0.0 { -1.0 } else { 1.0 };
    let cells = ((window / SCAN_STEP).ceil() as usize).clamp(16, 200_000);
    let step = window / cells as f64;
    let at = |k: usize| mu + dir * step * k as f64;
    // Sign of h just past μ.
    let f_mu = f.eval(mu)?;
    let side = if f_mu * dir > 0.0 { 1.0 } else { -1.0 };

    let crit_point = |a: f64, b: f64| bisect(|s| f.eval(s), a, b, 1e-14);
    let root = |a: f64, b: f64| bisect(|s| h.eval(s), a, b, 1e-13);
    // A zero of f in (a, b] where h is within tol_h of zero is a double root.
    let touching = |a: f64, b: f64| -> Result<Option<(f64, f64)>, ClassifyError> {
        let (fa, fb) = (f.eval(a)?, f.eval(b)?);
        if fa == 0.0 || fa * fb > 0.0 {
            return Ok(None);
        }
        let s = crit_point(a, b)?;
        let hs = h.eval(s)?;
        Ok((hs.abs() <= tol_h).then_some((s, hs)))
    };
    let report = |s: f64, hs: f64, double_root: bool| -> Result<NuSearch, ClassifyError> {
        Ok(NuSearch {
            nu: Some(s),
            f_at_nu: Some(f.eval(s)?),
            h_at_nu: Some(hs),
            double_root,
        })
    };

    let mut flat = true;
    let (mut s_a, mut f_a) = (mu, f_mu);
    for k in 1..=cells {
        let s_b = at(k);
        let f_b = f.eval(s_b)?;
        let h_b = h.eval(s_b)?;
        if h_b.abs() > tol_h {
            flat = false;
        }
        let crit = if f_a != 0.0 && f_a * f_b <= 0.0 {
            let s = crit_point(s_a, s_b)?;
            Some((s, h.eval(s)?))
        } else {
            None
        };
        if let Some((s, hs)) = crit {
            if hs.abs() <= tol_h {
                return report(s, hs, true);
            }
        }
        if h_b * side < 0.0 || (h_b == 0.0 && f_b != 0.0) {
            let nu = root(s_a, s_b)?;
            if let Some((s, hs)) = touching(nu, nu + dir * step)? {
                return report(s, hs, true);
            }
            return report(nu, h.eval(nu)?, false);
        }
        if let Some((s, hs)) = crit {
            if hs * side < 0.0 {
                // h crossed and came back within one cell.
                let nu = root(s_a, s)?;
                return report(nu, h.eval(nu)?, false);
            }
        }
        s_a = s_b;
        f_a = f_b;
    }
    if flat {
        return Err(ClassifyError::FlatAntiderivative);
    }
    Ok(NuSearch::none())
}

/// `T = ∫ (−2h)^{−1/2}` between `μ` and `ν` (both simple zeros of `h`).
///
/// The substitution `s = (a+b)/2 − (b−a)/2 cos θ` removes both inverse
/// square-root endpoint singularities. `h` is corrected by the affine term
/// that makes it vanish exactly at both ends.
pub fn period_quadrature(h: &HFunc, nu: f64) -> Result<f64, ClassifyError> {
    let mu = h.base();
    let h_nu = h.eval(nu)?;
    let (a, b) = if mu < nu { (mu, nu) } else { (nu, mu) };
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let integrand = |theta: f64| -> Result<f64, ClassifyError> {
        let s = center - half * theta.cos();
        let corrected = h.eval(s)? - h_nu * (s - mu) / (nu - mu);
        let neg2h = -2.0 * corrected;
        if neg2h <= 0.0 {
            return Ok(f64::NAN);
        }
        Ok(half * theta.sin() / neg2h.sqrt())
    };
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_subdivisions: 2000,
    };
    match quad::integrate(integrand, 0.0, std::f64::consts::PI, opts) {
        Ok(r) => Ok(r.value),
        Err(quad::QuadError::Integrand(e)) => Err(e),
        Err(quad::QuadError::NotFinite { at }) => Err(ClassifyError::Quadrature(quad::QuadError::NotFinite { at })),
        Err(quad::QuadError::NoConvergence {
            subdivisions,
            estimate,
            error,
        }) => Err(ClassifyError::Quadrature(quad::QuadError::NoConvergence {
            subdivisions,
            estimate,
            error,
        })),
    }
}

/// Classifies `(f, μ)` by solving the profile over `[0, opts.t_max]`.
pub fn classify_pair(f: &Expr, mu: f64, opts: &ClassifyOptions) -> Result<PairClass, ClassifyError> {
    let f_mu = f.eval(mu)?;
    if f_mu.abs() <= opts.tol_f {
        return Err(ClassifyError::DegeneratePair { mu, f_mu });
    }
    let popts = ProfileOptions {
        backward: false,
        ..opts.profile
    };
    let profile = solve_profile(f, mu, 0.0, opts.t_max, &popts)?;
    classify_with_profile(f, mu, &profile, opts)
}

/// Classification reusing an already solved profile started at `(μ, 0)`.
pub fn classify_with_profile(
    f: &Expr,
    mu: f64,
    profile: &Profile,
    opts: &ClassifyOptions,
) -> Result<PairClass, ClassifyError> {
    let f_mu = f.eval(mu)?;
    if f_mu.abs() <= opts.tol_f {
        return Err(ClassifyError::DegeneratePair { mu, f_mu });
    }
    let ode_event = profile.detect_t()?;
    let ode_t = (ode_event.kind == EventKind::SlopeZero).then_some(ode_event.t);
    let mut class = PairClass {
        kind: PairKind::Undetermined,
        mu,
        f_mu,
        nu: None,
        t: None,
        coincidence_residual: None,
        evidence: PairEvidence {
            ode_event,
            nu_root_residual: None,
            f_nu_magnitude: None,
            t_quadrature: None,
            t_ode: ode_t,
            double_root: false,
        },
        caveat: None,
    };
    let h = HFunc::new(f.clone(), mu, 1e-13);
    let search = match find_nu(&h, -f_mu.signum(), opts.window, opts.tol_h) {
        Ok(s) => s,
        Err(ClassifyError::FlatAntiderivative) => {
            class.caveat = Some("h vanishes identically on the search window".into());
            return Ok(class);
        }
        Err(e) => return Err(e),
    };
    class.nu = search.nu;
    class.evidence.nu_root_residual = search.h_at_nu.map(f64::abs);
    class.evidence.f_nu_magnitude = search.f_at_nu.map(f64::abs);
    class.evidence.double_root = search.double_root;

    let (Some(nu), Some(f_nu)) = (search.nu, search.f_at_nu) else {
        if ode_t.is_some() {
            class.caveat = Some(format!(
                "no zero of h within {} of mu, but u' vanished at t={}; widen the window",
                opts.window, ode_event.t
            ));
        } else {
            class.kind = PairKind::NoncompactI;
            class.caveat = Some(format!(
                "divergence of the t(s) integral is only confirmed on the window of half-width {} \
                 and by the profile run ending with {:?} at t={}",
                opts.window, ode_event.kind, ode_event.t
            ));
        }
        return Ok(class);
    };

    if search.double_root || f_nu.abs() <= opts.tol_f {
        class.kind = PairKind::NoncompactII;
        if ode_t.is_some() {
            class.caveat = Some(format!(
                "h has a double zero at nu={nu} within tol_h, but the profile run turned at t={}",
                ode_event.t
            ));
        }
        return Ok(class);
    }

    let t_quad = period_quadrature(&h, nu)?;
    class.evidence.t_quadrature = Some(t_quad);
    class.coincidence_residual = Some((f_mu + f_nu).abs());
    match ode_t {
        Some(t_ode) if (t_quad - t_ode).abs() <= 1e-4 => {
            class.kind = PairKind::Compact;
            class.t = Some(t_quad);
            if (t_quad - t_ode).abs() > 1e-6 {
                class.caveat = Some(format!(
                    "quadrature T={t_quad} and profile T={t_ode} differ by more than 1e-6"
                ));
            }
        }
        _ => {
            class.caveat = Some(format!(
                "quadrature T={t_quad} disagrees with the profile run ({:?} at t={})",
                ode_event.kind, ode_event.t
            ));
        }
    }
    Ok(class)
}
