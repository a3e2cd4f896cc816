use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::SpacesError;
use crate::classify::{classify_with_profile, ClassifyError, ClassifyOptions, PairClass, PairKind};
use crate::expr::Expr;
use crate::geometry::{Fiber, SolutionField, Warp, WarpedChart};
use crate::profile::{solve_profile, Profile, ProfileOptions};

/// Radial pole cap of model charts.
pub const POLE_CAP: f64 = 0.05;
/// Verification band of noncompact models ends at this radius ...
pub const BAND_REACH: f64 = 10.0;
/// ... or where `|u|` first exceeds this bound, whichever comes first.
pub const BAND_U_BOUND: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    DiskLike,
    SphereLike,
    ProductLine,
}

/// Smoothness of the model at `t = 0` and, for compact pairs, at `t = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureChecks {
    pub phi_0: f64,
    pub dphi_0: f64,
    pub phi_t: Option<f64>,
    pub dphi_t: Option<f64>,
    pub coincidence_residual: Option<f64>,
    pub passed: bool,
}

/// The model manifold `M_{f,μ}` with metric `dt² + (u'(t)/f(μ))² g_{S^{n−1}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Model {
    pub f_text: String,
    pub mu: f64,
    pub dim: usize,
    pub pair: PairClass,
    /// `None` when the construction does not claim a topology.
    pub topology: Option<Topology>,
    pub non_smooth_closure: bool,
    pub closure: ClosureChecks,
    /// A slope-zero event of `u` inside the chart's radial band.
    pub turning_point_in_band: bool,
    pub chart: WarpedChart,
}

const CLOSURE_TOL: f64 = 1e-6;

impl Model {
    pub fn profile(&self) -> &Arc<Profile> {
        match &self.chart.warp {
            Warp::Profile { profile, .. } => profile,
            _ => unreachable!("model charts carry a profile warp"),
        }
    }

    pub fn f(&self) -> &Expr {
        self.profile().f()
    }

    /// `w = u(t)`.
    pub fn solution(&self) -> SolutionField {
        SolutionField::profile(self.profile().clone())
    }

    pub fn band(&self) -> (f64, f64) {
        self.chart.r_domain
    }

    /// Stored warp scale; `−1/f(μ)` for an unmodified model.
    pub fn warp_scale(&self) -> f64 {
        match &self.chart.warp {
            Warp::Profile { scale, .. } => *scale,
            _ => unreachable!("model charts carry a profile warp"),
        }
    }
}

/// Solves the profile, classifies `(f, μ)` and assembles the chart of `M_{f,μ}`.
pub fn build_model(f: &Expr, mu: f64, n: usize, opts: &ClassifyOptions) -> Result<Model, SpacesError> {
    if n < 2 {
        return Err(SpacesError::Dimension(n));
    }
    let f_mu = f.eval(mu).map_err(ClassifyError::from)?;
    if f_mu.abs() <= opts.tol_f {
        return Err(ClassifyError::DegeneratePair { mu, f_mu }.into());
    }
    let popts = ProfileOptions {
        backward: true,
        ..opts.profile
    };
    let profile = Arc::new(solve_profile(f, mu, 0.0, opts.t_max, &popts).map_err(ClassifyError::from)?);
    let pair = classify_with_profile(f, mu, &profile, opts)?;

    let t_end = match (pair.kind, pair.t, pair.evidence.t_ode) {
        (PairKind::Compact, Some(t), _) => t,
        (PairKind::Undetermined, _, Some(t)) => t,
        _ => {
            let mut end = BAND_REACH.min(profile.t_max());
            if let Some(node) = profile.nodes().iter().find(|n| n.t > 0.0 && n.u.abs() > BAND_U_BOUND) {
                end = end.min(node.t);
            }
            end
        }
    };
    if t_end <= 2.0 * POLE_CAP + 0.02 {
        return Err(SpacesError::BandTooShort(t_end));
    }
    let band = (POLE_CAP, t_end - POLE_CAP);
    let turning_point_in_band = profile.forward_critical_times().any(|t| t <= band.1);

    let scale = -1.0 / f_mu;
    let warp = Warp::Profile {
        profile: profile.clone(),
        scale,
    };
    let phi_0 = warp.value(0.0)?;
    let dphi_0 = warp.derivative(0.0)?;
    let (phi_t, dphi_t) = match pair.kind {
        PairKind::Compact => (Some(warp.value(t_end)?), Some(warp.derivative(t_end)?)),
        _ => (None, None),
    };
    let mut passed = phi_0.abs() <= CLOSURE_TOL && (dphi_0 - 1.0).abs() <= CLOSURE_TOL;
    if pair.kind == PairKind::Compact {
        passed &= phi_t.is_some_and(|p| p.abs() <= CLOSURE_TOL)
            && dphi_t.is_some_and(|d| (d + 1.0).abs() <= CLOSURE_TOL)
            && pair.coincidence_residual.is_some_and(|c| c <= CLOSURE_TOL);
    }
    let closure = ClosureChecks {
        phi_0,
        dphi_0,
        phi_t,
        dphi_t,
        coincidence_residual: pair.coincidence_residual,
        passed,
    };
    let (topology, non_smooth_closure) = match pair.kind {
        PairKind::Compact if passed => (Some(Topology::SphereLike), false),
        PairKind::Compact => (None, true),
        PairKind::NoncompactI | PairKind::NoncompactII if !turning_point_in_band => (Some(Topology::DiskLike), false),
        _ => (None, false),
    };
    let chart = WarpedChart::new(Fiber::RoundSphere(n - 1), warp, band);
    Ok(Model {
        f_text: f.to_string(),
        mu,
        dim: n,
        pair,
        topology,
        non_smooth_closure,
        closure,
        turning_point_in_band,
        chart,
    })
}

/// Sectional curvature of `M_{f,μ}` from the profile: `f'(u)` on planes
/// containing `∂_t` and `(f(μ)² − f(u)²)/u'²` on planes tangent to the
/// spheres, combined through the plane's bivector in an orthonormal frame.
pub fn model_curvature_oracle(model: &Model, x: &[f64], a: &[f64], b: &[f64]) -> Result<f64, SpacesError> {
    let p = model.profile();
    let t = x[0];
    let u = p.u(t)?;
    let up = p.up(t)?;
    let f_mu = p.f().eval(p.u0()).map_err(ClassifyError::from)?;
    let fu = p.f().eval(u).map_err(ClassifyError::from)?;
    let k_rad = p.df().eval(u).map_err(ClassifyError::from)?;
    let k_tan = (f_mu * f_mu - fu * fu) / (up * up);
    let g = model.chart.metric_raw(x)?;
    let n = x.len();
    // Diagonal metric: orthonormal components are sqrt(g_ii) times coordinate ones.
    let fa: Vec<f64> = (0..n).map(|i| a[i] * g[(i, i)].sqrt()).collect();
    let fb: Vec<f64> = (0..n).map(|i| b[i] * g[(i, i)].sqrt()).collect();
    let (mut rad, mut tan) = (0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = (fa[i] * fb[j] - fa[j] * fb[i]).powi(2);
            if i == 0 {
                rad += w;
            } else {
                tan += w;
            }
        }
    }
    Ok((k_rad * rad + k_tan * tan) / (rad + tan))
}

/// A fiber point on the equator of the sphere coordinates.
pub(crate) fn equator_point(n: usize, t: f64) -> Vec<f64> {
    let mut x = vec![std::f64::consts::FRAC_PI_2; n];
    x[0] = t;
    if n >= 2 {
        x[n - 1] = 1.0;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use std::f64::consts::PI;

    fn model(f: &str, mu: f64, n: usize) -> Model {
        build_model(&parse(f).unwrap(), mu, n, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn round_sphere_model() {
        let m = model("s", 1.0, 2);
        assert_eq!(m.topology, Some(Topology::SphereLike));
        assert!((m.pair.t.unwrap() - PI).abs() < 1e-8);
        assert!(m.closure.passed, "{:?}", m.closure);
        let g = m.chart.metric_at(&[PI / 2.0, 1.0]).unwrap();
        assert!((g[(1, 1)] - 1.0).abs() < 1e-10);
        assert!((m.band().1 - (PI - 0.05)).abs() < 1e-8);
    }

    #[test]
    fn euclidean_and_type_two_models() {
        let m = model("1", 1.0, 3);
        assert_eq!(m.topology, Some(Topology::DiskLike));
        assert_eq!(m.pair.kind, PairKind::NoncompactI);
        let m = model("s^3 - s", -(2f64.sqrt()), 2);
        assert_eq!(m.pair.kind, PairKind::NoncompactII);
        assert_eq!(m.topology, Some(Topology::DiskLike));
    }

    #[test]
    fn degenerate_and_dimension_errors() {
        assert!(matches!(
            build_model(&parse("s").unwrap(), 0.0, 2, &ClassifyOptions::default()),
            Err(SpacesError::Classify(ClassifyError::DegeneratePair { .. }))
        ));
        assert!(matches!(
            build_model(&parse("s").unwrap(), 1.0, 1, &ClassifyOptions::default()),
            Err(SpacesError::Dimension(1))
        ));
    }

    #[test]
    fn non_smooth_closure_is_flagged() {
        // Compact, but f(ν) ≈ −0.78 while f(μ) = 1.3.
        let m = model("s + 0.3*s^2", 1.0, 2);
        assert_eq!(m.pair.kind, PairKind::Compact);
        assert!(m.non_smooth_closure);
        assert_eq!(m.topology, None);
    }

    #[test]
    fn model_round_trips_through_json() {
        let m = model("cos(s)", 0.0, 2);
        let json = serde_json::to_string(&m).unwrap();
        let back: Model = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        assert_eq!(back.profile().u(1.3).unwrap(), m.profile().u(1.3).unwrap());
    }
}
