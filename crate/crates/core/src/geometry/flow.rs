use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::tensor::{christoffel_raw, gradient, riemann_raw, DEFAULT_STEP};
use super::{GeometryError, SolutionField, Warp, WarpedChart};
use crate::ode::{self, Flow, OdeError, OdeOptions};

/// Where and why an integration left the admissible region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneExit {
    pub t: f64,
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub ts: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub vs: Vec<Vec<f64>>,
    pub exit: Option<ZoneExit>,
    /// `max | |γ'|_g − 1 |` over accepted nodes.
    pub speed_drift: f64,
}

fn ode_opts(tol: f64) -> OdeOptions {
    OdeOptions {
        rtol: tol,
        atol: tol,
        h_max: 0.05,
        ..OdeOptions::default()
    }
}

fn from_ode(e: OdeError<GeometryError>) -> GeometryError {
    match e {
        OdeError::Rhs { source, .. } => source,
        OdeError::StepUnderflow { t, .. } => GeometryError::Integration(format!("step underflow at t={t}")),
        OdeError::MaxSteps { t, .. } => GeometryError::Integration(format!("step budget exhausted at t={t}")),
    }
}

fn g_norm(c: &WarpedChart, x: &[f64], v: &[f64]) -> Result<f64, GeometryError> {
    let g = c.metric_raw(x)?;
    let v = DVector::from_column_slice(v);
    Ok(v.dot(&(g * &v)).sqrt())
}

fn geodesic_accel(c: &WarpedChart, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
    let gam = christoffel_raw(c, x, DEFAULT_STEP)?;
    let a = gam.contract(v, v);
    for k in 0..x.len() {
        out[k] = -a[k];
    }
    Ok(())
}

/// Unit-speed geodesic from `x0` in direction `v0` (normalized here).
/// Stops with a partial path when it leaves the admissible region.
pub fn geodesic(c: &WarpedChart, x0: &[f64], v0: &[f64], t_end: f64, tol: f64) -> Result<GeodesicPath, GeometryError> {
    c.check_admissible(x0, 0.0)?;
    let n = x0.len();
    let speed = g_norm(c, x0, v0)?;
    if !(speed > 0.0) {
        return Err(GeometryError::DegeneratePlane);
    }
    let mut y0 = x0.to_vec();
    y0.extend(v0.iter().map(|v| v / speed));
    let mut exit = None;
    let tr = ode::integrate(
        |_t, y: &[f64], dy: &mut [f64]| {
            dy[..n].copy_from_slice(&y[n..]);
            geodesic_accel(c, &y[..n], &y[n..], &mut dy[n..])
        },
        0.0,
        &y0,
        t_end,
        &ode_opts(tol),
        |t, y| match c.check_admissible(&y[..n], 0.0) {
            Ok(()) => Flow::Continue,
            Err(e) => {
                exit = Some(ZoneExit {
                    t,
                    point: y[..n].to_vec(),
                    reason: e.to_string(),
                });
                Flow::Stop
            }
        },
    )
    .map_err(from_ode)?;
    let mut drift = 0.0f64;
    for y in &tr.ys {
        if c.is_admissible(&y[..n]) {
            drift = drift.max((g_norm(c, &y[..n], &y[n..])? - 1.0).abs());
        }
    }
    Ok(GeodesicPath {
        ts: tr.ts,
        xs: tr.ys.iter().map(|y| y[..n].to_vec()).collect(),
        vs: tr.ys.iter().map(|y| y[n..].to_vec()).collect(),
        exit,
        speed_drift: drift,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowlineReport {
    pub max_deviation: f64,
    pub t_reached: f64,
    pub stop: Option<ZoneExit>,
}

/// Smallest `|∇w|` at which normalized gradient flow is still integrated.
pub const GRADIENT_FLOOR: f64 = 0.05;

/// Largest coordinate distance between the flow line of `∇w/|∇w|` from `x0`
/// and the geodesic with the same initial point and velocity.
pub fn flowline_geodesic_residual(
    c: &WarpedChart,
    w: &SolutionField,
    x0: &[f64],
    t_end: f64,
) -> Result<FlowlineReport, GeometryError> {
    c.check_admissible(x0, 0.0)?;
    let n = x0.len();
    let unit_grad = |x: &[f64]| -> Result<(DVector<f64>, f64), GeometryError> {
        let jet = w.jet(x)?;
        let g = gradient(c, &jet, x)?;
        let norm = g.dot(&jet.grad).sqrt();
        Ok((g / norm.max(f64::MIN_POSITIVE), norm))
    };
    let (v0, norm0) = unit_grad(x0)?;
    if norm0 < GRADIENT_FLOOR {
        return Err(GeometryError::GradientCollapse { point: x0.to_vec() });
    }
    let mut y0 = x0.to_vec();
    y0.extend(v0.iter());
    y0.extend_from_slice(x0);
    let mut stop = None;
    let mut max_dev = 0.0f64;
    let tr = ode::integrate(
        |_t, y: &[f64], dy: &mut [f64]| {
            dy[..n].copy_from_slice(&y[n..2 * n]);
            geodesic_accel(c, &y[..n], &y[n..2 * n], &mut dy[n..2 * n])?;
            let (u, _) = unit_grad(&y[2 * n..])?;
            dy[2 * n..].copy_from_slice(u.as_slice());
            Ok(())
        },
        0.0,
        &y0,
        t_end,
        &ode_opts(1e-11),
        |t, y| {
            let reason = c
                .check_admissible(&y[..n], 0.0)
                .and(c.check_admissible(&y[2 * n..], 0.0))
                .map_err(|e| e.to_string())
                .and_then(|_| match unit_grad(&y[2 * n..]) {
                    Ok((_, norm)) if norm >= GRADIENT_FLOOR => Ok(()),
                    Ok((_, norm)) => Err(format!("gradient collapse: |grad w| = {norm}")),
                    Err(e) => Err(e.to_string()),
                });
            match reason {
                Ok(()) => {
                    let d = y[..n]
                        .iter()
                        .zip(&y[2 * n..])
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    max_dev = max_dev.max(d);
                    Flow::Continue
                }
                Err(reason) => {
                    stop = Some(ZoneExit {
                        t,
                        point: y[2 * n..].to_vec(),
                        reason,
                    });
                    Flow::Stop
                }
            }
        },
    )
    .map_err(from_ode)?;
    let t_reached = match &stop {
        Some(s) => s.t,
        None => tr.last().0,
    };
    Ok(FlowlineReport {
        max_deviation: max_dev,
        t_reached,
        stop,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiReport {
    pub max_residual: f64,
    pub t_start: f64,
    pub t_reached: f64,
    pub stop: Option<ZoneExit>,
}

/// Expected Jacobi magnitude `ψ(t)` and `ψ'(t)` for the field `ψ(t) V(t)`
/// along a radial geodesic from the pole. On profile charts this is
/// `−u'(t)/f(μ)`, independent of the chart's stored scale.
fn expected_warp(c: &WarpedChart, t: f64) -> Result<(f64, f64), GeometryError> {
    match &c.warp {
        Warp::Profile { profile, .. } => {
            let f_mu = profile.f().eval(profile.u0())?;
            Ok((-profile.up(t)? / f_mu, -profile.upp(t)? / f_mu))
        }
        w => Ok((w.value(t)?, w.derivative(t)?)),
    }
}

/// Integrates `D²Y + R(Y, γ')γ' = 0` along the radial geodesic through the
/// fiber point of `x0`, started at the inner edge of the admissible radial
/// range with `Y = ψV`, `DY = ψ'V`, and returns `max |Y − ψ(t)V(t)|_g` with
/// `V` parallel along the geodesic.
///
/// `direction` is a tangent vector at `x0`; its radial component is
/// discarded.
pub fn jacobi_residual(
    c: &WarpedChart,
    x0: &[f64],
    direction: &[f64],
    t_end: f64,
) -> Result<JacobiReport, GeometryError> {
    let n = x0.len();
    let t0 = c.r_domain.0;
    let mut x = x0.to_vec();
    x[0] = t0;
    c.check_admissible(&x, 0.0)?;
    let mut v_dir = direction.to_vec();
    v_dir[0] = 0.0;
    let len = g_norm(c, &x, &v_dir)?;
    if !(len > 0.0) {
        return Err(GeometryError::DegeneratePlane);
    }
    let v0: Vec<f64> = v_dir.iter().map(|v| v / len).collect();
    let (psi, dpsi) = expected_warp(c, t0)?;
    // State: x, γ', Y, DY, V.
    let mut y0 = x.clone();
    let mut e_r = vec![0.0; n];
    e_r[0] = 1.0;
    y0.extend(&e_r);
    y0.extend(v0.iter().map(|v| psi * v));
    y0.extend(v0.iter().map(|v| dpsi * v));
    y0.extend(&v0);

    let mut stop = None;
    let mut max_res = 0.0f64;
    let residual = |y: &[f64]| -> Result<f64, GeometryError> {
        let (psi, _) = expected_warp(c, y[0])?;
        let diff: Vec<f64> = (0..n).map(|k| y[2 * n + k] - psi * y[4 * n + k]).collect();
        g_norm(c, &y[..n], &diff)
    };
    let tr = ode::integrate(
        |_t, y: &[f64], dy: &mut [f64]| {
            let (xp, v) = (&y[..n], &y[n..2 * n]);
            let (jy, djy, pv) = (&y[2 * n..3 * n], &y[3 * n..4 * n], &y[4 * n..]);
            let gam = christoffel_raw(c, xp, DEFAULT_STEP)?;
            let rm = riemann_raw(c, xp, DEFAULT_STEP)?;
            let acc = gam.contract(v, v);
            let g_vy = gam.contract(v, jy);
            let g_vdy = gam.contract(v, djy);
            let g_vv = gam.contract(v, pv);
            let ryvv = rm.apply(jy, v, v);
            for k in 0..n {
                dy[k] = v[k];
                dy[n + k] = -acc[k];
                dy[2 * n + k] = djy[k] - g_vy[k];
                dy[3 * n + k] = -ryvv[k] - g_vdy[k];
                dy[4 * n + k] = -g_vv[k];
            }
            Ok(())
        },
        t0,
        &y0,
        t_end,
        &ode_opts(1e-10),
        |t, y| {
            let check = c
                .check_admissible(&y[..n], 0.0)
                .and_then(|_| residual(y))
                .map_err(|e| e.to_string());
            match check {
                Ok(r) => {
                    max_res = max_res.max(r);
                    Flow::Continue
                }
                Err(reason) => {
                    stop = Some(ZoneExit {
                        t,
                        point: y[..n].to_vec(),
                        reason,
                    });
                    Flow::Stop
                }
            }
        },
    )
    .map_err(from_ode)?;
    Ok(JacobiReport {
        max_residual: max_res,
        t_start: t0,
        t_reached: stop.as_ref().map_or(tr.last().0, |s| s.t),
        stop,
    })
}
