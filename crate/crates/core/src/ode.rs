//! Dormand–Prince 5(4) explicit Runge–Kutta integrator.
//!
//! Used for the profile ODE, geodesics, flow lines, Jacobi fields and
//! monodromy matrices. Accepted steps are reported to an observer that can
//! stop the integration (escape bounds, zone exits).

use thiserror::Error;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// b - b_hat (embedded 4th order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Error, PartialEq)]
pub enum OdeError<E> {
    #[error("right-hand side failed at t={t}: {source}")]
    Rhs { t: f64, source: E },
    #[error("step size underflow at t={t}")]
    StepUnderflow { t: f64, y: Vec<f64> },
    #[error("step budget exhausted at t={t}")]
    MaxSteps { t: f64, y: Vec<f64> },
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step magnitude.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// Decision returned by step observers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Accepted nodes of an integration, starting with the initial state.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    /// True when an observer stopped the run before `t_end`.
    pub stopped: bool,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.ts.len() - 1;
        (self.ts[i], &self.ys[i])
    }
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }
}

/// One Dormand–Prince step from `(t, y)` with `k[0] = f(t, y)` already filled.
/// Writes the 5th-order solution to `y_new` and returns the componentwise
/// error vector in `err`.
fn step<F, E>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    y_new: &mut [f64],
    err: &mut [f64],
) -> Result<(), OdeError<E>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let n = y.len();
    let mut call =
        |tt: f64, yy: &[f64], out: &mut [f64]| rhs(tt, yy, out).map_err(|source| OdeError::Rhs { t: tt, source });
    let Stages { k, tmp } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    call(t + C2 * h, tmp, k2)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    call(t + C3 * h, tmp, k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    call(t + C4 * h, tmp, k4)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    call(t + C5 * h, tmp, k5)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    call(t + h, tmp, k6)?;
    for i in 0..n {
        y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    call(t + h, y_new, k7)?;
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(())
}

fn weighted_rms(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Adaptive integration from `t0` to `t_end` (forward or backward).
///
/// `observer` sees every accepted node including the initial one and may stop
/// the run; the node it stopped on is kept.
pub fn integrate<F, E, O>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<Trajectory, OdeError<E>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    O: FnMut(f64, &[f64]) -> Flow,
{
    let n = y0.len();
    let mut traj = Trajectory {
        ts: vec![t0],
        ys: vec![y0.to_vec()],
        ..Trajectory::default()
    };
    if observer(t0, y0) == Flow::Stop {
        traj.stopped = true;
        return Ok(traj);
    }
    if t_end == t0 {
        return Ok(traj);
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut st = Stages::new(n);
    let mut t = t0;
    let mut y = y0.to_vec();
    rhs(t, &y, &mut st.k[0]).map_err(|source| OdeError::Rhs { t, source })?;

    // Starting step from the scale of y and y'.
    let h_max = opts.h_max.min(span);
    let d0 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d1 = st.k[0].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-4 } else { 0.01 * d0 / d1 };
    h = h.min(h_max).min(1e-2 * span.max(1e-3)).max(1e-12 * span);

    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(OdeError::MaxSteps { t, y });
        }
        steps += 1;
        let remaining = (t_end - t) * dir;
        let last = h >= remaining;
        let h_try = if last { remaining } else { h };
        step(&mut rhs, t, &y, dir * h_try, &mut st, &mut y_new, &mut err)?;
        let e = weighted_rms(&err, &y, &y_new, opts);
        let e = if e.is_nan() { f64::INFINITY } else { e };
        let factor = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
        };
        if e <= 1.0 {
            t = if last { t_end } else { t + dir * h_try };
            std::mem::swap(&mut y, &mut y_new);
            st.k.swap(0, 6);
            traj.ts.push(t);
            traj.ys.push(y.clone());
            if observer(t, &y) == Flow::Stop {
                traj.stopped = true;
                return Ok(traj);
            }
            if last {
                return Ok(traj);
            }
            h = (h_try * factor).min(h_max);
        } else {
            traj.rejected += 1;
            h = h_try * factor.min(1.0);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t, y });
            }
        }
    }
}

/// Fixed-step Dormand–Prince (5th order solution, no error control).
pub fn integrate_fixed<F, E>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<Trajectory, OdeError<E>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let n = y0.len();
    let h = (t_end - t0) / steps as f64;
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut traj = Trajectory {
        ts: vec![t0],
        ys: vec![y.clone()],
        ..Trajectory::default()
    };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        rhs(t, &y, &mut st.k[0]).map_err(|source| OdeError::Rhs { t, source })?;
        step(&mut rhs, t, &y, h, &mut st, &mut y_new, &mut err)?;
        std::mem::swap(&mut y, &mut y_new);
        traj.ts.push(t0 + (i + 1) as f64 * h);
        traj.ys.push(y.clone());
    }
    Ok(traj)
}
