//! The profile ODE `u'' + f(u) = 0`.
//!
//! [`solve_profile`] integrates forward to `t_max` and backward to `-t_max`
//! (or until `|u|` exceeds the escape bound), stores the accepted nodes and
//! locates every sign change of `u'` on a quintic Hermite interpolant. The
//! interpolant uses `u'' = -f(u)` and `u''' = -f'(u) u'` at the nodes, so it
//! is C² and accurate to sixth order in the node spacing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::HFunc;
use crate::expr::{parse, EvalError, Expr, ParseError};
use crate::ode::{self, Flow, OdeError, OdeOptions};
use crate::quad::QuadError;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("f({u0}) = {f_u0} vanishes with zero slope: the solution is constant")]
    ConstantSolution { u0: f64, f_u0: f64 },
    #[error("t_max must be positive, got {0}")]
    BadHorizon(f64),
    #[error("evaluation of f failed: {0}")]
    Eval(#[from] EvalError),
    #[error("step size underflow at t={t} (u={u}, u'={up})")]
    StepUnderflow { t: f64, u: f64, up: f64 },
    #[error("step budget exhausted at t={t} (u={u}, u'={up})")]
    StepBudget { t: f64, u: f64, up: f64 },
    #[error("antiderivative failed: {0}")]
    Antiderivative(#[from] QuadError<EvalError>),
    #[error("profile was not started at a critical point (v0 = {0})")]
    NotCritical(f64),
    #[error("span [{lo}, {hi}] leaves the integrated domain [{t_min}, {t_max}]")]
    SpanOutsideDomain { lo: f64, hi: f64, t_min: f64, t_max: f64 },
    #[error("t={0} outside the integrated domain")]
    OutsideDomain(f64),
    #[error("invalid profile document: {0}")]
    Document(String),
    #[error("cannot parse f: {0}")]
    Parse(#[from] ParseError),
}

impl From<OdeError<EvalError>> for ProfileError {
    fn from(e: OdeError<EvalError>) -> Self {
        match e {
            OdeError::Rhs { source, .. } => ProfileError::Eval(source),
            OdeError::StepUnderflow { t, y } => ProfileError::StepUnderflow { t, u: y[0], up: y[1] },
            OdeError::MaxSteps { t, y } => ProfileError::StepBudget { t, u: y[0], up: y[1] },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SlopeZero,
    Escape,
    Budget,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub t: f64,
    pub u: f64,
    pub up: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ProfileOptions {
    pub ode: OdeOptions,
    pub u_escape: f64,
    /// Bisection width for slope-zero events.
    pub event_tol: f64,
    /// Also integrate backward to `-t_max`.
    pub backward: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            ode: OdeOptions {
                rtol: 1e-12,
                atol: 1e-12,
                h_max: 0.1,
                max_steps: 2_000_000,
            },
            u_escape: 1e6,
            event_tol: 1e-12,
            backward: true,
        }
    }
}

/// Dense numerical solution of `u'' + f(u) = 0`.
///
/// Serializes through [`ProfileDocument`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "ProfileDocument", try_from = "ProfileDocument")]
pub struct Profile {
    f: Expr,
    df: Expr,
    u0: f64,
    v0: f64,
    nodes: Vec<Node>,
    // u'' and u''' at each node
    upp: Vec<f64>,
    uppp: Vec<f64>,
    events: Vec<Event>,
    energy_max_drift: f64,
}

impl From<Profile> for ProfileDocument {
    fn from(p: Profile) -> Self {
        p.to_document()
    }
}

impl TryFrom<ProfileDocument> for Profile {
    type Error = ProfileError;

    fn try_from(doc: ProfileDocument) -> Result<Self, Self::Error> {
        Profile::from_document(&doc)
    }
}

/// JSON form of a [`Profile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub f_text: String,
    pub u0: f64,
    pub v0: f64,
    pub nodes: Vec<Node>,
    pub events: Vec<Event>,
    pub energy_max_drift: f64,
}

/// Result of [`Profile::detect_t`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalTime {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periodicity {
    pub periodic: bool,
    pub period: Option<f64>,
}

// Quintic Hermite interpolation on [0, 1] from value, first and second
// derivative at both ends (derivatives already scaled by h and h²).
fn hermite5(s: f64, p0: f64, m0: f64, a0: f64, p1: f64, m1: f64, a1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    p0 * h0 + m0 * h1 + a0 * h2 + a1 * h3 + m1 * h4 + p1 * h5
}

fn energy_drift(h: &HFunc, v0: f64, nodes: &[Node]) -> Result<f64, ProfileError> {
    let mut worst: f64 = 0.0;
    for n in nodes {
        let two_h = 2.0 * h.eval(n.u)?;
        let e = n.up * n.up + two_h - v0 * v0;
        let scale = 1f64.max(n.up * n.up).max(two_h.abs());
        worst = worst.max(e.abs() / scale);
    }
    Ok(worst)
}

/// Integrates `u'' + f(u) = 0` with `u(0) = u0`, `u'(0) = v0` over
/// `[-t_max, t_max]` (forward only when `opts.backward` is false).
pub fn solve_profile(f: &Expr, u0: f64, v0: f64, t_max: f64, opts: &ProfileOptions) -> Result<Profile, ProfileError> {
    if !(t_max > 0.0) {
        return Err(ProfileError::BadHorizon(t_max));
    }
    let f_u0 = f.eval(u0)?;
    if v0 == 0.0 && f_u0.abs() <= 1e-12 {
        return Err(ProfileError::ConstantSolution { u0, f_u0 });
    }
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), EvalError> {
        dy[0] = y[1];
        dy[1] = -f.eval(y[0])?;
        Ok(())
    };
    let escape = opts.u_escape;
    let run = |t_end: f64| {
        ode::integrate(rhs, 0.0, &[u0, v0], t_end, &opts.ode, |_, y| {
            if y[0].abs() > escape {
                Flow::Stop
            } else {
                Flow::Continue
            }
        })
    };
    let fwd = run(t_max)?;
    let mut events = vec![Event {
        t: fwd.last().0,
        kind: if fwd.stopped {
            EventKind::Escape
        } else {
            EventKind::Budget
        },
    }];
    let mut nodes: Vec<Node> = Vec::new();
    if opts.backward {
        let bwd = run(-t_max)?;
        events.push(Event {
            t: bwd.last().0,
            kind: if bwd.stopped {
                EventKind::Escape
            } else {
                EventKind::Budget
            },
        });
        for (t, y) in bwd.ts.iter().zip(&bwd.ys).skip(1).rev() {
            nodes.push(Node {
                t: *t,
                u: y[0],
                up: y[1],
            });
        }
    }
    for (t, y) in fwd.ts.iter().zip(&fwd.ys) {
        nodes.push(Node {
            t: *t,
            u: y[0],
            up: y[1],
        });
    }
    let h = HFunc::new(f.clone(), u0, 1e-13);
    let energy_max_drift = energy_drift(&h, v0, &nodes)?;
    let mut profile = Profile::assemble(f.clone(), u0, v0, nodes, events, energy_max_drift)?;
    profile.locate_slope_zeros(opts.event_tol)?;
    Ok(profile)
}

impl Profile {
    fn assemble(
        f: Expr,
        u0: f64,
        v0: f64,
        nodes: Vec<Node>,
        events: Vec<Event>,
        energy_max_drift: f64,
    ) -> Result<Profile, ProfileError> {
        let df = f.differentiate();
        let mut upp = Vec::with_capacity(nodes.len());
        let mut uppp = Vec::with_capacity(nodes.len());
        for n in &nodes {
            upp.push(-f.eval(n.u)?);
            uppp.push(-df.eval(n.u)? * n.up);
        }
        Ok(Profile {
            f,
            df,
            u0,
            v0,
            nodes,
            upp,
            uppp,
            events,
            energy_max_drift,
        })
    }

    fn locate_slope_zeros(&mut self, tol: f64) -> Result<(), ProfileError> {
        let mut found = Vec::new();
        for i in 0..self.nodes.len() - 1 {
            let (a, b) = (self.nodes[i], self.nodes[i + 1]);
            if b.up == 0.0 && b.t != 0.0 {
                found.push(b.t);
                continue;
            }
            if a.up == 0.0 || a.up.signum() == b.up.signum() {
                continue;
            }
            let (mut lo, mut hi) = (a.t, b.t);
            let sign_lo = a.up.signum();
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let v = self.up_in(i, mid);
                if v == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if v.signum() == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            found.push(0.5 * (lo + hi));
        }
        self.events.extend(found.into_iter().map(|t| Event {
            t,
            kind: EventKind::SlopeZero,
        }));
        self.events.sort_by(|x, y| x.t.total_cmp(&y.t));
        Ok(())
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    /// Symbolic derivative `f'`.
    pub fn df(&self) -> &Expr {
        &self.df
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn energy_max_drift(&self) -> f64 {
        self.energy_max_drift
    }

    pub fn t_min(&self) -> f64 {
        self.nodes[0].t
    }

    pub fn t_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].t
    }

    /// Slope-zero events at strictly positive times.
    pub fn forward_critical_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::SlopeZero && e.t > 0.0)
            .map(|e| e.t)
    }

    fn segment(&self, t: f64) -> Result<usize, ProfileError> {
        if !(t >= self.t_min() && t <= self.t_max()) {
            return Err(ProfileError::OutsideDomain(t));
        }
        let i = self.nodes.partition_point(|n| n.t <= t);
        Ok(i.saturating_sub(1).min(self.nodes.len() - 2))
    }

    fn u_in(&self, i: usize, t: f64) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        hermite5(
            s,
            a.u,
            h * a.up,
            h * h * self.upp[i],
            b.u,
            h * b.up,
            h * h * self.upp[i + 1],
        )
    }

    fn up_in(&self, i: usize, t: f64) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        hermite5(
            s,
            a.up,
            h * self.upp[i],
            h * h * self.uppp[i],
            b.up,
            h * self.upp[i + 1],
            h * h * self.uppp[i + 1],
        )
    }

    /// `u(t)` from the dense interpolant.
    pub fn u(&self, t: f64) -> Result<f64, ProfileError> {
        let i = self.segment(t)?;
        Ok(self.u_in(i, t))
    }

    /// `u'(t)` from the dense interpolant.
    pub fn up(&self, t: f64) -> Result<f64, ProfileError> {
        let i = self.segment(t)?;
        Ok(self.up_in(i, t))
    }

    /// `u''(t) = -f(u(t))`.
    pub fn upp(&self, t: f64) -> Result<f64, ProfileError> {
        Ok(-self.f.eval(self.u(t)?)?)
    }

    /// First strictly positive critical time of `u`, or the terminal event of
    /// the forward run when none was found.
    pub fn detect_t(&self) -> Result<CriticalTime, ProfileError> {
        if self.v0 != 0.0 {
            return Err(ProfileError::NotCritical(self.v0));
        }
        if let Some(t) = self.forward_critical_times().next() {
            return Ok(CriticalTime {
                t,
                kind: EventKind::SlopeZero,
            });
        }
        let terminal = self
            .events
            .iter()
            .rev()
            .find(|e| e.kind != EventKind::SlopeZero && e.t > 0.0)
            .copied()
            .unwrap_or(Event {
                t: self.t_max(),
                kind: EventKind::Budget,
            });
        Ok(CriticalTime {
            t: terminal.t,
            kind: terminal.kind,
        })
    }

    /// `max_τ |u(t0+τ) − u(t0−τ)|` over 200 points of `[0, span]`.
    pub fn symmetry_residual(&self, t0: f64, span: f64) -> Result<f64, ProfileError> {
        let (lo, hi) = (t0 - span, t0 + span);
        if lo < self.t_min() || hi > self.t_max() {
            return Err(ProfileError::SpanOutsideDomain {
                lo,
                hi,
                t_min: self.t_min(),
                t_max: self.t_max(),
            });
        }
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let tau = span * k as f64 / 199.0;
            worst = worst.max((self.u(t0 + tau)? - self.u(t0 - tau)?).abs());
        }
        Ok(worst)
    }

    /// Periodicity from consecutive critical times: the period is twice their
    /// gap, accepted when `u` returns to `(u0, 0)` within `tol` after one period.
    pub fn periodicity_probe(&self, tol: f64) -> Periodicity {
        let times: Vec<f64> = self.forward_critical_times().collect();
        let not = Periodicity {
            periodic: false,
            period: None,
        };
        if times.len() < 2 {
            return not;
        }
        let period = 2.0 * (times[1] - times[0]);
        match (self.u(period), self.up(period)) {
            (Ok(u), Ok(up)) if (u - self.u0).abs() <= tol && (up - self.v0).abs() <= tol => Periodicity {
                periodic: true,
                period: Some(period),
            },
            _ => not,
        }
    }

    pub fn to_document(&self) -> ProfileDocument {
        ProfileDocument {
            f_text: self.f.to_string(),
            u0: self.u0,
            v0: self.v0,
            nodes: self.nodes.clone(),
            events: self.events.clone(),
            energy_max_drift: self.energy_max_drift,
        }
    }

    pub fn from_document(doc: &ProfileDocument) -> Result<Profile, ProfileError> {
        if doc.nodes.len() < 2 {
            return Err(ProfileError::Document("fewer than two nodes".into()));
        }
        if doc.nodes.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(ProfileError::Document("node times not strictly increasing".into()));
        }
        let f = parse(&doc.f_text)?;
        Profile::assemble(
            f,
            doc.u0,
            doc.v0,
            doc.nodes.clone(),
            doc.events.clone(),
            doc.energy_max_drift,
        )
    }

    /// `t,u,up` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u,up\n");
        for n in &self.nodes {
            out.push_str(&format!("{},{},{}\n", n.t, n.u, n.up));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn solve(f: &str, u0: f64, v0: f64, t_max: f64) -> Profile {
        solve_profile(&parse(f).unwrap(), u0, v0, t_max, &ProfileOptions::default()).unwrap()
    }

    #[test]
    fn hermite_reproduces_quintics() {
        let p = |x: f64| 1.0 + 2.0 * x - x * x + 0.5 * x.powi(3) + 0.25 * x.powi(4) - 0.75 * x.powi(5);
        let dp = |x: f64| 2.0 - 2.0 * x + 1.5 * x * x + x.powi(3) - 3.75 * x.powi(4);
        let ddp = |x: f64| -2.0 + 3.0 * x + 3.0 * x * x - 15.0 * x.powi(3);
        let (a, b) = (0.3, 1.1);
        let h = b - a;
        for k in 0..=10 {
            let x = a + h * k as f64 / 10.0;
            let v = hermite5(
                (x - a) / h,
                p(a),
                h * dp(a),
                h * h * ddp(a),
                p(b),
                h * dp(b),
                h * h * ddp(b),
            );
            assert!((v - p(x)).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn cosine_profile() {
        let p = solve("s", 1.0, 0.0, 50.0);
        assert!(p.u(PI / 2.0).unwrap().abs() < 1e-9);
        for k in 0..100 {
            let t = -20.0 + 0.4 * k as f64 + 0.0123;
            assert!((p.u(t).unwrap() - t.cos()).abs() < 1e-8, "t={t}");
            assert!((p.up(t).unwrap() + t.sin()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn constant_forcing_is_a_parabola() {
        let p = solve("1", 1.0, 0.0, 10.0);
        for k in 0..50 {
            let t = 0.2 * k as f64;
            assert!((p.u(t).unwrap() - (1.0 - t * t / 2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn sinh_has_no_critical_point() {
        let p = solve("-s", 0.0, 1.0, 10.0);
        assert_eq!(p.forward_critical_times().count(), 0);
        assert!((p.u(3.0).unwrap() - 3f64.sinh()).abs() < 1e-8 * 3f64.sinh());
    }

    #[test]
    fn escape_is_reported() {
        let p = solve("s^2", 1.0, 0.0, 50.0);
        let last = p.events().iter().rev().find(|e| e.t > 0.0).unwrap();
        assert_eq!(last.kind, EventKind::Escape);
        assert!(p.u(last.t).unwrap().abs() > 1e6);
        assert_eq!(p.detect_t().unwrap().kind, EventKind::Escape);
    }

    #[test]
    fn constant_solution_is_refused() {
        let err = solve_profile(&parse("s").unwrap(), 0.0, 0.0, 1.0, &ProfileOptions::default());
        assert!(matches!(err, Err(ProfileError::ConstantSolution { .. })));
    }

    #[test]
    fn domain_error_propagates() {
        // u'' = -log(u) drives u through 0 from u0 = 2.
        let err = solve_profile(&parse("log(s)").unwrap(), 2.0, -3.0, 10.0, &ProfileOptions::default());
        assert!(matches!(err, Err(ProfileError::Eval(_))), "{err:?}");
    }

    #[test]
    fn detect_t_requires_critical_start() {
        let p = solve("s", 1.0, 0.5, 5.0);
        assert!(matches!(p.detect_t(), Err(ProfileError::NotCritical(_))));
    }

    #[test]
    fn span_outside_domain() {
        let p = solve("s", 1.0, 0.0, 5.0);
        assert!(matches!(
            p.symmetry_residual(0.0, 6.0),
            Err(ProfileError::SpanOutsideDomain { .. })
        ));
    }

    #[test]
    fn document_round_trip_preserves_interpolant() {
        let p = solve("cos(s)", 0.0, 0.0, 8.0);
        let json = serde_json::to_string(&p.to_document()).unwrap();
        let back: ProfileDocument = serde_json::from_str(&json).unwrap();
        let q = Profile::from_document(&back).unwrap();
        for t in [-7.5, -1.0, 0.3, 4.4] {
            assert_eq!(p.u(t).unwrap(), q.u(t).unwrap());
            assert_eq!(p.up(t).unwrap(), q.up(t).unwrap());
        }
        assert!(p.to_csv().starts_with("t,u,up\n"));
        assert_eq!(p.to_csv().lines().count(), p.nodes().len() + 1);
    }
}
