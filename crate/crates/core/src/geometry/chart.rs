use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::profile::Profile;

/// Polar-angle pole caps excluded from spherical coordinates.
pub const ANGLE_CAP: f64 = 0.05;

/// Fiber `(N, g_N)` of a warped product.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Fiber {
    /// Unit `S^m` in spherical angles `(θ_1, …, θ_{m−1}, ϕ)`.
    RoundSphere(usize),
    /// `S¹(ρ)` in its arclength coordinate, period `2πρ`.
    Circle(f64),
    /// Euclidean `R^d`.
    FlatSpace(usize),
    Nested(Box<WarpedChart>),
}

impl Fiber {
    pub fn dim(&self) -> usize {
        match self {
            Fiber::RoundSphere(m) => *m,
            Fiber::Circle(_) => 1,
            Fiber::FlatSpace(d) => *d,
            Fiber::Nested(c) => c.dim(),
        }
    }

    pub fn metric(&self, y: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        match self {
            Fiber::RoundSphere(m) => {
                let mut g = DMatrix::zeros(*m, *m);
                let mut scale = 1.0;
                for i in 0..*m {
                    g[(i, i)] = scale;
                    if i + 1 < *m {
                        scale *= y[i].sin().powi(2);
                    }
                }
                Ok(g)
            }
            Fiber::Circle(_) => Ok(DMatrix::identity(1, 1)),
            Fiber::FlatSpace(d) => Ok(DMatrix::identity(*d, *d)),
            Fiber::Nested(c) => c.metric_raw(y),
        }
    }

    fn check(&self, y: &[f64], offset: usize, margin: f64) -> Result<(), GeometryError> {
        match self {
            Fiber::RoundSphere(m) => {
                for i in 0..m.saturating_sub(1) {
                    let th = y[i];
                    if !(th >= ANGLE_CAP + margin && th <= PI - ANGLE_CAP - margin) {
                        return Err(GeometryError::ExclusionZone {
                            zone: "spherical pole cap".into(),
                            coordinate: offset + i,
                            value: th,
                        });
                    }
                }
                Ok(())
            }
            Fiber::Circle(_) | Fiber::FlatSpace(_) => Ok(()),
            Fiber::Nested(c) => c.check_at(y, offset, margin),
        }
    }

    fn sample_box(&self, out: &mut Vec<(f64, f64)>) {
        match self {
            Fiber::RoundSphere(m) => {
                for _ in 0..m.saturating_sub(1) {
                    out.push((ANGLE_CAP + SAMPLE_INSET, PI - ANGLE_CAP - SAMPLE_INSET));
                }
                if *m > 0 {
                    out.push((0.0, 2.0 * PI));
                }
            }
            Fiber::Circle(rho) => out.push((0.0, 2.0 * PI * rho)),
            Fiber::FlatSpace(d) => out.extend(std::iter::repeat((-FLAT_REACH, FLAT_REACH)).take(*d)),
            Fiber::Nested(c) => c.push_box(out),
        }
    }
}

/// Sampling stays this far inside the admissible region.
pub const SAMPLE_INSET: f64 = 0.01;
/// Half-width of the sampled box in unbounded coordinates.
pub const FLAT_REACH: f64 = 1.5;

/// Warping function `φ(r)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Warp {
    Cosh,
    Exp,
    Sinh,
    Sin,
    /// `φ(r) = r`.
    Linear,
    Constant(f64),
    /// `φ(t) = scale · u'(t)` from a profile's dense output.
    Profile {
        profile: Arc<Profile>,
        scale: f64,
    },
}

impl Warp {
    pub fn value(&self, r: f64) -> Result<f64, GeometryError> {
        Ok(match self {
            Warp::Cosh => r.cosh(),
            Warp::Exp => r.exp(),
            Warp::Sinh => r.sinh(),
            Warp::Sin => r.sin(),
            Warp::Linear => r,
            Warp::Constant(c) => *c,
            Warp::Profile { profile, scale } => scale * profile.up(r)?,
        })
    }

    /// `φ'(r)`.
    pub fn derivative(&self, r: f64) -> Result<f64, GeometryError> {
        Ok(match self {
            Warp::Cosh => r.sinh(),
            Warp::Exp => r.exp(),
            Warp::Sinh => r.cosh(),
            Warp::Sin => r.cos(),
            Warp::Linear => 1.0,
            Warp::Constant(_) => 0.0,
            Warp::Profile { profile, scale } => scale * profile.upp(r)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Warp::Cosh => "cosh",
            Warp::Exp => "exp",
            Warp::Sinh => "sinh",
            Warp::Sin => "sin",
            Warp::Linear => "linear",
            Warp::Constant(_) => "constant",
            Warp::Profile { .. } => "profile",
        }
    }
}

/// Chart `(r, y)` of `dr² + φ(r)² g_N`. `r_domain` is the admissible radial
/// interval, i.e. the warp's domain with the radial exclusion zones removed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WarpedChart {
    pub fiber: Fiber,
    pub warp: Warp,
    pub r_domain: (f64, f64),
}

impl WarpedChart {
    pub fn new(fiber: Fiber, warp: Warp, r_domain: (f64, f64)) -> Self {
        WarpedChart { fiber, warp, r_domain }
    }

    /// `R × R^d` with the identity metric.
    pub fn flat(d: usize) -> Self {
        WarpedChart::new(Fiber::FlatSpace(d), Warp::Constant(1.0), (-FLAT_REACH, FLAT_REACH))
    }

    pub fn dim(&self) -> usize {
        1 + self.fiber.dim()
    }

    /// Nesting depth counting this chart.
    pub fn depth(&self) -> usize {
        match &self.fiber {
            Fiber::Nested(c) => 1 + c.depth(),
            _ => 1,
        }
    }

    /// Innermost non-nested fiber.
    pub fn innermost_fiber(&self) -> &Fiber {
        match &self.fiber {
            Fiber::Nested(c) => c.innermost_fiber(),
            f => f,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Metric without exclusion-zone checks. Used by finite differences,
    /// which step slightly past the zone boundaries.
    pub fn metric_raw(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_dim(x)?;
        let n = self.dim();
        let phi = self.warp.value(x[0])?;
        let gf = self.fiber.metric(&x[1..])?;
        let mut g = DMatrix::zeros(n, n);
        g[(0, 0)] = 1.0;
        g.view_mut((1, 1), (n - 1, n - 1)).copy_from(&(gf * (phi * phi)));
        Ok(g)
    }

    fn check_at(&self, x: &[f64], offset: usize, margin: f64) -> Result<(), GeometryError> {
        let (lo, hi) = self.r_domain;
        if !(x[0] >= lo + margin && x[0] <= hi - margin) {
            return Err(GeometryError::ExclusionZone {
                zone: format!("radial range [{lo}, {hi}] of the {} warp", self.warp.name()),
                coordinate: offset,
                value: x[0],
            });
        }
        self.fiber.check(&x[1..], offset + 1, margin)
    }

    /// Errors with the zone name when `x` is closer than `margin` to an
    /// excluded region.
    pub fn check_admissible(&self, x: &[f64], margin: f64) -> Result<(), GeometryError> {
        self.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinitePoint(x.to_vec()));
        }
        self.check_at(x, 0, margin)
    }

    pub fn is_admissible(&self, x: &[f64]) -> bool {
        self.check_admissible(x, 0.0).is_ok()
    }

    /// `g` at an admissible point.
    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.check_admissible(x, 0.0)?;
        self.metric_raw(x)
    }

    fn push_box(&self, out: &mut Vec<(f64, f64)>) {
        let (lo, hi) = self.r_domain;
        out.push((lo + SAMPLE_INSET, hi - SAMPLE_INSET));
        self.fiber.sample_box(out);
    }

    /// Coordinate box used for sampled grids, inset from every zone.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.dim());
        self.push_box(&mut out);
        out
    }

    /// Metric of the fiber block at fiber coordinates `y`.
    pub fn fiber_metric(&self, y: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        self.fiber.metric(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosh_line() -> WarpedChart {
        WarpedChart::new(Fiber::FlatSpace(1), Warp::Cosh, (-3.0, 3.0))
    }

    #[test]
    fn cosh_metric_values() {
        let c = cosh_line();
        assert_eq!(c.metric_at(&[0.0, 0.4]).unwrap(), DMatrix::identity(2, 2));
        let g = c.metric_at(&[1.0, -0.2]).unwrap();
        assert!((g[(1, 1)] - 2.381_097_845_541_815_7).abs() < 1e-12);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn round_sphere_fiber() {
        let c = WarpedChart::new(Fiber::RoundSphere(2), Warp::Sin, (0.05, PI - 0.05));
        let g = c.metric_at(&[PI / 2.0, PI / 2.0, 1.0]).unwrap();
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-15);
        let g = c.metric_at(&[0.5, 0.3, 1.0]).unwrap();
        assert!((g[(2, 2)] - (0.5f64.sin() * 0.3f64.sin()).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn exclusion_zones_are_named() {
        let c = WarpedChart::new(Fiber::RoundSphere(2), Warp::Sin, (0.05, PI - 0.05));
        match c.metric_at(&[1.0, 0.01, 0.0]) {
            Err(GeometryError::ExclusionZone { zone, coordinate, .. }) => {
                assert!(zone.contains("pole cap"));
                assert_eq!(coordinate, 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            c.metric_at(&[0.01, 1.0, 0.0]),
            Err(GeometryError::ExclusionZone { coordinate: 0, .. })
        ));
        assert!(matches!(c.metric_at(&[1.0, 1.0]), Err(GeometryError::Dimension { .. })));
    }

    #[test]
    fn nested_dims_and_box() {
        let inner = cosh_line();
        let c = WarpedChart::new(Fiber::Nested(Box::new(inner)), Warp::Cosh, (-3.0, 3.0));
        assert_eq!(c.dim(), 3);
        assert_eq!(c.depth(), 2);
        assert_eq!(c.sample_box().len(), 3);
        assert_eq!(c.metric_at(&[0.0, 0.0, 0.0]).unwrap(), DMatrix::identity(3, 3));
        let g = c.metric_at(&[0.5, 0.7, 0.1]).unwrap();
        assert!((g[(2, 2)] - (0.5f64.cosh() * 0.7f64.cosh()).powi(2)).abs() < 1e-13);
    }
}
