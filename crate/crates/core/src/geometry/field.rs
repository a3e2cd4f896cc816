use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::GeometryError;
use crate::expr::Expr;
use crate::profile::Profile;

/// Value, coordinate gradient and coordinate second derivatives of a scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Jet {
    fn constant(value: f64, n: usize) -> Jet {
        Jet {
            value,
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
        }
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64, GeometryError> + Send + Sync>;

#[derive(Clone)]
pub enum FieldKind {
    Constant(f64),
    Coordinate(usize),
    /// `e(x_0)` with its first two derivatives precomputed.
    Radial {
        e: Expr,
        d1: Expr,
        d2: Expr,
    },
    /// `u(x_0)` along a profile.
    Profile(Arc<Profile>),
    /// `cosh x_0 ⋯ cosh x_{count−1} · inner(x_count, …)`.
    CoshPrefix {
        count: usize,
        inner: Box<SolutionField>,
    },
    /// Arbitrary function; derivatives by finite differences.
    Custom(ScalarFn),
}

/// Scalar field `w` on chart coordinates.
#[derive(Clone)]
pub struct SolutionField {
    pub kind: FieldKind,
    pub label: String,
}

impl fmt::Debug for SolutionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SolutionField({})", self.label)
    }
}

/// Step used for finite-difference jets of custom fields.
const FD_STEP: f64 = 1e-3;

impl SolutionField {
    pub fn constant(c: f64) -> Self {
        SolutionField {
            kind: FieldKind::Constant(c),
            label: format!("{c:?}"),
        }
    }

    pub fn coordinate(i: usize) -> Self {
        SolutionField {
            kind: FieldKind::Coordinate(i),
            label: format!("x{i}"),
        }
    }

    /// `e(x_0)`, with `s` standing for the first coordinate.
    pub fn radial(e: Expr) -> Self {
        let d1 = e.differentiate();
        let d2 = d1.differentiate();
        SolutionField {
            label: e.to_string(),
            kind: FieldKind::Radial { e, d1, d2 },
        }
    }

    pub fn profile(p: Arc<Profile>) -> Self {
        SolutionField {
            kind: FieldKind::Profile(p),
            label: "u(t)".into(),
        }
    }

    pub fn cosh_prefix(count: usize, inner: SolutionField) -> Self {
        let mut label: Vec<String> = (1..=count).map(|i| format!("cosh(r{i})")).collect();
        label.push(inner.label.clone());
        SolutionField {
            label: label.join("*"),
            kind: FieldKind::CoshPrefix {
                count,
                inner: Box::new(inner),
            },
        }
    }

    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, GeometryError> + Send + Sync + 'static,
    {
        SolutionField {
            kind: FieldKind::Custom(Arc::new(f)),
            label: label.into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, GeometryError> {
        Ok(match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::Coordinate(i) => x[*i],
            FieldKind::Radial { e, .. } => e.eval(x[0])?,
            FieldKind::Profile(p) => p.u(x[0])?,
            FieldKind::CoshPrefix { count, inner } => {
                x[..*count].iter().map(|r| r.cosh()).product::<f64>() * inner.value(&x[*count..])?
            }
            FieldKind::Custom(f) => f(x)?,
        })
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet, GeometryError> {
        let n = x.len();
        match &self.kind {
            FieldKind::Constant(c) => Ok(Jet::constant(*c, n)),
            FieldKind::Coordinate(i) => {
                if *i >= n {
                    return Err(GeometryError::Dimension {
                        expected: i + 1,
                        got: n,
                    });
                }
                let mut j = Jet::constant(x[*i], n);
                j.grad[*i] = 1.0;
                Ok(j)
            }
            FieldKind::Radial { e, d1, d2 } => {
                let mut j = Jet::constant(e.eval(x[0])?, n);
                j.grad[0] = d1.eval(x[0])?;
                j.hess[(0, 0)] = d2.eval(x[0])?;
                Ok(j)
            }
            FieldKind::Profile(p) => {
                let mut j = Jet::constant(p.u(x[0])?, n);
                j.grad[0] = p.up(x[0])?;
                j.hess[(0, 0)] = p.upp(x[0])?;
                Ok(j)
            }
            FieldKind::CoshPrefix { count, inner } => {
                let m = *count;
                let c: f64 = x[..m].iter().map(|r| r.cosh()).product();
                let th: Vec<f64> = x[..m].iter().map(|r| r.tanh()).collect();
                let ij = inner.jet(&x[m..])?;
                let mut j = Jet::constant(c * ij.value, n);
                for a in 0..m {
                    j.grad[a] = c * th[a] * ij.value;
                    for b in 0..=a {
                        let cab = if a == b { c } else { c * th[a] * th[b] };
                        j.hess[(a, b)] = cab * ij.value;
                        j.hess[(b, a)] = cab * ij.value;
                    }
                    for b in m..n {
                        let v = c * th[a] * ij.grad[b - m];
                        j.hess[(a, b)] = v;
                        j.hess[(b, a)] = v;
                    }
                }
                for a in m..n {
                    j.grad[a] = c * ij.grad[a - m];
                    for b in m..n {
                        j.hess[(a, b)] = c * ij.hess[(a - m, b - m)];
                    }
                }
                Ok(j)
            }
            FieldKind::Custom(_) => self.fd_jet(x, FD_STEP),
        }
    }

    fn shifted(&self, x: &[f64], moves: &[(usize, f64)]) -> Result<f64, GeometryError> {
        let mut p = x.to_vec();
        for &(i, d) in moves {
            p[i] += d;
        }
        self.value(&p)
    }

    /// Richardson-extrapolated central differences of [`Self::value`].
    pub fn fd_jet(&self, x: &[f64], step: f64) -> Result<Jet, GeometryError> {
        let n = x.len();
        let v0 = self.value(x)?;
        let mut j = Jet::constant(v0, n);
        let rich = |d: &dyn Fn(f64) -> Result<f64, GeometryError>| -> Result<f64, GeometryError> {
            Ok((4.0 * d(step / 2.0)? - d(step)?) / 3.0)
        };
        for a in 0..n {
            j.grad[a] = rich(&|h| Ok((self.shifted(x, &[(a, h)])? - self.shifted(x, &[(a, -h)])?) / (2.0 * h)))?;
            j.hess[(a, a)] =
                rich(&|h| Ok((self.shifted(x, &[(a, h)])? - 2.0 * v0 + self.shifted(x, &[(a, -h)])?) / (h * h)))?;
            for b in 0..a {
                let v = rich(&|h| {
                    Ok((self.shifted(x, &[(a, h), (b, h)])?
                        - self.shifted(x, &[(a, h), (b, -h)])?
                        - self.shifted(x, &[(a, -h), (b, h)])?
                        + self.shifted(x, &[(a, -h), (b, -h)])?)
                        / (4.0 * h * h))
                })?;
                j.hess[(a, b)] = v;
                j.hess[(b, a)] = v;
            }
        }
        Ok(j)
    }
}
