use nalgebra::{DMatrix, DVector};

use super::{GeometryError, Jet, SolutionField, WarpedChart};

/// Default finite-difference step for metric derivatives.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Step for curvature, which nests two difference quotients and is
/// truncation-limited near the poles at [`DEFAULT_STEP`].
pub const CURVATURE_STEP: f64 = 5e-4;

/// `Γ^k_{ij}` stored at `k·n² + i·n + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    /// `Γ^k_{ij} a^i b^j`.
    pub fn contract(&self, a: &[f64], b: &[f64]) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                if a[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.get(k, i, j) * a[i] * b[j];
                }
            }
            s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn shifted(x: &[f64], i: usize, d: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    p[i] += d;
    p
}

/// `∂_k g` by Richardson-extrapolated central differences.
fn metric_derivatives(c: &WarpedChart, x: &[f64], step: f64) -> Result<Vec<DMatrix<f64>>, GeometryError> {
    (0..x.len())
        .map(|k| {
            let d = |h: f64| -> Result<DMatrix<f64>, GeometryError> {
                Ok((c.metric_raw(&shifted(x, k, h))? - c.metric_raw(&shifted(x, k, -h))?) / (2.0 * h))
            };
            Ok((d(step / 2.0)? * 4.0 - d(step)?) / 3.0)
        })
        .collect()
}

pub(crate) fn christoffel_raw(c: &WarpedChart, x: &[f64], step: f64) -> Result<Christoffel, GeometryError> {
    let n = x.len();
    let g = c.metric_raw(x)?;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| GeometryError::SingularMetric(x.to_vec()))?;
    let dg = metric_derivatives(c, x, step)?;
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                }
                data[(k * n + i) * n + j] = 0.5 * s;
                data[(k * n + j) * n + i] = 0.5 * s;
            }
        }
    }
    Ok(Christoffel { n, data })
}

/// Levi-Civita symbols from finite differences of the metric.
pub fn christoffel_at(c: &WarpedChart, x: &[f64], step: f64) -> Result<Christoffel, GeometryError> {
    c.check_admissible(x, 2.0 * step)?;
    christoffel_raw(c, x, step)
}

/// Covariant Hessian `∂_i∂_j w − Γ^k_{ij} ∂_k w`, together with the jet of `w`.
pub fn hessian_with_jet(
    c: &WarpedChart,
    w: &SolutionField,
    x: &[f64],
    step: f64,
) -> Result<(DMatrix<f64>, Jet), GeometryError> {
    let gam = christoffel_at(c, x, step)?;
    let jet = w.jet(x)?;
    let n = x.len();
    let mut h = jet.hess.clone();
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += gam.get(k, i, j) * jet.grad[k];
            }
            h[(i, j)] -= s;
        }
    }
    Ok((h, jet))
}

pub fn hessian(c: &WarpedChart, w: &SolutionField, x: &[f64], step: f64) -> Result<DMatrix<f64>, GeometryError> {
    Ok(hessian_with_jet(c, w, x, step)?.0)
}

/// `g^{ij} ∂_j w`.
pub fn gradient(c: &WarpedChart, jet: &Jet, x: &[f64]) -> Result<DVector<f64>, GeometryError> {
    let g = c.metric_raw(x)?;
    g.lu()
        .solve(&jet.grad)
        .ok_or_else(|| GeometryError::SingularMetric(x.to_vec()))
}

/// `R^l_{ijk}` stored at `((l·n + i)·n + j)·n + k`, with
/// `R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l`.
#[derive(Clone, Debug)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.data[((l * self.n + i) * self.n + j) * self.n + k]
    }

    /// `R(a, b)c`.
    pub fn apply(&self, a: &[f64], b: &[f64], cv: &[f64]) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |l, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let ab = a[i] * b[j];
                    if ab == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        s += self.get(l, i, j, k) * ab * cv[k];
                    }
                }
            }
            s
        })
    }
}

/// Curvature from finite differences of the Christoffel symbols.
pub fn riemann_at(c: &WarpedChart, x: &[f64], step: f64) -> Result<Riemann, GeometryError> {
    c.check_admissible(x, 3.0 * step)?;
    riemann_raw(c, x, step)
}

pub(crate) fn riemann_raw(c: &WarpedChart, x: &[f64], step: f64) -> Result<Riemann, GeometryError> {
    let n = x.len();
    let gam = christoffel_raw(c, x, step)?;
    let mut dgam = Vec::with_capacity(n);
    for i in 0..n {
        let d = |h: f64| -> Result<Vec<f64>, GeometryError> {
            let p = christoffel_raw(c, &shifted(x, i, h), step)?;
            let m = christoffel_raw(c, &shifted(x, i, -h), step)?;
            Ok(p.data.iter().zip(&m.data).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let (d1, d2) = (d(step)?, d(step / 2.0)?);
        dgam.push(Christoffel {
            n,
            data: d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect(),
        });
    }
    let mut data = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dgam[i].get(l, j, k) - dgam[j].get(l, i, k);
                    for m in 0..n {
                        r += gam.get(l, i, m) * gam.get(m, j, k) - gam.get(l, j, m) * gam.get(m, i, k);
                    }
                    data[((l * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    Ok(Riemann { n, data })
}

/// `K(X, Y) = ⟨R(X,Y)Y, X⟩ / (|X|²|Y|² − ⟨X,Y⟩²)`.
pub fn sectional_curvature(c: &WarpedChart, x: &[f64], a: &[f64], b: &[f64], step: f64) -> Result<f64, GeometryError> {
    let g = c.metric_at(x)?;
    let (va, vb) = (DVector::from_column_slice(a), DVector::from_column_slice(b));
    let aa = va.dot(&(&g * &va));
    let bb = vb.dot(&(&g * &vb));
    let ab = va.dot(&(&g * &vb));
    let denom = aa * bb - ab * ab;
    if !(denom > 1e-12 * aa * bb) {
        return Err(GeometryError::DegeneratePlane);
    }
    let r = riemann_at(c, x, step)?;
    let rv = r.apply(a, b, b);
    Ok(va.dot(&(&g * rv)) / denom)
}
