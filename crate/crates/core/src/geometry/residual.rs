use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{gradient, hessian_with_jet, DEFAULT_STEP};
use super::{GeometryError, SolutionField, WarpedChart};
use crate::classify::HFunc;
use crate::expr::Expr;

/// Reproducible sample grid: uniform points in a coordinate box drawn from a
/// seeded ChaCha8 stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub seed: u64,
    pub points: usize,
    pub bounds: Vec<(f64, f64)>,
}

impl GridSpec {
    pub fn for_chart(c: &WarpedChart, points: usize, seed: u64) -> Self {
        GridSpec {
            seed,
            points,
            bounds: c.sample_box(),
        }
    }

    pub fn with_bounds(mut self, axis: usize, lo: f64, hi: f64) -> Self {
        self.bounds[axis] = (lo, hi);
        self
    }

    pub fn generate(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.points)
            .map(|_| {
                self.bounds
                    .iter()
                    .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect()
            })
            .collect()
    }
}

/// Maximum and mean of a pointwise residual over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub op: String,
    pub grid_spec: GridSpec,
    pub max: f64,
    pub mean: f64,
    pub argmax_point: Vec<f64>,
}

fn sweep<F>(op: &str, grid: &GridSpec, mut at: F) -> Result<ResidualReport, GeometryError>
where
    F: FnMut(&[f64]) -> Result<f64, GeometryError>,
{
    let pts = grid.generate();
    let (mut max, mut sum, mut arg) = (0.0f64, 0.0, Vec::new());
    for p in &pts {
        let r = at(p)?;
        sum += r;
        if r > max || arg.is_empty() {
            max = max.max(r);
            arg = p.clone();
        }
    }
    Ok(ResidualReport {
        op: op.into(),
        grid_spec: grid.clone(),
        max,
        mean: if pts.is_empty() { 0.0 } else { sum / pts.len() as f64 },
        argmax_point: arg,
    })
}

/// Entrywise `max |∇dw + f(w) g|` at one point.
pub fn obata_residual_at(c: &WarpedChart, w: &SolutionField, f: &Expr, x: &[f64]) -> Result<f64, GeometryError> {
    let (h, jet) = hessian_with_jet(c, w, x, DEFAULT_STEP)?;
    let fw = f.eval(jet.value)?;
    let g = c.metric_raw(x)?;
    Ok((h + g * fw).amax())
}

pub fn obata_residual(
    c: &WarpedChart,
    w: &SolutionField,
    f: &Expr,
    grid: &GridSpec,
) -> Result<ResidualReport, GeometryError> {
    sweep("obata", grid, |x| obata_residual_at(c, w, f, x))
}

/// `|∇w|²` at `x`.
pub fn gradient_norm_sq(c: &WarpedChart, w: &SolutionField, x: &[f64]) -> Result<f64, GeometryError> {
    let jet = w.jet(x)?;
    let gw = gradient(c, &jet, x)?;
    Ok(gw.dot(&jet.grad))
}

/// `max | |∇w|² − (α² − 2h(w)) |` with `h` anchored at the level `h.base()`.
pub fn gradient_norm_residual(
    c: &WarpedChart,
    w: &SolutionField,
    h: &HFunc,
    alpha: f64,
    grid: &GridSpec,
) -> Result<ResidualReport, GeometryError> {
    sweep("gradient_norm", grid, |x| {
        let n2 = gradient_norm_sq(c, w, x)?;
        let expect = h.affine(alpha, w.value(x)?)?;
        Ok((n2 - expect).abs())
    })
}

/// `z = −(trace_g ∇dw)/n`.
pub fn trace_z(c: &WarpedChart, w: &SolutionField, x: &[f64]) -> Result<f64, GeometryError> {
    let (h, _) = hessian_with_jet(c, w, x, DEFAULT_STEP)?;
    let g = c.metric_raw(x)?;
    let ginv = g
        .try_inverse()
        .ok_or_else(|| GeometryError::SingularMetric(x.to_vec()))?;
    Ok(-(ginv * h).trace() / x.len() as f64)
}

/// Radial coordinate where `w(·, y) = level`, scanning the admissible range.
pub fn radial_root(c: &WarpedChart, w: &SolutionField, y: &[f64], level: f64) -> Result<f64, GeometryError> {
    let (lo, hi) = c.sample_box()[0];
    let at = |r: f64| -> Result<f64, GeometryError> {
        let mut x = Vec::with_capacity(y.len() + 1);
        x.push(r);
        x.extend_from_slice(y);
        Ok(w.value(&x)? - level)
    };
    const CELLS: usize = 512;
    let mut a = lo;
    let mut ga = at(a)?;
    if ga == 0.0 {
        return Ok(a);
    }
    for i in 1..=CELLS {
        let b = lo + (hi - lo) * i as f64 / CELLS as f64;
        let gb = at(b)?;
        if gb == 0.0 {
            return Ok(b);
        }
        if ga * gb < 0.0 {
            return crate::classify::bisect(at, a, b, 1e-14);
        }
        a = b;
        ga = gb;
    }
    Err(GeometryError::LevelNotAttained { level })
}

fn random_fiber(c: &WarpedChart, rng: &mut ChaCha8Rng) -> Vec<f64> {
    c.sample_box()[1..]
        .iter()
        .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

fn with_r(r: f64, y: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(y.len() + 1);
    x.push(r);
    x.extend_from_slice(y);
    x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetStats {
    pub level: f64,
    pub samples: usize,
    pub mean_gradnorm: f64,
    pub std_gradnorm: f64,
    pub mean_z: f64,
    pub std_z: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Spread of `|∇w|` and `z` over the level set `w = level`, sampled along
/// radial lines through random fiber points. Without `z`, the trace formula
/// is used.
pub fn levelset_constancy(
    c: &WarpedChart,
    w: &SolutionField,
    z: Option<&SolutionField>,
    level: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LevelSetStats, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norms = Vec::with_capacity(n_samples);
    let mut zs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let y = random_fiber(c, &mut rng);
        let x = with_r(radial_root(c, w, &y, level)?, &y);
        norms.push(gradient_norm_sq(c, w, &x)?.sqrt());
        zs.push(match z {
            Some(z) => z.value(&x)?,
            None => trace_z(c, w, &x)?,
        });
    }
    let (mean_gradnorm, std_gradnorm) = mean_std(&norms);
    let (mean_z, std_z) = mean_std(&zs);
    Ok(LevelSetStats {
        level,
        samples: n_samples,
        mean_gradnorm,
        std_gradnorm,
        mean_z,
        std_z,
    })
}

/// Jacobian of `(s, y) ↦ (r(s, y), y)` where `w(r(s, y), y) = s`.
fn level_jacobian(w: &SolutionField, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    let n = x.len();
    let jet = w.jet(x)?;
    let wr = jet.grad[0];
    if wr.abs() < 1e-12 {
        return Err(GeometryError::GradientCollapse { point: x.to_vec() });
    }
    let mut j = DMatrix::identity(n, n);
    j[(0, 0)] = 1.0 / wr;
    for a in 1..n {
        j[(0, a)] = -jet.grad[a] / wr;
    }
    Ok(j)
}

/// Deviation of the metric in `(s = w, y)` coordinates from
/// `ds²/h(s) + (h(s)/h(μ)) g_N`, where `g_N` is the metric induced on the
/// level `w = μ` and `h(s) = α² − 2∫_μ^s f` with `α = |∇w|` on that level.
///
/// The band `[s_lo, s_hi]` is sampled along radial lines through random
/// fiber points.
#[allow(clippy::too_many_arguments)]
pub fn warp_factorization_residual(
    c: &WarpedChart,
    w: &SolutionField,
    f: &Expr,
    mu: f64,
    band: (f64, f64),
    n_samples: usize,
    seed: u64,
) -> Result<ResidualReport, GeometryError> {
    let n = c.dim();
    let h = HFunc::new(f.clone(), mu, 1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max, mut sum, mut arg) = (0.0f64, 0.0, Vec::new());
    let mut bounds = vec![band];
    bounds.extend_from_slice(&c.sample_box()[1..]);
    for _ in 0..n_samples {
        let y = random_fiber(c, &mut rng);
        let x_mu = with_r(radial_root(c, w, &y, mu)?, &y);
        let alpha2 = gradient_norm_sq(c, w, &x_mu)?;
        let j_mu = level_jacobian(w, &x_mu)?;
        let pull_mu = j_mu.transpose() * c.metric_raw(&x_mu)? * &j_mu;
        let g_n = pull_mu.view((1, 1), (n - 1, n - 1)).into_owned();

        let s = band.0 + (band.1 - band.0) * rng.random::<f64>();
        let ha = alpha2 - 2.0 * h.eval(s)?;
        if ha <= 0.0 {
            return Err(GeometryError::NonPositiveH { s, value: ha });
        }
        let x = with_r(radial_root(c, w, &y, s)?, &y);
        let j = level_jacobian(w, &x)?;
        let pull = j.transpose() * c.metric_raw(&x)? * &j;
        let mut expect = DMatrix::zeros(n, n);
        expect[(0, 0)] = 1.0 / ha;
        expect
            .view_mut((1, 1), (n - 1, n - 1))
            .copy_from(&(g_n * (ha / alpha2)));
        let r = (pull - expect).amax();
        sum += r;
        if r > max || arg.is_empty() {
            max = max.max(r);
            arg = x.clone();
        }
    }
    Ok(ResidualReport {
        op: "warp_factorization".into(),
        grid_spec: GridSpec {
            seed,
            points: n_samples,
            bounds,
        },
        max,
        mean: if n_samples == 0 { 0.0 } else { sum / n_samples as f64 },
        argmax_point: arg,
    })
}

/// `max |S − (z/|∇w|) Id|` for the shape operator `S = −∇ν` of the level set
/// of `w` through `x`, `ν = ∇w/|∇w|`, in a basis of projected fiber
/// coordinate vectors.
pub fn shape_operator_residual(c: &WarpedChart, w: &SolutionField, x: &[f64]) -> Result<f64, GeometryError> {
    let n = x.len();
    let (hess, jet) = hessian_with_jet(c, w, x, DEFAULT_STEP)?;
    let g = c.metric_raw(x)?;
    let grad = gradient(c, &jet, x)?;
    let norm = grad.dot(&jet.grad).sqrt();
    if norm < 1e-8 {
        return Err(GeometryError::GradientCollapse { point: x.to_vec() });
    }
    let nu = &grad / norm;
    // Tangent frame: coordinate vectors minus their normal components.
    let tangents: Vec<DVector<f64>> = (1..n)
        .map(|a| {
            let mut e = DVector::zeros(n);
            e[a] = 1.0;
            let proj = e.dot(&(&g * &nu));
            e - &nu * proj
        })
        .collect();
    let m = tangents.len();
    let gt = DMatrix::from_fn(m, m, |i, j| tangents[i].dot(&(&g * &tangents[j])));
    let second = DMatrix::from_fn(m, m, |i, j| -tangents[i].dot(&(&hess * &tangents[j])) / norm);
    let s = gt
        .try_inverse()
        .ok_or_else(|| GeometryError::SingularMetric(x.to_vec()))?
        * second;
    let z = trace_z(c, w, x)?;
    Ok((s - DMatrix::identity(m, m) * (z / norm)).amax())
}
