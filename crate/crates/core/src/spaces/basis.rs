use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use super::SpacesError;
use crate::expr::{parse, Expr, ParseError};
use crate::geometry::{obata_residual, Fiber, GridSpec, SolutionField, Warp, WarpedChart, FLAT_REACH};
use crate::ode::{integrate, Flow, OdeOptions};

/// Radial range of each level of a warping tower.
pub const TOWER_REACH: f64 = 2.0;
/// Residual bound for admitting a basis element.
pub const ELEMENT_TOL: f64 = 1e-5;
const ELEMENT_POINTS: usize = 128;

/// Which equation the basis elements solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpaceTag {
    /// `f(s) = −s`.
    Hyperbolic,
    /// `f ≡ 0`.
    Euclidean,
    General(String),
}

impl SpaceTag {
    pub fn f(&self) -> Result<Expr, ParseError> {
        match self {
            SpaceTag::Hyperbolic => parse("-s"),
            SpaceTag::Euclidean => parse("0"),
            SpaceTag::General(text) => parse(text),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementReport {
    pub label: String,
    pub residual: f64,
}

/// Verified solutions of `∇dw + f(w) g = 0` on `chart`.
#[derive(Clone, Debug)]
pub struct SolutionBasis {
    pub tag: SpaceTag,
    pub chart: WarpedChart,
    pub fields: Vec<SolutionField>,
    pub elements: Vec<ElementReport>,
    /// Candidates whose residual exceeded [`ELEMENT_TOL`].
    pub excluded: Vec<ElementReport>,
}

impl SolutionBasis {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Checks each candidate on a seeded grid and keeps those that pass.
    pub fn verify(
        tag: SpaceTag,
        chart: WarpedChart,
        candidates: Vec<SolutionField>,
        seed: u64,
    ) -> Result<SolutionBasis, SpacesError> {
        let f = tag.f()?;
        let grid = GridSpec::for_chart(&chart, ELEMENT_POINTS, seed);
        let mut basis = SolutionBasis {
            tag,
            chart,
            fields: Vec::new(),
            elements: Vec::new(),
            excluded: Vec::new(),
        };
        for w in candidates {
            let r = obata_residual(&basis.chart, &w, &f, &grid)?;
            let rep = ElementReport {
                label: w.label.clone(),
                residual: r.max,
            };
            if r.max <= ELEMENT_TOL {
                basis.fields.push(w);
                basis.elements.push(rep);
            } else {
                log::warn!("excluding {} from the basis: residual {:e}", rep.label, rep.residual);
                basis.excluded.push(rep);
            }
        }
        Ok(basis)
    }
}

/// `k`-fold cosh warping `dr_1² + cosh²r_1 (dr_2² + cosh²r_2 (⋯ g_N))`.
pub fn build_cosh_tower(inner: Fiber, k: usize) -> Result<WarpedChart, SpacesError> {
    if k == 0 {
        return Err(SpacesError::Dimension(0));
    }
    let mut chart = WarpedChart::new(inner, Warp::Cosh, (-TOWER_REACH, TOWER_REACH));
    for _ in 1..k {
        chart = WarpedChart::new(Fiber::Nested(Box::new(chart)), Warp::Cosh, (-TOWER_REACH, TOWER_REACH));
    }
    Ok(chart)
}

/// `dr² + e^{2r} g_N`.
pub fn build_exp_warping(inner: Fiber) -> WarpedChart {
    WarpedChart::new(inner, Warp::Exp, (-TOWER_REACH, TOWER_REACH))
}

fn radial(text: &str) -> SolutionField {
    SolutionField::radial(parse(text).expect("fixed expression"))
}

/// Solutions of `w'' − w = 0` on the innermost fiber: `{sinh y, cosh y}` on
/// a line, none on a circle or a higher-dimensional flat fiber.
pub fn inner_hyperbolic_seed(fiber: &Fiber) -> Vec<SolutionField> {
    match fiber {
        Fiber::FlatSpace(1) => vec![
            radial("sinh(s)").with_label("sinh y"),
            radial("cosh(s)").with_label("cosh y"),
        ],
        _ => Vec::new(),
    }
}

/// Product solutions `sinh r_1, cosh r_1 sinh r_2, …, cosh r_1 ⋯ cosh r_k · w_0`
/// on a cosh tower of depth `k`, with `w_0` running over `inner`.
pub fn hyperbolic_basis(tower: &WarpedChart, inner: &[SolutionField], seed: u64) -> Result<SolutionBasis, SpacesError> {
    let k = tower.depth();
    let mut candidates = Vec::new();
    for j in 0..k {
        let label = (0..j)
            .map(|i| format!("cosh r{} ", i + 1))
            .chain(std::iter::once(format!("sinh r{}", j + 1)))
            .collect::<String>();
        candidates.push(SolutionField::cosh_prefix(j, radial("sinh(s)")).with_label(label));
    }
    for w0 in inner {
        let prefix: String = (0..k).map(|i| format!("cosh r{} ", i + 1)).collect();
        candidates.push(SolutionField::cosh_prefix(k, w0.clone()).with_label(format!("{prefix}{}", w0.label)));
    }
    SolutionBasis::verify(SpaceTag::Hyperbolic, tower.clone(), candidates, seed)
}

/// `{e^r}` on `dr² + e^{2r} g_N`: the solution with `w = 1`, `|∇w| = 1` on
/// the level `r = 0`. Further solutions depend on `N` and are not listed.
pub fn exp_basis(chart: &WarpedChart, seed: u64) -> Result<SolutionBasis, SpacesError> {
    SolutionBasis::verify(
        SpaceTag::Hyperbolic,
        chart.clone(),
        vec![radial("exp(s)").with_label("e^r")],
        seed,
    )
}

/// Base point for evaluation ranks: `0.3` in each warp coordinate and `0.2`
/// in each coordinate of the innermost fiber, or the middle of the sampling
/// box where these are not admissible.
pub fn base_point(chart: &WarpedChart) -> Vec<f64> {
    let depth = chart.depth();
    chart
        .sample_box()
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let v = if i < depth { 0.3 } else { 0.2 };
            if v > lo && v < hi {
                v
            } else {
                0.5 * (lo + hi)
            }
        })
        .collect()
}

/// `R^{k−1} × N` as nested unit warps; `R^k` when no fiber is given.
pub fn euclidean_product(k: usize, fiber: Option<Fiber>) -> Result<WarpedChart, SpacesError> {
    let Some(fiber) = fiber else {
        return if k == 0 {
            Err(SpacesError::Dimension(0))
        } else {
            Ok(WarpedChart::flat(k - 1))
        };
    };
    if k < 2 {
        return Err(SpacesError::Dimension(k));
    }
    let reach = (-FLAT_REACH, FLAT_REACH);
    let mut chart = WarpedChart::new(fiber, Warp::Constant(1.0), reach);
    for _ in 2..k {
        chart = WarpedChart::new(Fiber::Nested(Box::new(chart)), Warp::Constant(1.0), reach);
    }
    Ok(chart)
}

/// `{1, x¹, …, x^{k−1}}` on `R^{k−1} × N`; on `R^k` when no fiber is given,
/// with the last coordinate included as well.
pub fn euclidean_basis(k: usize, fiber: Option<Fiber>, seed: u64) -> Result<SolutionBasis, SpacesError> {
    let linear = if fiber.is_none() { k } else { k.saturating_sub(1) };
    let chart = euclidean_product(k, fiber)?;
    let mut candidates = vec![SolutionField::constant(1.0).with_label("1")];
    for i in 0..linear {
        candidates.push(SolutionField::coordinate(i).with_label(format!("x{}", i + 1)));
    }
    SolutionBasis::verify(SpaceTag::Euclidean, chart, candidates, seed)
}

/// Columns `(w(p₀), ∇w(p₀))` with the gradient in an orthonormal frame.
pub fn evaluation_matrix(basis: &SolutionBasis, p0: &[f64]) -> Result<DMatrix<f64>, SpacesError> {
    let c = &basis.chart;
    c.check_admissible(p0, 0.0)?;
    let g = c.metric_raw(p0)?;
    let n = p0.len();
    let mut m = DMatrix::zeros(n + 1, basis.len());
    for (j, w) in basis.fields.iter().enumerate() {
        let jet = w.jet(p0)?;
        m[(0, j)] = jet.value;
        for i in 0..n {
            m[(i + 1, j)] = jet.grad[i] / g[(i, i)].sqrt();
        }
    }
    Ok(m)
}

/// Numerical rank of the evaluation map at `p0`: singular values above
/// `tol · σ_max`. A lower bound for the dimension of the solution space.
pub fn evaluation_rank(basis: &SolutionBasis, p0: &[f64], tol: f64) -> Result<usize, SpacesError> {
    if basis.is_empty() {
        return Ok(0);
    }
    let m = evaluation_matrix(basis, p0)?;
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * smax).count())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub rho: f64,
    pub period: f64,
    pub monodromy: [[f64; 2]; 2],
    pub eigenvalues: [f64; 2],
    /// Relative deviation of the eigenvalues from `e^{±2πρ}`.
    pub eigen_residual: f64,
    /// Dimension of the space of periodic solutions.
    pub dim: usize,
}

const MONODROMY_TOL: f64 = 1e-13;

fn monodromy(sign: f64, period: f64) -> Result<Matrix2<f64>, SpacesError> {
    let opts = OdeOptions {
        rtol: MONODROMY_TOL,
        atol: MONODROMY_TOL,
        ..OdeOptions::default()
    };
    let mut m = Matrix2::zeros();
    for col in 0..2 {
        let mut y0 = [0.0; 2];
        y0[col] = 1.0;
        let traj = integrate(
            |_, y: &[f64], dy: &mut [f64]| -> Result<(), std::convert::Infallible> {
                dy[0] = y[1];
                dy[1] = sign * y[0];
                Ok(())
            },
            0.0,
            &y0,
            period,
            &opts,
            |_, _| Flow::Continue,
        )
        .map_err(|e| SpacesError::Integration(e.to_string()))?;
        let (_, y) = traj.last();
        m[(0, col)] = y[0];
        m[(1, col)] = y[1];
    }
    Ok(m)
}

fn dominant_eigenvalue(m: &Matrix2<f64>) -> f64 {
    let tr = m.trace();
    let det = m.determinant();
    0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt())
}

fn fixed_dim(m: &Matrix2<f64>) -> usize {
    let sv = (m - Matrix2::identity()).singular_values();
    let scale = m.norm().max(1.0);
    sv.iter().filter(|&&s| s <= 1e-8 * scale).count()
}

/// Periodic solutions of `w'' − w = 0` on `S¹(ρ)`: the fixed space of the
/// monodromy over one period. The small eigenvalue is taken from the inverse
/// monodromy, integrated backwards, where it dominates.
pub fn circle_obstruction(rho: f64) -> Result<Obstruction, SpacesError> {
    if !(rho > 0.0) {
        return Err(SpacesError::Radius(rho));
    }
    let period = 2.0 * std::f64::consts::PI * rho;
    let m = monodromy(1.0, period)?;
    let back = monodromy(1.0, -period)?;
    let lp = dominant_eigenvalue(&m);
    let lm = 1.0 / dominant_eigenvalue(&back);
    let eigen_residual = ((lp - period.exp()) / period.exp())
        .abs()
        .max(((lm - (-period).exp()) / (-period).exp()).abs());
    Ok(Obstruction {
        rho,
        period,
        monodromy: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
        eigenvalues: [lp, lm],
        eigen_residual,
        dim: fixed_dim(&m),
    })
}

/// Control: periodic solutions of `w'' + w = 0` over `period`.
pub fn oscillator_fixed_dim(period: f64) -> Result<usize, SpacesError> {
    Ok(fixed_dim(&monodromy(-1.0, period)?))
}
