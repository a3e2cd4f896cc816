use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SpacesError;
use crate::expr::Expr;
use crate::geometry::{trace_z, SolutionField, WarpedChart};

/// Width of the `w`-bins in which `z` must be constant.
pub const BIN_WIDTH: f64 = 1e-4;
/// Bins with fewer samples are dropped.
pub const MIN_BIN_SAMPLES: usize = 3;
/// Largest admissible jump of `z` between `w`-consecutive samples of a bin.
pub const SINGLE_VALUED_TOL: f64 = 1e-3;
/// A slope this many times the median slope counts as a blow-up.
pub const BLOWUP_RATIO: f64 = 100.0;

/// Radial lines through seeded fiber points. On a one-dimensional chart
/// there is no fiber and the radial nodes alone fill the bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverGrid {
    pub radial: usize,
    pub fibers: usize,
    pub seed: u64,
}

impl Default for RecoverGrid {
    fn default() -> Self {
        RecoverGrid {
            radial: 8000,
            fibers: 4,
            seed: 0,
        }
    }
}

impl RecoverGrid {
    pub fn points(&self, c: &WarpedChart) -> Vec<Vec<f64>> {
        let bx = c.sample_box();
        let (lo, hi) = bx[0];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let fibers: Vec<Vec<f64>> = if bx.len() == 1 {
            vec![Vec::new()]
        } else {
            (0..self.fibers)
                .map(|_| {
                    bx[1..]
                        .iter()
                        .map(|&(a, b)| a + (b - a) * rng.random::<f64>())
                        .collect()
                })
                .collect()
        };
        let mut out = Vec::with_capacity(self.radial * fibers.len());
        for i in 0..self.radial {
            let r = lo + (hi - lo) * (i as f64 + 0.5) / self.radial as f64;
            for y in &fibers {
                let mut x = Vec::with_capacity(bx.len());
                x.push(r);
                x.extend_from_slice(y);
                out.push(x);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub s: f64,
    pub z: f64,
    pub count: usize,
    /// `max z − min z`.
    pub spread: f64,
    /// Largest `|Δz|` between `w`-consecutive samples.
    pub jump: f64,
}

/// Samples of `z = −(trace_g ∇dw)/n` against `w`, and the piecewise-linear
/// `f` through the bin means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovered {
    /// `(w, z)` sorted by `w`.
    pub samples: Vec<(f64, f64)>,
    pub bins: Vec<Bin>,
    /// Largest [`Bin::jump`]. A `z` that is not a function of `w` jumps
    /// between branches; a steep but single-valued `f` does not.
    pub single_valued_residual: f64,
    /// Where the slope of the interpolant exceeds [`BLOWUP_RATIO`] times its
    /// median, at the steepest such place.
    pub blowup_at: Option<f64>,
    pub max_slope: f64,
    pub median_slope: f64,
}

impl Recovered {
    pub fn domain(&self) -> (f64, f64) {
        (self.bins[0].s, self.bins[self.bins.len() - 1].s)
    }

    /// Interpolated `f(s)`; `None` outside the covered range.
    pub fn eval(&self, s: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(s >= lo && s <= hi) {
            return None;
        }
        let i = self.bins.partition_point(|b| b.s < s);
        if i == 0 {
            return Some(self.bins[0].z);
        }
        let (a, b) = (&self.bins[i - 1], &self.bins[i]);
        Some(a.z + (b.z - a.z) * (s - a.s) / (b.s - a.s))
    }

    /// Sup-norm distance to `f` on the central `fraction` of the covered range.
    pub fn sup_error(&self, f: &Expr, fraction: f64) -> Result<f64, SpacesError> {
        let (lo, hi) = self.domain();
        let pad = 0.5 * (1.0 - fraction) * (hi - lo);
        let mut worst = 0.0f64;
        for b in self.bins.iter().filter(|b| b.s >= lo + pad && b.s <= hi - pad) {
            let exact = f.eval(b.s).map_err(crate::geometry::GeometryError::from)?;
            worst = worst.max((b.z - exact).abs());
        }
        const PROBES: usize = 997;
        for i in 0..=PROBES {
            let s = lo + pad + (hi - lo - 2.0 * pad) * i as f64 / PROBES as f64;
            if let Some(v) = self.eval(s) {
                let exact = f.eval(s).map_err(crate::geometry::GeometryError::from)?;
                worst = worst.max((v - exact).abs());
            }
        }
        Ok(worst)
    }

    /// `s,f` rows of the bin means.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,f\n");
        for b in &self.bins {
            out.push_str(&format!("{},{}\n", b.s, b.z));
        }
        out
    }
}

/// Recovers `f` with `z = f(w)` from the trace of the Hessian of `w`.
pub fn recover_f(c: &WarpedChart, w: &SolutionField, grid: &RecoverGrid) -> Result<Recovered, SpacesError> {
    let mut samples = Vec::new();
    for x in grid.points(c) {
        samples.push((w.value(&x)?, trace_z(c, w, &x)?));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut groups: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for &(s, z) in &samples {
        groups.entry((s / BIN_WIDTH).floor() as i64).or_default().push((s, z));
    }
    let mut bins = Vec::new();
    let mut residual = 0.0f64;
    for g in groups.values().filter(|g| g.len() >= MIN_BIN_SAMPLES) {
        let n = g.len() as f64;
        let zmin = g.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let zmax = g.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let jump = g.windows(2).map(|p| (p[1].1 - p[0].1).abs()).fold(0.0, f64::max);
        residual = residual.max(jump);
        bins.push(Bin {
            s: g.iter().map(|p| p.0).sum::<f64>() / n,
            z: g.iter().map(|p| p.1).sum::<f64>() / n,
            count: g.len(),
            spread: zmax - zmin,
            jump,
        });
    }
    if bins.len() < 2 {
        return Err(SpacesError::SparseBins(bins.len()));
    }
    if residual > SINGLE_VALUED_TOL {
        return Err(SpacesError::FunctionalDependenceFailed { residual });
    }

    let slopes: Vec<(f64, f64)> = bins
        .windows(2)
        .map(|p| (0.5 * (p[0].s + p[1].s), ((p[1].z - p[0].z) / (p[1].s - p[0].s)).abs()))
        .collect();
    let mut sorted: Vec<f64> = slopes.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median_slope = sorted[sorted.len() / 2];
    let (steep_s, max_slope) = slopes
        .iter()
        .copied()
        .fold((f64::NAN, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
    let blowup_at = (max_slope > BLOWUP_RATIO * median_slope.max(f64::MIN_POSITIVE)).then_some(steep_s);

    Ok(Recovered {
        samples,
        bins,
        single_valued_residual: residual,
        blowup_at,
        max_slope,
        median_slope,
    })
}
