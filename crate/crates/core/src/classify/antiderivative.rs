use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::expr::{EvalError, Expr};
use crate::quad::{self, QuadError, QuadOptions};

// Knot spacing and reach of the memoized panel cache.
const KNOT: f64 = 0.25;
const MAX_KNOT: i64 = 1 << 16;

/// Antiderivative `h(s) = ∫_μ^s f(τ) dτ`, normalized so that `h(μ) = 0`.
///
/// Values are assembled from cached integrals over fixed panels of width
/// 0.25 anchored at `μ`, plus one adaptive Gauss–Kronrod integral over the
/// remaining partial panel. The cache is behind a mutex, so a shared
/// `HFunc` can be queried from several threads.
#[derive(Debug)]
pub struct HFunc {
    f: Expr,
    base: f64,
    tol: f64,
    knots: Mutex<BTreeMap<i64, f64>>,
}

impl Clone for HFunc {
    fn clone(&self) -> Self {
        HFunc {
            f: self.f.clone(),
            base: self.base,
            tol: self.tol,
            knots: Mutex::new(self.knots.lock().map(|k| k.clone()).unwrap_or_default()),
        }
    }
}

pub type HError = QuadError<EvalError>;

impl HFunc {
    /// Antiderivative of `f` vanishing at `mu`, with absolute quadrature
    /// tolerance `tol` per panel.
    pub fn new(f: Expr, mu: f64, tol: f64) -> Self {
        let mut knots = BTreeMap::new();
        knots.insert(0, 0.0);
        HFunc {
            f,
            base: mu,
            tol,
            knots: Mutex::new(knots),
        }
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn opts(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.tol,
            rel_tol: 1e-14,
            max_subdivisions: 4000,
        }
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64, HError> {
        Ok(quad::integrate(|x| self.f.eval(x), a, b, self.opts())?.value)
    }

    fn knot_value(&self, k: i64) -> Result<f64, HError> {
        let mut cache = self.knots.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(v) = cache.get(&k) {
            return Ok(*v);
        }
        let step = k.signum();
        // Walk outward from the nearest cached knot on the same side.
        let mut j = k;
        while !cache.contains_key(&j) {
            j -= step;
        }
        let mut acc = cache[&j];
        while j != k {
            let a = self.base + j as f64 * KNOT;
            let b = self.base + (j + step) as f64 * KNOT;
            acc += self.integral(a, b)?;
            j += step;
            cache.insert(j, acc);
        }
        Ok(acc)
    }

    /// `h(s)`.
    pub fn eval(&self, s: f64) -> Result<f64, HError> {
        if s == self.base {
            return Ok(0.0);
        }
        let k = ((s - self.base) / KNOT).trunc() as i64;
        let k = k.clamp(-MAX_KNOT, MAX_KNOT);
        let anchor = self.base + k as f64 * KNOT;
        Ok(self.knot_value(k)? + self.integral(anchor, s)?)
    }

    /// The affine image `α² − 2h(s)`, i.e. `α² − 2∫_μ^s f`, which equals
    /// `|∇w|²` along a solution whose gradient has norm `α` on the level `μ`.
    pub fn affine(&self, alpha: f64, s: f64) -> Result<f64, HError> {
        Ok(alpha * alpha - 2.0 * self.eval(s)?)
    }
}
