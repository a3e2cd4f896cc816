//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Error, PartialEq)]
pub enum QuadError<E> {
    #[error("integrand failed: {0}")]
    Integrand(E),
    #[error("integrand not finite at {at}")]
    NotFinite { at: f64 },
    #[error("no convergence after {subdivisions} subdivisions (estimate {estimate}, error {error})")]
    NoConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F, E>(f: &mut F, a: f64, b: f64) -> Result<Panel, QuadError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64, QuadError<E>> {
        let y = f(x).map_err(QuadError::Integrand)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NotFinite { at: x })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate<F, E>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult, QuadError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut panels = vec![gk15(&mut f, lo, hi)?];
    let mut evaluations = 15;
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult {
                value: sign * value,
                error,
                evaluations,
            });
        }
        if panels.len() >= opts.max_subdivisions {
            return Err(QuadError::NoConvergence {
                subdivisions: panels.len(),
                estimate: sign * value,
                error,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(QuadError::NoConvergence {
                subdivisions: panels.len() + 1,
                estimate: sign * value,
                error,
            });
        }
        panels.push(gk15(&mut f, p.a, mid)?);
        panels.push(gk15(&mut f, mid, p.b)?);
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn q(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        integrate(|x| Ok::<_, Infallible>(f(x)), a, b, QuadOptions::default())
            .unwrap()
            .value
    }

    #[test]
    fn kronrod_rule_is_exact_to_degree_22() {
        for k in 0..=22 {
            let v = q(|x| x.powi(k), 0.0, 1.0);
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "degree {k}: {v}");
        }
    }

    #[test]
    fn orientation_and_smooth_integrands() {
        assert!((q(f64::sin, 0.0, std::f64::consts::PI) - 2.0).abs() < 1e-13);
        assert!((q(f64::sin, std::f64::consts::PI, 0.0) + 2.0).abs() < 1e-13);
        assert!((q(|x| (-x * x).exp(), -8.0, 8.0) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} = 2
        let r = integrate(
            |x: f64| Ok::<_, Infallible>(x.powf(-0.5)),
            0.0,
            1.0,
            QuadOptions {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
                max_subdivisions: 5000,
            },
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn nonintegrable_singularity_is_reported() {
        let r = integrate(
            |x: f64| Ok::<_, Infallible>(1.0 / x),
            0.0,
            1.0,
            QuadOptions {
                max_subdivisions: 200,
                ..QuadOptions::default()
            },
        );
        assert!(matches!(r, Err(QuadError::NoConvergence { .. })));
    }
}
