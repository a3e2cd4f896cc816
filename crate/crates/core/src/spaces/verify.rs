use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{equator_point, model_curvature_oracle, Model, POLE_CAP};
use super::SpacesError;
use crate::classify::{HFunc, PairKind};
use crate::geometry::{
    flowline_geodesic_residual, gradient_norm_residual, jacobi_residual, levelset_constancy, obata_residual,
    sectional_curvature, warp_factorization_residual, GridSpec, CURVATURE_STEP,
};

/// Thresholds of the identity suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyTolerances {
    pub obata: f64,
    pub closure: f64,
    pub gradient_norm: f64,
    pub flowline: f64,
    pub levelset: f64,
    pub factorization: f64,
    pub curvature: f64,
    pub jacobi: f64,
    pub energy: f64,
    pub symmetry: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            obata: 1e-6,
            closure: 1e-6,
            gradient_norm: 1e-6,
            flowline: 1e-5,
            levelset: 1e-7,
            factorization: 1e-5,
            curvature: 1e-4,
            jacobi: 1e-4,
            energy: 1e-8,
            symmetry: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub obata_points: usize,
    pub gradient_points: usize,
    pub curvature_points: usize,
    pub level_samples: usize,
    pub tolerances: VerifyTolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            obata_points: 1024,
            gradient_points: 256,
            curvature_points: 64,
            level_samples: 32,
            tolerances: VerifyTolerances::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub op: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub pass: bool,
    pub first_failure: Option<String>,
}

impl VerifyReport {
    pub fn get(&self, op: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.op == op)
    }
}

fn check(op: &str, value: f64, tol: f64, detail: Option<String>) -> Check {
    Check {
        op: op.into(),
        value,
        tol,
        pass: value <= tol,
        detail,
    }
}

/// Radius in the band where `|u'|` is largest, keeping clear of its ends.
fn steepest_radius(model: &Model) -> Result<f64, SpacesError> {
    let (lo, hi) = model.band();
    let p = model.profile();
    let (mut best, mut arg) = (-1.0, 0.5 * (lo + hi));
    for i in 0..=400 {
        let t = lo + 0.1 + (hi - lo - 0.2) * i as f64 / 400.0;
        let v = p.up(t)?.abs();
        if v > best {
            best = v;
            arg = t;
        }
    }
    Ok(arg)
}

/// Runs the identity suite on `model`. Obata residual first, so that a
/// corrupted chart is reported under that op.
pub fn verify_model(model: &Model, cfg: &VerifyConfig) -> Result<VerifyReport, SpacesError> {
    let tol = cfg.tolerances;
    let chart = &model.chart;
    let w = model.solution();
    let f = model.f();
    let p = model.profile();
    let n = model.dim;
    let (lo, hi) = model.band();
    let mut checks = Vec::new();

    let grid = GridSpec::for_chart(chart, cfg.obata_points, cfg.seed);
    let r = obata_residual(chart, &w, f, &grid)?;
    checks.push(check(
        "obata",
        r.max,
        tol.obata,
        Some(format!("argmax {:?}", r.argmax_point)),
    ));

    let warp = &chart.warp;
    let mut closure = (warp.value(0.0)?.abs()).max((warp.derivative(0.0)? - 1.0).abs());
    if model.pair.kind == PairKind::Compact {
        let t = hi + POLE_CAP;
        closure = closure.max(warp.value(t)?.abs()).max((warp.derivative(t)? + 1.0).abs());
    }
    checks.push(check("closure", closure, tol.closure, None));

    let h = HFunc::new(f.clone(), model.mu, 1e-13);
    let grid = GridSpec::for_chart(chart, cfg.gradient_points, cfg.seed.wrapping_add(1));
    let r = gradient_norm_residual(chart, &w, &h, 0.0, &grid)?;
    checks.push(check("gradient_norm", r.max, tol.gradient_norm, None));

    let t_star = steepest_radius(model)?;
    let dir = p.up(t_star)?.signum();
    let room = if dir > 0.0 { hi - t_star } else { t_star - lo };
    let length = (room - 0.02).min(1.0);
    let r = flowline_geodesic_residual(chart, &w, &equator_point(n, t_star), length)?;
    checks.push(check(
        "flowline_geodesic",
        r.max_deviation,
        tol.flowline,
        Some(format!("start t={t_star}, reached {}", r.t_reached)),
    ));

    let level = p.u(t_star)?;
    let st = levelset_constancy(chart, &w, None, level, cfg.level_samples, cfg.seed.wrapping_add(2))?;
    checks.push(check(
        "levelset_constancy",
        st.std_gradnorm.max(st.std_z),
        tol.levelset,
        Some(format!(
            "level {level}: std |grad w| {}, std z {}",
            st.std_gradnorm, st.std_z
        )),
    ));

    let delta = 0.5f64.min(t_star - lo - 0.02).min(hi - t_star - 0.02);
    let (s1, s2) = (p.u(t_star - delta)?, p.u(t_star + delta)?);
    let r = warp_factorization_residual(
        chart,
        &w,
        f,
        level,
        (s1.min(s2), s1.max(s2)),
        cfg.level_samples,
        cfg.seed.wrapping_add(3),
    )?;
    checks.push(check("warp_factorization", r.max, tol.factorization, None));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(4));
    let pts = GridSpec::for_chart(chart, cfg.curvature_points, cfg.seed.wrapping_add(5)).generate();
    let (mut worst, mut at) = (0.0f64, Vec::new());
    for x in &pts {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = sectional_curvature(chart, x, &a, &b, CURVATURE_STEP)?;
        let exact = model_curvature_oracle(model, x, &a, &b)?;
        let d = (k - exact).abs();
        if d > worst || at.is_empty() {
            worst = worst.max(d);
            at = x.clone();
        }
    }
    checks.push(check(
        "sectional_curvature",
        worst,
        tol.curvature,
        Some(format!("argmax {at:?}")),
    ));

    let mut direction = vec![0.0; n];
    direction[n - 1] = 1.0;
    let r = jacobi_residual(chart, &equator_point(n, lo), &direction, hi.min(lo + 5.0))?;
    checks.push(check(
        "jacobi",
        r.max_residual,
        tol.jacobi,
        Some(format!("t in [{}, {}]", r.t_start, r.t_reached)),
    ));

    checks.push(check("energy_drift", p.energy_max_drift(), tol.energy, None));
    let span = hi.min(-p.t_min()).min(p.t_max());
    checks.push(check("symmetry", p.symmetry_residual(0.0, span)?, tol.symmetry, None));

    let first_failure = checks.iter().find(|c| !c.pass).map(|c| c.op.clone());
    Ok(VerifyReport {
        pass: first_failure.is_none(),
        first_failure,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ClassifyOptions;
    use crate::expr::parse;
    use crate::spaces::build_model;

    fn run(f: &str, mu: f64, n: usize) -> VerifyReport {
        let m = build_model(&parse(f).unwrap(), mu, n, &ClassifyOptions::default()).unwrap();
        verify_model(&m, &VerifyConfig::default()).unwrap()
    }

    #[test]
    fn round_sphere_passes() {
        let r = run("s", 1.0, 2);
        assert!(r.pass, "{:#?}", r.checks);
    }

    #[test]
    fn flat_space_passes() {
        let r = run("1", 1.0, 3);
        assert!(r.pass, "{:#?}", r.checks);
    }

    fn sphere() -> Model {
        build_model(&parse("s").unwrap(), 1.0, 2, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn perturbed_slope_fails_on_obata() {
        let mut m = sphere();
        let mut doc = m.profile().to_document();
        for node in &mut doc.nodes {
            node.up *= 1.01;
        }
        let p = std::sync::Arc::new(crate::profile::Profile::from_document(&doc).unwrap());
        if let crate::geometry::Warp::Profile { profile, .. } = &mut m.chart.warp {
            *profile = p;
        }
        let r = verify_model(&m, &VerifyConfig::default()).unwrap();
        assert_eq!(r.first_failure.as_deref(), Some("obata"));
    }

    #[test]
    fn rescaled_warp_fails_at_the_poles() {
        // A constant factor on φ keeps ∇dw + f(w)g = 0 and only opens a cone point.
        let mut m = sphere();
        if let crate::geometry::Warp::Profile { scale, .. } = &mut m.chart.warp {
            *scale *= 1.01;
        }
        let r = verify_model(&m, &VerifyConfig::default()).unwrap();
        assert!(r.get("obata").unwrap().pass);
        assert_eq!(r.first_failure.as_deref(), Some("closure"));
    }
}
