use std::collections::BTreeMap;

use serde::Serialize;

use crate::args::{
    BasisArgs, Common, ConstructArgs, FiberArg, Format, PairArgs, RecoverArgs, Space, TestChart, VerifyArgs,
};

/// Everything that determines a report. Serialized into its header.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub seed: u64,
    pub out: Option<String>,
    pub format: Format,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<&'static str, serde_json::Value>,
}

impl RunConfig {
    fn base(subcommand: &'static str, c: &Common) -> RunConfig {
        RunConfig {
            subcommand,
            f_text: None,
            mu: None,
            dim: None,
            window: None,
            budget: None,
            tolerances: BTreeMap::new(),
            seed: c.seed,
            out: c.out.as_ref().map(|p| p.display().to_string()),
            format: c.format,
            extra: BTreeMap::new(),
        }
    }

    fn pair(subcommand: &'static str, a: &PairArgs) -> RunConfig {
        let mut cfg = RunConfig::base(subcommand, &a.common);
        cfg.f_text = Some(a.f.clone());
        cfg.mu = Some(a.mu);
        cfg.window = Some(a.window);
        cfg.budget = Some(a.budget);
        cfg.tolerances.insert("f", a.tol_f);
        cfg.tolerances.insert("h", a.tol_h);
        cfg
    }

    pub fn classify(a: &PairArgs) -> RunConfig {
        let mut cfg = RunConfig::pair("classify", a);
        cfg.extra.insert("offsets", a.offsets.into());
        cfg
    }

    pub fn construct(a: &ConstructArgs) -> RunConfig {
        let mut cfg = RunConfig::pair("construct", &a.pair);
        cfg.dim = Some(a.dim);
        cfg
    }

    pub fn verify(a: &VerifyArgs) -> RunConfig {
        let mut cfg = RunConfig::base("verify", &a.common);
        for (k, v) in [
            ("obata", a.tol_obata),
            ("closure", a.tol_closure),
            ("gradient_norm", a.tol_gradient),
            ("flowline", a.tol_flowline),
            ("levelset", a.tol_levelset),
            ("factorization", a.tol_factorization),
            ("curvature", a.tol_curvature),
            ("jacobi", a.tol_jacobi),
            ("energy", a.tol_energy),
            ("symmetry", a.tol_symmetry),
        ] {
            cfg.tolerances.insert(k, v);
        }
        cfg.extra.insert("model", a.model.display().to_string().into());
        cfg.extra.insert("points", a.points.into());
        cfg
    }

    pub fn basis(a: &BasisArgs) -> RunConfig {
        let mut cfg = RunConfig::base("basis", &a.common);
        cfg.tolerances.insert("rank", a.tol_rank);
        cfg.extra
            .insert("space", serde_json::to_value::<Space>(a.space).expect("enum"));
        cfg.extra.insert("k", a.k.into());
        cfg.extra
            .insert("fiber", serde_json::to_value::<FiberArg>(a.fiber).expect("enum"));
        if a.fiber == FiberArg::Circle {
            cfg.extra.insert("rho", a.rho.into());
        }
        cfg
    }

    pub fn recover(a: &RecoverArgs) -> RunConfig {
        let mut cfg = RunConfig::base("recover-f", &a.common);
        if let Some(m) = &a.model {
            cfg.extra.insert("model", m.display().to_string().into());
        }
        if let Some(s) = a.space {
            cfg.extra
                .insert("space", serde_json::to_value::<TestChart>(s).expect("enum"));
        }
        if let Some(r) = a.radial {
            cfg.extra.insert("radial", r.into());
        }
        cfg.extra.insert("fibers", a.fibers.into());
        cfg
    }
}
