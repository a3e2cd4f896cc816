use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use obata_core::classify::{classify_coercivity, classify_pair, ClassifyError, ClassifyOptions, PairKind, Window};
use obata_core::geometry::{sectional_curvature, Fiber, SolutionField, WarpedChart, CURVATURE_STEP};
use obata_core::spaces::{
    base_point, build_cosh_tower, build_exp_warping, build_model, euclidean_basis, evaluation_matrix, evaluation_rank,
    exp_basis, hyperbolic_basis, inner_hyperbolic_seed, recover_f, verify_model, Model, RecoverGrid, SolutionBasis,
    SpacesError, VerifyConfig, VerifyTolerances,
};
use obata_core::{parse, Expr, ParseError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{
    BasisArgs, Common, ConstructArgs, FiberArg, Format, PairArgs, RecoverArgs, Space, TestChart, VerifyArgs,
};
use crate::config::RunConfig;

pub const SCHEMA: u32 = 1;

/// Process exit status. The numeric values are a stable contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    Other = 1,
    Parse = 2,
    Undetermined = 3,
    Degenerate = 4,
    VerificationFailed = 5,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    fn other(e: impl std::fmt::Display) -> Failure {
        Failure {
            exit: Exit::Other,
            message: e.to_string(),
        }
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        let exit = match e {
            ClassifyError::DegeneratePair { .. } => Exit::Degenerate,
            _ => Exit::Other,
        };
        Failure {
            exit,
            message: e.to_string(),
        }
    }
}

impl From<SpacesError> for Failure {
    fn from(e: SpacesError) -> Self {
        match e {
            SpacesError::Classify(e) => e.into(),
            SpacesError::FunctionalDependenceFailed { .. } => Failure {
                exit: Exit::VerificationFailed,
                message: e.to_string(),
            },
            e => Failure::other(e),
        }
    }
}

/// Report text plus the status to exit with once it is written.
pub struct Outcome {
    pub body: String,
    pub exit: Exit,
    pub note: Option<String>,
}

fn parse_f(text: &str) -> Result<Expr, Failure> {
    parse(text).map_err(|e: ParseError| Failure {
        exit: Exit::Parse,
        message: format!("cannot parse f: {e}\n  {text}\n  {}^", " ".repeat(e.offset)),
    })
}

fn to_json(v: &impl Serialize) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(Failure::other)?;
    s.push('\n');
    Ok(s)
}

fn header(cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m
}

fn options(a: &PairArgs) -> ClassifyOptions {
    ClassifyOptions {
        window: a.window,
        t_max: a.budget,
        tol_f: a.tol_f,
        tol_h: a.tol_h,
        ..ClassifyOptions::default()
    }
}

pub fn classify(a: &PairArgs) -> Result<Outcome, Failure> {
    let cfg = RunConfig::classify(a);
    let f = parse_f(&a.f)?;
    let pair = classify_pair(&f, a.mu, &options(a))?;
    let window = Window {
        lo: a.mu - a.window,
        hi: a.mu + a.window,
    };
    let coercivity = classify_coercivity(&f, window, a.offsets, a.tol_f, a.tol_h)?;
    let undetermined =
        pair.kind == PairKind::Undetermined || coercivity.label == obata_core::CoercivityLabel::Undetermined;
    let body = match a.common.format {
        Format::Json => {
            let mut m = header(&cfg);
            m.insert("pair".into(), serde_json::to_value(&pair).map_err(Failure::other)?);
            m.insert(
                "coercivity".into(),
                serde_json::to_value(&coercivity).map_err(Failure::other)?,
            );
            to_json(&m)?
        }
        Format::Csv => {
            let mut s = String::from("field,value\n");
            let _ = writeln!(s, "kind,{:?}", pair.kind);
            let _ = writeln!(s, "mu,{}", pair.mu);
            let _ = writeln!(s, "f_mu,{}", pair.f_mu);
            let _ = writeln!(s, "nu,{}", opt(pair.nu));
            let _ = writeln!(s, "T,{}", opt(pair.t));
            let _ = writeln!(s, "coercivity,{:?}", coercivity.label);
            s
        }
    };
    Ok(Outcome {
        body,
        exit: if undetermined { Exit::Undetermined } else { Exit::Pass },
        note: Some(format!("{:?}, {:?}", pair.kind, coercivity.label)),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// On-disk form of a constructed model.
#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: u32,
    pub config: Value,
    pub model: Model,
}

pub fn construct(a: &ConstructArgs) -> Result<Outcome, Failure> {
    let cfg = RunConfig::construct(a);
    let f = parse_f(&a.pair.f)?;
    let model = build_model(&f, a.pair.mu, a.dim, &options(&a.pair))?;
    let undetermined = model.pair.kind == PairKind::Undetermined;
    let note = format!(
        "{:?}, topology {:?}{}",
        model.pair.kind,
        model.topology,
        if model.non_smooth_closure {
            ", non-smooth closure"
        } else {
            ""
        }
    );
    let body = match a.pair.common.format {
        Format::Json => to_json(&ModelFile {
            schema: SCHEMA,
            config: serde_json::to_value(&cfg).map_err(Failure::other)?,
            model,
        })?,
        Format::Csv => model.profile().to_csv(),
    };
    Ok(Outcome {
        body,
        exit: if undetermined { Exit::Undetermined } else { Exit::Pass },
        note: Some(note),
    })
}

fn load_model(path: &Path) -> Result<ModelFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::other(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::other(format!("{}: invalid model file: {e}", path.display())))
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let cfg = RunConfig::verify(a);
    let file = load_model(&a.model)?;
    let m = &file.model;
    let vc = VerifyConfig {
        seed: a.common.seed,
        obata_points: a.points,
        tolerances: VerifyTolerances {
            obata: a.tol_obata,
            closure: a.tol_closure,
            gradient_norm: a.tol_gradient,
            flowline: a.tol_flowline,
            levelset: a.tol_levelset,
            factorization: a.tol_factorization,
            curvature: a.tol_curvature,
            jacobi: a.tol_jacobi,
            energy: a.tol_energy,
            symmetry: a.tol_symmetry,
        },
        ..VerifyConfig::default()
    };
    let report = verify_model(m, &vc)?;
    let note = match report.first_failure.as_deref().and_then(|op| report.get(op)) {
        Some(c) => format!("{} residual {:e} exceeds {:e}", c.op, c.value, c.tol),
        None => "all checks pass".into(),
    };
    let body = match a.common.format {
        Format::Json => {
            let mut h = header(&cfg);
            h.insert(
                "model".into(),
                json!({
                    "f": m.f_text,
                    "mu": m.mu,
                    "dim": m.dim,
                    "kind": m.pair.kind,
                    "topology": m.topology,
                    "band": [m.band().0, m.band().1],
                }),
            );
            h.insert("report".into(), serde_json::to_value(&report).map_err(Failure::other)?);
            to_json(&h)?
        }
        Format::Csv => {
            let mut s = String::from("op,value,tol,pass\n");
            for c in &report.checks {
                let _ = writeln!(s, "{},{},{},{}", c.op, c.value, c.tol, c.pass);
            }
            s
        }
    };
    Ok(Outcome {
        body,
        exit: if report.pass {
            Exit::Pass
        } else {
            Exit::VerificationFailed
        },
        note: Some(note),
    })
}

fn fiber(a: &BasisArgs) -> Result<Option<Fiber>, Failure> {
    match a.fiber {
        FiberArg::Line => Ok(Some(Fiber::FlatSpace(1))),
        FiberArg::Circle if a.rho > 0.0 => Ok(Some(Fiber::Circle(a.rho))),
        FiberArg::Circle => Err(Failure::other(format!("circle radius must be positive, got {}", a.rho))),
        FiberArg::None => Ok(None),
    }
}

/// Sectional curvature range over the coordinate planes at `p`.
fn coordinate_curvature(c: &WarpedChart, p: &[f64]) -> Result<(f64, f64), Failure> {
    let n = p.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            a[i] = 1.0;
            b[j] = 1.0;
            let k = sectional_curvature(c, p, &a, &b, CURVATURE_STEP).map_err(Failure::other)?;
            lo = lo.min(k);
            hi = hi.max(k);
        }
    }
    Ok((lo, hi))
}

pub fn basis(a: &BasisArgs) -> Result<Outcome, Failure> {
    let cfg = RunConfig::basis(a);
    let seed = a.common.seed;
    let b: SolutionBasis = match a.space {
        Space::Hcosh | Space::Hexp => {
            let inner = fiber(a)?.ok_or_else(|| Failure::other("hyperbolic spaces need a line or circle fiber"))?;
            if a.space == Space::Hcosh {
                let tower = build_cosh_tower(inner, a.k)?;
                hyperbolic_basis(&tower, &inner_hyperbolic_seed(tower.innermost_fiber()), seed)?
            } else {
                exp_basis(&build_exp_warping(inner), seed)?
            }
        }
        Space::Euclid => euclidean_basis(a.k, fiber(a)?, seed)?,
    };
    let p0 = base_point(&b.chart);
    let rank = evaluation_rank(&b, &p0, a.tol_rank)?;
    let n = b.chart.dim();
    let matrix = evaluation_matrix(&b, &p0)?;
    let (k_min, k_max) = coordinate_curvature(&b.chart, &p0)?;
    let body = match a.common.format {
        Format::Json => {
            let mut h = header(&cfg);
            h.insert("tag".into(), json!(b.tag));
            h.insert("dim".into(), json!(n));
            h.insert("chart".into(), serde_json::to_value(&b.chart).map_err(Failure::other)?);
            h.insert("elements".into(), json!(b.elements));
            h.insert("excluded".into(), json!(b.excluded));
            h.insert("base_point".into(), json!(p0));
            let rows: Vec<Vec<f64>> = matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
            h.insert("evaluation_matrix".into(), json!(rows));
            h.insert("rank".into(), json!(rank));
            h.insert("rank_bound".into(), json!((n + 1).min(b.len())));
            h.insert("curvature".into(), json!({ "min": k_min, "max": k_max }));
            to_json(&h)?
        }
        Format::Csv => {
            let mut s = String::from("label,residual\n");
            for e in &b.elements {
                let _ = writeln!(s, "{},{}", e.label, e.residual);
            }
            s
        }
    };
    Ok(Outcome {
        body,
        exit: Exit::Pass,
        note: Some(format!("{} verified solutions, rank {rank}", b.len())),
    })
}

pub fn recover(a: &RecoverArgs) -> Result<Outcome, Failure> {
    let cfg = RunConfig::recover(a);
    let (chart, w, f, default_radial): (WarpedChart, SolutionField, Option<Expr>, usize) = match (&a.model, a.space) {
        (Some(path), _) => {
            let m = load_model(path)?.model;
            let f = m.f().clone();
            (m.chart.clone(), m.solution(), Some(f), 8000)
        }
        (None, Some(TestChart::Flat)) => (
            WarpedChart::flat(1),
            SolutionField::coordinate(0),
            Some(parse("0").expect("constant")),
            8000,
        ),
        (None, Some(TestChart::CubicLine)) => (
            WarpedChart::flat(0),
            SolutionField::radial(parse("s^3").expect("cubic")),
            None,
            200_000,
        ),
        (None, None) => return Err(Failure::other("give --model or --space")),
    };
    let grid = RecoverGrid {
        radial: a.radial.unwrap_or(default_radial),
        fibers: a.fibers,
        seed: a.common.seed,
    };
    let r = recover_f(&chart, &w, &grid)?;
    let sup = f.as_ref().map(|f| r.sup_error(f, 0.8)).transpose()?;
    let note = format!(
        "{} bins, single-valued residual {:e}{}",
        r.bins.len(),
        r.single_valued_residual,
        r.blowup_at
            .map(|s| format!(", derivative blow-up near s = {s:.3e}"))
            .unwrap_or_default()
    );
    let body = match a.common.format {
        Format::Json => {
            let mut h = header(&cfg);
            h.insert("single_valued_residual".into(), json!(r.single_valued_residual));
            h.insert("blowup_at".into(), json!(r.blowup_at));
            h.insert("max_slope".into(), json!(r.max_slope));
            h.insert("median_slope".into(), json!(r.median_slope));
            h.insert("domain".into(), json!([r.domain().0, r.domain().1]));
            h.insert("sup_error_interior".into(), json!(sup));
            h.insert("bins".into(), json!(r.bins));
            to_json(&h)?
        }
        Format::Csv => r.to_csv(),
    };
    Ok(Outcome {
        body,
        exit: Exit::Pass,
        note: Some(note),
    })
}

pub fn write(common: &Common, body: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => fs::write(path, body).map_err(|e| Failure::other(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            match std::io::stdout().write_all(body.as_bytes()) {
                // a closed pipe (`| head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(Failure::other),
            }
        }
    }
}
