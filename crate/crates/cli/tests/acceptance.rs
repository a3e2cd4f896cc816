//! Acceptance runner. Prints one line per criterion and exits non-zero if any
//! of them fails.

use std::f64::consts::{PI, SQRT_2};
use std::path::PathBuf;
use std::process::{Command, ExitCode};

use obata_core::geometry::{sectional_curvature, GridSpec, CURVATURE_STEP};
use obata_core::spaces::{
    base_point, build_cosh_tower, circle_obstruction, evaluation_rank, hyperbolic_basis, inner_hyperbolic_seed,
    oscillator_fixed_dim, RecoverGrid, VerifyConfig,
};
use obata_core::{
    build_model, parse, recover_f, solve_profile, verify_model, ClassifyOptions, Fiber, Model, ProfileOptions,
    WarpedChart,
};
use serde_json::Value;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn model(f: &str, mu: f64, n: usize) -> Result<Model, String> {
    build_model(
        &parse(f).map_err(|e| e.to_string())?,
        mu,
        n,
        &ClassifyOptions::default(),
    )
    .map_err(|e| e.to_string())
}

/// Largest `|K − k|` over random planes at random points of `c`.
fn curvature_error(c: &WarpedChart, k: f64, points: usize) -> Result<f64, String> {
    let n = c.dim();
    let grid = GridSpec::for_chart(c, points, 7).generate();
    let dirs = GridSpec {
        seed: 11,
        points: 2 * points,
        bounds: vec![(-1.0, 1.0); n],
    }
    .generate();
    let mut worst = 0.0f64;
    for (i, x) in grid.iter().enumerate() {
        let v = sectional_curvature(c, x, &dirs[2 * i], &dirs[2 * i + 1], CURVATURE_STEP).map_err(|e| e.to_string())?;
        worst = worst.max((v - k).abs());
    }
    Ok(worst)
}

/// Curvature of every coordinate plane at the base point.
fn coordinate_plane_error(c: &WarpedChart, k: f64) -> Result<f64, String> {
    let n = c.dim();
    let x = base_point(c);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
            a[i] = 1.0;
            b[j] = 1.0;
            let v = sectional_curvature(c, &x, &a, &b, CURVATURE_STEP).map_err(|e| e.to_string())?;
            worst = worst.max((v - k).abs());
        }
    }
    Ok(worst)
}

fn obata(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_obata"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    ))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

fn round_sphere() -> Outcome {
    let m = model("s", 1.0, 2)?;
    let t = m.pair.t.ok_or("no closing time")?;
    ensure((t - PI).abs() <= 1e-8, || format!("T = {t}"))?;
    let r = verify_model(&m, &VerifyConfig::default()).map_err(|e| e.to_string())?;
    let res = r.get("obata").unwrap().value;
    ensure(res <= 1e-6, || format!("obata residual {res:e}"))?;
    let k = curvature_error(&m.chart, 1.0, 64)?;
    ensure(k <= 1e-4, || format!("|K - 1| = {k:e}"))?;
    Ok(format!("T - pi = {:.1e}, obata {res:.1e}, |K - 1| {k:.1e}", t - PI))
}

fn euclidean() -> Outcome {
    let p =
        solve_profile(&parse("1").unwrap(), 1.0, 0.0, 10.0, &ProfileOptions::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let t = -10.0 + 0.1 * i as f64;
        worst = worst.max((p.u(t).map_err(|e| e.to_string())? - (1.0 - t * t / 2.0)).abs());
    }
    ensure(worst <= 1e-10, || format!("|u - (1 - t^2/2)| = {worst:e}"))?;
    let m = model("1", 1.0, 3)?;
    let k = curvature_error(&m.chart, 0.0, 64)?;
    ensure(k <= 1e-6, || format!("|K| = {k:e}"))?;
    Ok(format!("profile error {worst:.1e}, |K| {k:.1e}"))
}

fn towers() -> Outcome {
    let mut notes = Vec::new();
    for n in [2usize, 3] {
        let line = build_cosh_tower(Fiber::FlatSpace(1), n - 1).map_err(|e| e.to_string())?;
        let basis =
            hyperbolic_basis(&line, &inner_hyperbolic_seed(&Fiber::FlatSpace(1)), 0).map_err(|e| e.to_string())?;
        ensure(basis.excluded.is_empty(), || {
            format!("n = {n}: excluded {:?}", basis.excluded)
        })?;
        let res = basis.elements.iter().map(|e| e.residual).fold(0.0, f64::max);
        ensure(res <= 1e-5, || format!("n = {n}: element residual {res:e}"))?;
        let rank = evaluation_rank(&basis, &base_point(&line), 1e-10).map_err(|e| e.to_string())?;
        ensure(rank == n + 1, || format!("n = {n}: line rank {rank}"))?;
        let k = coordinate_plane_error(&line, -1.0)?.max(curvature_error(&line, -1.0, 64)?);
        ensure(k <= 1e-4, || format!("n = {n}: line |K + 1| = {k:e}"))?;

        let circle = build_cosh_tower(Fiber::Circle(1.0), n - 1).map_err(|e| e.to_string())?;
        let basis =
            hyperbolic_basis(&circle, &inner_hyperbolic_seed(&Fiber::Circle(1.0)), 0).map_err(|e| e.to_string())?;
        let crank = evaluation_rank(&basis, &base_point(&circle), 1e-10).map_err(|e| e.to_string())?;
        ensure(crank == n - 1, || format!("n = {n}: circle rank {crank}"))?;
        let kc = coordinate_plane_error(&circle, -1.0)?.max(curvature_error(&circle, -1.0, 64)?);
        ensure(kc <= 1e-4, || format!("n = {n}: circle |K + 1| = {kc:e}"))?;
        notes.push(format!(
            "n={n}: ranks {rank}/{crank}, residual {res:.1e}, |K+1| {:.1e}",
            k.max(kc)
        ));
    }
    Ok(notes.join("; "))
}

fn obstruction() -> Outcome {
    let mut worst = 0.0f64;
    for rho in [0.5, 1.0, 2.0] {
        let o = circle_obstruction(rho).map_err(|e| e.to_string())?;
        ensure(o.dim == 0, || format!("rho = {rho}: dimension {}", o.dim))?;
        ensure(o.eigen_residual <= 1e-9, || {
            format!("rho = {rho}: eigenvalue error {:e}", o.eigen_residual)
        })?;
        worst = worst.max(o.eigen_residual);
    }
    let control = oscillator_fixed_dim(2.0 * PI).map_err(|e| e.to_string())?;
    ensure(control == 2, || format!("oscillator control dimension {control}"))?;
    Ok(format!("dimension 0, eigenvalue error {worst:.1e} relative, control 2"))
}

fn classify_json(f: &str, mu: f64) -> Result<Value, String> {
    let (code, out) = obata(&["classify", "--f", f, "--mu", &mu.to_string()])?;
    ensure(code == 0 || code == 3, || format!("{f} at {mu}: exit {code}"))?;
    serde_json::from_str(&out).map_err(|e| e.to_string())
}

fn classification() -> Outcome {
    for (f, mu, kind) in [
        ("s^2", 1.0, "NoncompactI"),
        ("1", 1.0, "NoncompactI"),
        ("s^3 - s", -SQRT_2, "NoncompactII"),
        ("s", 1.0, "Compact"),
        ("cos(s)", 0.0, "Compact"),
    ] {
        let got = classify_json(f, mu)?["pair"]["kind"].clone();
        ensure(got == kind, || format!("{f} at {mu}: {got}, expected {kind}"))?;
    }
    for (f, label) in [
        ("s", "NondegeneratelyCoercive"),
        ("cos(s)", "NondegeneratelyCoercive"),
        ("1", "DegeneratelyCoercive"),
        ("s^2", "DegeneratelyCoercive"),
        ("1 + cos(s)/2", "DegeneratelyCoercive"),
        ("s^3 - s", "DegeneratelyCoercive"),
    ] {
        let got = classify_json(f, 2.0)?["coercivity"]["label"].clone();
        ensure(got == label, || format!("{f}: {got}, expected {label}"))?;
    }
    Ok("5 pair types and 6 coercivity labels".into())
}

/// Models used by the conservation and identity criteria.
const SWEEP: &[(&str, f64, usize)] = &[
    ("s", 1.0, 2),
    ("s", 0.5, 2),
    ("s", 2.0, 3),
    ("1", 1.0, 2),
    ("1", 1.0, 3),
    ("s^2", 1.0, 2),
    ("s^3 - s", -SQRT_2, 2),
    ("s^3 - s", 2.0, 2),
    ("cos(s)", 0.0, 2),
    ("cos(s)", 0.0, 3),
    ("s^3", 1.0, 2),
    ("1 + cos(s)/2", 1.0, 2),
];

fn conservation() -> Outcome {
    let (mut drift, mut sym) = (0.0f64, 0.0f64);
    for &(f, mu, n) in SWEEP {
        let r = verify_model(&model(f, mu, n)?, &VerifyConfig::default()).map_err(|e| e.to_string())?;
        drift = drift.max(r.get("energy_drift").unwrap().value);
        sym = sym.max(r.get("symmetry").unwrap().value);
    }
    ensure(drift <= 1e-8, || format!("energy drift {drift:e}"))?;
    ensure(sym <= 1e-7, || format!("symmetry residual {sym:e}"))?;
    let p =
        solve_profile(&parse("s").unwrap(), 1.0, 0.0, 20.0, &ProfileOptions::default()).map_err(|e| e.to_string())?;
    let period = p.periodicity_probe(1e-8).period.ok_or("f = s not periodic")?;
    ensure((period - 2.0 * PI).abs() <= 1e-8, || format!("period {period}"))?;
    Ok(format!(
        "drift {drift:.1e}, symmetry {sym:.1e}, period - 2pi {:.1e}",
        period - 2.0 * PI
    ))
}

fn identities() -> Outcome {
    let limits = [
        ("gradient_norm", 1e-6),
        ("flowline_geodesic", 1e-5),
        ("levelset_constancy", 1e-7),
        ("warp_factorization", 1e-5),
        ("jacobi", 1e-4),
    ];
    let mut worst = [0.0f64; 5];
    for &(f, mu, n) in SWEEP {
        let r = verify_model(&model(f, mu, n)?, &VerifyConfig::default()).map_err(|e| e.to_string())?;
        ensure(r.pass, || format!("{f} at {mu}, n = {n}: {:?} fails", r.first_failure))?;
        for (i, (op, tol)) in limits.iter().enumerate() {
            let v = r.get(op).ok_or(format!("missing {op}"))?.value;
            ensure(v <= *tol, || format!("{f} at {mu}, n = {n}: {op} {v:e}"))?;
            worst[i] = worst[i].max(v);
        }
    }
    Ok(format!(
        "{} models; worst gradient {:.1e}, flow {:.1e}, level {:.1e}, factorization {:.1e}, jacobi {:.1e}",
        SWEEP.len(),
        worst[0],
        worst[1],
        worst[2],
        worst[3],
        worst[4]
    ))
}

fn recovery() -> Outcome {
    let mut notes = Vec::new();
    for (f, mu) in [("s", 1.0), ("cos(s)", 0.0)] {
        let m = model(f, mu, 2)?;
        let rec = recover_f(&m.chart, &m.solution(), &RecoverGrid::default()).map_err(|e| e.to_string())?;
        let err = rec.sup_error(m.f(), 0.8).map_err(|e| e.to_string())?;
        ensure(err <= 1e-4, || format!("{f}: sup error {err:e}"))?;
        notes.push(format!("{f} {err:.1e}"));
    }

    let path = scratch("acceptance_model.json");
    let corrupt = scratch("acceptance_corrupt.json");
    let p = path.to_str().unwrap();
    let (code, _) = obata(&["construct", "--f", "s", "--mu", "1", "--out", p])?;
    ensure(code == 0, || format!("construct exit {code}"))?;
    let (code, _) = obata(&["verify", "--model", p])?;
    ensure(code == 0, || format!("clean model verify exit {code}"))?;
    let mut doc: Value =
        serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    for node in doc["model"]["chart"]["warp"]["Profile"]["profile"]["nodes"]
        .as_array_mut()
        .ok_or("model file has no nodes")?
    {
        let up = node["up"].as_f64().unwrap();
        node["up"] = (up * 1.01).into();
    }
    std::fs::write(&corrupt, doc.to_string()).map_err(|e| e.to_string())?;
    let (code, _) = obata(&["verify", "--model", corrupt.to_str().unwrap()])?;
    ensure(code == 5, || format!("perturbed model verify exit {code}"))?;
    notes.push("perturbed model exits 5".into());
    Ok(notes.join(", "))
}

fn parser() -> Outcome {
    let text = include_str!("../../core/tests/data/parser_golden.txt");
    let mut cases = 0;
    let mut worst = 0.0f64;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(" | ").collect();
        let e = parse(cols[0]).map_err(|e| format!("{}: {e}", cols[0]))?;
        ensure(e.to_string() == cols[1], || format!("{}: printed {}", cols[0], e))?;
        ensure(parse(cols[1]).ok().as_ref() == Some(&e), || {
            format!("{}: no round trip", cols[1])
        })?;
        let s = 0.7;
        let fd = |h: f64| (e.eval(s + h).unwrap() - e.eval(s - h).unwrap()) / (2.0 * h);
        let numeric = (4.0 * fd(5e-4) - fd(1e-3)) / 3.0;
        let symbolic = e.differentiate().eval(s).map_err(|e| e.to_string())?;
        let rel = (symbolic - numeric).abs() / symbolic.abs().max(1.0);
        ensure(rel <= 1e-6, || {
            format!("{}: derivative {symbolic} vs {numeric}", cols[0])
        })?;
        worst = worst.max(rel);
        cases += 1;
    }
    ensure(cases == 50, || format!("{cases} cases"))?;
    Ok(format!("{cases} cases, derivative error {worst:.1e} relative"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("round sphere", round_sphere),
        ("euclidean space", euclidean),
        ("hyperbolic towers", towers),
        ("circle obstruction", obstruction),
        ("classification table", classification),
        ("conservation and symmetry", conservation),
        ("identity suite", identities),
        ("f recovery", recovery),
        ("parser", parser),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
