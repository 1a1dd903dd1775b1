//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use harmorph::cli::Grid;
use harmorph::exprjet::{self, eval_jet2, fd_oracle};
use harmorph::fixtures::{build_fixture, fixture_catalog};
use harmorph::linalg::{BilinearForm, Subspace};
use harmorph::manifold::ChartPatch;
use harmorph::morphism::{HwcCase, SmoothMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const TOL: f64 = 1e-9;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("linalg laws on 500 exact forms", linalg_laws),
        ("jet engine against finite differences", jet_engine),
        ("connection axioms", connection_axioms),
        ("wave maps on R^3_{1,1,1}", wave_maps),
        ("anti-orthogonal multiplication", anti_orthogonal),
        ("radial projection", radial_projection),
        ("classifier coverage", classifier_coverage),
        ("non-degenerate reduction", nondegenerate_reduction),
        ("radical-coordinate independence", radical_independence),
        ("cli contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} ({elapsed:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail} ({elapsed:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:?}, limit {limit:?}", start.elapsed()))
}

fn linalg_laws() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut degenerate = 0;
    for case in 0..500 {
        let n = rng.gen_range(1..=7);
        let gram = random_form(&mut rng, n);
        let k = rng.gen_range(0..=n);
        let vecs = random_vectors(&mut rng, n, k);

        let form = BilinearForm::from_rows(to_rational(&gram)).map_err(|e| e.to_string())?;
        let w = Subspace::spanned_by(n, &to_rational(&vecs), 0.0);
        let report = form.verify_subspace_laws(&w, 0.0).map_err(|e| e.to_string())?;

        // Oracle: dim W = rank(B), dim G(W) = rank(B G), dim N = n - rank(G).
        let rank_b = bareiss_rank(&to_bigint(&vecs));
        let rank_bg = if k == 0 { 0 } else { bareiss_rank(&to_bigint(&int_mat_mul(&vecs, &gram))) };
        let dim_radical = n - bareiss_rank(&to_bigint(&gram));
        let expected = (rank_b, n - rank_bg, dim_radical, rank_b - rank_bg);
        let got = (report.dim_w, report.dim_perp, report.dim_radical, report.dim_radical_cap_w);
        ensure(got == expected, || format!("case {case}: dims {got:?}, oracle {expected:?}"))?;
        ensure(report.all_hold(), || format!("case {case}: law violated {report:?}"))?;
        ensure(report.dim_perp_perp == rank_b + dim_radical - report.dim_radical_cap_w, || {
            format!("case {case}: dim (W^perp)^perp = {}", report.dim_perp_perp)
        })?;
        if dim_radical > 0 {
            degenerate += 1;
        }
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("500 forms ({degenerate} degenerate), all three laws exact"))
}

fn jet_engine() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vars = ["x1", "x2", "x3"];
    let mut worst = 0.0f64;
    let pairs = 250;
    for case in 0..pairs {
        let text = random_expression(&mut rng, &vars, 3);
        let expr = exprjet::parse(&text, &vars).map_err(|e| format!("{text}: {e}"))?;
        let x = random_point(&mut rng, 3);
        let jet = eval_jet2(&expr, &x).map_err(|e| format!("case {case} {text}: {e}"))?;
        let fd = fd_oracle(&expr, &x, 1e-5).map_err(|e| format!("case {case} {text}: {e}"))?;
        let entries = std::iter::once((*fd.value(), *jet.value()))
            .chain(fd.grad().iter().copied().zip(jet.grad().iter().copied()))
            .chain(fd.hess_packed().iter().copied().zip(jet.hess_packed().iter().copied()));
        for (f, j) in entries {
            let dev = rel(f, j);
            worst = worst.max(dev);
            ensure(dev <= 1e-6, || format!("case {case}: {text} at {x:?}: fd {f} vs jet {j}"))?;
        }
    }
    within(start, Duration::from_secs(5))?;
    Ok(format!("{pairs} pairs, worst scaled deviation {worst:.2e}"))
}

fn diag_chart(coords: &[&str], r: usize, diag: &[&str], domain: &[&str]) -> ChartPatch {
    let n = coords.len();
    let metric: Vec<Vec<String>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { diag[i].to_string() } else { "0".into() }).collect())
        .collect();
    ChartPatch::new(coords, r, &metric, domain).unwrap()
}

fn connection_axioms() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    type Sampler = fn(&mut ChaCha8Rng) -> Vec<f64>;
    let charts: Vec<(&str, ChartPatch, Sampler, Option<Christoffel2>)> = vec![
        (
            "polar plane",
            diag_chart(&["r", "t"], 0, &["1", "r^2"], &["r"]),
            |g| vec![g.gen_range(0.3..3.0), g.gen_range(-3.0..3.0)],
            Some(polar_christoffels),
        ),
        (
            "Minkowski plane",
            diag_chart(&["s", "x"], 0, &["-1", "1"], &[]),
            |g| vec![g.gen_range(-3.0..3.0), g.gen_range(-3.0..3.0)],
            Some(flat_christoffels),
        ),
        (
            "round sphere",
            diag_chart(&["th", "ph"], 0, &["1", "sin(th)^2"], &["sin(th)"]),
            |g| vec![g.gen_range(0.2..2.9), g.gen_range(-3.0..3.0)],
            Some(sphere_christoffels),
        ),
        (
            "warped degenerate",
            diag_chart(&["w", "x2", "x3"], 1, &["0", "-1", "(x2)^2"], &["x2"]),
            |g| vec![g.gen_range(-3.0..3.0), g.gen_range(0.3..3.0), g.gen_range(-3.0..3.0)],
            None,
        ),
        (
            "non-diagonal degenerate",
            ChartPatch::new(
                &["w", "x", "y"],
                1,
                &[vec!["0", "0", "0"], vec!["0", "1+y^2", "x*y"], vec!["0", "", "2+x^2"]],
                &[] as &[&str],
            )
            .unwrap(),
            |g| vec![g.gen_range(-3.0..3.0), g.gen_range(-2.0..2.0), g.gen_range(-2.0..2.0)],
            None,
        ),
        (
            "degenerate sphere",
            diag_chart(&["s", "th", "ph"], 1, &["0", "1", "sin(th)^2"], &["sin(th)"]),
            |g| vec![g.gen_range(-3.0..3.0), g.gen_range(0.2..2.9), g.gen_range(-3.0..3.0)],
            Some(sphere_christoffels),
        ),
    ];
    let mut worst_compat = 0.0f64;
    let mut worst_textbook = 0.0f64;
    for (name, chart, sample, textbook) in &charts {
        let points: Vec<Vec<f64>> = (0..20).map(|_| sample(&mut rng)).collect();
        let stationary = chart.is_stationary(&points, TOL).map_err(|e| e.to_string())?;
        ensure(stationary.passed, || format!("{name}: not stationary"))?;
        for x in &points {
            let metric = chart.quotient_metric_at(x).map_err(|e| format!("{name}: {e}"))?;
            let gamma = metric.christoffels();
            let n = gamma.screen_dim();
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        ensure(gamma.get(k, i, j).to_bits() == gamma.get(k, j, i).to_bits(), || {
                            format!("{name}: torsion at {x:?}")
                        })?;
                    }
                }
            }
            let compat = metric.metric_compatibility_residual(&gamma);
            worst_compat = worst_compat.max(compat);
            ensure(compat <= 1e-9, || format!("{name}: compatibility residual {compat:e} at {x:?}"))?;
            if let Some(textbook) = textbook {
                let screen = &x[chart.radical_rank()..];
                let expected = textbook(screen);
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let d = (gamma.get(k, i, j) - expected[k][i][j]).abs();
                            worst_textbook = worst_textbook.max(d);
                            ensure(d <= 1e-10, || format!("{name}: Γ^{k}_{i}{j} off by {d:e}"))?;
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "6 charts x 20 points, torsion exact, compatibility <= {worst_compat:.1e}, textbook deviation <= {worst_textbook:.1e}"
    ))
}

fn grid_points(mins: &[f64], maxs: &[f64], counts: &[usize]) -> Vec<Vec<f64>> {
    Grid { mins: mins.to_vec(), maxs: maxs.to_vec(), counts: counts.to_vec() }.points()
}

fn wave_maps() -> Result<String, String> {
    let f = build_fixture("wave_morphism").map_err(|e| e.to_string())?;
    let wave = f.map("wave");
    let points = grid_points(&[0.5, -1.5, 0.15], &[0.5, 1.5, 1.95], &[1, 7, 7]);
    ensure(points.iter().all(|x| wave.source().is_admissible(x)), || "grid not admissible".into())?;
    let mut worst = 0.0f64;
    for x in &points {
        let t = wave.tension_at(x, TOL).map_err(|e| e.to_string())?;
        worst = worst.max(t.norm).max(max_abs(&t.tension));
    }
    ensure(worst <= 1e-9, || format!("max |tension| = {worst:e}"))?;
    let report = wave.morphism_verdict(&points, TOL);
    ensure(report.harmonic_morphism, || format!("verdict false: {report:?}"))?;
    let timelike = f.map("timelike_coordinate");
    let lambda = timelike.hwc_classify_at(&[0.2, 0.3, 1.1], TOL).map_err(|e| e.to_string())?.lambda;
    ensure((lambda + 1.0).abs() <= 4.0 * f64::EPSILON, || format!("Λ(x2) = {lambda:?}"))?;
    Ok(format!("7x7 grid, max |tension| {worst:.1e}, verdict true, Λ(x2) = {lambda}"))
}

fn anti_orthogonal() -> Result<String, String> {
    let f = build_fixture("anti_orthogonal_mult").map_err(|e| e.to_string())?;
    let theta = f.map("product");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points: Vec<Vec<f64>> = (0..10).map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let mut worst_tension = 0.0f64;
    let mut worst_lambda = 0.0f64;
    let mut case_d = 0;
    for x in &points {
        let rp = theta.is_radical_preserving_at(x, TOL).map_err(|e| e.to_string())?;
        ensure(rp.preserving, || format!("not radical-preserving at {x:?}"))?;
        let t = theta.tension_at(x, TOL).map_err(|e| e.to_string())?;
        worst_tension = worst_tension.max(max_abs(&t.tension));
        let v = theta.hwc_classify_at(x, TOL).map_err(|e| e.to_string())?;
        let (x2, x3, y2, y3) = (x[2], x[3], x[4], x[5]);
        let expected = -((-x2 * x2 + x3 * x3) + (-y2 * y2 + y3 * y3));
        worst_lambda = worst_lambda.max((v.lambda - expected).abs());
        if expected.abs() > 1e-9 {
            ensure(v.case == HwcCase::D, || format!("case {:?} at {x:?}", v.case))?;
            case_d += 1;
        }
    }
    ensure(worst_tension <= 1e-12, || format!("max |tension| = {worst_tension:e}"))?;
    ensure(worst_lambda <= 1e-10, || format!("max |Λ - oracle| = {worst_lambda:e}"))?;
    let report = theta.morphism_verdict(&points, TOL);
    ensure(report.harmonic_morphism, || format!("verdict false: {report:?}"))?;
    Ok(format!(
        "10 points, max |tension| {worst_tension:.1e}, max |Λ error| {worst_lambda:.1e}, {case_d} case d, verdict true"
    ))
}

fn radial_projection() -> Result<String, String> {
    let f = build_fixture("radial_projection").map_err(|e| e.to_string())?;
    let phi = f.map("projection");
    let points = grid_points(&[0.7, -0.5, 1.2], &[0.7, 0.5, 2.0], &[1, 5, 5]);
    let (mut tension, mut residual, mut lambda) = (0.0f64, 0.0f64, 0.0f64);
    for x in &points {
        let t = phi.tension_at(x, TOL).map_err(|e| e.to_string())?;
        tension = tension.max(max_abs(&t.tension));
        let v = phi.hwc_classify_at(x, TOL).map_err(|e| e.to_string())?;
        residual = residual.max(v.fit_residual);
        lambda = lambda.max((v.lambda - 1.0 / (x[2] * x[2] - x[1] * x[1])).abs());
    }
    ensure(tension <= 1e-9, || format!("max |tension| = {tension:e}"))?;
    ensure(residual <= 1e-9, || format!("max fit residual = {residual:e}"))?;
    ensure(lambda <= 1e-9, || format!("max |Λ - 1/|x|^2| = {lambda:e}"))?;
    Ok(format!("5x5 grid, max |tension| {tension:.1e}, max residual {residual:.1e}, max |Λ error| {lambda:.1e}"))
}

fn classifier_coverage() -> Result<String, String> {
    let f = build_fixture("case_probes").map_err(|e| e.to_string())?;
    let probes = [
        ("constant", HwcCase::A),
        ("into_radical", HwcCase::B),
        ("null_projection", HwcCase::C),
        ("timelike_coordinate", HwcCase::D),
    ];
    let points = [[0.0, 0.0, 0.0], [1.0, 0.5, -2.0], [-0.3, 1.7, 0.4]];
    for (name, want) in probes {
        for x in &points {
            let v = f.map(name).hwc_classify_at(x, TOL).map_err(|e| format!("{name}: {e}"))?;
            ensure(v.case == want, || format!("{name} at {x:?}: case {:?}, expected {want:?}", v.case))?;
        }
    }
    Ok("constant -> a, (x2,0,0) -> b, x2+x3 -> c, x2 -> d".into())
}

fn nondegenerate_reduction() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst_tension, mut worst_lambda) = (0.0f64, 0.0f64);
    let cases = classical_cases();
    for (case, source, target, components) in &cases {
        let map = SmoothMap::new(source.build(0), target.build(0), components).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let x = vec![rng.gen_range(0.4..2.0), rng.gen_range(-1.5..1.5)];
            let oracle = case.tension(&x);
            let t = map.tension_at(&x, TOL).map_err(|e| format!("{}: {e}", case.name))?;
            for c in 0..2 {
                let d = (t.tension[c] - oracle[c]).abs();
                worst_tension = worst_tension.max(d);
                ensure(d <= 1e-10, || format!("{}: tension[{c}] {} vs {}", case.name, t.tension[c], oracle[c]))?;
            }
            let (tt, hi) = case.conformality(&x);
            let lambda = tt[0][0] / hi[0][0];
            let conformal = (0..2).all(|a| (0..2).all(|b| (tt[a][b] - lambda * hi[a][b]).abs() <= 1e-10));
            let v = map.hwc_classify_at(&x, TOL).map_err(|e| format!("{}: {e}", case.name))?;
            if conformal {
                ensure(v.case == HwcCase::D, || format!("{}: case {:?}", case.name, v.case))?;
                let d = (v.lambda - lambda).abs();
                worst_lambda = worst_lambda.max(d);
                ensure(d <= 1e-10, || format!("{}: Λ {} vs {lambda}", case.name, v.lambda))?;
            } else {
                ensure(v.case == HwcCase::NotHwc, || format!("{}: case {:?}", case.name, v.case))?;
            }
        }
    }
    Ok(format!(
        "{} classical cases, max tension error {worst_tension:.1e}, max Λ error {worst_lambda:.1e}",
        cases.len()
    ))
}

fn radical_independence() -> Result<String, String> {
    let shifts = [0.37, -1.1, 2.5];
    let mut compared = 0;
    let mut worst = 0.0f64;
    for name in fixture_catalog() {
        let f = build_fixture(name).map_err(|e| e.to_string())?;
        for a in f.expectations() {
            let Some(map) = f.maps().get(&a.target) else { continue };
            let r = map.source().radical_rank();
            for x in a.all_points() {
                if !map.is_radical_preserving_at(&x, TOL).is_ok_and(|p| p.preserving) {
                    continue;
                }
                let base = map.point_verdict(&x, TOL).map_err(|e| format!("{name}: {e}"))?;
                for s in shifts {
                    let mut y = x.clone();
                    for c in y.iter_mut().take(r) {
                        *c += s;
                    }
                    let moved = map.point_verdict(&y, TOL).map_err(|e| format!("{name}: {e}"))?;
                    ensure(moved.case == base.case, || format!("{name}/{}: case changed at {x:?}", a.target))?;
                    let mut diffs = vec![(moved.lambda.unwrap() - base.lambda.unwrap()).abs()];
                    let (tb, tm) = (base.tension.as_ref().unwrap(), moved.tension.as_ref().unwrap());
                    diffs.extend(tb.iter().zip(tm).map(|(p, q)| (p - q).abs()));
                    let d = diffs.into_iter().fold(0.0, f64::max);
                    worst = worst.max(d);
                    ensure(d <= 1e-10, || format!("{name}/{}: results moved by {d:e} at {x:?}", a.target))?;
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("{compared} shifted comparisons over all fixtures, max deviation {worst:.1e}"))
}

fn harmorph(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_harmorph")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_contract() -> Result<String, String> {
    let fixtures_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for name in fixture_catalog() {
        let path = fixtures_dir.join(format!("{name}.manifest"));
        let (code, _) = harmorph(&["run", path.to_str().unwrap()]);
        ensure(code == 0, || format!("{name}.manifest exited {code}"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let falsified = dir.path().join("falsified.manifest");
    std::fs::write(
        &falsified,
        r#"{
  "manifolds": {
    "r3": {"dim": 3, "radical_rank": 1, "coords": ["x1", "x2", "x3"],
           "metric": [["0", "0", "0"], ["0", "-1", "0"], ["0", "0", "1"]]},
    "line": {"dim": 1, "radical_rank": 0, "coords": ["t"], "metric": [["1"]]}
  },
  "maps": {"square": {"source": "r3", "target": "line", "components": ["(x2)^2"]}},
  "analyses": [
    {"op": "tension", "target": "square", "points": [[0.0, 1.0, 2.0]], "expect": {"tension": ["0"]}}
  ]
}"#,
    )
    .map_err(|e| e.to_string())?;
    let (code, stdout) = harmorph(&["--format", "json", "run", falsified.to_str().unwrap()]);
    ensure(code == 1, || format!("falsified manifest exited {code}"))?;
    let report: serde_json::Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let tau = &report["analyses"][0]["result"]["points"][0]["tension"][0];
    ensure(report["analyses"][0]["status"] == "fail" && *tau == -2.0, || format!("fail record {report}"))?;

    let broken = dir.path().join("null.manifest");
    std::fs::write(
        &broken,
        r#"{"manifolds": {"n": {"dim": 2, "radical_rank": 2, "coords": ["a", "b"],
            "metric": [["0", "0"], ["0", "0"]]}}, "analyses": []}"#,
    )
    .map_err(|e| e.to_string())?;
    let (code, _) = harmorph(&["run", broken.to_str().unwrap()]);
    ensure(code == 2, || format!("null manifold exited {code}"))?;

    for name in fixture_catalog() {
        let path = fixtures_dir.join(format!("{name}.manifest"));
        let args = ["--format", "json", "run", path.to_str().unwrap()];
        let (first, second) = (harmorph(&args).1, harmorph(&args).1);
        ensure(!first.is_empty() && first == second, || format!("{name}: JSON reports differ"))?;
    }
    Ok("fixtures exit 0, falsified tension exits 1 (τ = -2), null manifold exits 2, JSON byte-identical".into())
}
