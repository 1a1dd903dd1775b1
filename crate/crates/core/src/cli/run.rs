use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::manifest::{Manifest, Op, Provenance, Resolved, ResolvedAnalysis, ScanOp, SchemaError};
use crate::exprjet::{eval_jet2, fd_oracle, Expression};
use crate::manifold::{ChartPatch, ManifoldError};
use crate::morphism::{MorphismError, SmoothMap};
use crate::DEFAULT_TOL;

/// Step used by `--fd-check`.
const FD_STEP: f64 = 1e-5;
/// Agreement required between jets and the finite-difference oracle.
const FD_TOL: f64 = 1e-6;
/// Failure messages kept per analysis; the rest are only counted.
const MAX_MESSAGES: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Overrides every analysis tol when set.
    pub tol: Option<f64>,
    pub fd_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub index: usize,
    pub op: Op,
    pub target: String,
    pub status: Status,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_discrepancy: Option<String>,
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub result: Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub analyses: Vec<AnalysisReport>,
    pub summary: Summary,
    pub exit_code: i32,
}

impl Report {
    /// Pretty JSON with a trailing newline. Floats use shortest round-trip form.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.analyses {
            let status = match a.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            out.push_str(&format!("{status:<5} [{}] {} {}", a.index, a.op.name(), a.target));
            if let Some(p) = a.provenance {
                out.push_str(&format!(" ({})", serde_json::to_value(p).unwrap().as_str().unwrap()));
            }
            out.push('\n');
            if let Some(line) = headline(a) {
                out.push_str(&format!("      {line}\n"));
            }
            for f in &a.failures {
                out.push_str(&format!("      fail: {f}\n"));
            }
            for e in &a.errors {
                out.push_str(&format!("      error: {e}\n"));
            }
        }
        out.push_str(&format!(
            "{} pass, {} fail, {} error\n",
            self.summary.pass, self.summary.fail, self.summary.error
        ));
        out
    }
}

/// Short human summary of an analysis payload.
fn headline(a: &AnalysisReport) -> Option<String> {
    let r = &a.result;
    match a.op {
        Op::Validate => r
            .get("signature")
            .filter(|s| !s.is_null())
            .map(|s| format!("signature ({},{},{})", s["r"], s["p"], s["q"])),
        Op::Stationary => r
            .get("max_radical_derivative")
            .map(|v| format!("max radical derivative {v}")),
        Op::Morphism => r.get("harmonic_morphism").map(|v| {
            format!("harmonic morphism: {v} over {} points", r["points"].as_array().map_or(0, Vec::len))
        }),
        Op::Classify | Op::Tension => {
            r.get("points").and_then(Value::as_array).map(|p| format!("{} points", p.len()))
        }
        Op::Scan => Some(format!(
            "{} rows, {} skipped",
            r["rows"].as_array().map_or(0, Vec::len),
            r["skipped"]
        )),
    }
}

/// Parses, validates and runs a manifest given as JSON text.
pub fn run_manifest_str(text: &str, options: &RunOptions) -> Result<Report, SchemaError> {
    let manifest = Manifest::from_json(text)?;
    run_manifest(&manifest, options)
}

pub fn run_manifest(manifest: &Manifest, options: &RunOptions) -> Result<Report, SchemaError> {
    let resolved = manifest.resolve()?;
    Ok(run_resolved(&resolved, options))
}

pub fn run_resolved(resolved: &Resolved, options: &RunOptions) -> Report {
    let analyses: Vec<AnalysisReport> = resolved
        .analyses
        .iter()
        .enumerate()
        .map(|(index, a)| run_analysis(index, a, resolved, options))
        .collect();
    let mut summary = Summary::default();
    for a in &analyses {
        match a.status {
            Status::Pass => summary.pass += 1,
            Status::Fail => summary.fail += 1,
            Status::Error => summary.error += 1,
        }
    }
    let exit_code = if summary.error > 0 {
        2
    } else if summary.fail > 0 {
        1
    } else {
        0
    };
    Report { analyses, summary, exit_code }
}

/// Collects failure and error messages for one analysis.
#[derive(Default)]
struct Outcome {
    failures: Vec<String>,
    failure_count: usize,
    errors: Vec<String>,
    error_count: usize,
}

impl Outcome {
    fn fail(&mut self, msg: String) {
        self.failure_count += 1;
        if self.failures.len() < MAX_MESSAGES {
            self.failures.push(msg);
        }
    }

    fn error(&mut self, msg: String) {
        self.error_count += 1;
        if self.errors.len() < MAX_MESSAGES {
            self.errors.push(msg);
        }
    }

    fn finish(mut self) -> (Status, Vec<String>, Vec<String>) {
        if self.failure_count > self.failures.len() {
            self.failures.push(format!("... {} more", self.failure_count - self.failures.len()));
        }
        if self.error_count > self.errors.len() {
            self.errors.push(format!("... {} more", self.error_count - self.errors.len()));
        }
        let status = if self.error_count > 0 {
            Status::Error
        } else if self.failure_count > 0 {
            Status::Fail
        } else {
            Status::Pass
        };
        (status, self.failures, self.errors)
    }
}

fn close(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol * (1.0 + expected.abs())
}

fn run_analysis(index: usize, a: &ResolvedAnalysis, resolved: &Resolved, options: &RunOptions) -> AnalysisReport {
    let spec = &a.spec;
    let tol = options.tol.or(spec.tol).unwrap_or(DEFAULT_TOL);
    let mut out = Outcome::default();
    let mut result = match spec.op {
        Op::Validate => validate(&resolved.manifolds[&spec.target], a, tol, &mut out),
        Op::Stationary => stationary(&resolved.manifolds[&spec.target], a, tol, &mut out),
        Op::Classify => classify(&resolved.maps[&spec.target], a, tol, &mut out),
        Op::Tension => tension(&resolved.maps[&spec.target], a, tol, &mut out),
        Op::Morphism => morphism(&resolved.maps[&spec.target], a, tol, &mut out),
        Op::Scan => scan(&resolved.maps[&spec.target], a, tol, &mut out),
    };
    if options.fd_check {
        let exprs: Vec<Expression> = if spec.op.targets_map() {
            resolved.maps[&spec.target].components().to_vec()
        } else {
            let patch = &resolved.manifolds[&spec.target];
            let m = patch.dim();
            (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).map(|(i, j)| patch.metric_entry(i, j).clone()).collect()
        };
        let deviation = fd_deviation(&exprs, &a.points);
        result["fd_check"] = json!({ "max_scaled_deviation": deviation, "ok": deviation <= FD_TOL });
        if deviation > FD_TOL {
            out.fail(format!("jets disagree with finite differences (scaled deviation {deviation:e})"));
        }
    }
    let (status, failures, errors) = out.finish();
    AnalysisReport {
        index,
        op: spec.op,
        target: spec.target.clone(),
        status,
        tol,
        provenance: spec.provenance,
        citation: spec.citation.clone(),
        note: spec.note.clone(),
        paper_discrepancy: spec.paper_discrepancy.clone(),
        failures,
        errors,
        result,
    }
}

/// Largest `|fd - jet| / (1 + |jet|)` over all entries, skipping points
/// where either evaluation fails.
fn fd_deviation(exprs: &[Expression], points: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for x in points {
        for e in exprs {
            let (Ok(jet), Ok(fd)) = (eval_jet2(e, x), fd_oracle(e, x, FD_STEP)) else {
                continue;
            };
            let mut dev = |a: f64, b: f64| worst = worst.max((a - b).abs() / (1.0 + b.abs()));
            dev(*fd.value(), *jet.value());
            for (f, j) in fd.grad().iter().zip(jet.grad()) {
                dev(*f, *j);
            }
            for (f, j) in fd.hess_packed().iter().zip(jet.hess_packed()) {
                dev(*f, *j);
            }
        }
    }
    worst
}

fn validate(patch: &ChartPatch, a: &ResolvedAnalysis, tol: f64, out: &mut Outcome) -> Value {
    match patch.validate_radical_chart(&a.points, tol) {
        Ok(v) => {
            let expect = a.spec.expect.clone().unwrap_or_default();
            let want = expect.pass.unwrap_or(true);
            if v.passed != want {
                out.fail(format!(
                    "validation passed = {}, expected {want}{}",
                    v.passed,
                    v.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default()
                ));
            }
            if let Some([r, p, q]) = expect.signature {
                let got = v.signature.map(|s| [s.r, s.p, s.q]);
                if got != Some([r, p, q]) {
                    out.fail(format!("signature {got:?}, expected ({r},{p},{q})"));
                }
            }
            serde_json::to_value(v).expect("serializable")
        }
        Err(e) => {
            out.error(e.to_string());
            Value::Null
        }
    }
}

fn stationary(patch: &ChartPatch, a: &ResolvedAnalysis, tol: f64, out: &mut Outcome) -> Value {
    match patch.is_stationary(&a.points, tol) {
        Ok(v) => {
            let want = a.spec.expect.as_ref().and_then(|e| e.pass).unwrap_or(true);
            if v.passed != want {
                out.fail(format!(
                    "stationary = {}, expected {want} (max radical derivative {:e})",
                    v.passed, v.max_radical_derivative
                ));
            }
            serde_json::to_value(v).expect("serializable")
        }
        Err(e) => {
            out.error(e.to_string());
            Value::Null
        }
    }
}

fn classify(map: &SmoothMap, a: &ResolvedAnalysis, tol: f64, out: &mut Outcome) -> Value {
    let expect = a.spec.expect.clone().unwrap_or_default();
    let check_tol = expect.tolerance.unwrap_or(tol);
    let rows: Vec<Value> = a
        .points
        .iter()
        .map(|x| {
            let rp = match map.is_radical_preserving_at(x, tol) {
                Ok(rp) => rp,
                Err(e) => {
                    out.error(format!("at {x:?}: {e}"));
                    return json!({ "point": x, "error": e.to_string() });
                }
            };
            if let Some(want) = expect.radical_preserving {
                if rp.preserving != want {
                    out.fail(format!(
                        "at {x:?}: radical preserving = {}, expected {want} (worst {:e})",
                        rp.preserving, rp.worst
                    ));
                }
            }
            let mut row = json!({ "point": x, "radical_preserving": rp });
            if !rp.preserving {
                if expect.radical_preserving != Some(false) {
                    out.error(format!("at {x:?}: map is not radical-preserving"));
                }
                return row;
            }
            match map.hwc_classify_at(x, tol) {
                Ok(v) => {
                    if let Some(want) = expect.case {
                        if v.case != want {
                            out.fail(format!("at {x:?}: case {}, expected {}", v.case.tag(), want.tag()));
                        }
                    }
                    check_lambda(a, x, v.lambda, check_tol, out);
                    if let Some(limit) = expect.max_fit_residual {
                        if v.fit_residual > limit {
                            out.fail(format!("at {x:?}: fit residual {:e} exceeds {limit:e}", v.fit_residual));
                        }
                    }
                    row["verdict"] = serde_json::to_value(v).expect("serializable");
                }
                Err(e) => {
                    out.error(format!("at {x:?}: {e}"));
                    row["error"] = json!(e.to_string());
                }
            }
            row
        })
        .collect();
    json!({ "points": rows })
}

fn check_lambda(a: &ResolvedAnalysis, x: &[f64], lambda: f64, tol: f64, out: &mut Outcome) {
    let Some(expr) = &a.lambda else { return };
    match expr.value(x) {
        Ok(want) if close(lambda, want, tol) => {}
        Ok(want) => out.fail(format!("at {x:?}: lambda {lambda:?}, expected {want:?}")),
        Err(e) => out.error(format!("at {x:?}: expected lambda: {e}")),
    }
}

fn check_tension(a: &ResolvedAnalysis, x: &[f64], tension: &[f64], tol: f64, out: &mut Outcome) {
    let Some(exprs) = &a.tension else { return };
    for (k, (expr, &got)) in exprs.iter().zip(tension).enumerate() {
        match expr.value(x) {
            Ok(want) if close(got, want, tol) => {}
            Ok(want) => out.fail(format!("at {x:?}: tension[{k}] = {got:?}, expected {want:?}")),
            Err(e) => out.error(format!("at {x:?}: expected tension[{k}]: {e}")),
        }
    }
}

fn tension(map: &SmoothMap, a: &ResolvedAnalysis, tol: f64, out: &mut Outcome) -> Value {
    let expect = a.spec.expect.clone().unwrap_or_default();
    let check_tol = expect.tolerance.unwrap_or(tol);
    let rows: Vec<Value> = a
        .points
        .iter()
        .map(|x| match map.is_harmonic_at(x, tol) {
            Ok((t, harmonic)) => {
                if let Some(want) = expect.harmonic {
                    if harmonic != want {
                        out.fail(format!("at {x:?}: harmonic = {harmonic}, tension {:?}", t.tension));
                    }
                }
                check_tension(a, x, &t.tension, check_tol, out);
                json!({ "point": x, "tension": t.tension, "norm": t.norm, "harmonic": harmonic })
            }
            Err(e) => {
                out.error(format!("at {x:?}: {e}"));
                json!({ "point": x, "error": e.to_string() })
            }
        })
        .collect();
    json!({ "points": rows })
}

fn morphism(map: &SmoothMap, a: &ResolvedAnalysis, tol: f64, out: &mut Outcome) -> Value {
    let report = map.morphism_verdict(&a.points, tol);
    for p in &report.points {
        if let Some(e) = &p.error {
            out.error(format!("at {:?}: {e}", p.point));
        }
    }
    let want = a.spec.expect.as_ref().and_then(|e| e.harmonic_morphism).unwrap_or(true);
    if report.errors == 0 && report.harmonic_morphism != want {
        out.fail(format!(
            "harmonic morphism = {}, expected {want} (all harmonic {}, all HWC {})",
            report.harmonic_morphism, report.all_harmonic, report.all_hwc
        ));
    }
    serde_json::to_value(report).expect("serializable")
}

/// Whether an error only says the point lies outside a domain.
fn is_inadmissible(e: &MorphismError) -> bool {
    matches!(
        e,
        MorphismError::Source(ManifoldError::InadmissiblePoint { .. })
            | MorphismError::Target { source: ManifoldError::InadmissiblePoint { .. }, .. }
    )
}

enum Row {
    Skipped(Vec<f64>),
    Done(Value, Vec<String>),
    Failed(Value, String),
}

fn scan(map: &SmoothMap, a: &ResolvedAnalysis, tol: f64, out: &mut Outcome) -> Value {
    let expect = a.spec.expect.clone().unwrap_or_default();
    let check_tol = expect.tolerance.unwrap_or(tol);
    let op = a.spec.scan_op.unwrap_or_default();
    let rows: Vec<Row> = a
        .points
        .par_iter()
        .map(|x| {
            let computed = match op {
                ScanOp::Classify => map.hwc_classify_at(x, tol).map(|v| {
                    json!({ "point": x, "case": v.case, "lambda": v.lambda, "fit_residual": v.fit_residual })
                }),
                ScanOp::Tension => map.is_harmonic_at(x, tol).map(|(t, harmonic)| {
                    json!({ "point": x, "tension": t.tension, "tension_norm": t.norm, "harmonic": harmonic })
                }),
                ScanOp::Morphism => map.point_verdict(x, tol).map(|v| serde_json::to_value(v).expect("serializable")),
            };
            match computed {
                Ok(row) => {
                    let mut local = Outcome::default();
                    if let (Some(want), Some(got)) = (expect.case, row.get("case")) {
                        if *got != json!(want) {
                            local.fail(format!("at {x:?}: case {got}, expected {}", want.tag()));
                        }
                    }
                    if let Some(l) = row.get("lambda").and_then(Value::as_f64) {
                        check_lambda(a, x, l, check_tol, &mut local);
                    }
                    if let (Some(limit), Some(r)) =
                        (expect.max_fit_residual, row.get("fit_residual").and_then(Value::as_f64))
                    {
                        if r > limit {
                            local.fail(format!("at {x:?}: fit residual {r:e} exceeds {limit:e}"));
                        }
                    }
                    if let (Some(want), Some(got)) = (expect.harmonic, row.get("harmonic").and_then(Value::as_bool)) {
                        if got != want {
                            local.fail(format!("at {x:?}: harmonic = {got}, expected {want}"));
                        }
                    }
                    let mut msgs = local.failures;
                    msgs.extend(local.errors.into_iter().map(|e| format!("error: {e}")));
                    Row::Done(row, msgs)
                }
                Err(e) if is_inadmissible(&e) => Row::Skipped(x.clone()),
                Err(e) => Row::Failed(json!({ "point": x, "error": e.to_string() }), format!("at {x:?}: {e}")),
            }
        })
        .collect();
    let mut table = Vec::new();
    let mut skipped = Vec::new();
    for row in rows {
        match row {
            Row::Skipped(x) => skipped.push(x),
            Row::Done(v, msgs) => {
                for m in msgs {
                    match m.strip_prefix("error: ") {
                        Some(e) => out.error(e.to_string()),
                        None => out.fail(m),
                    }
                }
                table.push(v);
            }
            Row::Failed(v, msg) => {
                out.error(msg);
                table.push(v);
            }
        }
    }
    json!({
        "scan_op": op,
        "rows": table,
        "skipped": skipped.len(),
        "skipped_points": skipped,
    })
}
