use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exprjet::{self, Expression};
use crate::manifold::ChartPatch;
use crate::morphism::{HwcCase, SmoothMap};

/// A manifest problem, located by a JSON-pointer-like path.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("schema error at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub manifolds: BTreeMap<String, ManifoldSpec>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapSpec>,
    pub analyses: Vec<Analysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub dim: usize,
    pub radical_rank: usize,
    pub coords: Vec<String>,
    pub metric: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "DomainSpec::is_empty")]
    pub domain: DomainSpec,
}

/// One predicate or a list of predicates, each required to be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    One(String),
    All(Vec<String>),
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::All(Vec::new())
    }
}

impl DomainSpec {
    pub fn predicates(&self) -> Vec<String> {
        match self {
            DomainSpec::One(s) => vec![s.clone()],
            DomainSpec::All(v) => v.clone(),
        }
    }

    fn is_empty(&self) -> bool {
        matches!(self, DomainSpec::All(v) if v.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub source: String,
    pub target: String,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Validate,
    Stationary,
    Classify,
    Tension,
    Morphism,
    Scan,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Validate => "validate",
            Op::Stationary => "stationary",
            Op::Classify => "classify",
            Op::Tension => "tension",
            Op::Morphism => "morphism",
            Op::Scan => "scan",
        }
    }

    /// Whether the analysis target names a map rather than a manifold.
    pub fn targets_map(self) -> bool {
        !matches!(self, Op::Validate | Op::Stationary)
    }
}

/// What a scan computes per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOp {
    #[default]
    Classify,
    Tension,
    Morphism,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Paper,
    Trivial,
    Derived,
}

/// Regular grid; the first coordinate varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn points(&self) -> Vec<Vec<f64>> {
        let total: usize = self.counts.iter().product();
        (0..total)
            .map(|mut flat| {
                let mut idx = vec![0; self.counts.len()];
                for k in (0..self.counts.len()).rev() {
                    idx[k] = flat % self.counts[k];
                    flat /= self.counts[k];
                }
                idx.iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        if self.counts[k] == 1 {
                            self.mins[k]
                        } else {
                            let t = i as f64 / (self.counts[k] - 1) as f64;
                            self.mins[k] + t * (self.maxs[k] - self.mins[k])
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Expected outcomes. Every field is optional; only those present are checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radical_preserving: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<HwcCase>,
    /// Expression in the source coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fit_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<bool>,
    /// One expression per target screen coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tension: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic_morphism: Option<bool>,
    /// Relative tolerance for `lambda` and `tension`; defaults to the analysis tol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    pub op: Op,
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_op: Option<ScanOp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_discrepancy: Option<String>,
}

impl Analysis {
    pub fn new(op: Op, target: &str) -> Self {
        Analysis {
            op,
            target: target.to_string(),
            points: Vec::new(),
            grid: None,
            scan_op: None,
            tol: None,
            expect: None,
            provenance: None,
            citation: None,
            note: None,
            paper_discrepancy: None,
        }
    }

    /// Explicit points followed by grid points.
    pub fn all_points(&self) -> Vec<Vec<f64>> {
        let mut pts = self.points.clone();
        if let Some(g) = &self.grid {
            pts.extend(g.points());
        }
        pts
    }
}

/// A manifest with every name resolved and every expression parsed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub manifolds: BTreeMap<String, ChartPatch>,
    pub maps: BTreeMap<String, SmoothMap>,
    pub analyses: Vec<ResolvedAnalysis>,
}

#[derive(Debug, Clone)]
pub struct ResolvedAnalysis {
    pub spec: Analysis,
    pub points: Vec<Vec<f64>>,
    pub lambda: Option<Expression>,
    pub tension: Option<Vec<Expression>>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().to_string();
            SchemaError::new(if path == "." { "/".to_string() } else { path }, message)
        })
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn resolve(&self) -> Result<Resolved, SchemaError> {
        let mut manifolds = BTreeMap::new();
        for (name, spec) in &self.manifolds {
            let at = format!("manifolds.{name}");
            manifolds.insert(name.clone(), spec.build(&at)?);
        }
        let mut maps = BTreeMap::new();
        for (name, spec) in &self.maps {
            let at = format!("maps.{name}");
            let lookup = |which: &str, key: &str| {
                manifolds.get(key).cloned().ok_or_else(|| {
                    SchemaError::new(format!("{at}.{which}"), format!("unknown manifold '{key}'"))
                })
            };
            let source = lookup("source", &spec.source)?;
            let target = lookup("target", &spec.target)?;
            let map = SmoothMap::new(source, target, &spec.components)
                .map_err(|e| SchemaError::new(format!("{at}.components"), e.to_string()))?;
            maps.insert(name.clone(), map);
        }
        let analyses = self
            .analyses
            .iter()
            .enumerate()
            .map(|(i, a)| resolve_analysis(a, &format!("analyses[{i}]"), &manifolds, &maps))
            .collect::<Result<_, _>>()?;
        Ok(Resolved { manifolds, maps, analyses })
    }
}

impl ManifoldSpec {
    pub fn build(&self, at: &str) -> Result<ChartPatch, SchemaError> {
        if self.coords.len() != self.dim {
            return Err(SchemaError::new(
                format!("{at}.coords"),
                format!("expected {} coordinates, found {}", self.dim, self.coords.len()),
            ));
        }
        ChartPatch::new(&self.coords, self.radical_rank, &self.metric, &self.domain.predicates())
            .map_err(|e| SchemaError::new(at, e.to_string()))
    }
}

fn resolve_analysis(
    a: &Analysis,
    at: &str,
    manifolds: &BTreeMap<String, ChartPatch>,
    maps: &BTreeMap<String, SmoothMap>,
) -> Result<ResolvedAnalysis, SchemaError> {
    let (dim, source_coords, target_screen) = if a.op.targets_map() {
        let map = maps.get(&a.target).ok_or_else(|| {
            SchemaError::new(format!("{at}.target"), format!("unknown map '{}'", a.target))
        })?;
        (map.source().dim(), map.source().coords().to_vec(), map.target().screen_dim())
    } else {
        let patch = manifolds.get(&a.target).ok_or_else(|| {
            SchemaError::new(format!("{at}.target"), format!("unknown manifold '{}'", a.target))
        })?;
        (patch.dim(), patch.coords().to_vec(), 0)
    };
    if let Some(tol) = a.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(SchemaError::new(format!("{at}.tol"), "tol must be positive and finite"));
        }
    }
    for (i, p) in a.points.iter().enumerate() {
        if p.len() != dim {
            return Err(SchemaError::new(
                format!("{at}.points[{i}]"),
                format!("expected {dim} coordinates, found {}", p.len()),
            ));
        }
    }
    if let Some(g) = &a.grid {
        if g.mins.len() != dim || g.maxs.len() != dim || g.counts.len() != dim {
            return Err(SchemaError::new(
                format!("{at}.grid"),
                format!("mins, maxs and counts must each have {dim} entries"),
            ));
        }
        if g.counts.iter().any(|&c| c == 0) {
            return Err(SchemaError::new(format!("{at}.grid.counts"), "counts must be at least 1"));
        }
    } else if a.op == Op::Scan {
        return Err(SchemaError::new(format!("{at}.grid"), "scan requires a grid"));
    }
    if a.scan_op.is_some() && a.op != Op::Scan {
        return Err(SchemaError::new(format!("{at}.scan_op"), "only valid for op 'scan'"));
    }
    let points = a.all_points();
    if points.is_empty() {
        return Err(SchemaError::new(format!("{at}.points"), "no points to analyse"));
    }
    let mut lambda = None;
    let mut tension = None;
    if let Some(e) = &a.expect {
        if let Some(text) = &e.lambda {
            lambda = Some(exprjet::parse(text, &source_coords).map_err(|err| {
                SchemaError::new(format!("{at}.expect.lambda"), err.to_string())
            })?);
        }
        if let Some(list) = &e.tension {
            if list.len() != target_screen {
                return Err(SchemaError::new(
                    format!("{at}.expect.tension"),
                    format!("expected {target_screen} components, found {}", list.len()),
                ));
            }
            let parsed = list
                .iter()
                .enumerate()
                .map(|(k, text)| {
                    exprjet::parse(text, &source_coords).map_err(|err| {
                        SchemaError::new(format!("{at}.expect.tension[{k}]"), err.to_string())
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            tension = Some(parsed);
        }
        if let Some(t) = e.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(SchemaError::new(
                    format!("{at}.expect.tolerance"),
                    "tolerance must be positive and finite",
                ));
            }
        }
        let allowed: &[&str] = match a.op {
            Op::Validate => &["pass", "signature"],
            Op::Stationary => &["pass"],
            Op::Classify => &["radical_preserving", "case", "lambda", "max_fit_residual"],
            Op::Tension => &["harmonic", "tension"],
            Op::Morphism => &["harmonic_morphism"],
            Op::Scan => &["case", "lambda", "max_fit_residual", "harmonic"],
        };
        for key in e.present_keys() {
            if key != "tolerance" && !allowed.contains(&key) {
                return Err(SchemaError::new(
                    format!("{at}.expect.{key}"),
                    format!("not applicable to op '{}'", a.op.name()),
                ));
            }
        }
    }
    Ok(ResolvedAnalysis { spec: a.clone(), points, lambda, tension })
}

impl Expect {
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut push = |present: bool, key| {
            if present {
                keys.push(key)
            }
        };
        push(self.pass.is_some(), "pass");
        push(self.signature.is_some(), "signature");
        push(self.radical_preserving.is_some(), "radical_preserving");
        push(self.case.is_some(), "case");
        push(self.lambda.is_some(), "lambda");
        push(self.max_fit_residual.is_some(), "max_fit_residual");
        push(self.harmonic.is_some(), "harmonic");
        push(self.tension.is_some(), "tension");
        push(self.harmonic_morphism.is_some(), "harmonic_morphism");
        push(self.tolerance.is_some(), "tolerance");
        keys
    }
}
