//! Worked examples and classifier probes, each bundled with expectations.
//!
//! A fixture is a [`Manifest`] plus its resolved charts and maps, so the same
//! data drives the library tests, the CLI and the exported `.manifest` files.
//!
//! The radial projection is the map `x -> x / |x|` from the positive cone of
//! `R^3` with metric `-(dx2)^2 + (dx3)^2` onto the degenerate pseudo-sphere
//! `-(x2)^2 + (x3)^2 = 1`. It is encoded in the sphere chart
//! `(t, u) -> (t, sinh u, cosh u)`, whose induced metric is `-du^2`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cli::{Analysis, DomainSpec, Expect, Grid, Manifest, ManifoldSpec, MapSpec, Op, Provenance, Resolved};
use crate::manifold::ChartPatch;
use crate::morphism::{HwcCase, SmoothMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown fixture '{0}'")]
pub struct UnknownFixture(pub String);

const CATALOG: [&str; 4] = ["wave_morphism", "anti_orthogonal_mult", "radial_projection", "case_probes"];

pub fn fixture_catalog() -> Vec<&'static str> {
    CATALOG.to_vec()
}

pub fn build_fixture(name: &str) -> Result<Fixture, UnknownFixture> {
    let (description, manifest) = match name {
        "wave_morphism" => wave_morphism(),
        "anti_orthogonal_mult" => anti_orthogonal_mult(),
        "radial_projection" => radial_projection(),
        "case_probes" => case_probes(),
        _ => return Err(UnknownFixture(name.to_string())),
    };
    let resolved = manifest.resolve().unwrap_or_else(|e| panic!("fixture {name} is malformed: {e}"));
    Ok(Fixture { name: name.to_string(), description, manifest, resolved })
}

#[derive(Debug, Clone)]
pub struct Fixture {
    name: String,
    description: String,
    manifest: Manifest,
    resolved: Resolved,
}

impl Fixture {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn resolved(&self) -> &Resolved {
        &self.resolved
    }

    pub fn patches(&self) -> &BTreeMap<String, ChartPatch> {
        &self.resolved.manifolds
    }

    pub fn patch(&self, name: &str) -> &ChartPatch {
        &self.resolved.manifolds[name]
    }

    pub fn maps(&self) -> &BTreeMap<String, SmoothMap> {
        &self.resolved.maps
    }

    pub fn map(&self, name: &str) -> &SmoothMap {
        &self.resolved.maps[name]
    }

    pub fn expectations(&self) -> &[Analysis] {
        &self.manifest.analyses
    }

    /// Printed values that disagree with the computed ones, if any.
    pub fn paper_discrepancy(&self) -> Option<&str> {
        self.manifest.analyses.iter().find_map(|a| a.paper_discrepancy.as_deref())
    }
}

fn chart(coords: &[&str], radical_rank: usize, diagonal: &[&str], domain: &[&str]) -> ManifoldSpec {
    let n = coords.len();
    let metric = (0..n)
        .map(|i| (0..n).map(|j| if i == j { diagonal[i].to_string() } else { "0".to_string() }).collect())
        .collect();
    ManifoldSpec {
        dim: n,
        radical_rank,
        coords: coords.iter().map(|c| c.to_string()).collect(),
        metric,
        domain: match domain {
            [] => DomainSpec::default(),
            [one] => DomainSpec::One(one.to_string()),
            many => DomainSpec::All(many.iter().map(|s| s.to_string()).collect()),
        },
    }
}

fn map(source: &str, target: &str, components: &[&str]) -> MapSpec {
    MapSpec {
        source: source.to_string(),
        target: target.to_string(),
        components: components.iter().map(|c| c.to_string()).collect(),
    }
}

/// Builder sugar over [`Analysis`].
struct A(Analysis);

impl A {
    fn new(op: Op, target: &str, provenance: Provenance) -> Self {
        let mut a = Analysis::new(op, target);
        a.provenance = Some(provenance);
        A(a)
    }

    fn paper(op: Op, target: &str, citation: &str) -> Self {
        let mut a = A::new(op, target, Provenance::Paper);
        a.0.citation = Some(citation.to_string());
        a
    }

    fn points(mut self, points: &[&[f64]]) -> Self {
        self.0.points = points.iter().map(|p| p.to_vec()).collect();
        self
    }

    fn grid(mut self, grid: &Grid) -> Self {
        self.0.grid = Some(grid.clone());
        self
    }

    fn expect(mut self, f: impl FnOnce(&mut Expect)) -> Self {
        let mut e = self.0.expect.take().unwrap_or_default();
        f(&mut e);
        self.0.expect = Some(e);
        self
    }

    fn note(mut self, note: &str) -> Self {
        self.0.note = Some(note.to_string());
        self
    }

    fn done(self) -> Analysis {
        self.0
    }
}

fn names<T>(items: Vec<(&str, T)>) -> BTreeMap<String, T> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

const EXAMPLE_1: &str = "Example 1 (wave maps on R^3_{1,1,1})";
const EXAMPLE_2: &str = "Example 2 (anti-orthogonal multiplication)";
const EXAMPLE_3: &str = "Example 3 (radial projection)";
const DILATION_FORMULA: &str = "HWC criterion in radical coordinates (Lambda = -phi_2^2 + phi_3^2)";

fn wave_morphism() -> (String, Manifest) {
    let manifolds = names(vec![
        ("r3", chart(&["x1", "x2", "x3"], 1, &["0", "-1", "1"], &["(x2-x3)^2"])),
        ("line", chart(&["t"], 0, &["1"], &[])),
    ]);
    let maps = names(vec![
        ("wave", map("r3", "line", &["(x2+x3)^3 + sin(x2-x3)"])),
        ("null_projection", map("r3", "line", &["x2+x3"])),
        ("timelike_coordinate", map("r3", "line", &["x2"])),
        ("radical_dependent", map("r3", "line", &["x2 + (x1)^2"])),
    ]);
    // x3 steps avoid the excluded null lines x2 = x3.
    let grid = Grid { mins: vec![0.5, -1.5, 0.15], maxs: vec![0.5, 1.5, 1.95], counts: vec![1, 7, 7] };
    let scan_grid = Grid { mins: vec![0.0, -1.0, -1.0], maxs: vec![0.0, 1.0, 1.0], counts: vec![1, 5, 5] };
    let samples: &[&[f64]] = &[&[0.0, 0.3, 1.1], &[2.0, -0.7, 0.4], &[-1.0, 1.2, -0.5]];
    let analyses = vec![
        A::paper(Op::Validate, "r3", EXAMPLE_1).grid(&grid).expect(|e| e.signature = Some([1, 1, 1])).done(),
        A::new(Op::Stationary, "r3", Provenance::Trivial).grid(&grid).done(),
        A::new(Op::Validate, "line", Provenance::Trivial)
            .points(&[&[0.0], &[1.0]])
            .expect(|e| e.signature = Some([0, 0, 1]))
            .done(),
        A::paper(Op::Tension, "wave", EXAMPLE_1)
            .grid(&grid)
            .expect(|e| {
                e.harmonic = Some(true);
                e.tension = Some(vec!["0".into()]);
            })
            .note("mu(x2+x3) + nu(x2-x3) with mu = s^3, nu = sin")
            .done(),
        A::paper(Op::Classify, "wave", DILATION_FORMULA)
            .grid(&grid)
            .expect(|e| {
                e.radical_preserving = Some(true);
                e.lambda = Some("-(3*(x2+x3)^2 + cos(x2-x3))^2 + (3*(x2+x3)^2 - cos(x2-x3))^2".into());
            })
            .done(),
        A::paper(Op::Morphism, "wave", EXAMPLE_1).grid(&grid).expect(|e| e.harmonic_morphism = Some(true)).done(),
        A::new(Op::Classify, "null_projection", Provenance::Derived)
            .points(samples)
            .expect(|e| e.case = Some(HwcCase::C))
            .note("the gradient (1,1) is null, so the horizontal space lies in the null cone")
            .done(),
        A::paper(Op::Classify, "timelike_coordinate", EXAMPLE_1)
            .points(samples)
            .expect(|e| {
                e.case = Some(HwcCase::D);
                e.lambda = Some("-1".into());
            })
            .done(),
        A::new(Op::Scan, "null_projection", Provenance::Derived)
            .grid(&scan_grid)
            .expect(|e| e.case = Some(HwcCase::C))
            .note("grid points with x2 = x3 fall outside the domain and are skipped")
            .done(),
        A::new(Op::Classify, "radical_dependent", Provenance::Trivial)
            .points(&[&[1.0, 0.3, 1.1], &[-0.5, -0.7, 0.4]])
            .expect(|e| e.radical_preserving = Some(false))
            .note("depends on the radical coordinate, so the radical is not mapped to the target radical")
            .done(),
    ];
    let description = "Wave-type maps from R^3_{1,1,1} to the line; sums of functions of x2+x3 and x2-x3 are harmonic morphisms.";
    (description.to_string(), Manifest { manifolds, maps, analyses })
}

/// Ten fixed sample points in the order (x1, y1, x2, x3, y2, y3).
const PRODUCT_SAMPLES: [[f64; 6]; 10] = [
    [0.0, 0.0, 0.0, 1.0, 0.0, 1.0],
    [0.3, -0.7, 0.2, 1.1, -0.4, 0.9],
    [1.5, 0.2, -0.8, 0.3, 0.6, 1.7],
    [-0.4, 2.0, 1.3, -0.2, 0.5, 0.1],
    [0.9, 0.9, -1.1, 1.9, 1.2, -0.6],
    [-2.0, 0.1, 0.7, 0.7, -1.4, 0.3],
    [0.0, -1.3, 2.1, -1.5, 0.2, 0.8],
    [1.1, 1.7, -0.3, -0.9, -0.7, 1.6],
    [-0.6, -0.2, 0.4, 1.4, 1.8, -0.5],
    [0.25, 0.5, -1.6, 0.9, -0.1, -1.2],
];

fn anti_orthogonal_mult() -> (String, Manifest) {
    let manifolds = names(vec![
        ("r6", chart(&["x1", "y1", "x2", "x3", "y2", "y3"], 2, &["0", "0", "-1", "1", "-1", "1"], &[])),
        ("r3", chart(&["z1", "z2", "z3"], 1, &["0", "-1", "1"], &[])),
    ]);
    let maps = names(vec![("product", map("r6", "r3", &["0", "x2*y2+x3*y3", "x2*y3+x3*y2"]))]);
    let points: Vec<&[f64]> = PRODUCT_SAMPLES.iter().map(|p| p.as_slice()).collect();
    let analyses = vec![
        A::paper(Op::Validate, "r6", EXAMPLE_2).points(&points).expect(|e| e.signature = Some([2, 2, 2])).done(),
        A::new(Op::Stationary, "r6", Provenance::Trivial).points(&points).done(),
        A::paper(Op::Validate, "r3", EXAMPLE_2)
            .points(&[&[0.0, 1.0, 2.0], &[1.0, -1.0, 0.5]])
            .expect(|e| e.signature = Some([1, 1, 1]))
            .done(),
        A::paper(Op::Classify, "product", EXAMPLE_2)
            .points(&points)
            .expect(|e| {
                e.radical_preserving = Some(true);
                e.case = Some(HwcCase::D);
                e.lambda = Some("-((x3)^2-(x2)^2+(y3)^2-(y2)^2)".into());
            })
            .done(),
        A::paper(Op::Tension, "product", EXAMPLE_2)
            .points(&points)
            .expect(|e| {
                e.harmonic = Some(true);
                e.tension = Some(vec!["0".into(), "0".into()]);
            })
            .done(),
        A::paper(Op::Morphism, "product", EXAMPLE_2)
            .points(&points)
            .expect(|e| e.harmonic_morphism = Some(true))
            .done(),
    ];
    let description =
        "Anti-orthogonal multiplication (x, y) -> x*y from R^6_{2,2,2} to R^3_{1,1,1}, written in components.";
    (description.to_string(), Manifest { manifolds, maps, analyses })
}

const RADIAL_PRINTED_LAMBDA: &str = "\\Lambda (x)=(\\phi ^{2}_{2})^{2}-(\\phi ^{2}_{3})^{2}=\\frac{1}{(x^{3})^{2}} \\left( 1-\\left( \\frac{x^{2}}{\\Arrowvert x \\Arrowvert} \\right) ^{2} \\right) ^{\\! 2}-\\frac{1}{(x^{2})^{2}} \\left( 1-\\left( \\frac{x^{3}}{\\Arrowvert x \\Arrowvert} \\right) ^{2} \\right) ^{\\! 2}; for x^{2}=0: \\Lambda (x)=0, case (b)";

fn radial_projection() -> (String, Manifest) {
    let manifolds = names(vec![
        ("r3_plus", chart(&["x1", "x2", "x3"], 1, &["0", "-1", "1"], &["(x3)^2-(x2)^2", "x3"])),
        ("pseudo_sphere", chart(&["t", "u"], 1, &["0", "-1"], &[])),
    ]);
    let maps = names(vec![(
        "projection",
        map(
            "r3_plus",
            "pseudo_sphere",
            &["x1/sqrt((x3)^2-(x2)^2)", "asinh(x2/sqrt((x3)^2-(x2)^2))"],
        ),
    )]);
    let grid = Grid { mins: vec![0.7, -0.5, 1.2], maxs: vec![0.7, 0.5, 2.0], counts: vec![1, 5, 5] };
    let dilation = "1/((x3)^2-(x2)^2)";
    let analyses = vec![
        A::new(Op::Validate, "r3_plus", Provenance::Trivial).grid(&grid).expect(|e| e.signature = Some([1, 1, 1])).done(),
        A::new(Op::Stationary, "r3_plus", Provenance::Trivial).grid(&grid).done(),
        A::new(Op::Validate, "pseudo_sphere", Provenance::Derived)
            .points(&[&[0.0, 0.0], &[1.0, 0.5]])
            .expect(|e| e.signature = Some([1, 1, 0]))
            .note("(t, sinh u, cosh u) pulls the ambient metric back to -du^2")
            .done(),
        A::paper(Op::Tension, "projection", EXAMPLE_3)
            .grid(&grid)
            .expect(|e| {
                e.harmonic = Some(true);
                e.tension = Some(vec!["0".into()]);
            })
            .done(),
        {
            let mut a = A::new(Op::Classify, "projection", Provenance::Derived)
                .grid(&grid)
                .expect(|e| {
                    e.radical_preserving = Some(true);
                    e.case = Some(HwcCase::D);
                    e.lambda = Some(dilation.into());
                    e.max_fit_residual = Some(1e-9);
                })
                .note("u_2 = x3/|x|^2 and u_3 = -x2/|x|^2, so the dilation is 1/|x|^2 and positive on the whole domain")
                .done();
            a.paper_discrepancy = Some(RADIAL_PRINTED_LAMBDA.to_string());
            a
        },
        A::new(Op::Scan, "projection", Provenance::Derived)
            .grid(&grid)
            .expect(|e| {
                e.lambda = Some(dilation.into());
                e.max_fit_residual = Some(1e-9);
            })
            .done(),
        A::paper(Op::Morphism, "projection", EXAMPLE_3).grid(&grid).expect(|e| e.harmonic_morphism = Some(true)).done(),
    ];
    let description = "Radial projection from the positive cone of R^3_{1,1,1} onto the degenerate pseudo-sphere.";
    (description.to_string(), Manifest { manifolds, maps, analyses })
}

fn case_probes() -> (String, Manifest) {
    let manifolds = names(vec![
        ("r3", chart(&["x1", "x2", "x3"], 1, &["0", "-1", "1"], &[])),
        ("line", chart(&["t"], 0, &["1"], &[])),
    ]);
    let maps = names(vec![
        ("constant", map("r3", "line", &["3"])),
        ("into_radical", map("r3", "r3", &["x2", "0", "0"])),
        ("null_projection", map("r3", "line", &["x2+x3"])),
        ("timelike_coordinate", map("r3", "line", &["x2"])),
    ]);
    let points: &[&[f64]] = &[&[0.0, 0.0, 0.0], &[1.0, 0.5, -2.0], &[-0.3, 1.7, 0.4]];
    let probe = |target: &str, case: HwcCase, provenance: Provenance| {
        A::new(Op::Classify, target, provenance).points(points).expect(|e| e.case = Some(case))
    };
    let analyses = vec![
        probe("constant", HwcCase::A, Provenance::Trivial).note("zero differential").done(),
        probe("into_radical", HwcCase::B, Provenance::Trivial).note("image lies in the target radical").done(),
        probe("null_projection", HwcCase::C, Provenance::Derived).note("null horizontal space").done(),
        {
            let mut a = probe("timelike_coordinate", HwcCase::D, Provenance::Paper).done();
            a.citation = Some(EXAMPLE_1.to_string());
            a
        },
    ];
    let description = "One map per conformality case (a) to (d) on R^3_{1,1,1}.";
    (description.to_string(), Manifest { manifolds, maps, analyses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::{run_resolved, RunOptions, Status};

    #[test]
    fn catalog_is_fixed_and_loadable() {
        assert_eq!(fixture_catalog(), ["wave_morphism", "anti_orthogonal_mult", "radial_projection", "case_probes"]);
        assert_eq!(fixture_catalog(), fixture_catalog());
        for name in fixture_catalog() {
            assert_eq!(build_fixture(name).unwrap().name(), name);
        }
        assert_eq!(build_fixture("bogus").unwrap_err(), UnknownFixture("bogus".into()));
    }

    #[test]
    fn every_expectation_is_tagged() {
        for name in fixture_catalog() {
            let f = build_fixture(name).unwrap();
            for a in f.expectations() {
                let p = a.provenance.expect("provenance");
                if p == Provenance::Paper {
                    assert!(a.citation.is_some(), "{name}: {} lacks a citation", a.target);
                }
            }
        }
    }

    #[test]
    fn anti_orthogonal_shapes() {
        let f = build_fixture("anti_orthogonal_mult").unwrap();
        let src = f.patch("r6");
        assert_eq!((src.dim(), src.radical_rank()), (6, 2));
        let g = src.gram_at(&[0.0; 6]).unwrap();
        let diag: Vec<f64> = (0..6).map(|i| *g.get(i, i)).collect();
        assert_eq!(diag, [0.0, 0.0, -1.0, 1.0, -1.0, 1.0]);
        let comps: Vec<&str> = f.map("product").components().iter().map(|c| c.source()).collect();
        assert_eq!(comps, ["0", "x2*y2+x3*y3", "x2*y3+x3*y2"]);
    }

    #[test]
    fn radial_projection_records_the_printed_dilation() {
        let f = build_fixture("radial_projection").unwrap();
        assert!(f.paper_discrepancy().unwrap().contains("case (b)"));
    }

    #[test]
    fn every_fixture_passes() {
        for name in fixture_catalog() {
            let f = build_fixture(name).unwrap();
            let report = run_resolved(f.resolved(), &RunOptions::default());
            for a in &report.analyses {
                assert_eq!(a.status, Status::Pass, "{name}: {a:#?}");
            }
            assert_eq!(report.exit_code, 0);
        }
    }
}
