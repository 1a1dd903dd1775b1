//! Radical-preserving maps between charts in radical coordinates.
//!
//! All quantities are computed on the quotient bundles: only Jacobian rows
//! of non-radical target coordinates and columns of non-radical source
//! coordinates enter (the "screen" block `J̄`). Verdicts are pointwise over
//! the supplied sample points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exprjet::{self, eval_jet2, Expression, Jet2, ParseError};
use crate::linalg::{LinalgError, Matrix, Subspace};
use crate::manifold::{packed, scaled, ChartPatch, ManifoldError, MetricSample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorphismError {
    #[error("map has {found} components but the target has dimension {expected}")]
    ComponentCount { expected: usize, found: usize },
    #[error("component {index}: {source}")]
    Component { index: usize, source: ParseError },
    #[error("source: {0}")]
    Source(ManifoldError),
    #[error("image {image:?} of {point:?}: {source}")]
    Target { point: Vec<f64>, image: Vec<f64>, source: ManifoldError },
    #[error("not radical-preserving: |d phi^{component} / d x^{coordinate}| = {magnitude:e}")]
    NotRadicalPreserving { component: usize, coordinate: usize, magnitude: f64 },
    #[error("internal inconsistency (check the tolerance): {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<ManifoldError> for MorphismError {
    fn from(e: ManifoldError) -> Self {
        MorphismError::Source(e)
    }
}

impl From<exprjet::EvalError> for MorphismError {
    fn from(e: exprjet::EvalError) -> Self {
        MorphismError::Source(ManifoldError::Eval(e))
    }
}

/// Map `φ` between two charts, given by its components in source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    source: ChartPatch,
    target: ChartPatch,
    components: Vec<Expression>,
}

/// The four cases of generalized horizontal weak conformality, or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HwcCase {
    /// `dφ = 0`.
    A,
    /// `dφ ≠ 0` with image inside the target radical.
    B,
    /// Horizontal space nonzero and null, `Λ = 0`.
    C,
    /// Conformal on the horizontal space with `Λ ≠ 0`.
    D,
    NotHwc,
}

impl HwcCase {
    pub fn tag(self) -> &'static str {
        match self {
            HwcCase::A => "a",
            HwcCase::B => "b",
            HwcCase::C => "c",
            HwcCase::D => "d",
            HwcCase::NotHwc => "not_hwc",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [HwcCase::A, HwcCase::B, HwcCase::C, HwcCase::D, HwcCase::NotHwc]
            .into_iter()
            .find(|c| c.tag() == tag)
    }

    pub fn is_hwc(self) -> bool {
        self != HwcCase::NotHwc
    }
}

impl std::fmt::Display for HwcCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadicalPreservation {
    pub preserving: bool,
    /// Largest `|φ^α_a|` with `α` non-radical and `a` radical.
    pub worst: f64,
    /// `(component, coordinate)` of the worst entry.
    pub worst_at: Option<(usize, usize)>,
}

/// Generalized differential and its adjoint at a point.
#[derive(Debug, Clone)]
pub struct DifferentialSample {
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    /// Full Jacobian, `n x m`.
    pub jacobian: Matrix<f64>,
    /// Screen block `J̄`, `(n - ρ) x (m - r)`.
    pub screen_jacobian: Matrix<f64>,
    /// `ḡ⁻¹ J̄ᵀ h̄`, the adjoint in screen coordinates.
    pub adjoint: Matrix<f64>,
    /// Kernel of `J̄` in source screen coordinates.
    pub vertical: Subspace<f64>,
    /// `ḡ`-orthogonal complement of `vertical`.
    pub horizontal: Subspace<f64>,
    pub source_metric: MetricSample,
    pub target_metric: MetricSample,
    pub jets: Vec<Jet2<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HwcDiagnostics {
    pub dim_vertical: usize,
    pub dim_horizontal: usize,
    /// Dimension of the radical of `ḡ` restricted to the horizontal space.
    pub horizontal_nullity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HwcVerdict {
    pub case: HwcCase,
    /// Square dilation `Λ`.
    pub lambda: f64,
    /// `max |T - Λ h̄⁻¹|`.
    pub fit_residual: f64,
    pub diagnostics: HwcDiagnostics,
}

/// `B̄^γ_ij` over screen indices, stored for `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFundamentalForm {
    pub point: Vec<f64>,
    source_screen: usize,
    target_screen: usize,
    values: Vec<f64>,
}

impl SecondFundamentalForm {
    pub fn get(&self, gamma: usize, i: usize, j: usize) -> f64 {
        let n = self.source_screen;
        self.values[gamma * n * (n + 1) / 2 + packed(n, i, j)]
    }

    pub fn source_screen_dim(&self) -> usize {
        self.source_screen
    }

    pub fn target_screen_dim(&self) -> usize {
        self.target_screen
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensionSample {
    pub point: Vec<f64>,
    pub second_fundamental_form: SecondFundamentalForm,
    /// `τ̄^γ` for non-radical target coordinates.
    pub tension: Vec<f64>,
    /// `|h̄(τ̄, τ̄)|^{1/2}`.
    pub norm: f64,
}

impl TensionSample {
    pub fn max_abs(&self) -> f64 {
        self.tension.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpaces {
    pub vertical: Subspace<f64>,
    pub horizontal: Subspace<f64>,
    pub horizontal_null: bool,
    pub vertical_degenerate: bool,
    pub horizontal_in_vertical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointVerdict {
    pub point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<HwcCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tension: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tension_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const SAMPLING_CAVEAT: &str =
    "verdict certifies the sampled points only; it is not a proof for the whole domain";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorphismReport {
    pub points: Vec<PointVerdict>,
    pub all_harmonic: bool,
    pub all_hwc: bool,
    pub harmonic_morphism: bool,
    pub errors: usize,
    pub caveat: &'static str,
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

impl SmoothMap {
    pub fn new<S: AsRef<str>>(
        source: ChartPatch,
        target: ChartPatch,
        components: &[S],
    ) -> Result<Self, MorphismError> {
        if components.len() != target.dim() {
            return Err(MorphismError::ComponentCount {
                expected: target.dim(),
                found: components.len(),
            });
        }
        let components = components
            .iter()
            .enumerate()
            .map(|(index, text)| {
                exprjet::parse(text.as_ref(), source.coords())
                    .map_err(|source| MorphismError::Component { index, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(SmoothMap { source, target, components })
    }

    pub fn source(&self) -> &ChartPatch {
        &self.source
    }

    pub fn target(&self) -> &ChartPatch {
        &self.target
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    /// Component jets and the image point; checks admissibility on both ends.
    pub fn jets_at(&self, x: &[f64]) -> Result<(Vec<Jet2<f64>>, Vec<f64>), MorphismError> {
        self.source.check_admissible(x)?;
        let jets: Vec<Jet2<f64>> =
            self.components.iter().map(|c| eval_jet2(c, x)).collect::<Result<_, _>>()?;
        let image: Vec<f64> = jets.iter().map(|j| *j.value()).collect();
        self.target.check_admissible(&image).map_err(|source| MorphismError::Target {
            point: x.to_vec(),
            image: image.clone(),
            source,
        })?;
        Ok((jets, image))
    }

    fn radical_preservation(&self, jets: &[Jet2<f64>], tol: f64) -> RadicalPreservation {
        let (r, rho) = (self.source.radical_rank(), self.target.radical_rank());
        let scale = jets.iter().map(|j| max_abs(j.grad())).fold(0.0, f64::max);
        let mut worst = 0.0;
        let mut worst_at = None;
        for (alpha, jet) in jets.iter().enumerate().skip(rho) {
            for a in 0..r {
                let v = jet.grad()[a].abs();
                if v > worst {
                    worst = v;
                    worst_at = Some((alpha, a));
                }
            }
        }
        RadicalPreservation { preserving: worst <= scaled(tol, scale), worst, worst_at }
    }

    /// Whether `dφ` sends the source radical into the target radical at `x`.
    pub fn is_radical_preserving_at(&self, x: &[f64], tol: f64) -> Result<RadicalPreservation, MorphismError> {
        let (jets, _) = self.jets_at(x)?;
        Ok(self.radical_preservation(&jets, tol))
    }

    fn require_radical_preserving(&self, jets: &[Jet2<f64>], tol: f64) -> Result<(), MorphismError> {
        let report = self.radical_preservation(jets, tol);
        match (report.preserving, report.worst_at) {
            (false, Some((component, coordinate))) => Err(MorphismError::NotRadicalPreserving {
                component,
                coordinate,
                magnitude: report.worst,
            }),
            _ => Ok(()),
        }
    }

    pub fn differential_at(&self, x: &[f64], tol: f64) -> Result<DifferentialSample, MorphismError> {
        let (jets, image) = self.jets_at(x)?;
        self.require_radical_preserving(&jets, tol)?;
        let source_metric = self.source.quotient_metric_at(x)?;
        let target_metric = self.target.quotient_metric_at(&image).map_err(|source| {
            MorphismError::Target { point: x.to_vec(), image: image.clone(), source }
        })?;
        let (m, n) = (self.source.dim(), self.target.dim());
        let (r, rho) = (self.source.radical_rank(), self.target.radical_rank());
        let jacobian = Matrix::from_rows(jets.iter().map(|j| j.grad().to_vec()).collect());
        let rows: Vec<usize> = (rho..n).collect();
        let cols: Vec<usize> = (r..m).collect();
        let screen_jacobian = jacobian.select(&rows, &cols);
        let adjoint = source_metric
            .screen_inverse
            .mul(&screen_jacobian.transpose())
            .mul(target_metric.screen_gram.gram());
        let vertical = Subspace::spanned_by(m - r, &screen_jacobian.null_space(tol), tol);
        let horizontal = source_metric.screen_gram.perp(&vertical, tol)?;
        Ok(DifferentialSample {
            point: x.to_vec(),
            image,
            jacobian,
            screen_jacobian,
            adjoint,
            vertical,
            horizontal,
            source_metric,
            target_metric,
            jets,
        })
    }

    /// `T^{αβ} = ḡ^{ij} φ^α_i φ^β_j` over screen indices.
    pub fn gram_of_adjoint_at(&self, x: &[f64], tol: f64) -> Result<Matrix<f64>, MorphismError> {
        Ok(self.differential_at(x, tol)?.gram_of_adjoint())
    }

    pub fn hwc_classify_at(&self, x: &[f64], tol: f64) -> Result<HwcVerdict, MorphismError> {
        self.differential_at(x, tol)?.classify(tol)
    }

    pub fn kernel_spaces_at(&self, x: &[f64], tol: f64) -> Result<KernelSpaces, MorphismError> {
        let d = self.differential_at(x, tol)?;
        let g = &d.source_metric.screen_gram;
        Ok(KernelSpaces {
            horizontal_null: g.subspace_flags(&d.horizontal, tol)?.null,
            vertical_degenerate: g.subspace_flags(&d.vertical, tol)?.degenerate,
            horizontal_in_vertical: d.vertical.contains(&d.horizontal, tol),
            vertical: d.vertical,
            horizontal: d.horizontal,
        })
    }

    /// `B̄^γ_ij = φ^γ_ij - Γ^k_ij φ^γ_k + Γ̂^γ_αβ φ^α_i φ^β_j` over screen indices.
    pub fn second_fundamental_form_at(
        &self,
        x: &[f64],
        tol: f64,
    ) -> Result<SecondFundamentalForm, MorphismError> {
        let d = self.differential_at(x, tol)?;
        Ok(self.second_fundamental_form(&d))
    }

    fn second_fundamental_form(&self, d: &DifferentialSample) -> SecondFundamentalForm {
        let (r, rho) = (self.source.radical_rank(), self.target.radical_rank());
        let ns = self.source.screen_dim();
        let nt = self.target.screen_dim();
        let source_gamma = d.source_metric.christoffels();
        let target_gamma = d.target_metric.christoffels();
        let jbar = &d.screen_jacobian;
        let mut values = Vec::with_capacity(nt * ns * (ns + 1) / 2);
        for gamma in 0..nt {
            let jet = &d.jets[rho + gamma];
            for i in 0..ns {
                for j in i..ns {
                    let mut b = *jet.hess(r + i, r + j);
                    for k in 0..ns {
                        b -= source_gamma.get(k, i, j) * jbar.get(gamma, k);
                    }
                    for alpha in 0..nt {
                        for beta in 0..nt {
                            b += target_gamma.get(gamma, alpha, beta)
                                * jbar.get(alpha, i)
                                * jbar.get(beta, j);
                        }
                    }
                    values.push(b);
                }
            }
        }
        SecondFundamentalForm {
            point: d.point.clone(),
            source_screen: ns,
            target_screen: nt,
            values,
        }
    }

    /// `τ̄^γ = ḡ^{ij} B̄^γ_ij`.
    pub fn tension_at(&self, x: &[f64], tol: f64) -> Result<TensionSample, MorphismError> {
        let d = self.differential_at(x, tol)?;
        Ok(self.tension_from(&d))
    }

    fn tension_from(&self, d: &DifferentialSample) -> TensionSample {
        let b = self.second_fundamental_form(d);
        let ginv = &d.source_metric.screen_inverse;
        let (ns, nt) = (b.source_screen, b.target_screen);
        let tension: Vec<f64> = (0..nt)
            .map(|gamma| {
                let mut acc = 0.0;
                for i in 0..ns {
                    for j in 0..ns {
                        acc += ginv.get(i, j) * b.get(gamma, i, j);
                    }
                }
                acc
            })
            .collect();
        let h = d.target_metric.screen_gram.apply(&tension, &tension);
        TensionSample { point: d.point.clone(), second_fundamental_form: b, norm: h.abs().sqrt(), tension }
    }

    /// Tension at `x` and whether it vanishes.
    pub fn is_harmonic_at(&self, x: &[f64], tol: f64) -> Result<(TensionSample, bool), MorphismError> {
        let d = self.differential_at(x, tol)?;
        let tension = self.tension_from(&d);
        let harmonic = Self::is_harmonic(&tension, &d, tol);
        Ok((tension, harmonic))
    }

    /// Harmonic at `x` when every tension component is within `tol`
    /// scaled by the source quotient metric.
    fn is_harmonic(tension: &TensionSample, d: &DifferentialSample, tol: f64) -> bool {
        tension.max_abs() <= scaled(tol, d.source_metric.screen_gram.gram().max_abs())
    }

    /// Pointwise classification and tension over `points`, plus the
    /// aggregate harmonic-morphism verdict.
    pub fn morphism_verdict(&self, points: &[Vec<f64>], tol: f64) -> MorphismReport {
        use rayon::prelude::*;
        let records: Vec<PointVerdict> = points
            .par_iter()
            .map(|x| match self.point_verdict(x, tol) {
                Ok(v) => v,
                Err(e) => PointVerdict {
                    point: x.clone(),
                    case: None,
                    lambda: None,
                    fit_residual: None,
                    tension: None,
                    tension_norm: None,
                    harmonic: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        let errors = records.iter().filter(|r| r.error.is_some()).count();
        let ok = errors == 0 && !records.is_empty();
        let all_harmonic = ok && records.iter().all(|r| r.harmonic == Some(true));
        let all_hwc = ok && records.iter().all(|r| r.case.is_some_and(HwcCase::is_hwc));
        MorphismReport {
            harmonic_morphism: all_harmonic && all_hwc,
            all_harmonic,
            all_hwc,
            errors,
            points: records,
            caveat: SAMPLING_CAVEAT,
        }
    }

    pub fn point_verdict(&self, x: &[f64], tol: f64) -> Result<PointVerdict, MorphismError> {
        let d = self.differential_at(x, tol)?;
        let verdict = d.classify(tol)?;
        let tension = self.tension_from(&d);
        Ok(PointVerdict {
            point: x.to_vec(),
            case: Some(verdict.case),
            lambda: Some(verdict.lambda),
            fit_residual: Some(verdict.fit_residual),
            harmonic: Some(Self::is_harmonic(&tension, &d, tol)),
            tension_norm: Some(tension.norm),
            tension: Some(tension.tension),
            error: None,
        })
    }
}

impl DifferentialSample {
    pub fn gram_of_adjoint(&self) -> Matrix<f64> {
        let j = &self.screen_jacobian;
        j.mul(&self.source_metric.screen_inverse).mul(&j.transpose())
    }

    /// `max |ḡ(A v, w) - h̄(v, J̄ w)|` over screen basis vectors.
    pub fn adjoint_residual(&self) -> f64 {
        let lhs = self.source_metric.screen_gram.gram().mul(&self.adjoint).transpose();
        let rhs = self.target_metric.screen_gram.gram().mul(&self.screen_jacobian);
        lhs.sub(&rhs).max_abs()
    }

    /// Span of the adjoint's columns in source screen coordinates.
    pub fn adjoint_image(&self, tol: f64) -> Subspace<f64> {
        Subspace::spanned_by(self.adjoint.rows(), &self.adjoint.columns(), tol)
    }

    /// `J̄ ∘ A`, which equals `Λ·Id` for a conformal differential.
    pub fn composition(&self) -> Matrix<f64> {
        self.screen_jacobian.mul(&self.adjoint)
    }

    pub fn classify(&self, tol: f64) -> Result<HwcVerdict, MorphismError> {
        let g = &self.source_metric.screen_gram;
        let flags = g.subspace_flags(&self.horizontal, tol)?;
        let restricted = g.restrict(&self.horizontal)?;
        let diagnostics = HwcDiagnostics {
            dim_vertical: self.vertical.dim(),
            dim_horizontal: self.horizontal.dim(),
            horizontal_nullity: self.horizontal.dim() - restricted.rank(tol),
        };
        let j_max = self.jacobian.max_abs();
        let jbar_max = self.screen_jacobian.max_abs();
        let verdict = |case, lambda, fit_residual| HwcVerdict { case, lambda, fit_residual, diagnostics };
        if j_max <= tol {
            return Ok(verdict(HwcCase::A, 0.0, 0.0));
        }
        if jbar_max <= scaled(tol, j_max) {
            return Ok(verdict(HwcCase::B, 0.0, 0.0));
        }

        let t = self.gram_of_adjoint();
        let hinv = &self.target_metric.screen_inverse;
        let n = t.rows();
        let (mut num, mut den) = (0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                num += t.get(a, b) * hinv.get(a, b);
                den += hinv.get(a, b) * hinv.get(a, b);
            }
        }
        let lambda = num / den;
        let fit_residual = t.sub(&hinv.scale(&lambda)).max_abs();
        if fit_residual > scaled(tol, lambda.abs()) {
            return Ok(verdict(HwcCase::NotHwc, lambda, fit_residual));
        }
        let magnitude = jbar_max * jbar_max * self.source_metric.screen_inverse.max_abs();
        if lambda.abs() <= scaled(tol, magnitude) {
            if self.horizontal.dim() == 0 || !flags.null {
                return Err(MorphismError::InternalInconsistency(format!(
                    "Λ = 0 with J̄ ≠ 0 but horizontal space (dim {}) is not nonzero and null",
                    self.horizontal.dim()
                )));
            }
            return Ok(verdict(HwcCase::C, 0.0, fit_residual));
        }
        // h̄(J̄X, J̄Y) = Λ ḡ(X, Y) on the horizontal space.
        let basis = self.horizontal.basis_matrix();
        let pushed = self.screen_jacobian.mul(&basis);
        let lhs = pushed.transpose().mul(self.target_metric.screen_gram.gram()).mul(&pushed);
        let rhs = restricted.scale(&lambda);
        let residual = lhs.sub(&rhs).max_abs();
        if residual > scaled(tol, lhs.max_abs().max(rhs.max_abs())) {
            return Err(MorphismError::InternalInconsistency(format!(
                "horizontal conformality residual {residual:e} with Λ = {lambda}"
            )));
        }
        Ok(verdict(HwcCase::D, lambda, fit_residual))
    }
}
