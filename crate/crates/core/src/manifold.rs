//! Coordinate charts carrying a possibly degenerate metric.
//!
//! A [`ChartPatch`] is expected to be in radical coordinates: the first `r`
//! coordinate fields span the radical of the metric at every point. The
//! contract is checked on sample points by
//! [`ChartPatch::validate_radical_chart`], never assumed. On such charts the
//! quotient metric is the lower-right `(m - r)` block of the Gram matrix and
//! the quotient connection is given by the usual Christoffel formula over
//! screen indices only.

use serde::Serialize;
use thiserror::Error;

use crate::exprjet::{self, eval_jet2, EvalError, Expression, Jet2, ParseError};
use crate::linalg::{BilinearForm, Matrix, Signature};
use crate::DEFAULT_TOL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("metric entry ({i}, {j}): {source}")]
    MetricEntry { i: usize, j: usize, source: ParseError },
    #[error("domain predicate {index}: {source}")]
    Domain { index: usize, source: ParseError },
    #[error("metric grid must be {dim}x{dim}")]
    Shape { dim: usize },
    #[error("radical rank {radical_rank} must be below the dimension {dim} (null manifolds are not supported)")]
    NullManifold { dim: usize, radical_rank: usize },
    #[error("metric entries ({i}, {j}) and ({j}, {i}) differ")]
    AsymmetricMetric { i: usize, j: usize },
    #[error("point {point:?} is outside the chart domain")]
    InadmissiblePoint { point: Vec<f64> },
    #[error("screen block of the metric is singular at {point:?}")]
    SingularScreenBlock { point: Vec<f64> },
    #[error("function depends on radical coordinate {index} (|df/dx| = {magnitude:e})")]
    NotRadicalPreserving { index: usize, magnitude: f64 },
    #[error("function must be written in the chart coordinates")]
    CoordinateMismatch,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `tol` scaled by the magnitude of the quantities being compared.
pub(crate) fn scaled(tol: f64, magnitude: f64) -> f64 {
    tol * (1.0 + magnitude)
}

/// Index of `(i, j)` in a packed upper triangle of order `n`.
pub(crate) fn packed(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// A coordinate patch with metric component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPatch {
    coords: Vec<String>,
    radical_rank: usize,
    /// Packed upper triangle of the metric.
    metric: Vec<Expression>,
    /// A point is admissible iff every predicate is positive there.
    domain: Vec<Expression>,
}

impl ChartPatch {
    /// Builds a chart from an `m x m` grid of expression strings. Only the
    /// upper triangle is read; a lower entry must be empty or textually equal
    /// (ignoring whitespace) to its mirror.
    pub fn new<A, B, C>(
        coords: &[A],
        radical_rank: usize,
        metric: &[Vec<B>],
        domain: &[C],
    ) -> Result<Self, ManifoldError>
    where
        A: AsRef<str>,
        B: AsRef<str>,
        C: AsRef<str>,
    {
        let dim = coords.len();
        if metric.len() != dim || metric.iter().any(|row| row.len() != dim) || dim == 0 {
            return Err(ManifoldError::Shape { dim });
        }
        if radical_rank >= dim {
            return Err(ManifoldError::NullManifold { dim, radical_rank });
        }
        let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        let mut packed_metric = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                let upper = metric[i][j].as_ref();
                let lower = metric[j][i].as_ref();
                if !lower.trim().is_empty() && squash(lower) != squash(upper) {
                    return Err(ManifoldError::AsymmetricMetric { i, j });
                }
                let expr = exprjet::parse(upper, coords)
                    .map_err(|source| ManifoldError::MetricEntry { i, j, source })?;
                packed_metric.push(expr);
            }
        }
        let domain = domain
            .iter()
            .enumerate()
            .map(|(index, text)| {
                exprjet::parse(text.as_ref(), coords)
                    .map_err(|source| ManifoldError::Domain { index, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(ChartPatch {
            coords: coords.iter().map(|c| c.as_ref().to_string()).collect(),
            radical_rank,
            metric: packed_metric,
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn radical_rank(&self) -> usize {
        self.radical_rank
    }

    pub fn screen_dim(&self) -> usize {
        self.dim() - self.radical_rank
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expression {
        &self.metric[packed(self.dim(), i, j)]
    }

    pub fn domain(&self) -> &[Expression] {
        &self.domain
    }

    /// A predicate that cannot be evaluated at `x` makes `x` inadmissible.
    pub fn is_admissible(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && self.domain.iter().all(|p| matches!(p.value(x), Ok(v) if v > 0.0))
    }

    pub fn check_admissible(&self, x: &[f64]) -> Result<(), ManifoldError> {
        if x.len() != self.dim() {
            return Err(EvalError::Dimension { expected: self.dim(), found: x.len() }.into());
        }
        if self.is_admissible(x) {
            Ok(())
        } else {
            Err(ManifoldError::InadmissiblePoint { point: x.to_vec() })
        }
    }

    /// Jets of the packed metric entries.
    pub fn metric_jets(&self, x: &[f64]) -> Result<Vec<Jet2<f64>>, ManifoldError> {
        self.check_admissible(x)?;
        Ok(self.metric.iter().map(|e| eval_jet2(e, x)).collect::<Result<_, _>>()?)
    }

    fn gram_from_jets(&self, jets: &[Jet2<f64>]) -> Matrix<f64> {
        let m = self.dim();
        let mut g = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                g.set(i, j, *jets[packed(m, i, j)].value());
            }
        }
        g
    }

    pub fn gram_at(&self, x: &[f64]) -> Result<Matrix<f64>, ManifoldError> {
        Ok(self.gram_from_jets(&self.metric_jets(x)?))
    }

    fn screen_block(&self, gram: &Matrix<f64>) -> Matrix<f64> {
        let idx: Vec<usize> = (self.radical_rank..self.dim()).collect();
        gram.select(&idx, &idx)
    }

    /// Checks the radical-coordinate contract at every sample point.
    pub fn validate_radical_chart(
        &self,
        points: &[Vec<f64>],
        tol: f64,
    ) -> Result<ChartValidation, ManifoldError> {
        let r = self.radical_rank;
        let m = self.dim();
        let mut checks = Vec::with_capacity(points.len());
        for x in points {
            let gram = self.gram_at(x)?;
            let screen = self.screen_block(&gram);
            let threshold = scaled(tol, screen.max_abs());
            let radical_violation = (0..r)
                .flat_map(|a| (0..m).map(move |j| (a, j)))
                .map(|(a, j)| gram.get(a, j).abs())
                .fold(0.0, f64::max);
            let screen_signature =
                BilinearForm::new(screen).map(|f| f.signature(tol)).unwrap_or(Signature::new(0, 0, 0));
            checks.push(PointValidation {
                point: x.clone(),
                radical_violation,
                radical_ok: radical_violation <= threshold,
                screen_signature,
                screen_nondegenerate: screen_signature.r == 0,
            });
        }
        let first = checks.first().map(|c| c.screen_signature);
        let constant = checks.iter().all(|c| Some(c.screen_signature) == first);
        let pointwise = checks.iter().all(|c| c.radical_ok && c.screen_nondegenerate);
        let message = if checks.is_empty() {
            Some("no sample points".to_string())
        } else if let Some(bad) = checks.iter().find(|c| !c.radical_ok) {
            Some(format!(
                "radical rows do not vanish at {:?} (max |g| = {:e})",
                bad.point, bad.radical_violation
            ))
        } else if let Some(bad) = checks.iter().find(|c| !c.screen_nondegenerate) {
            Some(format!("screen block degenerate at {:?}", bad.point))
        } else if !constant {
            Some("screen signature varies across sample points".to_string())
        } else {
            None
        };
        let passed = message.is_none();
        let signature = first
            .filter(|_| constant && pointwise)
            .map(|s| Signature::new(r, s.p, s.q));
        Ok(ChartValidation { passed, signature, message, points: checks })
    }

    /// Checks `|d g_ij / d x^a| <= tol` for every radical coordinate `a`.
    ///
    /// In radical coordinates the Lie derivative of `g` along `f d/dx^a`
    /// reduces to `f d_a g_ij`, so coordinate fields suffice.
    pub fn is_stationary(
        &self,
        points: &[Vec<f64>],
        tol: f64,
    ) -> Result<StationarityReport, ManifoldError> {
        let r = self.radical_rank;
        let m = self.dim();
        let mut passed = true;
        let mut worst = 0.0f64;
        let mut worst_at = None;
        for (p, x) in points.iter().enumerate() {
            let jets = self.metric_jets(x)?;
            let screen_scale = (r..m)
                .flat_map(|i| (r..m).map(move |j| (i, j)))
                .map(|(i, j)| jets[packed(m, i, j)].value().abs())
                .fold(0.0, f64::max);
            for i in 0..m {
                for j in i..m {
                    for a in 0..r {
                        let d = jets[packed(m, i, j)].grad()[a].abs();
                        if d > worst {
                            worst = d;
                            worst_at = Some(StationarityViolation { point_index: p, radical: a, i, j });
                        }
                        if d > scaled(tol, screen_scale) {
                            passed = false;
                        }
                    }
                }
            }
        }
        Ok(StationarityReport { passed, max_radical_derivative: worst, worst_at })
    }

    /// Quotient metric and its inverse at `x`.
    pub fn quotient_metric_at(&self, x: &[f64]) -> Result<MetricSample, ManifoldError> {
        let jets = self.metric_jets(x)?;
        let screen = self.screen_block(&self.gram_from_jets(&jets));
        let singular = || ManifoldError::SingularScreenBlock { point: x.to_vec() };
        let inverse = screen.inverse(DEFAULT_TOL).ok_or_else(singular)?;
        let n = self.screen_dim();
        let product = screen.mul(&inverse);
        let scale = 1.0 + screen.max_abs() * inverse.max_abs();
        let off = product.sub(&Matrix::identity(n)).max_abs();
        if off > 1e-10 * scale {
            return Err(singular());
        }
        let screen_gram = BilinearForm::new(screen).map_err(|_| singular())?;
        Ok(MetricSample {
            point: x.to_vec(),
            radical_rank: self.radical_rank,
            dim: self.dim(),
            screen_gram,
            screen_inverse: inverse,
            metric_jets: jets,
        })
    }

    /// Christoffel symbols of the quotient connection at `x`.
    pub fn christoffels_at(&self, x: &[f64]) -> Result<ChristoffelSample, ManifoldError> {
        Ok(self.quotient_metric_at(x)?.christoffels())
    }

    /// Generalized Laplace-Beltrami operator applied to `f` at `x`:
    /// `g^ij (f_ij - Gamma^k_ij f_k)` over screen indices.
    pub fn laplace_beltrami_at(&self, f: &Expression, x: &[f64], tol: f64) -> Result<f64, ManifoldError> {
        if f.vars() != self.coords.as_slice() {
            return Err(ManifoldError::CoordinateMismatch);
        }
        let sample = self.quotient_metric_at(x)?;
        let jet = eval_jet2(f, x)?;
        let r = self.radical_rank;
        let grad_scale = jet.grad().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        for a in 0..r {
            let magnitude = jet.grad()[a].abs();
            if magnitude > scaled(tol, grad_scale) {
                return Err(ManifoldError::NotRadicalPreserving { index: a, magnitude });
            }
        }
        let gamma = sample.christoffels();
        let n = self.screen_dim();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut term = *jet.hess(r + i, r + j);
                for k in 0..n {
                    term -= gamma.get(k, i, j) * jet.grad()[r + k];
                }
                total += sample.screen_inverse.get(i, j) * term;
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointValidation {
    pub point: Vec<f64>,
    /// Largest `|g_aj|` over radical rows.
    pub radical_violation: f64,
    pub radical_ok: bool,
    pub screen_signature: Signature,
    pub screen_nondegenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartValidation {
    pub passed: bool,
    /// Full signature `(r, p, q)` when the chart passed.
    pub signature: Option<Signature>,
    pub message: Option<String>,
    pub points: Vec<PointValidation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StationarityViolation {
    pub point_index: usize,
    pub radical: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub passed: bool,
    pub max_radical_derivative: f64,
    pub worst_at: Option<StationarityViolation>,
}

/// Quotient metric at a point, with cached metric jets.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub point: Vec<f64>,
    pub radical_rank: usize,
    pub dim: usize,
    /// Screen block of the metric, order `m - r`.
    pub screen_gram: BilinearForm<f64>,
    pub screen_inverse: Matrix<f64>,
    /// Packed upper triangle over all `m` coordinates.
    pub metric_jets: Vec<Jet2<f64>>,
}

impl MetricSample {
    pub fn screen_dim(&self) -> usize {
        self.dim - self.radical_rank
    }

    fn entry_jet(&self, i: usize, j: usize) -> &Jet2<f64> {
        let r = self.radical_rank;
        &self.metric_jets[packed(self.dim, r + i, r + j)]
    }

    /// `d ḡ_ij / d x^{r+k}` in screen indices.
    pub fn screen_derivative(&self, k: usize, i: usize, j: usize) -> f64 {
        self.entry_jet(i, j).grad()[self.radical_rank + k]
    }

    pub fn christoffels(&self) -> ChristoffelSample {
        let n = self.screen_dim();
        let ginv = &self.screen_inverse;
        let mut gamma = vec![0.0; n * n * (n + 1) / 2];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        let koszul = self.screen_derivative(i, j, l) + self.screen_derivative(j, i, l)
                            - self.screen_derivative(l, i, j);
                        acc += ginv.get(k, l) * koszul;
                    }
                    gamma[k * n * (n + 1) / 2 + packed(n, i, j)] = 0.5 * acc;
                }
            }
        }
        ChristoffelSample { point: self.point.clone(), screen_dim: n, gamma }
    }

    /// Largest `|d_k ḡ_ij - Γ^l_ki ḡ_lj - Γ^l_kj ḡ_il|`.
    pub fn metric_compatibility_residual(&self, gamma: &ChristoffelSample) -> f64 {
        let n = self.screen_dim();
        let g = self.screen_gram.gram();
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = self.screen_derivative(k, i, j);
                    for l in 0..n {
                        v -= gamma.get(l, k, i) * g.get(l, j) + gamma.get(l, k, j) * g.get(i, l);
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}

/// Christoffel symbols `Γ^k_ij` over screen indices, stored for `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelSample {
    pub point: Vec<f64>,
    screen_dim: usize,
    gamma: Vec<f64>,
}

impl ChristoffelSample {
    pub fn screen_dim(&self) -> usize {
        self.screen_dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.screen_dim;
        self.gamma[k * n * (n + 1) / 2 + packed(n, i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}
