//! Linear algebra of possibly degenerate inner-product spaces.
//!
//! Everything is generic over [`Scalar`]: with [`crate::Rational`] all rank
//! decisions are exact, with `f64` an entry counts as zero when it is below
//! `tol * max(1, magnitude)`.

mod matrix;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

pub use matrix::{Echelon, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("Gram matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("Gram matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
}

/// Floating Gram matrices may be asymmetric by at most this much before
/// being symmetrized.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Counts of zero, negative and positive directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Signature {
    pub r: usize,
    pub p: usize,
    pub q: usize,
}

impl Signature {
    pub fn new(r: usize, p: usize, q: usize) -> Self {
        Signature { r, p, q }
    }

    pub fn dim(&self) -> usize {
        self.r + self.p + self.q
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.r, self.p, self.q)
    }
}

/// A linear subspace given by a basis of column vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<S> {
    ambient_dim: usize,
    basis: Vec<Vec<S>>,
}

impl<S: Scalar> Subspace<S> {
    /// Checks that `basis` is independent at `tol`.
    pub fn new(ambient_dim: usize, basis: Vec<Vec<S>>, tol: f64) -> Result<Self, LinalgError> {
        for v in &basis {
            if v.len() != ambient_dim {
                return Err(LinalgError::DimensionMismatch { expected: ambient_dim, found: v.len() });
            }
        }
        if !basis.is_empty() && Matrix::from_columns(ambient_dim, &basis).rank(tol) != basis.len() {
            return Err(LinalgError::DependentBasis);
        }
        Ok(Subspace { ambient_dim, basis })
    }

    /// Span of arbitrary vectors; a maximal independent subset is kept.
    pub fn spanned_by(ambient_dim: usize, vectors: &[Vec<S>], tol: f64) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient_dim);
        }
        let pivots = Matrix::from_columns(ambient_dim, vectors).echelon(tol).pivots;
        Subspace { ambient_dim, basis: pivots.into_iter().map(|j| vectors[j].clone()).collect() }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: Vec::new() }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: Matrix::<S>::identity(ambient_dim).columns() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<S>] {
        &self.basis
    }

    /// Basis vectors as the columns of an `ambient_dim x dim` matrix.
    pub fn basis_matrix(&self) -> Matrix<S> {
        Matrix::from_columns(self.ambient_dim, &self.basis)
    }

    pub fn sum(&self, other: &Self, tol: f64) -> Self {
        let all: Vec<Vec<S>> = self.basis.iter().chain(&other.basis).cloned().collect();
        Self::spanned_by(self.ambient_dim, &all, tol)
    }

    pub fn contains(&self, other: &Self, tol: f64) -> bool {
        self.sum(other, tol).dim() == self.dim()
    }

    /// Equality of column spans by mutual containment.
    pub fn same_span(&self, other: &Self, tol: f64) -> bool {
        self.ambient_dim == other.ambient_dim
            && self.dim() == other.dim()
            && self.contains(other, tol)
    }

    pub fn intersection_dim(&self, other: &Self, tol: f64) -> usize {
        self.dim() + other.dim() - self.sum(other, tol).dim()
    }

    pub fn to_f64(&self) -> Subspace<f64> {
        Subspace {
            ambient_dim: self.ambient_dim,
            basis: self.basis.iter().map(|v| v.iter().map(S::to_f64).collect()).collect(),
        }
    }
}

/// Symmetric bilinear form on `S^m`, represented by its Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BilinearForm<S: Scalar> {
    gram: Matrix<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubspaceFlags {
    pub degenerate: bool,
    pub null: bool,
}

/// Result of factoring out the radical.
#[derive(Debug, Clone)]
pub struct QuotientReduction<S: Scalar> {
    pub radical: Subspace<S>,
    /// Complement of the radical, built from standard basis vectors.
    pub screen: Subspace<S>,
    /// `screen^T * gram * screen`, non-degenerate.
    pub reduced: BilinearForm<S>,
    /// `(m - r) x m` matrix sending ambient coordinates to screen
    /// coordinates; it annihilates the radical.
    pub projector: Matrix<S>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubspaceLawReport {
    pub dim_v: usize,
    pub dim_w: usize,
    pub dim_perp: usize,
    pub dim_radical: usize,
    pub dim_radical_cap_w: usize,
    pub dim_perp_perp: usize,
    /// `dim W + dim W^perp = dim V + dim (N(V) ∩ W)`
    pub dimension_law: bool,
    /// `(W^perp)^perp = W + N(V)`
    pub double_perp_law: bool,
    pub dim_w_bar: usize,
    pub dim_quotient_perp: usize,
    /// `W / (N(V) ∩ W)` and `((W^perp)/N(V))^perp` have equal dimension and
    /// the projection of `W` spans the latter.
    pub quotient_law: bool,
}

impl SubspaceLawReport {
    pub fn all_hold(&self) -> bool {
        self.dimension_law && self.double_perp_law && self.quotient_law
    }
}

impl<S: Scalar> BilinearForm<S> {
    /// Validates a Gram matrix. Floating input within [`SYMMETRY_TOL`] of
    /// symmetric is symmetrized; exact input must be exactly symmetric.
    pub fn new(gram: Matrix<S>) -> Result<Self, LinalgError> {
        let (rows, cols) = (gram.rows(), gram.cols());
        if rows != cols || rows == 0 {
            return Err(LinalgError::NotSquare { rows, cols });
        }
        let mut gram = gram;
        for i in 0..rows {
            for j in i + 1..rows {
                let (a, b) = (gram.get(i, j).clone(), gram.get(j, i).clone());
                if a == b {
                    continue;
                }
                if S::EXACT || (a.to_f64() - b.to_f64()).abs() > SYMMETRY_TOL {
                    return Err(LinalgError::NotSymmetric { i, j });
                }
                let mean = (a + b) / S::from_i64(2);
                gram.set(i, j, mean.clone());
                gram.set(j, i, mean);
            }
        }
        Ok(BilinearForm { gram })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, LinalgError> {
        Self::new(Matrix::from_rows(rows))
    }

    pub fn diagonal(entries: &[S]) -> Self {
        BilinearForm { gram: Matrix::diagonal(entries) }
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &Matrix<S> {
        &self.gram
    }

    pub fn apply(&self, u: &[S], v: &[S]) -> S {
        let gv = self.gram.mul_vec(v);
        u.iter().zip(gv).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b)
    }

    fn check_subspace(&self, w: &Subspace<S>) -> Result<(), LinalgError> {
        if w.ambient_dim() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: w.ambient_dim(),
            });
        }
        Ok(())
    }

    /// Gram matrix of the form restricted to `w`, in the basis of `w`.
    pub fn restrict(&self, w: &Subspace<S>) -> Result<Matrix<S>, LinalgError> {
        self.check_subspace(w)?;
        let b = w.basis_matrix();
        Ok(b.transpose().mul(&self.gram).mul(&b))
    }

    /// Signature `(r, p, q)`.
    ///
    /// Exact mode diagonalizes by symmetric congruence. Floating mode counts
    /// eigenvalues, with `|λ| <= tol * max(1, spectral radius)` counted as zero.
    pub fn signature(&self, tol: f64) -> Signature {
        if S::EXACT {
            let diag = congruence_diagonal(&self.gram);
            let mut sig = Signature::new(0, 0, 0);
            for d in diag {
                if d.is_zero() {
                    sig.r += 1;
                } else if d.to_f64() < 0.0 {
                    sig.p += 1;
                } else {
                    sig.q += 1;
                }
            }
            sig
        } else {
            let m = self.dim();
            let data: Vec<f64> =
                (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| self.gram.get(i, j).to_f64()).collect();
            let eig = nalgebra::DMatrix::from_row_slice(m, m, &data).symmetric_eigenvalues();
            let radius = eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let threshold = tol * radius.max(1.0);
            let mut sig = Signature::new(0, 0, 0);
            for &l in eig.iter() {
                if l.abs() <= threshold {
                    sig.r += 1;
                } else if l < 0.0 {
                    sig.p += 1;
                } else {
                    sig.q += 1;
                }
            }
            sig
        }
    }

    /// The radical `N(V) = V^perp`.
    pub fn radical(&self, tol: f64) -> Subspace<S> {
        Subspace { ambient_dim: self.dim(), basis: self.gram.null_space(tol) }
    }

    /// `{x : <w, x> = 0 for all w in W}`.
    pub fn perp(&self, w: &Subspace<S>, tol: f64) -> Result<Subspace<S>, LinalgError> {
        self.check_subspace(w)?;
        if w.dim() == 0 {
            return Ok(Subspace::full(self.dim()));
        }
        let constraints = w.basis_matrix().transpose().mul(&self.gram);
        Ok(Subspace { ambient_dim: self.dim(), basis: constraints.null_space(tol) })
    }

    pub fn subspace_flags(&self, w: &Subspace<S>, tol: f64) -> Result<SubspaceFlags, LinalgError> {
        let restricted = self.restrict(w)?;
        let scale = self.gram.max_abs();
        let null = (0..w.dim())
            .all(|i| (0..w.dim()).all(|j| restricted.get(i, j).is_negligible(tol, scale)));
        let degenerate = w.dim() > 0 && restricted.rank(tol) < w.dim();
        Ok(SubspaceFlags { degenerate, null })
    }

    /// Splits off the radical and returns the induced non-degenerate form.
    pub fn quotient_reduce(&self, tol: f64) -> QuotientReduction<S> {
        let m = self.dim();
        let radical = self.radical(tol);
        let mut chosen = radical.clone();
        let mut screen_basis = Vec::new();
        for e in Matrix::<S>::identity(m).columns() {
            if chosen.dim() == m {
                break;
            }
            let candidate = Subspace { ambient_dim: m, basis: vec![e.clone()] };
            if !chosen.contains(&candidate, tol) {
                chosen.basis.push(e.clone());
                screen_basis.push(e);
            }
        }
        let screen = Subspace { ambient_dim: m, basis: screen_basis };
        let reduced = BilinearForm { gram: self.restrict(&screen).expect("same ambient dim") };
        let r = radical.dim();
        let frame = Matrix::from_columns(m, &chosen.basis);
        let inv = frame.inverse(tol).expect("radical plus screen spans the space");
        let screen_rows: Vec<usize> = (r..m).collect();
        let all_cols: Vec<usize> = (0..m).collect();
        let projector = inv.select(&screen_rows, &all_cols);
        QuotientReduction { radical, screen, reduced, projector }
    }

    /// Checks the dimension formula, the double-complement formula and the
    /// quotient isomorphism for `w`.
    pub fn verify_subspace_laws(
        &self,
        w: &Subspace<S>,
        tol: f64,
    ) -> Result<SubspaceLawReport, LinalgError> {
        self.check_subspace(w)?;
        let dim_v = self.dim();
        let radical = self.radical(tol);
        let perp = self.perp(w, tol)?;
        let perp_perp = self.perp(&perp, tol)?;
        let dim_radical_cap_w = radical.intersection_dim(w, tol);
        let dimension_law = w.dim() + perp.dim() == dim_v + dim_radical_cap_w;
        let double_perp_law = perp_perp.same_span(&w.sum(&radical, tol), tol);

        let quotient = self.quotient_reduce(tol);
        let project = |s: &Subspace<S>| {
            let images: Vec<Vec<S>> =
                s.basis().iter().map(|v| quotient.projector.mul_vec(v)).collect();
            Subspace::spanned_by(dim_v - radical.dim(), &images, tol)
        };
        let perp_bar = project(&perp);
        let quotient_perp = quotient.reduced.perp(&perp_bar, tol)?;
        let w_image = project(w);
        let dim_w_bar = w.dim() - dim_radical_cap_w;
        let quotient_law = dim_w_bar == quotient_perp.dim()
            && w_image.same_span(&quotient_perp, tol);

        Ok(SubspaceLawReport {
            dim_v,
            dim_w: w.dim(),
            dim_perp: perp.dim(),
            dim_radical: radical.dim(),
            dim_radical_cap_w,
            dim_perp_perp: perp_perp.dim(),
            dimension_law,
            double_perp_law,
            dim_w_bar,
            dim_quotient_perp: quotient_perp.dim(),
            quotient_law,
        })
    }
}

/// Diagonal of a symmetric matrix after simultaneous row/column elimination.
/// By Sylvester's law of inertia its sign pattern is the signature.
fn congruence_diagonal<S: Scalar>(gram: &Matrix<S>) -> Vec<S> {
    let n = gram.rows();
    let mut a = gram.clone();
    let mut diag = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if a.get(k, k).is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !a.get(j, j).is_zero()) {
                a.swap_rows(k, j);
                a.swap_cols(k, j);
            } else if let Some(j) = (k + 1..n).find(|&j| !a.get(k, j).is_zero()) {
                // Row/column j added to k: new a_kk = 2 a_kj since a_jj = 0.
                for c in 0..n {
                    let v = a.get(k, c).clone() + a.get(j, c).clone();
                    a.set(k, c, v);
                }
                for r in 0..n {
                    let v = a.get(r, k).clone() + a.get(r, j).clone();
                    a.set(r, k, v);
                }
            } else {
                diag.push(S::zero());
                k += 1;
                continue;
            }
        }
        let pivot = a.get(k, k).clone();
        for i in k + 1..n {
            let factor = a.get(i, k).clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            for c in k..n {
                let v = a.get(i, c).clone() - factor.clone() * a.get(k, c).clone();
                a.set(i, c, v);
            }
            for r in k..n {
                let v = a.get(r, i).clone() - factor.clone() * a.get(r, k).clone();
                a.set(r, i, v);
            }
        }
        diag.push(pivot);
        k += 1;
    }
    diag
}
