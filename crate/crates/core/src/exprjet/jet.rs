use crate::scalar::{ElementaryError, Scalar};

use super::{BinOp, EvalError, Expression, Func, Node};

/// Value, gradient and Hessian of a scalar expression at a point.
///
/// The Hessian is stored as its packed upper triangle, so it is symmetric
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2<S> {
    value: S,
    grad: Vec<S>,
    hess: Vec<S>,
}

fn packed_len(m: usize) -> usize {
    m * (m + 1) / 2
}

fn packed_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows 0..i hold m + (m-1) + ... + (m-i+1) entries
    i * m - i * i.saturating_sub(1) / 2 + (j - i)
}

impl<S: Scalar> Jet2<S> {
    pub fn constant(dim: usize, value: S) -> Self {
        Jet2 { value, grad: vec![S::zero(); dim], hess: vec![S::zero(); packed_len(dim)] }
    }

    /// Seed for coordinate `index`: unit gradient, zero Hessian.
    pub fn variable(dim: usize, index: usize, value: S) -> Self {
        let mut jet = Self::constant(dim, value);
        jet.grad[index] = S::one();
        jet
    }

    /// Builds a jet from a full Hessian, keeping its upper triangle.
    pub fn from_parts(value: S, grad: Vec<S>, hess: &[Vec<S>]) -> Self {
        let m = grad.len();
        let mut packed = Vec::with_capacity(packed_len(m));
        for (i, row) in hess.iter().enumerate().take(m) {
            packed.extend(row[i..m].iter().cloned());
        }
        Jet2 { value, grad, hess: packed }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> &S {
        &self.value
    }

    pub fn grad(&self) -> &[S] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> &S {
        &self.hess[packed_index(self.dim(), i, j)]
    }

    /// Packed upper triangle, row-major.
    pub fn hess_packed(&self) -> &[S] {
        &self.hess
    }

    pub fn hess_matrix(&self) -> Vec<Vec<S>> {
        let m = self.dim();
        (0..m).map(|i| (0..m).map(|j| self.hess(i, j).clone()).collect()).collect()
    }

    fn zip(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Self {
        Jet2 {
            value: f(&self.value, &other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| f(a, b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.clone() - b.clone())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn scale(&self, factor: &S) -> Self {
        Jet2 {
            value: self.value.clone() * factor.clone(),
            grad: self.grad.iter().map(|g| g.clone() * factor.clone()).collect(),
            hess: self.hess.iter().map(|h| h.clone() * factor.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = self.dim();
        let (a, b) = (&self.value, &other.value);
        let grad = (0..m)
            .map(|i| self.grad[i].clone() * b.clone() + other.grad[i].clone() * a.clone())
            .collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                hess.push(
                    self.hess[k].clone() * b.clone()
                        + other.hess[k].clone() * a.clone()
                        + self.grad[i].clone() * other.grad[j].clone()
                        + self.grad[j].clone() * other.grad[i].clone(),
                );
                k += 1;
            }
        }
        Jet2 { value: a.clone() * b.clone(), grad, hess }
    }

    /// Chain rule for `f(self)` given `[f, f', f'']` at the current value.
    pub fn compose(&self, derivs: [S; 3]) -> Self {
        let [f0, f1, f2] = derivs;
        let m = self.dim();
        let grad = self.grad.iter().map(|g| f1.clone() * g.clone()).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                hess.push(
                    f1.clone() * self.hess[k].clone()
                        + f2.clone() * self.grad[i].clone() * self.grad[j].clone(),
                );
                k += 1;
            }
        }
        Jet2 { value: f0, grad, hess }
    }

    /// `1/self`; `None` when the value is zero.
    pub fn recip(&self) -> Option<Self> {
        if self.value.is_zero() {
            return None;
        }
        let inv = S::one() / self.value.clone();
        let inv2 = inv.clone() * inv.clone();
        let two = S::from_i64(2);
        Some(self.compose([inv.clone(), -inv2.clone(), two * inv2 * inv]))
    }

    fn powi(&self, n: u32) -> Self {
        let m = self.dim();
        let mut result = Self::constant(m, S::one());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(S::is_finite)
            && self.hess.iter().all(S::is_finite)
    }
}

/// Evaluates `expr` and its exact first and second derivatives at `point`.
pub fn eval_jet2<S: Scalar>(expr: &Expression, point: &[S]) -> Result<Jet2<S>, EvalError> {
    if point.len() != expr.arity() {
        return Err(EvalError::Dimension { expected: expr.arity(), found: point.len() });
    }
    Evaluator { expr, point }.eval(expr.root())
}

struct Evaluator<'a, S> {
    expr: &'a Expression,
    point: &'a [S],
}

impl<S: Scalar> Evaluator<'_, S> {
    fn domain(&self, node: &Node) -> EvalError {
        EvalError::Domain {
            subexpr: self.expr.display_node(node).to_string(),
            point: self.point.iter().map(S::to_f64).collect(),
        }
    }

    fn inexact(&self, node: &Node) -> EvalError {
        EvalError::Inexact { subexpr: self.expr.display_node(node).to_string() }
    }

    fn elementary(&self, node: &Node, func: Func, arg: &Jet2<S>) -> Result<Jet2<S>, EvalError> {
        match S::elementary(func, arg.value()) {
            Ok(derivs) => Ok(arg.compose(derivs)),
            Err(ElementaryError::OutOfDomain) => Err(self.domain(node)),
            Err(ElementaryError::Inexact) => Err(self.inexact(node)),
        }
    }

    fn eval(&self, node: &Node) -> Result<Jet2<S>, EvalError> {
        let m = self.point.len();
        let jet = match node {
            Node::Literal(text) => {
                Jet2::constant(m, S::from_literal(text).ok_or_else(|| self.inexact(node))?)
            }
            Node::Pi => Jet2::constant(m, S::pi().ok_or_else(|| self.inexact(node))?),
            Node::Var(k) => Jet2::variable(m, *k, self.point[*k].clone()),
            Node::Neg(a) => self.eval(a)?.neg(),
            Node::Call(func, a) => {
                let arg = self.eval(a)?;
                self.elementary(node, *func, &arg)?
            }
            Node::PowInt(a, n) => {
                let base = self.eval(a)?;
                let pos = base.powi(n.unsigned_abs());
                if *n < 0 {
                    pos.recip().ok_or_else(|| self.domain(node))?
                } else {
                    pos
                }
            }
            Node::Binary(op, a, b) => {
                let lhs = self.eval(a)?;
                let rhs = self.eval(b)?;
                match op {
                    BinOp::Add => lhs.add(&rhs),
                    BinOp::Sub => lhs.sub(&rhs),
                    BinOp::Mul => lhs.mul(&rhs),
                    BinOp::Div => lhs.mul(&rhs.recip().ok_or_else(|| self.domain(node))?),
                    BinOp::Pow => {
                        // base^e = exp(e * log(base)), base > 0
                        let log = self.elementary(node, Func::Log, &lhs)?;
                        let prod = rhs.mul(&log);
                        self.elementary(node, Func::Exp, &prod)?
                    }
                }
            }
        };
        if !jet.is_finite() {
            return Err(EvalError::Overflow {
                subexpr: self.expr.display_node(node).to_string(),
                point: self.point.iter().map(S::to_f64).collect(),
            });
        }
        Ok(jet)
    }
}
