//! Finite-difference oracle, independent of the jet engine.
//!
//! Evaluation here goes through a separate complex-valued interpreter. The
//! gradient is a plain central difference of real values. The Hessian is a
//! central difference of complex-step first derivatives,
//! `d_j f(x) ~ Im f(x + i h e_j) / h`, which avoids the catastrophic
//! cancellation of a second difference of real values at `h = 1e-5`.

use num_complex::Complex64;

use super::{BinOp, EvalError, Expression, Func, Jet2, Node};

fn domain(expr: &Expression, node: &Node, point: &[Complex64]) -> EvalError {
    EvalError::Domain {
        subexpr: expr.display_node(node).to_string(),
        point: point.iter().map(|z| z.re).collect(),
    }
}

fn eval(expr: &Expression, node: &Node, point: &[Complex64]) -> Result<Complex64, EvalError> {
    let err = || domain(expr, node, point);
    let z = match node {
        Node::Literal(text) => Complex64::new(text.parse().map_err(|_| err())?, 0.0),
        Node::Pi => Complex64::new(std::f64::consts::PI, 0.0),
        Node::Var(k) => point[*k],
        Node::Neg(a) => -eval(expr, a, point)?,
        Node::PowInt(a, n) => {
            let base = eval(expr, a, point)?;
            if *n < 0 && base == Complex64::new(0.0, 0.0) {
                return Err(err());
            }
            base.powi(*n)
        }
        Node::Binary(op, a, b) => {
            let lhs = eval(expr, a, point)?;
            let rhs = eval(expr, b, point)?;
            match op {
                BinOp::Add => lhs + rhs,
                BinOp::Sub => lhs - rhs,
                BinOp::Mul => lhs * rhs,
                BinOp::Div => {
                    if rhs.re == 0.0 && rhs.im == 0.0 {
                        return Err(err());
                    }
                    lhs / rhs
                }
                BinOp::Pow => {
                    if lhs.re <= 0.0 {
                        return Err(err());
                    }
                    (rhs * lhs.ln()).exp()
                }
            }
        }
        Node::Call(func, a) => {
            let x = eval(expr, a, point)?;
            let re = x.re;
            let in_domain = match func {
                Func::Log | Func::Sqrt => re > 0.0,
                Func::Asin | Func::Acos | Func::Atanh => re.abs() < 1.0,
                Func::Acosh => re > 1.0,
                Func::Tan => re.cos() != 0.0,
                _ => true,
            };
            if !in_domain {
                return Err(err());
            }
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sqrt => x.sqrt(),
                Func::Asin => asin(x),
                Func::Acos => Complex64::new(std::f64::consts::FRAC_PI_2, 0.0) - asin(x),
                Func::Atan => atan(x),
                Func::Asinh => x.asinh(),
                Func::Acosh => x.acosh(),
                Func::Atanh => atanh(x),
            }
        }
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(EvalError::Overflow {
            subexpr: expr.display_node(node).to_string(),
            point: point.iter().map(|z| z.re).collect(),
        });
    }
    Ok(z)
}

fn eval_at(expr: &Expression, point: &[Complex64]) -> Result<Complex64, EvalError> {
    eval(expr, expr.root(), point)
}

/// `ln(1 + w)` without cancellation in the real part when `w` is small.
fn log1p(w: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * w.re + w.re * w.re + w.im * w.im).ln_1p();
    Complex64::new(re, w.im.atan2(1.0 + w.re))
}

// The library versions take the imaginary part of asin/acos/atan from
// `ln |w|` with `|w|` near 1, which loses most digits of a complex step.
fn atanh(z: Complex64) -> Complex64 {
    0.5 * (log1p(z) - log1p(-z))
}

fn atan(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    -i * atanh(i * z)
}

fn asin(z: Complex64) -> Complex64 {
    atan(z / (1.0 - z * z).sqrt())
}

pub(super) fn value(expr: &Expression, point: &[f64]) -> Result<f64, EvalError> {
    if point.len() != expr.arity() {
        return Err(EvalError::Dimension { expected: expr.arity(), found: point.len() });
    }
    let z: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok(eval_at(expr, &z)?.re)
}

/// Complex-step derivative along coordinate `j` at a real point.
fn complex_step(expr: &Expression, point: &[f64], j: usize, step: f64) -> Result<f64, EvalError> {
    let mut z: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    z[j].im = step;
    Ok(eval_at(expr, &z)?.im / step)
}

/// Finite-difference gradient and Hessian of `expr` at `point`.
///
/// Used to validate [`super::eval_jet2`]; any stencil point leaving the
/// domain is a [`EvalError::Domain`].
pub fn fd_oracle(expr: &Expression, point: &[f64], step: f64) -> Result<Jet2<f64>, EvalError> {
    if !(step > 0.0) {
        return Err(EvalError::BadStep(step));
    }
    let m = expr.arity();
    let f0 = value(expr, point)?;
    let mut grad = vec![0.0; m];
    let mut shifted = point.to_vec();
    for (i, g) in grad.iter_mut().enumerate() {
        shifted[i] = point[i] + step;
        let up = value(expr, &shifted)?;
        let h_up = shifted[i] - point[i];
        shifted[i] = point[i] - step;
        let down = value(expr, &shifted)?;
        let h_down = point[i] - shifted[i];
        shifted[i] = point[i];
        *g = (up - down) / (h_up + h_down);
    }
    // raw[i][j] ~ d_i (d_j f)
    let mut raw = vec![vec![0.0; m]; m];
    for i in 0..m {
        shifted[i] = point[i] + step;
        let h_up = shifted[i] - point[i];
        let up: Vec<f64> =
            (0..m).map(|j| complex_step(expr, &shifted, j, step)).collect::<Result<_, _>>()?;
        shifted[i] = point[i] - step;
        let h_down = point[i] - shifted[i];
        let down: Vec<f64> =
            (0..m).map(|j| complex_step(expr, &shifted, j, step)).collect::<Result<_, _>>()?;
        shifted[i] = point[i];
        for j in 0..m {
            raw[i][j] = (up[j] - down[j]) / (h_up + h_down);
        }
    }
    let hess: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| 0.5 * (raw[i][j] + raw[j][i])).collect())
        .collect();
    Ok(Jet2::from_parts(f0, grad, &hess))
}
