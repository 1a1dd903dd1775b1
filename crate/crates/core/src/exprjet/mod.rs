//! Closed-form scalar expressions with exact first and second derivatives.
//!
//! Expressions are parsed once against an ordered list of variable names and
//! then evaluated as order-2 jets ([`Jet2`]): value, gradient and Hessian are
//! carried through every node of the syntax tree by the chain rule, so the
//! derivatives are exact up to rounding. [`fd_oracle`] is an independent
//! finite-difference evaluator kept for cross-checking.
//!
//! The grammar is documented in `docs/grammar.md`.

mod fd;
mod jet;
mod parse;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use fd::fd_oracle;
pub use jet::{eval_jet2, Jet2};
pub use parse::parse;

/// Elementary functions accepted in call position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Asin,
    Acos,
    Atan,
    Asinh,
    Acosh,
    Atanh,
}

impl Func {
    pub const ALL: [Func; 15] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Asin,
        Func::Acos,
        Func::Atan,
        Func::Asinh,
        Func::Acosh,
        Func::Atanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
            Func::Asinh => "asinh",
            Func::Acosh => "acosh",
            Func::Atanh => "atanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Syntax tree node. Variables are resolved to their index at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Numeric literal, kept as source text so exact mode sees every digit.
    Literal(String),
    Pi,
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    /// Power with a variable-free integer exponent; evaluated by repeated
    /// multiplication so any base is allowed.
    PowInt(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// A parsed, closed expression over a declared list of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    vars: Arc<[String]>,
    root: Node,
}

impl Expression {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Plain floating value at `point`.
    pub fn value(&self, point: &[f64]) -> Result<f64, EvalError> {
        fd::value(self, point)
    }

    /// True when the tree references variable `index`.
    pub fn depends_on(&self, index: usize) -> bool {
        self.root.depends_on(index)
    }

    pub(crate) fn display_node<'a>(&'a self, node: &'a Node) -> NodeDisplay<'a> {
        NodeDisplay { vars: &self.vars, node }
    }
}

impl Node {
    pub fn depends_on(&self, index: usize) -> bool {
        match self {
            Node::Literal(_) | Node::Pi => false,
            Node::Var(k) => *k == index,
            Node::Neg(a) | Node::PowInt(a, _) | Node::Call(_, a) => a.depends_on(index),
            Node::Binary(_, a, b) => a.depends_on(index) || b.depends_on(index),
        }
    }

    fn has_vars(&self) -> bool {
        match self {
            Node::Literal(_) | Node::Pi => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::PowInt(a, _) | Node::Call(_, a) => a.has_vars(),
            Node::Binary(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }
}

pub(crate) struct NodeDisplay<'a> {
    vars: &'a [String],
    node: &'a Node,
}

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |node| NodeDisplay { vars: self.vars, node };
        match self.node {
            Node::Literal(text) => write!(f, "{text}"),
            Node::Pi => write!(f, "pi"),
            Node::Var(k) => write!(f, "{}", self.vars[*k]),
            Node::Neg(a) => write!(f, "-({})", sub(a)),
            Node::Binary(op, a, b) => write!(f, "({} {} {})", sub(a), op.symbol(), sub(b)),
            Node::PowInt(a, n) => write!(f, "({})^{n}", sub(a)),
            Node::Call(func, a) => write!(f, "{}({})", func.name(), sub(a)),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("function `{name}` takes exactly one argument, got {found}")]
    Arity { name: String, found: usize },
    #[error("invalid variable list: {0}")]
    InvalidVariables(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("`{subexpr}` is outside its real domain at {point:?}")]
    Domain { subexpr: String, point: Vec<f64> },
    #[error("`{subexpr}` overflowed at {point:?}")]
    Overflow { subexpr: String, point: Vec<f64> },
    #[error("`{subexpr}` has no exact rational value")]
    Inexact { subexpr: String },
    #[error("expected a point with {expected} coordinates, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
}
