//! Parsing and exact differentiation of user-supplied defining functions.
//!
//! Expressions are parsed by recursive descent into an immutable
//! [`ExpressionAst`] and evaluated with exact first and second derivatives by
//! second-order forward jets ([`JetValue`]); no numerical differencing is
//! involved anywhere in this module.
//!
//! # Grammar (EBNF)
//!
//! ```text
//! expression = term { ("+" | "-") term } ;
//! term       = factor { ("*" | "/") factor } ;
//! factor     = "-" factor | power ;
//! power      = atom { "^" exponent } ;
//! exponent   = [ "-" ] atom ;          (* must fold to a finite constant *)
//! atom       = number | variable | function "(" expression ")"
//!            | "(" expression ")" ;
//! function   = "sin" | "cos" | "exp" | "log" | "sqrt" ;
//! number     = digits [ "." [digits] ] [ ("e"|"E") ["+"|"-"] digits ] ;
//! ```
//!
//! All binary operators are left-associative, with precedence
//! `^` > unary `-` > `*`,`/` > `+`,`-`. Variables are `x0`..`x15` (bounded by
//! the declared dimension); profile expressions instead use the single
//! variable `phi` via [`parse_with_variables`]. Non-smooth primitives (`abs`,
//! `floor`, ...) are rejected at parse time, and `^` requires a constant
//! exponent, so every accepted expression is smooth wherever it is defined.

mod jet;
mod parser;

pub use jet::JetValue;

use crate::linalg::SymMat;
use crate::Real;
use std::fmt;
use thiserror::Error;

/// Maximum number of variables (`x0`..`x15`).
pub const MAX_VARIABLES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError<R: Real> {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("variable `{name}` at byte {position} exceeds dimension {dimension}")]
    DimensionMismatch {
        position: usize,
        name: String,
        dimension: usize,
    },
    #[error("non-smooth function `{name}` at byte {position} is not allowed")]
    NonSmoothFunction { position: usize, name: String },
    #[error("dimension {dimension} outside supported range 1..={max}", max = MAX_VARIABLES)]
    InvalidDimension { dimension: usize },
    #[error("domain error: {operation} of {argument} in `{subexpression}`")]
    Domain {
        operation: &'static str,
        subexpression: String,
        argument: R,
    },
}

pub type ExprResult<T, R> = Result<T, ExprError<R>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Expression tree node. `Pow` keeps its exponent as a folded constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Node<R> {
    Constant(R),
    Variable(usize),
    Unary(UnaryOp, Box<Node<R>>),
    Binary(BinaryOp, Box<Node<R>>, Box<Node<R>>),
    Pow(Box<Node<R>>, R),
}

/// A parsed, immutable expression in `dimension` variables.
///
/// Safe to share across threads; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionAst<R> {
    root: Node<R>,
    dimension: usize,
    variables: Vec<String>,
}

/// Parses `text` as a function of the variables `x0`..`x{dimension-1}`.
pub fn parse_expression<R: Real>(text: &str, dimension: usize) -> ExprResult<ExpressionAst<R>, R> {
    if dimension == 0 || dimension > MAX_VARIABLES {
        return Err(ExprError::InvalidDimension { dimension });
    }
    let names: Vec<String> = (0..dimension).map(|i| format!("x{i}")).collect();
    parser::parse(text, &names)
}

/// Parses `text` against an explicit variable table (e.g. `["phi"]` for
/// revolution profiles).
pub fn parse_with_variables<R: Real>(
    text: &str,
    variables: &[&str],
) -> ExprResult<ExpressionAst<R>, R> {
    if variables.is_empty() || variables.len() > MAX_VARIABLES {
        return Err(ExprError::InvalidDimension {
            dimension: variables.len(),
        });
    }
    let names: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
    parser::parse(text, &names)
}

/// Evaluates the expression with exact gradient and Hessian at `x`.
pub fn jet_eval<R: Real>(ast: &ExpressionAst<R>, x: &[R]) -> ExprResult<JetValue<R>, R> {
    ast.jet(x)
}

impl<R: Real> ExpressionAst<R> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn root(&self) -> &Node<R> {
        &self.root
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variables
    }

    /// Number of distinct variables that actually occur.
    pub fn distinct_variables(&self) -> usize {
        let mut seen = vec![false; self.dimension];
        fn walk<R>(node: &Node<R>, seen: &mut [bool]) {
            match node {
                Node::Constant(_) => {}
                Node::Variable(i) => seen[*i] = true,
                Node::Unary(_, c) => walk(c, seen),
                Node::Binary(_, a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
                Node::Pow(b, _) => walk(b, seen),
            }
        }
        walk(&self.root, &mut seen);
        seen.iter().filter(|&&s| s).count()
    }

    /// Value only.
    pub fn eval(&self, x: &[R]) -> ExprResult<R, R> {
        assert_eq!(x.len(), self.dimension, "point dimension mismatch");
        eval_value(&self.root, x, &self.variables)
    }

    /// Value and gradient (first-order jet).
    pub fn eval_with_gradient(&self, x: &[R]) -> ExprResult<(R, Vec<R>), R> {
        assert_eq!(x.len(), self.dimension, "point dimension mismatch");
        let j = jet::eval_jet1(&self.root, x, &self.variables)?;
        Ok((j.0, j.1))
    }

    /// Full second-order jet.
    pub fn jet(&self, x: &[R]) -> ExprResult<JetValue<R>, R> {
        assert_eq!(x.len(), self.dimension, "point dimension mismatch");
        jet::eval_jet2(&self.root, x, &self.variables)
    }
}

fn eval_value<R: Real>(node: &Node<R>, x: &[R], names: &[String]) -> ExprResult<R, R> {
    Ok(match node {
        Node::Constant(c) => *c,
        Node::Variable(i) => x[*i],
        Node::Unary(op, c) => {
            let u = eval_value(c, x, names)?;
            match op {
                UnaryOp::Neg => -u,
                UnaryOp::Sin => u.sin(),
                UnaryOp::Cos => u.cos(),
                UnaryOp::Exp => u.exp(),
                UnaryOp::Log => {
                    if u <= R::zero() {
                        return Err(domain("log", node, names, u));
                    }
                    u.ln()
                }
                UnaryOp::Sqrt => {
                    if u < R::zero() {
                        return Err(domain("sqrt", node, names, u));
                    }
                    u.sqrt()
                }
            }
        }
        Node::Binary(op, a, b) => {
            let va = eval_value(a, x, names)?;
            let vb = eval_value(b, x, names)?;
            match op {
                BinaryOp::Add => va + vb,
                BinaryOp::Sub => va - vb,
                BinaryOp::Mul => va * vb,
                BinaryOp::Div => {
                    if vb == R::zero() {
                        return Err(domain("division by zero", node, names, vb));
                    }
                    va / vb
                }
            }
        }
        Node::Pow(base, c) => {
            let vb = eval_value(base, x, names)?;
            jet::pow_value(vb, *c).ok_or_else(|| domain("pow", node, names, vb))?
        }
    })
}

pub(crate) fn domain<R: Real>(
    operation: &'static str,
    node: &Node<R>,
    names: &[String],
    argument: R,
) -> ExprError<R> {
    ExprError::Domain {
        operation,
        subexpression: render(node, names),
        argument,
    }
}

// Precedence levels for printing: + - (1), * / (2), unary - (3), ^ (4).
fn render_prec<R: Real>(node: &Node<R>, names: &[String], parent: u8, out: &mut String) {
    let prec = match node {
        Node::Constant(_) | Node::Variable(_) => 5,
        Node::Unary(UnaryOp::Neg, _) => 3,
        Node::Unary(..) => 5,
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Node::Pow(..) => 4,
    };
    let need_paren = prec < parent;
    if need_paren {
        out.push('(');
    }
    match node {
        Node::Constant(c) => {
            if *c < R::zero() {
                // A bare negative constant only appears through folding; print
                // it re-parseable as a unary minus.
                out.push('-');
                out.push_str(&format!("{}", -*c));
            } else {
                out.push_str(&format!("{c}"));
            }
        }
        Node::Variable(i) => out.push_str(&names[*i]),
        Node::Unary(UnaryOp::Neg, child) => {
            out.push('-');
            render_prec(child, names, 3, out);
        }
        Node::Unary(op, child) => {
            out.push_str(op.name());
            out.push('(');
            render_prec(child, names, 0, out);
            out.push(')');
        }
        Node::Binary(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinaryOp::Add => ("+", 1, 2),
                BinaryOp::Sub => ("-", 1, 2),
                BinaryOp::Mul => ("*", 2, 3),
                BinaryOp::Div => ("/", 2, 3),
            };
            render_prec(a, names, lp, out);
            out.push_str(sym);
            render_prec(b, names, rp, out);
        }
        Node::Pow(base, c) => {
            render_prec(base, names, 5, out);
            out.push('^');
            if *c < R::zero() {
                out.push('-');
                out.push_str(&format!("{}", -*c));
            } else {
                out.push_str(&format!("{c}"));
            }
        }
    }
    if need_paren {
        out.push(')');
    }
}

pub(crate) fn render<R: Real>(node: &Node<R>, names: &[String]) -> String {
    let mut s = String::new();
    render_prec(node, names, 0, &mut s);
    s
}

impl<R: Real> fmt::Display for ExpressionAst<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.root, &self.variables))
    }
}

/// Constructs a constant AST (used for trivially-zero expressions).
pub fn constant_ast<R: Real>(value: R, dimension: usize) -> ExpressionAst<R> {
    ExpressionAst {
        root: Node::Constant(value),
        dimension,
        variables: (0..dimension).map(|i| format!("x{i}")).collect(),
    }
}

pub(crate) fn ast_from_parts<R: Real>(root: Node<R>, variables: Vec<String>) -> ExpressionAst<R> {
    ExpressionAst {
        dimension: variables.len(),
        root,
        variables,
    }
}

/// Convenience wrapper: the Hessian as a packed symmetric matrix is part of
/// [`JetValue`]; this re-export keeps call sites short.
pub type Hessian<R> = SymMat<R>;

#[cfg(test)]
mod tests;
