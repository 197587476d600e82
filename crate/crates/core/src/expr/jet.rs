//! Second-order forward-mode jets: (value, gradient, Hessian) triples
//! propagated node by node. Dense gradients and packed-symmetric Hessians;
//! dimensions are small (n <= 16), so the O(n^2) cost per node is fine.

use super::{domain, BinaryOp, ExprResult, Node, UnaryOp};
use crate::linalg::SymMat;
use crate::Real;
use serde::{Deserialize, Serialize};

/// Value, gradient, and exactly-symmetric Hessian of an expression at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetValue<R> {
    pub value: R,
    pub gradient: Vec<R>,
    pub hessian: SymMat<R>,
}

impl<R: Real> JetValue<R> {
    pub fn constant(value: R, dim: usize) -> Self {
        Self {
            value,
            gradient: vec![R::zero(); dim],
            hessian: SymMat::zeros(dim),
        }
    }

    fn variable(index: usize, value: R, dim: usize) -> Self {
        let mut j = Self::constant(value, dim);
        j.gradient[index] = R::one();
        j
    }

    fn dim(&self) -> usize {
        self.gradient.len()
    }

    /// Chain rule for a scalar function g with g(u), g'(u), g''(u) given.
    fn chain(&self, value: R, d1: R, d2: R) -> Self {
        let dim = self.dim();
        let mut hessian = SymMat::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                hessian.set(
                    i,
                    j,
                    d1 * self.hessian.get(i, j) + d2 * self.gradient[i] * self.gradient[j],
                );
            }
        }
        Self {
            value,
            gradient: self.gradient.iter().map(|&g| d1 * g).collect(),
            hessian,
        }
    }

    fn add(&self, other: &Self) -> Self {
        let dim = self.dim();
        let mut hessian = SymMat::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                hessian.set(i, j, self.hessian.get(i, j) + other.hessian.get(i, j));
            }
        }
        Self {
            value: self.value + other.value,
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(&a, &b)| a + b)
                .collect(),
            hessian,
        }
    }

    fn sub(&self, other: &Self) -> Self {
        let dim = self.dim();
        let mut hessian = SymMat::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                hessian.set(i, j, self.hessian.get(i, j) - other.hessian.get(i, j));
            }
        }
        Self {
            value: self.value - other.value,
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(&a, &b)| a - b)
                .collect(),
            hessian,
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let dim = self.dim();
        let mut hessian = SymMat::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                hessian.set(
                    i,
                    j,
                    self.value * other.hessian.get(i, j)
                        + other.value * self.hessian.get(i, j)
                        + self.gradient[i] * other.gradient[j]
                        + self.gradient[j] * other.gradient[i],
                );
            }
        }
        Self {
            value: self.value * other.value,
            gradient: (0..dim)
                .map(|i| self.value * other.gradient[i] + other.value * self.gradient[i])
                .collect(),
            hessian,
        }
    }

    /// Quotient rule rearranged from u = w * v, which avoids 1/v^3 terms.
    fn div(&self, other: &Self) -> Self {
        let dim = self.dim();
        let w = self.value / other.value;
        let grad: Vec<R> = (0..dim)
            .map(|i| (self.gradient[i] - w * other.gradient[i]) / other.value)
            .collect();
        let mut hessian = SymMat::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let num = self.hessian.get(i, j)
                    - grad[i] * other.gradient[j]
                    - grad[j] * other.gradient[i]
                    - w * other.hessian.get(i, j);
                hessian.set(i, j, num / other.value);
            }
        }
        Self {
            value: w,
            gradient: grad,
            hessian,
        }
    }
}

/// base^c for a constant exponent; `None` when undefined over the reals
/// (negative base with fractional exponent, zero base with negative exponent).
pub(crate) fn pow_value<R: Real>(base: R, c: R) -> Option<R> {
    if let Some(ci) = as_integer(c) {
        if base == R::zero() && ci < 0 {
            return None;
        }
        return Some(base.powi(ci));
    }
    if base < R::zero() {
        return None;
    }
    Some(base.powf(c))
}

fn as_integer<R: Real>(c: R) -> Option<i32> {
    if c.fract() == R::zero() && c.abs() <= R::lit(1e6) {
        Some(c.to_i32()?)
    } else {
        None
    }
}

fn pow_jet<R: Real>(u: &JetValue<R>, c: R, node: &Node<R>, names: &[String]) -> ExprResult<JetValue<R>, R> {
    let err = |arg: R| domain("pow", node, names, arg);
    if c == R::zero() {
        return Ok(JetValue::constant(R::one(), u.dim()));
    }
    let one = R::one();
    if let Some(ci) = as_integer(c) {
        if u.value == R::zero() && ci < 2 {
            // Value/derivatives of x^1 at 0 are fine; anything below needs
            // negative powers of zero.
            if ci == 1 {
                return Ok(u.chain(R::zero(), one, R::zero()));
            }
            return Err(err(u.value));
        }
        let value = u.value.powi(ci);
        let d1 = c * u.value.powi(ci - 1);
        let d2 = if ci == 1 {
            R::zero()
        } else {
            c * (c - one) * u.value.powi(ci - 2)
        };
        return Ok(u.chain(value, d1, d2));
    }
    if u.value <= R::zero() {
        return Err(err(u.value));
    }
    let value = u.value.powf(c);
    let d1 = c * u.value.powf(c - one);
    let d2 = c * (c - one) * u.value.powf(c - one - one);
    Ok(u.chain(value, d1, d2))
}

pub(super) fn eval_jet2<R: Real>(
    node: &Node<R>,
    x: &[R],
    names: &[String],
) -> ExprResult<JetValue<R>, R> {
    let dim = x.len();
    Ok(match node {
        Node::Constant(c) => JetValue::constant(*c, dim),
        Node::Variable(i) => JetValue::variable(*i, x[*i], dim),
        Node::Unary(op, child) => {
            let u = eval_jet2(child, x, names)?;
            let v = u.value;
            match op {
                UnaryOp::Neg => u.chain(-v, -R::one(), R::zero()),
                UnaryOp::Sin => u.chain(v.sin(), v.cos(), -v.sin()),
                UnaryOp::Cos => u.chain(v.cos(), -v.sin(), -v.cos()),
                UnaryOp::Exp => {
                    let e = v.exp();
                    u.chain(e, e, e)
                }
                UnaryOp::Log => {
                    if v <= R::zero() {
                        return Err(domain("log", node, names, v));
                    }
                    let inv = v.recip();
                    u.chain(v.ln(), inv, -inv * inv)
                }
                UnaryOp::Sqrt => {
                    if v <= R::zero() {
                        return Err(domain("sqrt", node, names, v));
                    }
                    let s = v.sqrt();
                    let d1 = (R::lit(2.0) * s).recip();
                    let d2 = -d1 / (R::lit(2.0) * v);
                    u.chain(s, d1, d2)
                }
            }
        }
        Node::Binary(op, a, b) => {
            let ja = eval_jet2(a, x, names)?;
            let jb = eval_jet2(b, x, names)?;
            match op {
                BinaryOp::Add => ja.add(&jb),
                BinaryOp::Sub => ja.sub(&jb),
                BinaryOp::Mul => ja.mul(&jb),
                BinaryOp::Div => {
                    if jb.value == R::zero() {
                        return Err(domain("division by zero", node, names, jb.value));
                    }
                    ja.div(&jb)
                }
            }
        }
        Node::Pow(base, c) => {
            let ju = eval_jet2(base, x, names)?;
            pow_jet(&ju, *c, node, names)?
        }
    })
}

/// First-order variant used where only gradients are needed (constraint
/// projection); identical domain handling.
pub(super) fn eval_jet1<R: Real>(
    node: &Node<R>,
    x: &[R],
    names: &[String],
) -> ExprResult<(R, Vec<R>), R> {
    let dim = x.len();
    let chain = |u: (R, Vec<R>), value: R, d1: R| -> (R, Vec<R>) {
        (value, u.1.iter().map(|&g| d1 * g).collect())
    };
    Ok(match node {
        Node::Constant(c) => (*c, vec![R::zero(); dim]),
        Node::Variable(i) => {
            let mut g = vec![R::zero(); dim];
            g[*i] = R::one();
            (x[*i], g)
        }
        Node::Unary(op, child) => {
            let u = eval_jet1(child, x, names)?;
            let v = u.0;
            match op {
                UnaryOp::Neg => chain(u, -v, -R::one()),
                UnaryOp::Sin => chain(u, v.sin(), v.cos()),
                UnaryOp::Cos => chain(u, v.cos(), -v.sin()),
                UnaryOp::Exp => {
                    let e = v.exp();
                    chain(u, e, e)
                }
                UnaryOp::Log => {
                    if v <= R::zero() {
                        return Err(domain("log", node, names, v));
                    }
                    chain(u, v.ln(), v.recip())
                }
                UnaryOp::Sqrt => {
                    if v <= R::zero() {
                        return Err(domain("sqrt", node, names, v));
                    }
                    let s = v.sqrt();
                    chain(u, s, (R::lit(2.0) * s).recip())
                }
            }
        }
        Node::Binary(op, a, b) => {
            let (va, ga) = eval_jet1(a, x, names)?;
            let (vb, gb) = eval_jet1(b, x, names)?;
            match op {
                BinaryOp::Add => (va + vb, ga.iter().zip(&gb).map(|(&p, &q)| p + q).collect()),
                BinaryOp::Sub => (va - vb, ga.iter().zip(&gb).map(|(&p, &q)| p - q).collect()),
                BinaryOp::Mul => (
                    va * vb,
                    ga.iter()
                        .zip(&gb)
                        .map(|(&p, &q)| va * q + vb * p)
                        .collect(),
                ),
                BinaryOp::Div => {
                    if vb == R::zero() {
                        return Err(domain("division by zero", node, names, vb));
                    }
                    let w = va / vb;
                    (
                        w,
                        ga.iter()
                            .zip(&gb)
                            .map(|(&p, &q)| (p - w * q) / vb)
                            .collect(),
                    )
                }
            }
        }
        Node::Pow(base, c) => {
            let (v, g) = eval_jet1(base, x, names)?;
            if *c == R::zero() {
                return Ok((R::one(), vec![R::zero(); dim]));
            }
            let (value, d1) = if let Some(ci) = as_integer(*c) {
                if v == R::zero() && ci < 1 {
                    return Err(domain("pow", node, names, v));
                }
                (v.powi(ci), *c * v.powi(ci - 1))
            } else {
                if v <= R::zero() {
                    return Err(domain("pow", node, names, v));
                }
                (v.powf(*c), *c * v.powf(*c - R::one()))
            };
            (value, g.iter().map(|&p| d1 * p).collect())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::parse_expression;

    #[test]
    fn pow_at_zero_base() {
        let ast = parse_expression::<f64>("x0^2", 1).unwrap();
        let j = ast.jet(&[0.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.gradient[0], 0.0);
        assert_eq!(j.hessian.get(0, 0), 2.0);
    }

    #[test]
    fn pow_linear_at_zero() {
        let ast = parse_expression::<f64>("x0^1", 1).unwrap();
        let j = ast.jet(&[0.0]).unwrap();
        assert_eq!(j.gradient[0], 1.0);
        assert_eq!(j.hessian.get(0, 0), 0.0);
    }

    #[test]
    fn negative_power_of_zero_is_domain_error() {
        let ast = parse_expression::<f64>("x0^-1", 1).unwrap();
        assert!(ast.jet(&[0.0]).is_err());
    }
}
