//! Small dense linear algebra for ambient dimensions up to 16: vector helpers,
//! packed symmetric matrices, Jacobi eigenvalues, and Gram-Schmidt.

use crate::Real;
use serde::{Deserialize, Serialize};

pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<R: Real>(v: &[R]) -> R {
    dot(v, v).sqrt()
}

pub fn scale<R: Real>(v: &[R], s: R) -> Vec<R> {
    v.iter().map(|&x| x * s).collect()
}

pub fn add<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `a + s*b`.
pub fn axpy<R: Real>(a: &[R], s: R, b: &[R]) -> Vec<R> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn normalized<R: Real>(v: &[R]) -> Option<Vec<R>> {
    let n = norm(v);
    if n <= R::zero() || !n.is_finite() {
        None
    } else {
        Some(scale(v, n.recip()))
    }
}

/// Largest absolute entry.
pub fn max_abs<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |m, &x| m.max(x.abs()))
}

/// Symmetric matrix stored as the packed upper triangle, so symmetry is exact
/// by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat<R> {
    dim: usize,
    /// Row-major upper triangle: entry (i, j) with i <= j at `i*dim - i*(i-1)/2 + (j-i)`.
    data: Vec<R>,
}

impl<R: Real> SymMat<R> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![R::zero(); dim * (dim + 1) / 2],
        }
    }

    pub fn from_diagonal(diag: &[R]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        let k = self.index(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: R) {
        let k = self.index(i, j);
        self.data[k] += v;
    }

    /// Quadratic form v^T M w.
    pub fn quad_form(&self, v: &[R], w: &[R]) -> R {
        let mut acc = R::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i] * self.get(i, j) * w[j];
            }
        }
        acc
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<R>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn map<F: Fn(R) -> R>(&self, f: F) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Eigenvalues and eigenvectors by cyclic Jacobi rotations. Returns
    /// `(eigenvalues, eigenvectors)` with eigenvectors as rows, sorted by
    /// ascending eigenvalue.
    pub fn eigen_jacobi(&self) -> (Vec<R>, Vec<Vec<R>>) {
        let n = self.dim;
        let mut a = self.to_dense();
        let mut v = vec![vec![R::zero(); n]; n];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = R::one();
        }
        let tol = R::epsilon() * R::lit(16.0);
        for _sweep in 0..64 {
            let mut off = R::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a[i][j].abs());
                }
            }
            let diag_scale = (0..n).fold(R::lit(1e-300), |m, i| m.max(a[i][i].abs()));
            if off <= tol * diag_scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() <= tol * diag_scale * R::lit(1e-2) {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (R::lit(2.0) * a[p][q]);
                    let t = {
                        let s = if theta >= R::zero() { R::one() } else { -R::one() };
                        s / (theta.abs() + (theta * theta + R::one()).sqrt())
                    };
                    let c = (t * t + R::one()).sqrt().recip();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vpk = v[p][k];
                        let vqk = v[q][k];
                        v[p][k] = c * vpk - s * vqk;
                        v[q][k] = s * vpk + c * vqk;
                    }
                }
            }
        }
        let mut pairs: Vec<(R, Vec<R>)> = (0..n).map(|i| (a[i][i], v[i].clone())).collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite eigenvalues"));
        let vals = pairs.iter().map(|p| p.0).collect();
        let vecs = pairs.into_iter().map(|p| p.1).collect();
        (vals, vecs)
    }

    pub fn min_eigenpair(&self) -> (R, Vec<R>) {
        let (vals, vecs) = self.eigen_jacobi();
        (vals[0], vecs.into_iter().next().expect("dim >= 1"))
    }
}

/// Orthonormalizes `seeds` against `fixed` and each other (modified
/// Gram-Schmidt); seeds whose residual norm falls below `floor` are dropped.
pub fn gram_schmidt<R: Real>(fixed: &[Vec<R>], seeds: &[Vec<R>], floor: R) -> Vec<Vec<R>> {
    let mut basis: Vec<Vec<R>> = Vec::new();
    for seed in seeds {
        let mut r = seed.clone();
        for _ in 0..2 {
            for b in fixed.iter().chain(basis.iter()) {
                let c = dot(&r, b);
                r = axpy(&r, -c, b);
            }
        }
        let n = norm(&r);
        if n > floor {
            basis.push(scale(&r, n.recip()));
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_symmetry_is_exact() {
        let mut m = SymMat::<f64>::zeros(3);
        m.set(0, 2, 0.1 + 0.2);
        assert_eq!(m.get(0, 2).to_bits(), m.get(2, 0).to_bits());
    }

    #[test]
    fn jacobi_diagonal_matrix() {
        let m = SymMat::from_diagonal(&[0.5f64, 2.0, 2.0]);
        let (vals, _) = m.eigen_jacobi();
        assert!((vals[0] - 0.5).abs() < 1e-14);
        assert!((vals[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_known_eigenvalues() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let mut m = SymMat::<f64>::zeros(2);
        m.set(0, 0, 2.0);
        m.set(1, 1, 2.0);
        m.set(0, 1, 1.0);
        let (vals, vecs) = m.eigen_jacobi();
        assert!((vals[0] - 1.0).abs() < 1e-13);
        assert!((vals[1] - 3.0).abs() < 1e-13);
        // Eigenvector check: M v = lambda v.
        let v = &vecs[0];
        let mv = m.mul_vec(v);
        for i in 0..2 {
            assert!((mv[i] - vals[0] * v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_indefinite_sign() {
        let m = SymMat::from_diagonal(&[-1.0f64, 3.0]);
        let (vals, _) = m.eigen_jacobi();
        assert!(vals[0] < 0.0 && vals[1] > 0.0);
    }

    #[test]
    fn gram_schmidt_drops_dependent_seeds() {
        let fixed = vec![vec![1.0f64, 0.0, 0.0]];
        let seeds = vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let basis = gram_schmidt(&fixed, &seeds, 1e-10);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!((norm(b) - 1.0).abs() < 1e-14);
            assert!(dot(b, &fixed[0]).abs() < 1e-14);
        }
    }
}
