//! Minimal dense linear algebra over a generic scalar: LU solves, Householder
//! least squares, Jacobi symmetric eigendecomposition and inverse power
//! iteration. Matrix sizes here are at most a few hundred, so simple
//! cache-naive kernels are adequate.

use crate::error::{Error, Result};
use crate::real::Real;
use serde::Serialize;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut s = T::zero();
            for j in 0..self.cols {
                s += self[(i, j)] * x[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    lu: Mat<T>,
    pivots: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(mut a: Mat<T>) -> Result<Self> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let mut pivots = vec![0usize; n];
        for col in 0..n {
            let mut best = col;
            let mut best_val = a[(col, col)].abs();
            for r in (col + 1)..n {
                let v = a[(r, col)].abs();
                if v > best_val {
                    best = r;
                    best_val = v;
                }
            }
            if best_val <= T::epsilon() * T::of(16.0) {
                return Err(Error::SingularMatrix {
                    pivot: best_val.as_f64(),
                    row: col,
                });
            }
            if best != col {
                for j in 0..n {
                    a.data.swap(col * n + j, best * n + j);
                }
            }
            pivots[col] = best;
            let inv = T::one() / a[(col, col)];
            for r in (col + 1)..n {
                let factor = a[(r, col)] * inv;
                a[(r, col)] = factor;
                if factor != T::zero() {
                    for j in (col + 1)..n {
                        let v = a[(col, j)];
                        a[(r, j)] -= factor * v;
                    }
                }
            }
        }
        Ok(Self { lu: a, pivots })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        for i in 0..n {
            b.swap(i, self.pivots[i]);
        }
        for i in 1..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * b[j];
            }
            b[i] = s / self.lu[(i, i)];
        }
    }
}

/// Solves `a x = b` for a single right-hand side.
pub fn solve<T: Real>(a: Mat<T>, mut b: Vec<T>) -> Result<Vec<T>> {
    let lu = Lu::factor(a)?;
    lu.solve_in_place(&mut b);
    Ok(b)
}

/// Smallest-magnitude eigenvalue of a general real matrix by inverse power
/// iteration. Intended for discretized elliptic operators whose least
/// eigenvalue is real, simple and well separated.
pub fn smallest_eigenvalue<T: Real>(a: &Mat<T>, rtol: T, max_iter: usize) -> Result<(T, Vec<T>)> {
    let n = a.rows;
    let lu = Lu::factor(a.clone())?;
    let mut v: Vec<T> = (0..n)
        .map(|i| T::one() + T::of(0.3) * (T::of_usize(i % 7) - T::of(3.0)) / T::of(3.0))
        .collect();
    normalize(&mut v);
    let mut lambda = T::zero();
    for it in 0..max_iter {
        let mut w = v.clone();
        lu.solve_in_place(&mut w);
        normalize(&mut w);
        let aw = a.matvec(&w);
        let num: T = w.iter().zip(&aw).map(|(x, y)| *x * *y).sum();
        let den: T = w.iter().map(|x| *x * *x).sum();
        let new_lambda = num / den;
        // Residual ||A w - lambda w|| relative to |lambda|.
        let mut res = T::zero();
        for i in 0..n {
            let r = aw[i] - new_lambda * w[i];
            res += r * r;
        }
        res = res.sqrt() / new_lambda.abs().max(T::epsilon());
        let stalled = (new_lambda - lambda).abs() <= rtol * new_lambda.abs();
        v = w;
        lambda = new_lambda;
        if it > 2 && stalled && res < rtol.sqrt() {
            return Ok((lambda, v));
        }
    }
    // Accept anyway if the residual is already small.
    let aw = a.matvec(&v);
    let mut res = T::zero();
    for i in 0..n {
        let r = aw[i] - lambda * v[i];
        res += r * r;
    }
    res = res.sqrt() / lambda.abs().max(T::epsilon());
    if res < rtol.sqrt() {
        Ok((lambda, v))
    } else {
        Err(Error::EigenConvergence {
            iterations: max_iter,
            residual: res.as_f64(),
        })
    }
}

fn normalize<T: Real>(v: &mut [T]) {
    let norm: T = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
    if norm > T::zero() {
        for x in v {
            *x /= norm;
        }
    }
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix by cyclic
/// Jacobi rotations. Used for metric positivity checks and Hessian
/// classification; matrices are tiny (n x n chart dimension).
pub fn symmetric_eigen<T: Real>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= T::epsilon() * T::of(4.0) * (T::one() + m.frobenius_norm_sq().sqrt()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= T::epsilon() * (m[(p, p)].abs() + m[(q, q)].abs() + T::one()) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(T, usize)> = (0..n).map(|i| (m[(i, i)], i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let values: Vec<T> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new_col, (_, old_col)) in pairs.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new_col)] = v[(r, *old_col)];
        }
    }
    (values, vectors)
}

/// Least squares via Householder QR; returns coefficients and the residual
/// vector `b - A x`.
pub fn least_squares<T: Real>(a: &Mat<T>, b: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let m = a.rows;
    let n = a.cols;
    assert!(m >= n, "least_squares needs at least as many rows as columns");
    assert_eq!(b.len(), m);
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    for col in 0..n {
        // Householder reflector for column `col`.
        let mut norm = T::zero();
        for i in col..m {
            norm += r[(i, col)] * r[(i, col)];
        }
        let norm = norm.sqrt();
        if norm <= T::epsilon() * T::of(16.0) {
            return Err(Error::RankDeficient { column: col });
        }
        let alpha = if r[(col, col)] >= T::zero() { -norm } else { norm };
        let mut v = vec![T::zero(); m];
        v[col] = r[(col, col)] - alpha;
        for i in (col + 1)..m {
            v[i] = r[(i, col)];
        }
        let vtv: T = v[col..].iter().map(|x| *x * *x).sum();
        if vtv == T::zero() {
            continue;
        }
        let two = T::of(2.0);
        for j in col..n {
            let mut dot = T::zero();
            for i in col..m {
                dot += v[i] * r[(i, j)];
            }
            let scale = two * dot / vtv;
            for i in col..m {
                let vi = v[i];
                r[(i, j)] -= scale * vi;
            }
        }
        let mut dot = T::zero();
        for i in col..m {
            dot += v[i] * qtb[i];
        }
        let scale = two * dot / vtv;
        for i in col..m {
            qtb[i] -= scale * v[i];
        }
    }
    // Back substitution on the upper-triangular part.
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = qtb[i];
        for j in (i + 1)..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    let ax = a.matvec(&x);
    let resid: Vec<T> = b.iter().zip(&ax).map(|(bi, axi)| *bi - *axi).collect();
    Ok((x, resid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x: Vec<f64> = solve(a, vec![5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = Mat::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        let (vals, vecs) = symmetric_eigen(&a);
        let sqrt2 = std::f64::consts::SQRT_2;
        let expected = [2.0 - sqrt2, 2.0, 2.0 + sqrt2];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
        // Check A v = lambda v for the first pair.
        let v0: Vec<f64> = (0..3).map(|i| vecs[(i, 0)]).collect();
        let av = a.matvec(&v0);
        for i in 0..3 {
            assert!((av[i] - vals[0] * v0[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_recovers_exact_fit() {
        // y = 3 + 2 x over 5 points, exactly representable.
        let xs: Vec<f64> = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let a = Mat::from_rows(&xs.iter().map(|x| vec![1.0, *x]).collect::<Vec<_>>());
        let b: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x).collect();
        let (coef, resid) = least_squares(&a, &b).unwrap();
        assert!((coef[0] - 3.0).abs() < 1e-13);
        assert!((coef[1] - 2.0).abs() < 1e-13);
        assert!(resid.iter().all(|r| r.abs() < 1e-13));
    }

    #[test]
    fn inverse_iteration_finds_least_eigenvalue() {
        let a = Mat::from_rows(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 0.5],
            vec![0.0, 0.5, 2.0],
        ]);
        let (lam, _): (f64, Vec<f64>) = smallest_eigenvalue(&a, 1e-13, 200).unwrap();
        let (vals, _) = symmetric_eigen(&a);
        assert!((lam - vals[0]).abs() < 1e-10);
    }
}
