//! Functions on the unit sphere S^{n-1} stored as coefficients over
//! orthonormal bases of the Laplace eigenspaces V_j (degree-j spherical
//! harmonics).
//!
//! For n = 2 the basis is the Fourier pair cos(j theta)/sqrt(pi),
//! sin(j theta)/sqrt(pi). For n >= 3, V_j is realized as restrictions of
//! harmonic homogeneous polynomials: a basis of ker(Laplacian) on degree-j
//! polynomials is extracted by Gaussian elimination and orthonormalized by
//! Gram–Schmidt under the exact sphere inner product (monomial moments are
//! closed-form, see [`crate::special::sphere_monomial_moment`]).

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::quad::gauss_legendre;
use crate::real::Real;
use crate::special::{sphere_area, sphere_monomial_moment};
use serde::Serialize;

/// Eigenvalue of -Laplace_{S^{n-1}} on degree-j harmonics: mu_j = j (n-2+j).
pub fn laplace_eigenvalue<T: Real>(n: usize, j: usize) -> T {
    let jf = T::of_usize(j);
    jf * (T::of_usize(n) - T::of(2.0) + jf)
}

/// Dimension of V_j in dimension n.
pub fn mode_dimension(n: usize, j: usize) -> usize {
    match j {
        0 => 1,
        1 => n,
        _ => binomial(n + j - 1, j) - binomial(n + j - 3, j - 2),
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Homogeneous polynomial as a sparse list of (coefficient, exponent) pairs.
#[derive(Debug, Clone)]
pub struct Poly<T> {
    pub terms: Vec<(T, Vec<u32>)>,
}

impl<T: Real> Poly<T> {
    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (c, alpha) in &self.terms {
            let mut term = *c;
            for (xi, ai) in x.iter().zip(alpha) {
                for _ in 0..*ai {
                    term *= *xi;
                }
            }
            acc += term;
        }
        acc
    }

    fn scaled(&self, s: T) -> Self {
        Self {
            terms: self.terms.iter().map(|(c, a)| (*c * s, a.clone())).collect(),
        }
    }
}

/// Exact sphere inner product of two homogeneous polynomials.
pub fn sphere_inner<T: Real>(p: &Poly<T>, q: &Poly<T>) -> T {
    let mut acc = T::zero();
    for (cp, ap) in &p.terms {
        for (cq, aq) in &q.terms {
            let sum: Vec<u32> = ap.iter().zip(aq).map(|(a, b)| a + b).collect();
            let m = sphere_monomial_moment::<T>(&sum);
            if m != T::zero() {
                acc += *cp * *cq * m;
            }
        }
    }
    acc
}

/// Orthonormal basis of V_j realized by harmonic polynomials.
#[derive(Debug, Clone)]
pub struct HarmonicBasis<T> {
    pub n: usize,
    pub degree: usize,
    pub functions: Vec<Poly<T>>,
}

impl<T: Real> HarmonicBasis<T> {
    pub fn build(n: usize, degree: usize) -> Self {
        assert!(n >= 2);
        let functions = if n == 2 {
            fourier_polys::<T>(degree)
        } else {
            harmonic_polys_gs::<T>(n, degree)
        };
        debug_assert_eq!(functions.len(), mode_dimension(n, degree));
        Self {
            n,
            degree,
            functions,
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn eval(&self, k: usize, x: &[T]) -> T {
        self.functions[k].eval(x)
    }
}

/// cos(j t), sin(j t) as harmonic polynomials in (x, y), normalized on S^1.
fn fourier_polys<T: Real>(j: usize) -> Vec<Poly<T>> {
    let two_pi = T::of(2.0) * T::PI();
    if j == 0 {
        return vec![Poly {
            terms: vec![(T::one() / two_pi.sqrt(), vec![0, 0])],
        }];
    }
    let norm = T::one() / T::PI().sqrt();
    // Re/Im of (x + i y)^j by binomial expansion.
    let mut cos_terms = Vec::new();
    let mut sin_terms = Vec::new();
    for m in 0..=j {
        let coeff = T::of_usize(binomial(j, m));
        let sign = match m % 4 {
            0 => Some(T::one()),
            2 => Some(-T::one()),
            _ => None,
        };
        let alpha = vec![(j - m) as u32, m as u32];
        if let Some(s) = sign {
            cos_terms.push((coeff * s * norm, alpha));
        } else {
            let s = if m % 4 == 1 { T::one() } else { -T::one() };
            sin_terms.push((coeff * s * norm, alpha));
        }
    }
    vec![Poly { terms: cos_terms }, Poly { terms: sin_terms }]
}

/// Exponent vectors of all degree-`d` monomials in `n` variables,
/// lexicographic and deterministic.
fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fill(&mut out, &mut current, 0, d);
    fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
        if pos == current.len() - 1 {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for k in (0..=remaining).rev() {
            current[pos] = k;
            fill(out, current, pos + 1, remaining - k);
        }
    }
    out
}

/// Basis of harmonic polynomials of degree `j`: null space of the Laplacian
/// map P_j -> P_{j-2}, then Gram–Schmidt on the sphere.
fn harmonic_polys_gs<T: Real>(n: usize, j: usize) -> Vec<Poly<T>> {
    let cols = monomials(n, j as u32);
    if j < 2 {
        // Everything is harmonic; orthonormalize directly.
        let raw: Vec<Poly<T>> = cols
            .into_iter()
            .map(|alpha| Poly {
                terms: vec![(T::one(), alpha)],
            })
            .collect();
        return gram_schmidt(raw, mode_dimension(n, j));
    }
    let rows = monomials(n, j as u32 - 2);
    let row_index = |alpha: &[u32]| rows.iter().position(|r| r == alpha).unwrap();
    let mut m = Mat::<T>::zeros(rows.len(), cols.len());
    for (cidx, alpha) in cols.iter().enumerate() {
        for i in 0..n {
            if alpha[i] >= 2 {
                let mut beta = alpha.clone();
                beta[i] -= 2;
                let f = T::of_usize(alpha[i] as usize) * T::of_usize(alpha[i] as usize - 1);
                m[(row_index(&beta), cidx)] += f;
            }
        }
    }
    let null = null_space(&m);
    let raw: Vec<Poly<T>> = null
        .into_iter()
        .map(|v| Poly {
            terms: v
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c != T::zero())
                .map(|(i, c)| (c, cols[i].clone()))
                .collect(),
        })
        .collect();
    gram_schmidt(raw, mode_dimension(n, j))
}

/// Null-space basis of a (small, integer-entried) matrix by row reduction.
fn null_space<T: Real>(m: &Mat<T>) -> Vec<Vec<T>> {
    let rows = m.rows;
    let cols = m.cols;
    let mut a = m.clone();
    let mut pivot_cols = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        // Find pivot in column c at or below row r.
        let mut best = r;
        let mut best_val = T::zero();
        for i in r..rows {
            if a[(i, c)].abs() > best_val {
                best = i;
                best_val = a[(i, c)].abs();
            }
        }
        if best_val <= T::epsilon() * T::of(256.0) {
            continue;
        }
        if best != r {
            for jj in 0..cols {
                a.data.swap(r * cols + jj, best * cols + jj);
            }
        }
        let inv = T::one() / a[(r, c)];
        for jj in 0..cols {
            a[(r, jj)] = a[(r, jj)] * inv;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != T::zero() {
                    for jj in 0..cols {
                        let v = a[(r, jj)];
                        a[(i, jj)] -= f * v;
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut v = vec![T::zero(); cols];
        v[fc] = T::one();
        for (ri, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -a[(ri, fc)];
        }
        basis.push(v);
    }
    basis
}

/// Modified Gram–Schmidt with re-orthogonalization under the sphere inner
/// product; keeps the first `expected` independent directions.
fn gram_schmidt<T: Real>(raw: Vec<Poly<T>>, expected: usize) -> Vec<Poly<T>> {
    let mut ortho: Vec<Poly<T>> = Vec::with_capacity(expected);
    for mut p in raw {
        for _pass in 0..2 {
            for q in &ortho {
                let proj = sphere_inner(&p, q);
                if proj != T::zero() {
                    // p -= proj * q, merging on exponent vectors.
                    let scaled = q.scaled(-proj);
                    p = add_polys(&p, &scaled);
                }
            }
        }
        let norm_sq = sphere_inner(&p, &p);
        if norm_sq > T::epsilon() * T::of(1024.0) {
            ortho.push(p.scaled(T::one() / norm_sq.sqrt()));
            if ortho.len() == expected {
                break;
            }
        }
    }
    ortho
}

fn add_polys<T: Real>(a: &Poly<T>, b: &Poly<T>) -> Poly<T> {
    let mut terms = a.terms.clone();
    for (c, alpha) in &b.terms {
        if let Some(slot) = terms.iter_mut().find(|(_, a2)| a2 == alpha) {
            slot.0 += *c;
        } else {
            terms.push((*c, alpha.clone()));
        }
    }
    terms.retain(|(c, _)| *c != T::zero());
    Poly { terms }
}

/// A function on S^{n-1} stored blockwise over harmonic degrees; block `j`
/// holds `mode_dimension(n, j)` coefficients over the canonical orthonormal
/// basis, so the L^2 norm is the Euclidean norm of all coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereField<T> {
    n: usize,
    blocks: Vec<Vec<T>>,
}

impl<T: Real> SphereField<T> {
    pub fn zeros(n: usize, max_degree: usize) -> Self {
        assert!(n >= 2);
        Self {
            n,
            blocks: (0..=max_degree).map(|j| vec![T::zero(); mode_dimension(n, j)]).collect(),
        }
    }

    pub fn from_blocks(n: usize, blocks: Vec<Vec<T>>) -> Result<Self> {
        for (j, b) in blocks.iter().enumerate() {
            if b.len() != mode_dimension(n, j) {
                return Err(Error::DimensionMismatch {
                    expected: mode_dimension(n, j),
                    got: b.len(),
                });
            }
        }
        Ok(Self { n, blocks })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Highest stored degree.
    pub fn max_degree(&self) -> usize {
        self.blocks.len().saturating_sub(1)
    }

    pub fn block(&self, j: usize) -> &[T] {
        &self.blocks[j]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.blocks[j]
    }

    pub fn block_norm(&self, j: usize) -> T {
        if j >= self.blocks.len() {
            return T::zero();
        }
        self.blocks[j].iter().map(|c| *c * *c).sum::<T>().sqrt()
    }

    /// L^2(S^{n-1}) norm (Parseval).
    pub fn l2_norm(&self) -> T {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|c| *c * *c)
            .sum::<T>()
            .sqrt()
    }

    /// Integral over the sphere: only the constant block contributes.
    pub fn integral(&self) -> T {
        self.blocks[0][0] * sphere_area::<T>(self.n).sqrt()
    }

    /// L^2 inner product with another field (Parseval).
    pub fn inner(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (x, y) in a.iter().zip(b) {
                acc += *x * *y;
            }
        }
        acc
    }

    /// Evaluates the field at a point of S^{n-1} using the canonical bases.
    /// Intended for tests and diagnostics, not inner loops.
    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (j, block) in self.blocks.iter().enumerate() {
            if block.iter().all(|c| *c == T::zero()) {
                continue;
            }
            let basis = HarmonicBasis::build(self.n, j);
            for (k, c) in block.iter().enumerate() {
                if *c != T::zero() {
                    acc += *c * basis.eval(k, x);
                }
            }
        }
        acc
    }
}

/// Product-rule quadrature on S^{n-1}: trapezoid in the final angle, mapped
/// Gauss–Legendre with weight sin^{n-2} in each colatitude. Returns points
/// (as unit vectors) and weights summing to the sphere area.
pub fn sphere_quadrature<T: Real>(n: usize, resolution: usize) -> Vec<(Vec<T>, T)> {
    assert!(n >= 2);
    if n == 2 {
        let m = resolution.max(8);
        let w = T::of(2.0) * T::PI() / T::of_usize(m);
        return (0..m)
            .map(|k| {
                let t = T::of(2.0) * T::PI() * T::of_usize(k) / T::of_usize(m);
                (vec![t.cos(), t.sin()], w)
            })
            .collect();
    }
    let inner = sphere_quadrature::<T>(n - 1, resolution);
    let (nodes, weights) = gauss_legendre::<T>(resolution.max(8));
    let half_pi = T::PI() * T::of(0.5);
    let mut out = Vec::with_capacity(inner.len() * nodes.len());
    for (t_raw, wt) in nodes.iter().zip(&weights) {
        // Map [-1, 1] -> [0, pi].
        let theta = half_pi * (*t_raw + T::one());
        let jac = half_pi;
        let s = theta.sin();
        let c = theta.cos();
        let sin_pow = s.powi(n as i32 - 2);
        for (omega, wo) in &inner {
            let mut x = Vec::with_capacity(n);
            x.push(c);
            for comp in omega {
                x.push(s * *comp);
            }
            out.push((x, *wt * jac * sin_pow * *wo));
        }
    }
    out
}

/// Projects a function onto degree blocks 0..=max_degree by quadrature.
/// This is the independent oracle used to cross-check the exact-moment paths.
pub fn project_function<T: Real>(
    n: usize,
    max_degree: usize,
    resolution: usize,
    f: impl Fn(&[T]) -> T,
) -> SphereField<T> {
    let quad = sphere_quadrature::<T>(n, resolution);
    let samples: Vec<(Vec<T>, T, T)> = quad
        .into_iter()
        .map(|(x, w)| {
            let fx = f(&x);
            (x, w, fx)
        })
        .collect();
    let mut field = SphereField::zeros(n, max_degree);
    for j in 0..=max_degree {
        let basis = HarmonicBasis::build(n, j);
        for k in 0..basis.len() {
            let mut acc = T::zero();
            for (x, w, fx) in &samples {
                acc += *w * *fx * basis.eval(k, x);
            }
            field.block_mut(j)[k] = acc;
        }
    }
    field
}

/// The mean-removed quadratic field `Theta -> Q(Theta, Theta) - tr(Q)/n`,
/// expressed in the degree-2 block. Purely degree 2 for symmetric Q.
pub fn traceless_quadratic_field<T: Real>(q: &Mat<T>) -> Result<SphereField<T>> {
    let n = q.rows;
    if q.cols != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.cols });
    }
    let asym = q.max_asymmetry();
    if asym > T::tol(1e-12) * (T::one() + q.frobenius_norm_sq().sqrt()) {
        return Err(Error::NotSymmetric {
            what: "quadratic form",
            asymmetry: asym.as_f64(),
        });
    }
    let tr = q.trace();
    let nf = T::of_usize(n);
    // Traceless part as a polynomial sum q0_ab x_a x_b.
    let mut terms = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let mut coeff = q[(a, b)];
            if a == b {
                coeff -= tr / nf;
            }
            if coeff != T::zero() {
                let mut alpha = vec![0u32; n];
                alpha[a] += 1;
                alpha[b] += 1;
                terms.push((coeff, alpha));
            }
        }
    }
    let poly = Poly { terms };
    let basis = HarmonicBasis::<T>::build(n, 2);
    let mut field = SphereField::zeros(n, 2);
    for (k, e) in basis.functions.iter().enumerate() {
        field.block_mut(2)[k] = sphere_inner(&poly, e);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mode_dimensions_match_known_values() {
        assert_eq!(mode_dimension(2, 0), 1);
        assert_eq!(mode_dimension(2, 5), 2);
        assert_eq!(mode_dimension(3, 2), 5);
        assert_eq!(mode_dimension(3, 6), 13);
        assert_eq!(mode_dimension(4, 2), 9);
        assert_eq!(mode_dimension(5, 2), 14);
    }

    #[test]
    fn laplace_eigenvalues() {
        assert_eq!(laplace_eigenvalue::<f64>(4, 0), 0.0);
        assert_eq!(laplace_eigenvalue::<f64>(4, 1), 3.0);
        assert_eq!(laplace_eigenvalue::<f64>(4, 2), 8.0);
        assert_eq!(laplace_eigenvalue::<f64>(3, 2), 6.0);
    }

    #[test]
    fn bases_are_orthonormal() {
        for (n, j) in [(2usize, 3usize), (3, 2), (3, 4), (4, 2), (4, 3), (5, 2)] {
            let basis = HarmonicBasis::<f64>::build(n, j);
            assert_eq!(basis.len(), mode_dimension(n, j), "dim for n={n} j={j}");
            for a in 0..basis.len() {
                for b in a..basis.len() {
                    let ip = sphere_inner(&basis.functions[a], &basis.functions[b]);
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!(
                        (ip - expect).abs() < 1e-10,
                        "n={n} j={j} <e{a}, e{b}> = {ip}"
                    );
                }
            }
        }
    }

    #[test]
    fn basis_functions_are_laplace_eigenfunctions_by_quadrature() {
        // Check int e_k^2 = 1 by quadrature, independent of the exact moments.
        let basis = HarmonicBasis::<f64>::build(3, 2);
        let quad = sphere_quadrature::<f64>(3, 48);
        for e in &basis.functions {
            let mut acc = 0.0;
            for (x, w) in &quad {
                acc += w * e.eval(x).powi(2);
            }
            assert!((acc - 1.0).abs() < 1e-10, "quadrature norm {acc}");
        }
    }

    #[test]
    fn n2_basis_is_fourier() {
        let basis = HarmonicBasis::<f64>::build(2, 3);
        for k in 0..16 {
            let t = 2.0 * PI * k as f64 / 16.0;
            let x = [t.cos(), t.sin()];
            assert!((basis.eval(0, &x) - (3.0 * t).cos() / PI.sqrt()).abs() < 1e-12);
            assert!((basis.eval(1, &x) - (3.0 * t).sin() / PI.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_quadrature_integrates_moments() {
        for n in [2usize, 3, 4] {
            let quad = sphere_quadrature::<f64>(n, 32);
            let total: f64 = quad.iter().map(|(_, w)| *w).sum();
            assert!((total - sphere_area::<f64>(n)).abs() < 1e-9, "area n={n}");
            let x2: f64 = quad.iter().map(|(x, w)| w * x[0] * x[0]).sum();
            let mut alpha = vec![0u32; n];
            alpha[0] = 2;
            assert!((x2 - sphere_monomial_moment::<f64>(&alpha)).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_quadratic_form_projects_to_zero() {
        let q = Mat::<f64>::identity(3);
        let f = traceless_quadratic_field(&q).unwrap();
        assert!(f.l2_norm() < 1e-13);
    }

    #[test]
    fn diag_one_minus_one_gives_cos_2theta() {
        let mut q = Mat::<f64>::zeros(2, 2);
        q[(0, 0)] = 1.0;
        q[(1, 1)] = -1.0;
        let f = traceless_quadratic_field(&q).unwrap();
        // Oracle: direct quadrature projection of Q(Theta,Theta) - tr/2.
        let oracle = project_function(2, 2, 64, |x: &[f64]| x[0] * x[0] - x[1] * x[1]);
        for j in 0..=2 {
            for (a, b) in f.block(j).iter().zip(oracle.block(j)) {
                assert!((a - b).abs() < 1e-10, "block {j}: {a} vs {b}");
            }
        }
        // cos 2theta = x^2 - y^2 on S^1; its coefficient against cos2t/sqrt(pi)
        // is sqrt(pi).
        assert!((f.block(2)[0] - PI.sqrt()).abs() < 1e-12);
        assert!(f.block(2)[1].abs() < 1e-12);
        assert!(f.block_norm(0) < 1e-13);
    }

    #[test]
    fn off_diagonal_form_is_pure_degree_two() {
        let mut q = Mat::<f64>::zeros(3, 3);
        q[(0, 1)] = 1.0;
        q[(1, 0)] = 1.0;
        let f = traceless_quadratic_field(&q).unwrap();
        assert!(f.block_norm(0) < 1e-13);
        assert!(f.block_norm(1) < 1e-13);
        assert!(f.block_norm(2) > 0.1);
        // Mean zero by construction.
        assert!(f.integral().abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_quadratic_form() {
        let mut q = Mat::<f64>::zeros(2, 2);
        q[(0, 1)] = 1.0;
        assert!(traceless_quadratic_field(&q).is_err());
    }

    #[test]
    fn field_eval_matches_polynomial() {
        let mut q = Mat::<f64>::zeros(3, 3);
        q[(0, 0)] = 2.0;
        q[(1, 1)] = -1.0;
        q[(2, 2)] = -1.0;
        q[(0, 1)] = 0.3;
        q[(1, 0)] = 0.3;
        let f = traceless_quadratic_field(&q).unwrap();
        let quad = sphere_quadrature::<f64>(3, 24);
        for (x, _) in quad.iter().take(40) {
            let direct = 2.0 * x[0] * x[0] - x[1] * x[1] - x[2] * x[2] + 0.6 * x[0] * x[1];
            assert!((f.eval(x) - direct).abs() < 1e-9, "at {x:?}");
        }
    }
}
