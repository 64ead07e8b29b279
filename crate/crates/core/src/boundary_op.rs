//! The linearized boundary operator of the Neumann-data map on the unit
//! ball, diagonal over spherical-harmonic degrees.
//!
//! For a mean-zero boundary perturbation with degree-j component w, the
//! operator acts as multiplication by
//!
//! ```text
//! alpha_j = b_j'(1) + c2,
//! ```
//!
//! where b_j solves `r^2 b'' + (n-1) r b' + (r^2 lambda1 - mu_j) b = 0`,
//! regular at the origin (`b ~ r^j`), scaled to `b_j(1) = -c1`.
//!
//! The substitution `b = r^j w` turns the mode equation into the radial ball
//! equation in effective dimension `n + 2j`
//! (`w'' + (n+2j-1)/r w' + lambda1 w = 0`), which keeps every mode O(1) and
//! removes the overflow risk of shooting `r^j` branches directly.
//!
//! Degree 0 is resonant: the regular solution of the mu_0 equation is the
//! ball eigenfunction itself, which vanishes at r = 1, so no solution can
//! attain b(1) = -c1 != 0. The operator's domain is mean-zero fields, so the
//! degree-0 block is rejected rather than solved.

use crate::ball::{constants_checked, BallConstants};
use crate::error::{Error, Result};
use crate::harmonics::SphereField;
use crate::ode::{integrate, OdeOptions};
use crate::profile::{RadialProfile, DEFAULT_GRID};
use crate::real::Real;
use serde::Serialize;

const SHOOT_START: f64 = 1e-6;

/// A harmonic degree together with its sphere-Laplacian eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicMode {
    pub n: usize,
    pub degree: usize,
}

impl HarmonicMode {
    pub fn laplace_eigenvalue<T: Real>(&self) -> T {
        crate::harmonics::laplace_eigenvalue(self.n, self.degree)
    }
}

/// Solves the regularized mode equation in effective dimension `n + 2j`,
/// returning `(w(1), w'(1))` plus the sampled profile when requested.
fn solve_mode_w<T: Real>(
    n: usize,
    j: usize,
    lambda1: T,
    sample: bool,
) -> Result<((T, T), Option<(Vec<T>, Vec<T>, Vec<T>)>)> {
    let n_eff = T::of_usize(n + 2 * j);
    let r0 = T::of(SHOOT_START);
    let a2 = -lambda1 / (T::of(2.0) * n_eff);
    let a4 = lambda1 * lambda1 / (T::of(8.0) * n_eff * (n_eff + T::of(2.0)));
    let series_val = |r: T| T::one() + a2 * r * r + a4 * r * r * r * r;
    let series_d1 = |r: T| T::of(2.0) * a2 * r + T::of(4.0) * a4 * r * r * r;
    let y0 = [series_val(r0), series_d1(r0)];
    let nm1 = n_eff - T::one();
    let f = |r: T, y: &[T; 2]| [y[1], -nm1 / r * y[1] - lambda1 * y[0]];
    let opts = OdeOptions::default();
    if !sample {
        let (y, _) = integrate(&f, r0, T::one(), y0, &[], &opts)?;
        return Ok(((y[0], y[1]), None));
    }
    let m = DEFAULT_GRID;
    let h = T::one() / T::of_usize(m);
    let nodes: Vec<T> = (1..=m).map(|i| T::of_usize(i) * h).collect();
    let (yend, states) = integrate(&f, r0, T::one(), y0, &nodes, &opts)?;
    let mut values = Vec::with_capacity(m + 1);
    let mut deriv1 = Vec::with_capacity(m + 1);
    let mut deriv2 = Vec::with_capacity(m + 1);
    values.push(T::one());
    deriv1.push(T::zero());
    deriv2.push(T::of(2.0) * a2);
    for (i, y) in states.iter().enumerate() {
        let r = T::of_usize(i + 1) * h;
        values.push(y[0]);
        deriv1.push(y[1]);
        deriv2.push(-nm1 / r * y[1] - lambda1 * y[0]);
    }
    Ok(((yend[0], yend[1]), Some((values, deriv1, deriv2))))
}

/// The boundary mode solution b_j with `b_j(1) = -c1`, for `j >= 1`.
pub fn radial_mode<T: Real>(n: usize, j: usize) -> Result<RadialProfile<T>> {
    let (consts, _) = constants_checked::<T>(n)?;
    radial_mode_with(&consts, j)
}

pub fn radial_mode_with<T: Real>(consts: &BallConstants<T>, j: usize) -> Result<RadialProfile<T>> {
    if j == 0 {
        return Err(Error::ResonantMode);
    }
    let n = consts.n;
    let ((w1, _), samples) = solve_mode_w(n, j, consts.lambda1, true)?;
    let (wv, wd1, wd2) = samples.expect("sampled");
    let sigma = -consts.c1 / w1;
    let m = wv.len() - 1;
    let h = T::one() / T::of_usize(m);
    let jf = T::of_usize(j);
    let mut values = Vec::with_capacity(wv.len());
    let mut deriv1 = Vec::with_capacity(wv.len());
    let mut deriv2 = Vec::with_capacity(wv.len());
    for i in 0..wv.len() {
        let r = T::of_usize(i) * h;
        // b = sigma r^j w; derivatives by the product rule. Powers at the
        // origin follow the j >= 1 structure explicitly.
        let (rj, rjm1, rjm2) = if i == 0 {
            match j {
                1 => (T::zero(), T::one(), T::zero()),
                2 => (T::zero(), T::zero(), T::one()),
                _ => (T::zero(), T::zero(), T::zero()),
            }
        } else {
            let rj = r.powi(j as i32);
            (rj, rj / r, rj / (r * r))
        };
        let v = sigma * rj * wv[i];
        let d1 = sigma * (jf * rjm1 * wv[i] + rj * wd1[i]);
        let d2 = sigma
            * (jf * (jf - T::one()) * rjm2 * wv[i]
                + T::of(2.0) * jf * rjm1 * wd1[i]
                + rj * wd2[i]);
        values.push(v);
        deriv1.push(d1);
        deriv2.push(d2);
    }
    Ok(RadialProfile::from_nodes(n, values, deriv1, deriv2))
}

/// Operator eigenvalue `alpha_j = b_j'(1) + c2` for `j >= 1`.
pub fn mode_eigenvalue<T: Real>(n: usize, j: usize) -> Result<T> {
    let (consts, _) = constants_checked::<T>(n)?;
    mode_eigenvalue_with(&consts, j)
}

pub fn mode_eigenvalue_with<T: Real>(consts: &BallConstants<T>, j: usize) -> Result<T> {
    if j == 0 {
        return Err(Error::ResonantMode);
    }
    let ((w1, dw1), _) = solve_mode_w(consts.n, j, consts.lambda1, false)?;
    // b'(1) = sigma (j w(1) + w'(1)) with sigma = -c1 / w(1).
    let jf = T::of_usize(j);
    Ok(-consts.c1 * (jf + dw1 / w1) + consts.c2)
}

/// The boundary operator with eigenvalues cached up to a truncation degree.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryOperator<T> {
    pub constants: BallConstants<T>,
    alphas: Vec<T>,
}

/// Default truncation degree; all closed-form constructions live in
/// degrees <= 2, the headroom is for property tests.
pub const DEFAULT_MAX_DEGREE: usize = 16;

impl<T: Real> BoundaryOperator<T> {
    pub fn new(n: usize, max_degree: usize) -> Result<Self> {
        let (constants, _) = constants_checked::<T>(n)?;
        // The degree-2 eigenvalue is positive precisely because lambda1 > n;
        // verify numerically rather than assume.
        if !(constants.lambda1 > T::of_usize(n)) {
            return Err(Error::InvalidArgument(format!(
                "lambda1 = {} does not exceed n = {}",
                constants.lambda1.as_f64(),
                n
            )));
        }
        let mut alphas = vec![T::zero(); max_degree + 1];
        for (j, slot) in alphas.iter_mut().enumerate().skip(1) {
            *slot = mode_eigenvalue_with(&constants, j)?;
        }
        Ok(Self { constants, alphas })
    }

    pub fn max_degree(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn alpha(&self, j: usize) -> Result<T> {
        if j == 0 {
            return Err(Error::ResonantMode);
        }
        self.alphas.get(j).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "degree {j} beyond operator truncation {}",
                self.max_degree()
            ))
        })
    }

    /// Applies the operator to a mean-zero field: blockwise multiplication by
    /// alpha_j. Rejects fields with degree-0 content above tolerance.
    pub fn apply(&self, field: &SphereField<T>) -> Result<SphereField<T>> {
        let scale = field.l2_norm().max(T::one());
        let tol = T::tol(1e-10) * scale;
        if field.block_norm(0) > tol {
            return Err(Error::NotMeanZero {
                norm: field.block_norm(0).as_f64(),
                tol: tol.as_f64(),
            });
        }
        let mut out = field.clone();
        out.block_mut(0)[0] = T::zero();
        for j in 1..=field.max_degree() {
            let a = self.alpha(j)?;
            for c in out.block_mut(j) {
                *c *= a;
            }
        }
        Ok(out)
    }

    /// Solves `H w = rhs` for the unique preimage orthogonal to V_0 + V_1.
    /// The right-hand side must itself be orthogonal to V_0 + V_1 to relative
    /// tolerance 1e-10; offending block norms are reported otherwise.
    pub fn solve(&self, rhs: &SphereField<T>) -> Result<SphereField<T>> {
        let scale = rhs.l2_norm().max(T::one());
        let tol = T::tol(1e-10) * scale;
        for j in [0usize, 1] {
            let norm = rhs.block_norm(j);
            if norm > tol {
                return Err(Error::KernelContent {
                    degree: j,
                    norm: (norm / scale).as_f64(),
                });
            }
        }
        let mut out = rhs.clone();
        out.block_mut(0)[0] = T::zero();
        for c in out.block_mut(1) {
            *c = T::zero();
        }
        for j in 2..=rhs.max_degree() {
            let a = self.alpha(j)?;
            for c in out.block_mut(j) {
                *c /= a;
            }
        }
        Ok(out)
    }
}
