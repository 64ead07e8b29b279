//! Radial functions on [0, 1] sampled on a uniform grid with stored first and
//! second derivatives, evaluated anywhere by quintic Hermite interpolation.
//!
//! The radial eigenfunctions and boundary-mode solutions are produced by the
//! shooters as (value, derivative) node data; second derivatives come from
//! the defining ODE, so interpolation is the only approximation and its error
//! is O(h^6) on the default grid.

use crate::real::Real;
use serde::Serialize;

/// Number of intervals in the default sampling grid.
pub const DEFAULT_GRID: usize = 2048;

/// A radial function on [0, 1] with value, first and second derivative
/// accessors; `dim` records the ambient dimension it was built for.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile<T> {
    pub dim: usize,
    values: Vec<T>,
    deriv1: Vec<T>,
    deriv2: Vec<T>,
    step: T,
}

impl<T: Real> RadialProfile<T> {
    /// Builds a profile from node data on the uniform grid `i * step`,
    /// `i = 0..=n_intervals`, with `step = 1 / n_intervals`.
    pub fn from_nodes(dim: usize, values: Vec<T>, deriv1: Vec<T>, deriv2: Vec<T>) -> Self {
        assert!(values.len() >= 2);
        assert_eq!(values.len(), deriv1.len());
        assert_eq!(values.len(), deriv2.len());
        let step = T::one() / T::of_usize(values.len() - 1);
        Self {
            dim,
            values,
            deriv1,
            deriv2,
            step,
        }
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn grid_point(&self, i: usize) -> T {
        T::of_usize(i) * self.step
    }

    /// Applies `f(r, value, d1, d2) -> (value, d1, d2)` nodewise; used to form
    /// closed-form combinations like `p(r) * phi(r)` exactly at the nodes.
    pub fn map_nodes(&self, dim: usize, f: impl Fn(T, T, T, T) -> (T, T, T)) -> Self {
        let m = self.nodes();
        let mut values = Vec::with_capacity(m);
        let mut deriv1 = Vec::with_capacity(m);
        let mut deriv2 = Vec::with_capacity(m);
        for i in 0..m {
            let r = self.grid_point(i);
            let (v, d1, d2) = f(r, self.values[i], self.deriv1[i], self.deriv2[i]);
            values.push(v);
            deriv1.push(d1);
            deriv2.push(d2);
        }
        Self::from_nodes(dim, values, deriv1, deriv2)
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.values {
            *v *= factor;
        }
        for v in &mut self.deriv1 {
            *v *= factor;
        }
        for v in &mut self.deriv2 {
            *v *= factor;
        }
    }

    fn locate(&self, r: T) -> (usize, T) {
        let n = self.values.len() - 1;
        let clamped = r.max(T::zero()).min(T::one());
        let idx_f = (clamped / self.step).floor();
        let mut i = idx_f.to_usize().unwrap_or(0);
        if i >= n {
            i = n - 1;
        }
        let u = (clamped - T::of_usize(i) * self.step) / self.step;
        (i, u)
    }

    /// Function value at `r` (clamped to [0, 1]).
    pub fn value(&self, r: T) -> T {
        let (i, u) = self.locate(r);
        if u == T::zero() {
            return self.values[i];
        }
        let h = self.step;
        hermite5(
            u,
            self.values[i],
            self.values[i + 1],
            self.deriv1[i] * h,
            self.deriv1[i + 1] * h,
            self.deriv2[i] * h * h,
            self.deriv2[i + 1] * h * h,
            0,
        )
    }

    /// First derivative at `r`.
    pub fn deriv(&self, r: T) -> T {
        let (i, u) = self.locate(r);
        if u == T::zero() {
            return self.deriv1[i];
        }
        let h = self.step;
        hermite5(
            u,
            self.values[i],
            self.values[i + 1],
            self.deriv1[i] * h,
            self.deriv1[i + 1] * h,
            self.deriv2[i] * h * h,
            self.deriv2[i + 1] * h * h,
            1,
        ) / h
    }

    /// Second derivative at `r`.
    pub fn deriv2(&self, r: T) -> T {
        let (i, u) = self.locate(r);
        if u == T::zero() {
            return self.deriv2[i];
        }
        let h = self.step;
        hermite5(
            u,
            self.values[i],
            self.values[i + 1],
            self.deriv1[i] * h,
            self.deriv1[i + 1] * h,
            self.deriv2[i] * h * h,
            self.deriv2[i + 1] * h * h,
            2,
        ) / (h * h)
    }
}

/// Quintic Hermite basis on [0, 1] matching value, first and second
/// derivatives at both ends; `order` selects the derivative of the
/// interpolant (0, 1 or 2) with respect to the local variable.
#[allow(clippy::too_many_arguments)]
fn hermite5<T: Real>(u: T, f0: T, f1: T, g0: T, g1: T, s0: T, s1: T, order: u8) -> T {
    // Quintic through the scaled data (derivatives already scaled by h, h^2).
    // Coefficients of p(u) = c0 + c1 u + ... + c5 u^5.
    let half = T::of(0.5);
    let c0 = f0;
    let c1 = g0;
    let c2 = half * s0;
    let d = f1 - f0 - g0 - half * s0;
    let e = g1 - g0 - s0;
    let q = s1 - s0;
    // Solve for c3, c4, c5 from the right-end conditions:
    // c3 + c4 + c5 = d ; 3 c3 + 4 c4 + 5 c5 = e ; 6 c3 + 12 c4 + 20 c5 = q
    let c3 = T::of(10.0) * d - T::of(4.0) * e + half * q;
    let c4 = T::of(-15.0) * d + T::of(7.0) * e - q;
    let c5 = T::of(6.0) * d - T::of(3.0) * e + half * q;
    match order {
        0 => ((((c5 * u + c4) * u + c3) * u + c2) * u + c1) * u + c0,
        1 => {
            (((T::of(5.0) * c5 * u + T::of(4.0) * c4) * u + T::of(3.0) * c3) * u
                + T::of(2.0) * c2)
                * u
                + c1
        }
        _ => {
            ((T::of(20.0) * c5 * u + T::of(12.0) * c4) * u + T::of(6.0) * c3) * u
                + T::of(2.0) * c2
        }
    }
}
