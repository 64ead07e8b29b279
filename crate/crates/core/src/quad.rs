//! Gauss–Legendre quadrature: node generation by Newton iteration on the
//! Legendre recurrence, a fixed-panel rule, and an adaptive composite rule.

use crate::error::{Error, Result};
use crate::real::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::of_usize(n);
    for i in 0..(n + 1) / 2 {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (T::PI() * (T::of_usize(i) + T::of(0.75)) / (nf + T::of(0.5))).cos();
        let mut dp = T::zero();
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() * (T::one() + x.abs()) {
                break;
            }
        }
        let w = T::of(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::of_usize(k);
        let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    if n == 1 {
        return (x, T::one());
    }
    let d = T::of_usize(n) * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Integrates `f` over `[a, b]` with a fixed `n`-point rule.
pub fn integrate_fixed<T: Real>(f: impl Fn(T) -> T, a: T, b: T, n: usize) -> T {
    let (nodes, weights) = gauss_legendre::<T>(n);
    let half = T::of(0.5);
    let mid = half * (a + b);
    let scale = half * (b - a);
    let mut sum = T::zero();
    for (x, w) in nodes.iter().zip(&weights) {
        sum += *w * f(mid + scale * *x);
    }
    sum * scale
}

/// Adaptive composite Gauss–Legendre: each panel is accepted when the
/// 15-point estimate agrees with the sum of its halves to the local share of
/// `tol_abs`, otherwise the panel is bisected.
pub fn integrate_adaptive<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol_abs: T) -> Result<T> {
    const PANEL: usize = 15;
    let whole = integrate_fixed(f, a, b, PANEL);
    let mut stack = vec![(a, b, whole, tol_abs.max(T::epsilon()))];
    let mut total = T::zero();
    let mut worst = T::zero();
    let max_panels = 4000;
    let mut used = 0;
    while let Some((lo, hi, coarse, tol)) = stack.pop() {
        used += 1;
        if used > max_panels {
            return Err(Error::Quadrature {
                tol: tol_abs.as_f64(),
                achieved: worst.as_f64(),
            });
        }
        let mid = T::of(0.5) * (lo + hi);
        let left = integrate_fixed(f, lo, mid, PANEL);
        let right = integrate_fixed(f, mid, hi, PANEL);
        let err = (left + right - coarse).abs();
        worst = worst.max(err);
        let width_ok = (hi - lo).abs() > T::epsilon() * (T::one() + lo.abs() + hi.abs());
        if err <= tol || !width_ok {
            total += left + right;
        } else {
            let half_tol = tol * T::of(0.5);
            stack.push((lo, mid, left, half_tol));
            stack.push((mid, hi, right, half_tol));
        }
    }
    Ok(total)
}
