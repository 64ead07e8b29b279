//! Bracketed scalar root finding: upward bracket scan + Brent refinement.

use crate::error::{Error, Result};
use crate::real::Real;

/// Scans upward from `start` in increments of `step` until `f` changes sign,
/// returning the bracketing interval. Used to locate eigenvalue brackets.
pub fn bracket_upward<T: Real>(
    mut f: impl FnMut(T) -> T,
    start: T,
    step: T,
    max_steps: usize,
    context: &'static str,
) -> Result<(T, T)> {
    let mut a = start;
    let mut fa = f(a);
    for _ in 0..max_steps {
        let b = a + step;
        let fb = f(b);
        if fa.signum() != fb.signum() || fb == T::zero() {
            return Ok((a, b));
        }
        a = b;
        fa = fb;
    }
    Err(Error::Bracketing {
        context,
        lo: start.as_f64(),
        hi: a.as_f64(),
    })
}

/// Brent's method on a sign-changing bracket, to relative tolerance `rtol`.
pub fn brent<T: Real>(
    mut f: impl FnMut(T) -> T,
    a0: T,
    b0: T,
    rtol: T,
    context: &'static str,
) -> Result<T> {
    let two = T::of(2.0);
    let three = T::of(3.0);
    let half = T::of(0.5);
    let mut a = a0;
    let mut b = b0;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.signum() == fb.signum() && fa != T::zero() && fb != T::zero() {
        return Err(Error::Bracketing {
            context,
            lo: a.as_f64(),
            hi: b.as_f64(),
        });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    let max_iter = 200;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + half * rtol * (b.abs() + T::one());
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * q0 * (q0 - r) - (b - a) * (r - T::one()));
                q = (q0 - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += if xm > T::zero() { tol1 } else { -tol1 };
        }
        fb = f(b);
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::RootConvergence {
        context,
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cosine_root() {
        let (a, b) = bracket_upward(|x: f64| x.cos(), 0.0, 0.5, 20, "cos").unwrap();
        let r = brent(|x: f64| x.cos(), a, b, 1e-14, "cos").unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn reports_missing_bracket() {
        let err = bracket_upward(|_: f64| 1.0, 0.0, 1.0, 5, "const").unwrap_err();
        assert!(matches!(err, Error::Bracketing { .. }));
    }
}
