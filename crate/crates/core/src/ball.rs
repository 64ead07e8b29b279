//! First Dirichlet eigenpair of the unit Euclidean ball and the scalar
//! constants derived from it.
//!
//! The radial problem is
//!
//! ```text
//! phi'' + (n-1)/r phi' + lambda phi = 0,   phi regular at 0, phi(1) = 0,
//! ```
//!
//! solved by shooting from `r0 = 1e-6` with series initial data
//! `phi = 1 - lambda r^2 / (2n) + lambda^2 r^4 / (8n(n+2)) + O(r^6)` and
//! bracketing/Brent on the boundary value. No Bessel machinery is used; the
//! closed-form constants below provide the independent cross-checks.

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::profile::{RadialProfile, DEFAULT_GRID};
use crate::quad::integrate_adaptive;
use crate::real::Real;
use crate::roots::{bracket_upward, brent};
use crate::special::sphere_area;
use serde::Serialize;

const SHOOT_START: f64 = 1e-6;

/// Scalar constants of the unit-ball eigenpair.
///
/// `c1 = phi'(1)`, `c2 = phi''(1) = -(n-1) c1`, and `c_sq` is the weighted
/// moment `(n+2)/2 int_0^1 phi^2 r^{n+1} dr`, stored via its closed form
/// `(n+2)(2 lambda1 + n(n-4)) / (12 lambda1 omega_n)`.
#[derive(Debug, Clone, Serialize)]
pub struct BallConstants<T> {
    pub n: usize,
    pub lambda1: T,
    pub omega_n: T,
    pub c1: T,
    pub c2: T,
    pub c_sq: T,
}

/// Relative differences between quadrature/shooting values and the stored
/// closed forms, reported alongside the constants.
#[derive(Debug, Clone, Serialize)]
pub struct BallConstantsDiagnostics<T> {
    pub c1_rel_diff: T,
    pub c_sq_rel_diff: T,
}

/// Integrates the radial equation at trial eigenvalue `lambda`, returning
/// `(phi(1), phi'(1))` for unit-height initial data.
fn shoot_boundary<T: Real>(n: usize, lambda: T, opts: &OdeOptions<T>) -> Result<(T, T)> {
    let r0 = T::of(SHOOT_START);
    let nf = T::of_usize(n);
    let a2 = -lambda / (T::of(2.0) * nf);
    let a4 = lambda * lambda / (T::of(8.0) * nf * (nf + T::of(2.0)));
    let y0 = [
        T::one() + a2 * r0 * r0 + a4 * r0 * r0 * r0 * r0,
        T::of(2.0) * a2 * r0 + T::of(4.0) * a4 * r0 * r0 * r0,
    ];
    let nm1 = nf - T::one();
    let f = |r: T, y: &[T; 2]| [y[1], -nm1 / r * y[1] - lambda * y[0]];
    let (y, _) = integrate(&f, r0, T::one(), y0, &[], opts)?;
    Ok((y[0], y[1]))
}

/// First Dirichlet eigenvalue of the unit ball in dimension `n >= 2`,
/// refined to the solver's relative tolerance (1e-12 at f64).
pub fn first_eigenvalue<T: Real>(n: usize) -> Result<T> {
    first_eigenvalue_with(n, &OdeOptions::default())
}

pub fn first_eigenvalue_with<T: Real>(n: usize, opts: &OdeOptions<T>) -> Result<T> {
    check_dim(n)?;
    let boundary = |lam: T| shoot_boundary(n, lam, opts).map(|(v, _)| v).unwrap_or(T::nan());
    // lambda1 grows roughly like n^2/2 + 2n; scan upward from just above zero.
    let step = T::one().max(T::of_usize(n) * T::of(0.5));
    let (lo, hi) = bracket_upward(boundary, T::of(0.5), step, 400, "ball eigenvalue")?;
    brent(boundary, lo, hi, T::tol(1e-13), "ball eigenvalue")
}

/// Positive, unit-`L^2(B_1)`-norm radial eigenfunction.
pub fn eigenfunction<T: Real>(n: usize) -> Result<RadialProfile<T>> {
    let lambda = first_eigenvalue::<T>(n)?;
    eigenfunction_for(n, lambda)
}

/// Builds the normalized profile for a given (already solved) eigenvalue.
pub fn eigenfunction_for<T: Real>(n: usize, lambda: T) -> Result<RadialProfile<T>> {
    check_dim(n)?;
    let mut profile = radial_solution(n, lambda, T::one())?;
    // Normalize: omega_n int_0^1 phi^2 r^{n-1} dr = 1.
    let omega = sphere_area::<T>(n);
    let nm1 = n as i32 - 1;
    let norm_sq = omega
        * integrate_adaptive(
            &|r: T| {
                let v = profile.value(r);
                v * v * r.powi(nm1)
            },
            T::zero(),
            T::one(),
            T::tol(1e-13),
        )?;
    if !(norm_sq > T::zero()) {
        return Err(Error::Quadrature {
            tol: 1e-13,
            achieved: norm_sq.as_f64(),
        });
    }
    profile.scale(T::one() / norm_sq.sqrt());
    Ok(profile)
}

/// Integrates the radial equation once at `lambda` and samples it on the
/// default grid; initial height `scale` at the origin. Second derivatives
/// come from the ODE itself, so `deriv2(1) = -(n-1) phi'(1)` exactly.
fn radial_solution<T: Real>(n: usize, lambda: T, scale: T) -> Result<RadialProfile<T>> {
    let opts = OdeOptions::default();
    let r0 = T::of(SHOOT_START);
    let nf = T::of_usize(n);
    let a2 = -lambda / (T::of(2.0) * nf);
    let a4 = lambda * lambda / (T::of(8.0) * nf * (nf + T::of(2.0)));
    let series_val = |r: T| scale * (T::one() + a2 * r * r + a4 * r * r * r * r);
    let series_d1 = |r: T| scale * (T::of(2.0) * a2 * r + T::of(4.0) * a4 * r * r * r);
    let y0 = [series_val(r0), series_d1(r0)];
    let nm1 = nf - T::one();
    let f = |r: T, y: &[T; 2]| [y[1], -nm1 / r * y[1] - lambda * y[0]];

    let m = DEFAULT_GRID;
    let h = T::one() / T::of_usize(m);
    // Nodes strictly beyond r0 (the first positive node already is).
    let nodes: Vec<T> = (1..=m).map(|i| T::of_usize(i) * h).collect();
    let (_, states) = integrate(&f, r0, T::one(), y0, &nodes, &opts)?;
    debug_assert_eq!(states.len(), m);

    let mut values = Vec::with_capacity(m + 1);
    let mut deriv1 = Vec::with_capacity(m + 1);
    let mut deriv2 = Vec::with_capacity(m + 1);
    values.push(series_val(T::zero()));
    deriv1.push(T::zero());
    deriv2.push(T::of(2.0) * a2 * scale); // phi''(0) = -lambda/n * phi(0)
    for (i, y) in states.iter().enumerate() {
        let r = T::of_usize(i + 1) * h;
        values.push(y[0]);
        deriv1.push(y[1]);
        deriv2.push(-nm1 / r * y[1] - lambda * y[0]);
    }
    Ok(RadialProfile::from_nodes(n, values, deriv1, deriv2))
}

/// Eigenvalue, sphere area and boundary constants for dimension `n`, with the
/// quadrature-vs-closed-form diagnostics. Errors if the two routes disagree
/// beyond `1e-8` relative (a defective eigensolver).
pub fn constants_checked<T: Real>(n: usize) -> Result<(BallConstants<T>, BallConstantsDiagnostics<T>)> {
    check_dim(n)?;
    let lambda1 = first_eigenvalue::<T>(n)?;
    let omega_n = sphere_area::<T>(n);
    let phi = eigenfunction_for(n, lambda1)?;
    let nf = T::of_usize(n);

    // Closed forms.
    let c1 = -(T::of(2.0) * lambda1 / omega_n).sqrt();
    let c2 = -(nf - T::one()) * c1;
    let c_sq = (nf + T::of(2.0)) * (T::of(2.0) * lambda1 + nf * (nf - T::of(4.0)))
        / (T::of(12.0) * lambda1 * omega_n);

    // Independent routes: boundary slope from the profile, moment quadrature.
    let c1_shoot = phi.deriv(T::one());
    let c_sq_quad = (nf + T::of(2.0)) / T::of(2.0)
        * integrate_adaptive(
            &|r: T| {
                let v = phi.value(r);
                v * v * r.powi(n as i32 + 1)
            },
            T::zero(),
            T::one(),
            T::tol(1e-13),
        )?;

    let c1_rel_diff = ((c1_shoot - c1) / c1).abs();
    let c_sq_rel_diff = ((c_sq_quad - c_sq) / c_sq).abs();
    let gate = T::tol(1e-8);
    if c1_rel_diff > gate || c_sq_rel_diff > gate {
        return Err(Error::InvalidArgument(format!(
            "ball constants disagree between quadrature and closed form: c1 rel {:e}, c^2 rel {:e}",
            c1_rel_diff.as_f64(),
            c_sq_rel_diff.as_f64()
        )));
    }
    Ok((
        BallConstants {
            n,
            lambda1,
            omega_n,
            c1,
            c2,
            c_sq,
        },
        BallConstantsDiagnostics {
            c1_rel_diff,
            c_sq_rel_diff,
        },
    ))
}

/// Convenience wrapper returning only the constants.
pub fn constants<T: Real>(n: usize) -> Result<BallConstants<T>> {
    constants_checked(n).map(|(c, _)| c)
}

/// Second-order radial correction profile
/// `(r^2 / (12 n) - c^2 omega_n / (6 n (n+2))) phi(r)`,
/// built nodewise from the eigenfunction so derivatives are exact.
pub fn radial_correction<T: Real>(n: usize) -> Result<RadialProfile<T>> {
    let (consts, _) = constants_checked::<T>(n)?;
    let phi = eigenfunction_for(n, consts.lambda1)?;
    Ok(radial_correction_from(&consts, &phi))
}

pub fn radial_correction_from<T: Real>(
    consts: &BallConstants<T>,
    phi: &RadialProfile<T>,
) -> RadialProfile<T> {
    let nf = T::of_usize(consts.n);
    let a = T::one() / (T::of(12.0) * nf);
    let b = consts.c_sq * consts.omega_n / (T::of(6.0) * nf * (nf + T::of(2.0)));
    phi.map_nodes(consts.n, |r, v, d1, d2| {
        let p = a * r * r - b;
        let dp = T::of(2.0) * a * r;
        let ddp = T::of(2.0) * a;
        (p * v, dp * v + p * d1, ddp * v + T::of(2.0) * dp * d1 + p * d2)
    })
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_adaptive;
    use std::f64::consts::PI;

    // Frozen from the series/bisection oracle in tests/oracles.rs: the first
    // zero of J_0 is 2.404825557695773, giving lambda1(2) = j01^2.
    const LAMBDA1_N2: f64 = 5.783185962946785;

    #[test]
    fn lambda1_n3_is_pi_squared() {
        // phi ~ sin(pi r)/r solves the n=3 problem exactly.
        let l = first_eigenvalue::<f64>(3).unwrap();
        assert!((l - PI * PI).abs() < 1e-11 * PI * PI, "{l}");
    }

    #[test]
    fn lambda1_n2_matches_bessel_root_oracle() {
        let l = first_eigenvalue::<f64>(2).unwrap();
        assert!((l - LAMBDA1_N2).abs() < 1e-10, "{l}");
    }

    #[test]
    fn lambda1_increasing_in_dimension() {
        let mut prev = 0.0;
        for n in 2..=8 {
            let l = first_eigenvalue::<f64>(n).unwrap();
            assert!(l > prev, "lambda1({n}) = {l} not above {prev}");
            prev = l;
        }
    }

    #[test]
    fn eigenfunction_boundary_and_normalization() {
        for n in [2usize, 3, 5] {
            let phi = eigenfunction::<f64>(n).unwrap();
            assert!(phi.value(1.0).abs() < 1e-10, "phi(1) for n={n}");
            assert!(phi.value(0.0) > 0.0);
            // Interior positivity on a sample.
            for k in 0..50 {
                let r = k as f64 / 50.0;
                assert!(phi.value(r) > -1e-12, "phi({r}) negative for n={n}");
            }
            let omega = sphere_area::<f64>(n);
            let nrm = omega
                * integrate_adaptive(
                    &|r: f64| phi.value(r).powi(2) * r.powi(n as i32 - 1),
                    0.0,
                    1.0,
                    1e-13,
                )
                .unwrap();
            assert!((nrm - 1.0).abs() < 1e-10, "norm for n={n}: {nrm}");
        }
    }

    #[test]
    fn n2_normalization_restated() {
        // int_0^1 phi^2 r dr = 1 / omega_2 = 1 / (2 pi).
        let phi = eigenfunction::<f64>(2).unwrap();
        let m = integrate_adaptive(&|r: f64| phi.value(r).powi(2) * r, 0.0, 1.0, 1e-13).unwrap();
        assert!((m - 1.0 / (2.0 * PI)).abs() < 1e-11);
    }

    #[test]
    fn ode_residual_small_on_sample_grid() {
        for n in [2usize, 4] {
            let lambda = first_eigenvalue::<f64>(n).unwrap();
            let phi = eigenfunction_for::<f64>(n, lambda).unwrap();
            let mut max_abs = 0.0f64;
            for k in 0..=200 {
                let r = 0.002 + 0.996 * k as f64 / 200.0;
                max_abs = max_abs.max(phi.value(r).abs());
            }
            for k in 0..200 {
                let r = 0.002 + 0.996 * k as f64 / 199.0;
                let res = phi.deriv2(r) + (n as f64 - 1.0) / r * phi.deriv(r) + lambda * phi.value(r);
                assert!(
                    res.abs() < 1e-8 * max_abs,
                    "residual {res:e} at r={r} for n={n}"
                );
            }
        }
    }

    #[test]
    fn constants_match_closed_forms() {
        // n=3: c1 = -sqrt(2 pi^2 / (4 pi)) = -sqrt(pi/2).
        let (c, diag) = constants_checked::<f64>(3).unwrap();
        assert!((c.c1 + (PI / 2.0).sqrt()).abs() < 1e-10);
        assert!(diag.c1_rel_diff < 1e-8);
        assert!(diag.c_sq_rel_diff < 1e-8);
        // c2/c1 = -(n-1) for every n.
        for n in 2..=6 {
            let (c, _) = constants_checked::<f64>(n).unwrap();
            assert!((c.c2 / c.c1 + (n as f64 - 1.0)).abs() < 1e-12);
        }
        // n=4: the n-4 term vanishes, c_sq = 1/omega_4.
        let (c4, _) = constants_checked::<f64>(4).unwrap();
        assert!((c4.c_sq - 1.0 / (2.0 * PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn integral_identities() {
        for n in [2usize, 3, 5] {
            let phi = eigenfunction::<f64>(n).unwrap();
            let omega = sphere_area::<f64>(n);
            // -int phi phi' r^{n+2} = (n+2)/2 int phi^2 r^{n+1}
            let lhs = -integrate_adaptive(
                &|r: f64| phi.value(r) * phi.deriv(r) * r.powi(n as i32 + 2),
                0.0,
                1.0,
                1e-13,
            )
            .unwrap();
            let rhs = (n as f64 + 2.0) / 2.0
                * integrate_adaptive(
                    &|r: f64| phi.value(r).powi(2) * r.powi(n as i32 + 1),
                    0.0,
                    1.0,
                    1e-13,
                )
                .unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "moment identity n={n}");
            // -(2 omega_n / n) int phi phi' r^n = 1
            let unit = -(2.0 * omega / n as f64)
                * integrate_adaptive(
                    &|r: f64| phi.value(r) * phi.deriv(r) * r.powi(n as i32),
                    0.0,
                    1.0,
                    1e-13,
                )
                .unwrap();
            assert!((unit - 1.0).abs() < 1e-9, "unit identity n={n}: {unit}");
        }
    }

    #[test]
    fn correction_profile_examples() {
        // G(1) = 0 since phi(1) = 0.
        for n in [2usize, 3, 6] {
            let g = radial_correction::<f64>(n).unwrap();
            assert!(g.value(1.0).abs() < 1e-10);
        }
        // n=3 closed form at r = 0.5 frozen from the exact sin-profile:
        // G(0.5) = (0.25/36 - c^2 * 4 pi / 90) * sin(pi/2)/(sqrt(2 pi) * 0.5).
        let g3 = radial_correction::<f64>(3).unwrap();
        assert!(
            (g3.value(0.5) - (-0.0007241410003238577)).abs() < 1e-10,
            "{}",
            g3.value(0.5)
        );
        // Near r = 0 the r^2 term vanishes: sign follows -c^2 term (< 0
        // whenever 2 lambda1 + n(n-4) > 0, true for all n >= 2).
        for n in [2usize, 3, 4, 5] {
            let g = radial_correction::<f64>(n).unwrap();
            assert!(g.value(0.01) < 0.0, "near-origin sign for n={n}");
        }
    }
}
