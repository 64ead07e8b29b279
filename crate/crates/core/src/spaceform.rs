//! Independent verification oracle on constant-curvature space forms:
//! geodesic-ball volumes by quadrature, first Dirichlet eigenvalues by radial
//! shooting, and the eigenfunction-correction comparison.
//!
//! Geodesic balls in curvature `kappa` are rotationally symmetric with volume
//! element `sn_kappa(t)^{n-1}`, where `sn` is `sin(sqrt(k) t)/sqrt(k)`, `t`,
//! or `sinh(sqrt(-k) t)/sqrt(-k)` for positive, zero and negative curvature.
//! Nothing here uses the expansion formulas being verified.

use crate::ball::{constants_checked, eigenfunction_for, radial_correction_from, BallConstants};
use crate::curvature::CurvatureInvariants;
use crate::error::{Error, Result};
use crate::fitting::{fit_expansion, ExpansionReport};
use crate::linalg::Mat;
use crate::localization::expansion_constants;
use crate::ode::{integrate, OdeOptions};
use crate::quad::integrate_fixed;
use crate::real::Real;
use crate::roots::brent;
use crate::special::sphere_area;
use rayon::prelude::*;
use serde::Serialize;

/// `sn_kappa(t)` and its logarithmic derivative `sn'/sn`.
fn sn<T: Real>(kappa: T, t: T) -> T {
    if kappa > T::zero() {
        let s = kappa.sqrt();
        (s * t).sin() / s
    } else if kappa < T::zero() {
        let s = (-kappa).sqrt();
        (s * t).sinh() / s
    } else {
        t
    }
}

fn cot_ratio<T: Real>(kappa: T, t: T) -> T {
    if kappa > T::zero() {
        let s = kappa.sqrt();
        s * (s * t).cos() / (s * t).sin()
    } else if kappa < T::zero() {
        let s = (-kappa).sqrt();
        s * (s * t).cosh() / (s * t).sinh()
    } else {
        T::one() / t
    }
}

fn check_radius<T: Real>(kappa: T, eps: T) -> Result<()> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    if kappa > T::zero() {
        let conj = T::PI() / kappa.sqrt();
        if eps >= conj {
            return Err(Error::InvalidArgument(format!(
                "radius {} reaches the conjugate radius {}",
                eps.as_f64(),
                conj.as_f64()
            )));
        }
    }
    Ok(())
}

/// Exact (quadrature) volume of the geodesic ball of radius `eps`.
pub fn ball_volume<T: Real>(n: usize, kappa: T, eps: T) -> Result<T> {
    check_radius(kappa, eps)?;
    let omega = sphere_area::<T>(n);
    // Integrand is entire; a 48-point rule is converged to rounding.
    let v = integrate_fixed(
        |t: T| sn(kappa, t).powi(n as i32 - 1),
        T::zero(),
        eps,
        48,
    );
    Ok(omega * v)
}

/// Boundary value of the normalized radial solution at trial eigenvalue
/// `big_lambda = lambda * eps^2` (shooting variable on tau = t/eps in (0,1]).
fn shoot_boundary<T: Real>(
    n: usize,
    kappa: T,
    eps: T,
    big_lambda: T,
    opts: &OdeOptions<T>,
) -> Result<(T, T)> {
    let nf = T::of_usize(n);
    let t0 = T::of(1e-8);
    let a2 = -big_lambda / (T::of(2.0) * nf);
    let a4 = a2 * (T::of(2.0) * kappa * eps * eps * (nf - T::one()) / T::of(3.0) - big_lambda)
        / (T::of(4.0) * (nf + T::of(2.0)));
    let y0 = [
        T::one() + a2 * t0 * t0 + a4 * t0 * t0 * t0 * t0,
        T::of(2.0) * a2 * t0 + T::of(4.0) * a4 * t0 * t0 * t0,
    ];
    let nm1 = nf - T::one();
    let f = |tau: T, y: &[T; 2]| {
        [
            y[1],
            -nm1 * eps * cot_ratio(kappa, eps * tau) * y[1] - big_lambda * y[0],
        ]
    };
    let (y, _) = integrate(&f, t0, T::one(), y0, &[], opts)?;
    Ok((y[0], y[1]))
}

/// First Dirichlet eigenvalue of the geodesic ball by shooting and
/// bracketing, refined to relative 1e-11.
pub fn ball_eigenvalue<T: Real>(n: usize, kappa: T, eps: T) -> Result<T> {
    ball_eigenvalue_with(n, kappa, eps, &OdeOptions::default())
}

pub fn ball_eigenvalue_with<T: Real>(
    n: usize,
    kappa: T,
    eps: T,
    opts: &OdeOptions<T>,
) -> Result<T> {
    check_radius(kappa, eps)?;
    let lambda1 = crate::ball::first_eigenvalue_with::<T>(n, opts)?;
    let boundary = |big: T| {
        shoot_boundary(n, kappa, eps, big, opts)
            .map(|(v, _)| v)
            .unwrap_or(T::nan())
    };
    // The scaled eigenvalue sits near lambda1; expand a bracket around it.
    let mut width = T::of(0.5).max(lambda1 * T::of(0.05) * eps * eps.max(T::of(0.2)));
    for _ in 0..30 {
        let lo = lambda1 - width;
        let hi = lambda1 + width;
        let flo = boundary(lo);
        let fhi = boundary(hi);
        if flo.is_finite() && fhi.is_finite() && flo.signum() != fhi.signum() {
            let big = brent(boundary, lo, hi, T::tol(1e-12), "space-form eigenvalue")?;
            return Ok(big / (eps * eps));
        }
        width *= T::of(1.8);
    }
    Err(Error::Bracketing {
        context: "space-form eigenvalue",
        lo: (lambda1 - width).as_f64(),
        hi: (lambda1 + width).as_f64(),
    })
}

/// Curvature bundle of the space form (orthonormal frame closed forms).
pub fn space_form_invariants<T: Real>(n: usize, kappa: T) -> CurvatureInvariants<T> {
    let nf = T::of_usize(n);
    let mut ricci = Mat::zeros(n, n);
    for i in 0..n {
        ricci[(i, i)] = (nf - T::one()) * kappa;
    }
    let traceless = Mat::zeros(n, n);
    CurvatureInvariants {
        dim: n,
        scalar: nf * (nf - T::one()) * kappa,
        riem_norm_sq: T::of(2.0) * nf * (nf - T::one()) * kappa * kappa,
        ric_norm_sq: nf * (nf - T::one()) * (nf - T::one()) * kappa * kappa,
        lap_r: T::zero(),
        ricci,
        traceless_ricci: traceless,
    }
}

/// Log-spaced sample radii.
pub fn log_window<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    assert!(count >= 2);
    let l0 = lo.ln();
    let l1 = hi.ln();
    (0..count)
        .map(|i| (l0 + (l1 - l0) * T::of_usize(i) / T::of_usize(count - 1)).exp())
        .collect()
}

/// Fits the normalized volume expansion
/// `eps^{-n} Vol - omega/n ~ W0 eps^2 + W eps^4` over the window and flags
/// coefficient mismatches beyond the stated tolerances.
pub fn verify_volume_expansion<T: Real>(
    n: usize,
    kappa: T,
    window: (T, T),
    count: usize,
) -> Result<ExpansionReport<T>> {
    let omega = sphere_area::<T>(n);
    let radii = log_window(window.0, window.1, count);
    let samples: Vec<(T, T)> = radii
        .par_iter()
        .map(|eps| {
            let v = ball_volume(n, kappa, *eps)?;
            Ok((*eps, v / eps.powi(n as i32) - omega / T::of_usize(n)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = fit_expansion(&samples, &[2.0, 4.0])?;
    report.model = format!("volume/n={n}/kappa={}", kappa.as_f64());
    let (consts, _) = constants_checked::<T>(n)?;
    let inv = space_form_invariants(n, kappa);
    let expect = expansion_constants(&consts, &inv);
    flag_mismatch(&mut report, 0, expect.volume_order2, 0.005, "volume eps^2 (W0)");
    flag_mismatch(&mut report, 1, expect.volume_order4, 0.02, "volume eps^4 (W)");
    Ok(report)
}

/// Fits the eigenvalue expansion `eps^2 lambda(eps) - lambda1 ~ L0 eps^2 +
/// L eps^4` and flags mismatches against the closed forms. A mismatch in the
/// eps^4 coefficient at converged solver settings marks a candidate
/// transcription issue in the printed eigenvalue coefficient.
pub fn verify_eigenvalue_expansion<T: Real>(
    n: usize,
    kappa: T,
    window: (T, T),
    count: usize,
) -> Result<ExpansionReport<T>> {
    let (consts, _) = constants_checked::<T>(n)?;
    let radii = log_window(window.0, window.1, count);
    let samples: Vec<(T, T)> = radii
        .par_iter()
        .map(|eps| {
            let lam = ball_eigenvalue(n, kappa, *eps)?;
            Ok((*eps, lam * *eps * *eps - consts.lambda1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = fit_expansion(&samples, &[2.0, 4.0])?;
    report.model = format!("eigenvalue/n={n}/kappa={}", kappa.as_f64());
    let inv = space_form_invariants(n, kappa);
    let expect = expansion_constants(&consts, &inv);
    flag_mismatch(
        &mut report,
        0,
        expect.eigenvalue_order2,
        0.01,
        "eigenvalue eps^2 (-R/6)",
    );
    let fitted = report.coefficients[1];
    let target = expect.eigenvalue_order4;
    if rel_err(fitted, target) > T::of(0.02) {
        report.flags.push(format!(
            "eigenvalue eps^4 coefficient mismatch: fitted {:e}, closed form {:e} \
             (relative deviation {:.3}); candidate transcription issue in the \
             printed eps^4 eigenvalue coefficient (imported from external work)",
            fitted.as_f64(),
            target.as_f64(),
            rel_err(fitted, target).as_f64()
        ));
    }
    Ok(report)
}

fn rel_err<T: Real>(got: T, want: T) -> T {
    (got - want).abs() / want.abs().max(T::epsilon())
}

fn flag_mismatch<T: Real>(
    report: &mut ExpansionReport<T>,
    idx: usize,
    expected: T,
    tol: f64,
    label: &str,
) {
    let got = report.coefficients[idx];
    if rel_err(got, expected) > T::of(tol) {
        report.flags.push(format!(
            "{label}: fitted {:e} vs expected {:e} (relative {:.3e}, tolerance {tol})",
            got.as_f64(),
            expected.as_f64(),
            rel_err(got, expected).as_f64()
        ));
    }
}

/// Which L^2 normalization the correction comparison uses for the
/// geodesic-ball eigenfunction.
///
/// The closed-form correction profile pairs with the flat chart measure:
/// its eigenfunction-proportional part is exactly the one that preserves the
/// Euclidean L^2 norm under the eps^2 correction. Normalizing with the
/// curved volume element instead leaves a constant (non-decaying) multiple
/// of the eigenfunction in the deviation; both options are provided so the
/// verifier can demonstrate the distinction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// `omega_n int phi^2 t^{n-1} dt = 1` over the chart radius.
    EuclideanChart,
    /// `omega_n int phi^2 sn_kappa(t)^{n-1} dt = 1` (geodesic volume).
    GeodesicVolume,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectionCheck<T> {
    pub eps: T,
    pub normalization: Normalization,
    /// sup over [0,1] of |(eps^{n/2} phi(eps r) - phi1(r))/eps^2 - R G(r)|.
    pub max_deviation: T,
}

/// Compares the eps^2-scaled eigenfunction correction on the geodesic ball
/// against `R * G` with `G` the closed-form radial correction profile.
pub fn correction_check<T: Real>(
    n: usize,
    kappa: T,
    eps: T,
    normalization: Normalization,
) -> Result<CorrectionCheck<T>> {
    check_radius(kappa, eps)?;
    let (consts, _) = constants_checked::<T>(n)?;
    let phi1 = eigenfunction_for(n, consts.lambda1)?;
    let correction = radial_correction_from(&consts, &phi1);
    let scalar = T::of_usize(n) * (T::of_usize(n) - T::one()) * kappa;

    // Solve the ball eigenvalue and record the radial solution on a grid.
    let opts = OdeOptions::default();
    let lam = ball_eigenvalue_with(n, kappa, eps, &opts)?;
    let big = lam * eps * eps;
    let m = 512usize;
    let h = T::one() / T::of_usize(m);
    let nodes: Vec<T> = (1..=m).map(|i| T::of_usize(i) * h).collect();
    let nf = T::of_usize(n);
    let t0 = T::of(1e-8);
    let a2 = -big / (T::of(2.0) * nf);
    let a4 = a2 * (T::of(2.0) * kappa * eps * eps * (nf - T::one()) / T::of(3.0) - big)
        / (T::of(4.0) * (nf + T::of(2.0)));
    let y0 = [
        T::one() + a2 * t0 * t0 + a4 * t0 * t0 * t0 * t0,
        T::of(2.0) * a2 * t0 + T::of(4.0) * a4 * t0 * t0 * t0,
    ];
    let nm1 = nf - T::one();
    let f = |tau: T, y: &[T; 2]| {
        [
            y[1],
            -nm1 * eps * cot_ratio(kappa, eps * tau) * y[1] - big * y[0],
        ]
    };
    let (_, states) = integrate(&f, t0, T::one(), y0, &nodes, &opts)?;
    let mut vals = Vec::with_capacity(m + 1);
    let mut d1 = Vec::with_capacity(m + 1);
    let mut d2 = Vec::with_capacity(m + 1);
    vals.push(T::one());
    d1.push(T::zero());
    d2.push(T::of(2.0) * a2);
    for (i, y) in states.iter().enumerate() {
        let tau = T::of_usize(i + 1) * h;
        vals.push(y[0]);
        d1.push(y[1]);
        d2.push(-nm1 * eps * cot_ratio(kappa, eps * tau) * y[1] - big * y[0]);
    }
    let u = crate::profile::RadialProfile::from_nodes(n, vals, d1, d2);

    // Normalize: omega int_0^1 u(tau)^2 weight(tau) dtau = 1 with the
    // configured measure; the deviation below divides by eps^2, so the
    // normalization quadrature must be solver-accurate.
    let omega = sphere_area::<T>(n);
    let weight = |tau: T| -> T {
        let t = eps * tau;
        match normalization {
            Normalization::EuclideanChart => t.powi(n as i32 - 1) * eps,
            Normalization::GeodesicVolume => sn(kappa, t).powi(n as i32 - 1) * eps,
        }
    };
    let norm_sq = omega
        * crate::quad::integrate_adaptive(
            &|tau: T| {
                let v = u.value(tau);
                v * v * weight(tau)
            },
            T::zero(),
            T::one(),
            T::tol(1e-13),
        )?;
    let scale = eps.powf(nf / T::of(2.0)) / norm_sq.sqrt();

    let mut max_dev = T::zero();
    for i in 0..=m {
        let tau = T::of_usize(i) * h;
        let d = (scale * u.value(tau) - phi1.value(tau)) / (eps * eps)
            - scalar * correction.value(tau);
        max_dev = max_dev.max(d.abs());
    }
    Ok(CorrectionCheck {
        eps,
        normalization,
        max_deviation: max_dev,
    })
}
