//! Pointwise curvature of a metric chart by finite differences: Christoffel
//! symbols, the Riemann tensor in a g-orthonormal frame, Ricci/scalar
//! curvature, squared tensor norms, the metric Laplacian of the scalar
//! curvature, and the normal-coordinate metric jet.
//!
//! Conventions. `Riem(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
//! nabla_{[X,Y]} Z`, and the stored components are
//! `riem[i,k,j,l] = g(Riem(E_k, E_i) E_j, E_l)` over an orthonormal frame
//! obtained by Gram–Schmidt on the coordinate basis. With this pairing the
//! round sphere of radius `a` has `riem[i,k,j,l] = (delta_ij delta_kl -
//! delta_il delta_kj)/a^2`, sectional curvature `+1/a^2`, and the order-2
//! normal-coordinate jet `delta - (1/3) riem[i,k,j,l] x^k x^l` reproduces the
//! exact space-form expansion (the space-form tests are the arbiter for the
//! sign choice).
//!
//! Derivatives of the metric are taken with 4th-order central stencils plus
//! one optional Richardson level; first and second derivatives of the
//! Christoffel symbols are assembled algebraically from the metric jets, so
//! no nested differencing is involved until the scalar-curvature Laplacian,
//! which differences the scalar field once more at a wider step.

use crate::error::{Error, Result};
use crate::linalg::{solve, symmetric_eigen, Mat};
use crate::metric::MetricSpec;
use crate::real::Real;
use serde::Serialize;

/// Rank-4 tensor with all four slots of dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct R4<T> {
    pub n: usize,
    data: Vec<T>,
}

impl<T: Real> R4<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize, j: usize, l: usize) -> T {
        self.data[((i * self.n + k) * self.n + j) * self.n + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, j: usize, l: usize, v: T) {
        self.data[((i * self.n + k) * self.n + j) * self.n + l] = v;
    }

    pub fn norm_sq(&self) -> T {
        self.data.iter().map(|v| *v * *v).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Finite-difference configuration for the curvature pipeline.
///
/// `h_metric` feeds the metric-derivative stencils (Christoffel and Riemann);
/// `h_scalar` is the wider step for the nested scalar-curvature Laplacian.
/// The defaults deviate from smaller steps on purpose: differencing the
/// scalar field a second time amplifies metric-stencil roundoff by
/// `1/h_scalar^2`, and the localization search needs the composite noise
/// floor below its gradient tolerance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdConfig {
    pub h_metric: f64,
    pub h_scalar: f64,
    pub richardson: bool,
    /// Use builtin closed-form curvature when the metric provides it.
    pub use_analytic: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            h_metric: 4e-3,
            h_scalar: 0.1,
            richardson: true,
            use_analytic: true,
        }
    }
}

impl FdConfig {
    pub fn numeric_only(mut self) -> Self {
        self.use_analytic = false;
        self
    }

    /// Chart margin consumed by the full invariants stencil.
    pub fn margin(&self) -> f64 {
        self.h_scalar + 2.0 * self.h_metric
    }
}

/// Pointwise curvature bundle in a g-orthonormal frame.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureInvariants<T> {
    pub dim: usize,
    /// Scalar curvature R.
    pub scalar: T,
    /// Sum of squared orthonormal-frame Riemann components.
    pub riem_norm_sq: T,
    /// Sum of squared orthonormal-frame Ricci components.
    pub ric_norm_sq: T,
    /// Metric Laplacian of the scalar-curvature field.
    pub lap_r: T,
    /// Ricci matrix in the orthonormal frame.
    pub ricci: Mat<T>,
    /// Ricci minus (R/n) identity.
    pub traceless_ricci: Mat<T>,
}

fn check_margin<T: Real>(spec: &MetricSpec, x: &[T], margin: f64) -> Result<()> {
    spec.check_point(x)?;
    for (k, (xi, (lo, hi))) in x.iter().zip(&spec.bounds).enumerate() {
        let m = T::of(margin);
        if *xi - m < T::of(*lo) || *xi + m > T::of(*hi) {
            return Err(Error::OutOfBounds {
                point: x.iter().map(|v| v.as_f64()).collect(),
                coordinate: k + 1,
                lo: *lo + margin,
                hi: *hi - margin,
            });
        }
    }
    Ok(())
}

/// Metric value with first and second derivatives at `x`.
struct MetricJets<T> {
    g: Mat<T>,
    /// dg[a] = partial_a g
    dg: Vec<Mat<T>>,
    /// d2g[a][b] = partial_a partial_b g (b <= a stored, symmetric)
    d2g: Vec<Vec<Mat<T>>>,
}

fn metric_jets_at<T: Real>(spec: &MetricSpec, x: &[T], h: T) -> MetricJets<T> {
    let n = spec.dim;
    let eval = |shift: &[(usize, T)]| -> Mat<T> {
        let mut p = x.to_vec();
        for (axis, d) in shift {
            p[*axis] += *d;
        }
        spec.eval_raw(&p)
    };
    let g = spec.eval_raw(x);
    let c12 = T::of(12.0);
    let mut dg = Vec::with_capacity(n);
    let mut pure = Vec::with_capacity(n);
    for a in 0..n {
        let fp1 = eval(&[(a, h)]);
        let fm1 = eval(&[(a, -h)]);
        let fp2 = eval(&[(a, h + h)]);
        let fm2 = eval(&[(a, -h - h)]);
        let mut first = Mat::zeros(n, n);
        let mut second = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                first[(i, j)] = (-fp2[(i, j)] + T::of(8.0) * fp1[(i, j)] - T::of(8.0) * fm1[(i, j)]
                    + fm2[(i, j)])
                    / (c12 * h);
                second[(i, j)] = (-fp2[(i, j)] + T::of(16.0) * fp1[(i, j)] - T::of(30.0) * g[(i, j)]
                    + T::of(16.0) * fm1[(i, j)]
                    - fm2[(i, j)])
                    / (c12 * h * h);
            }
        }
        dg.push(first);
        pure.push(second);
    }
    // Mixed second derivatives: 4th-order cross stencil
    // (d/da)(d/db) f via central-4 in a of central-4 first derivatives in b.
    let mut d2g: Vec<Vec<Mat<T>>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in 0..=a {
            if a == b {
                d2g[a].push(pure[a].clone());
                continue;
            }
            let first_b = |da: T| -> Mat<T> {
                let fp1 = eval(&[(a, da), (b, h)]);
                let fm1 = eval(&[(a, da), (b, -h)]);
                let fp2 = eval(&[(a, da), (b, h + h)]);
                let fm2 = eval(&[(a, da), (b, -h - h)]);
                let mut out = Mat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        out[(i, j)] = (-fp2[(i, j)] + T::of(8.0) * fp1[(i, j)]
                            - T::of(8.0) * fm1[(i, j)]
                            + fm2[(i, j)])
                            / (c12 * h);
                    }
                }
                out
            };
            let gp1 = first_b(h);
            let gm1 = first_b(-h);
            let gp2 = first_b(h + h);
            let gm2 = first_b(-h - h);
            let mut mixed = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    mixed[(i, j)] = (-gp2[(i, j)] + T::of(8.0) * gp1[(i, j)]
                        - T::of(8.0) * gm1[(i, j)]
                        + gm2[(i, j)])
                        / (c12 * h);
                }
            }
            d2g[a].push(mixed);
        }
    }
    MetricJets { g, dg, d2g }
}

fn richardson_combine<T: Real>(coarse: &Mat<T>, fine: &Mat<T>) -> Mat<T> {
    // One level on a 4th-order base formula: (16 fine - coarse) / 15.
    let mut out = fine.clone();
    for (o, c) in out.data.iter_mut().zip(&coarse.data) {
        *o = (T::of(16.0) * *o - *c) / T::of(15.0);
    }
    out
}

fn metric_jets<T: Real>(spec: &MetricSpec, x: &[T], cfg: &FdConfig) -> MetricJets<T> {
    let h = T::of(cfg.h_metric);
    let coarse = metric_jets_at(spec, x, h);
    if !cfg.richardson {
        return coarse;
    }
    let fine = metric_jets_at(spec, x, h * T::of(0.5));
    let n = spec.dim;
    let dg = (0..n)
        .map(|a| richardson_combine(&coarse.dg[a], &fine.dg[a]))
        .collect();
    let d2g = (0..n)
        .map(|a| {
            (0..=a)
                .map(|b| richardson_combine(&coarse.d2g[a][b], &fine.d2g[a][b]))
                .collect()
        })
        .collect();
    MetricJets {
        g: coarse.g,
        dg,
        d2g,
    }
}

fn d2g_at<T: Real>(jets: &MetricJets<T>, a: usize, b: usize) -> &Mat<T> {
    if b <= a {
        &jets.d2g[a][b]
    } else {
        &jets.d2g[b][a]
    }
}

fn invert_spd<T: Real>(g: &Mat<T>) -> Result<Mat<T>> {
    let n = g.rows;
    let (vals, _) = symmetric_eigen(g);
    if vals[0] <= T::zero() {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: vals[0].as_f64(),
        });
    }
    let mut inv = Mat::zeros(n, n);
    for col in 0..n {
        let mut e = vec![T::zero(); n];
        e[col] = T::one();
        let sol = solve(g.clone(), e)?;
        for r in 0..n {
            inv[(r, col)] = sol[r];
        }
    }
    Ok(inv)
}

fn christoffel_from_jets<T: Real>(jets: &MetricJets<T>, g_inv: &Mat<T>) -> Vec<Mat<T>> {
    let n = jets.g.rows;
    let half = T::of(0.5);
    // gamma[k][(i, j)]
    let mut gamma = vec![Mat::zeros(n, n); n];
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut acc = T::zero();
                for l in 0..n {
                    let term = jets.dg[i][(j, l)] + jets.dg[j][(i, l)] - jets.dg[l][(i, j)];
                    acc += g_inv[(k, l)] * term;
                }
                let v = half * acc;
                gamma[k][(i, j)] = v;
                gamma[k][(j, i)] = v;
            }
        }
    }
    gamma
}

/// Christoffel symbols `Gamma^k_{ij}` at an interior point, using step `h`
/// (the configured metric step). Returned as `out[k][(i,j)]`.
pub fn christoffel<T: Real>(spec: &MetricSpec, x: &[T], cfg: &FdConfig) -> Result<Vec<Mat<T>>> {
    check_margin(spec, x, 2.0 * cfg.h_metric)?;
    let jets = metric_jets(spec, x, cfg);
    let g_inv = invert_spd(&jets.g)?;
    Ok(christoffel_from_jets(&jets, &g_inv))
}

/// Everything the frame path produces in one pass.
struct FrameCurvature<T> {
    riem_frame: R4<T>,
    ricci_frame: Mat<T>,
    scalar: T,
}

fn frame_curvature<T: Real>(spec: &MetricSpec, x: &[T], cfg: &FdConfig) -> Result<FrameCurvature<T>> {
    let n = spec.dim;
    let jets = metric_jets(spec, x, cfg);
    let g_inv = invert_spd(&jets.g)?;
    let gamma = christoffel_from_jets(&jets, &g_inv);

    // dGamma[m][k][(i,j)] = partial_m Gamma^k_{ij}, assembled from the jets:
    // 2 Gamma^k_{ij} = g^{kl} S_{lij},  S_{lij} = d_i g_jl + d_j g_il - d_l g_ij
    // 2 d_m Gamma^k_{ij} = (d_m g^{kl}) S_{lij} + g^{kl} d_m S_{lij},
    // d_m g^{kl} = -g^{ka} (d_m g_ab) g^{bl}.
    let half = T::of(0.5);
    let mut dginv = Vec::with_capacity(n);
    for m in 0..n {
        let tmp = g_inv.matmul(&jets.dg[m]).matmul(&g_inv);
        let mut d = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] = -tmp[(i, j)];
            }
        }
        dginv.push(d);
    }
    let mut dgamma = vec![vec![Mat::zeros(n, n); n]; n];
    for m in 0..n {
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let mut acc = T::zero();
                    for l in 0..n {
                        let s = jets.dg[i][(j, l)] + jets.dg[j][(i, l)] - jets.dg[l][(i, j)];
                        let ds = d2g_at(&jets, m, i)[(j, l)] + d2g_at(&jets, m, j)[(i, l)]
                            - d2g_at(&jets, m, l)[(i, j)];
                        acc += dginv[m][(k, l)] * s + g_inv[(k, l)] * ds;
                    }
                    let v = half * acc;
                    dgamma[m][k][(i, j)] = v;
                    dgamma[m][k][(j, i)] = v;
                }
            }
        }
    }

    // Coordinate curvature: Riem(d_c, d_a) d_b = C^l_{cab} d_l with
    // C^l_{cab} = d_c Gamma^l_{ab} - d_a Gamma^l_{cb}
    //           + Gamma^m_{ab} Gamma^l_{cm} - Gamma^m_{cb} Gamma^l_{am}.
    // Stored pairing: riem_coord[i,k,j,l] = g(Riem(d_k, d_i) d_j, d_l)
    //               = g_{lm} C^m_{k i j}.
    let mut riem_coord = R4::zeros(n);
    for c in 0..n {
        for a in 0..n {
            if a == c {
                continue;
            }
            for b in 0..n {
                for l in 0..n {
                    let mut v = dgamma[c][l][(a, b)] - dgamma[a][l][(c, b)];
                    for m in 0..n {
                        v += gamma[m][(a, b)] * gamma[l][(c, m)]
                            - gamma[m][(c, b)] * gamma[l][(a, m)];
                    }
                    // lower the last index later; store C^l_{cab} temporarily
                    riem_coord.set(a, c, b, l, v);
                }
            }
        }
    }
    let mut lowered = R4::zeros(n);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = T::zero();
                    for m in 0..n {
                        v += jets.g[(l, m)] * riem_coord.get(i, k, j, m);
                    }
                    lowered.set(i, k, j, l, v);
                }
            }
        }
    }

    // Orthonormal frame by Gram–Schmidt on the coordinate basis.
    let frame = gram_schmidt_frame(&jets.g);
    let mut riem_frame = R4::zeros(n);
    // Contract one slot at a time to keep the cost at O(n^5).
    let mut t1 = R4::zeros(n);
    for a in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = T::zero();
                    for i in 0..n {
                        v += frame[(i, a)] * lowered.get(i, k, j, l);
                    }
                    t1.set(a, k, j, l, v);
                }
            }
        }
    }
    let mut t2 = R4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = T::zero();
                    for k in 0..n {
                        v += frame[(k, b)] * t1.get(a, k, j, l);
                    }
                    t2.set(a, b, j, l, v);
                }
            }
        }
    }
    let mut t3 = R4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for l in 0..n {
                    let mut v = T::zero();
                    for j in 0..n {
                        v += frame[(j, c)] * t2.get(a, b, j, l);
                    }
                    t3.set(a, b, c, l, v);
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = T::zero();
                    for l in 0..n {
                        v += frame[(l, d)] * t3.get(a, b, c, l);
                    }
                    riem_frame.set(a, b, c, d, v);
                }
            }
        }
    }

    // Ricci as the frame trace Ric_ab = sum_c riem[a, c, b, c].
    let mut ricci_frame = Mat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut v = T::zero();
            for c in 0..n {
                v += riem_frame.get(a, c, b, c);
            }
            ricci_frame[(a, b)] = v;
        }
    }
    let scalar = ricci_frame.trace();
    Ok(FrameCurvature {
        riem_frame,
        ricci_frame,
        scalar,
    })
}

/// Columns of the returned matrix are orthonormal frame vectors expressed in
/// coordinates: E_a = sum_i frame[(i, a)] d_i with g(E_a, E_b) = delta_ab.
fn gram_schmidt_frame<T: Real>(g: &Mat<T>) -> Mat<T> {
    let n = g.rows;
    let mut frame = Mat::zeros(n, n);
    let gdot = |u: &[T], v: &[T]| -> T {
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc += u[i] * g[(i, j)] * v[j];
            }
        }
        acc
    };
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v = vec![T::zero(); n];
        v[a] = T::one();
        for u in &basis {
            let proj = gdot(u, &v);
            for i in 0..n {
                v[i] -= proj * u[i];
            }
        }
        let norm = gdot(&v, &v).sqrt();
        for x in &mut v {
            *x /= norm;
        }
        basis.push(v);
    }
    for (a, v) in basis.iter().enumerate() {
        for i in 0..n {
            frame[(i, a)] = v[i];
        }
    }
    frame
}

/// Riemann tensor in the orthonormal frame at `x`.
pub fn riemann<T: Real>(spec: &MetricSpec, x: &[T], cfg: &FdConfig) -> Result<R4<T>> {
    if cfg.use_analytic {
        if let Some(a) = spec.analytic_invariants(x) {
            return Ok(a.riemann);
        }
    }
    check_margin(spec, x, 2.0 * cfg.h_metric)?;
    Ok(frame_curvature(spec, x, cfg)?.riem_frame)
}

/// Scalar curvature at `x` (finite-difference path).
pub fn scalar_curvature<T: Real>(spec: &MetricSpec, x: &[T], cfg: &FdConfig) -> Result<T> {
    if cfg.use_analytic {
        if let Some(a) = spec.analytic_invariants(x) {
            return Ok(a.scalar);
        }
    }
    check_margin(spec, x, 2.0 * cfg.h_metric)?;
    Ok(frame_curvature(spec, x, cfg)?.scalar)
}

/// Full curvature bundle at `x`, including the scalar-curvature Laplacian.
pub fn invariants_at<T: Real>(
    spec: &MetricSpec,
    x: &[T],
    cfg: &FdConfig,
) -> Result<CurvatureInvariants<T>> {
    let n = spec.dim;
    if cfg.use_analytic {
        if let Some(a) = spec.analytic_invariants(x) {
            let mut traceless = a.ricci.clone();
            let rn = a.scalar / T::of_usize(n);
            for i in 0..n {
                traceless[(i, i)] -= rn;
            }
            return Ok(CurvatureInvariants {
                dim: n,
                scalar: a.scalar,
                riem_norm_sq: a.riem_norm_sq,
                ric_norm_sq: a.ric_norm_sq,
                lap_r: a.lap_r,
                ricci: a.ricci,
                traceless_ricci: traceless,
            });
        }
    }
    check_margin(spec, x, cfg.margin())?;
    let base = frame_curvature(spec, x, cfg)?;
    let jets = metric_jets(spec, x, cfg);
    let g_inv = invert_spd(&jets.g)?;
    let gamma = christoffel_from_jets(&jets, &g_inv);

    // Scalar field for the Laplacian; positivity was checked at the base
    // point, stencil points reuse the raw evaluation.
    let scal = |p: &[T]| -> Result<T> { Ok(frame_curvature(spec, p, cfg)?.scalar) };
    let hs = T::of(cfg.h_scalar);
    let grad_hess = scalar_grad_hessian(&scal, x, hs, cfg.richardson)?;

    // Delta f = g^{ij} (d_i d_j f - Gamma^k_{ij} d_k f).
    let mut lap = T::zero();
    for i in 0..n {
        for j in 0..n {
            let mut corr = grad_hess.1[(i, j)];
            for k in 0..n {
                corr -= gamma[k][(i, j)] * grad_hess.0[k];
            }
            lap += g_inv[(i, j)] * corr;
        }
    }

    let mut traceless = base.ricci_frame.clone();
    let rn = base.scalar / T::of_usize(n);
    for i in 0..n {
        traceless[(i, i)] -= rn;
    }
    Ok(CurvatureInvariants {
        dim: n,
        scalar: base.scalar,
        riem_norm_sq: base.riem_frame.norm_sq(),
        ric_norm_sq: base.ricci_frame.frobenius_norm_sq(),
        lap_r: lap,
        ricci: base.ricci_frame,
        traceless_ricci: traceless,
    })
}

/// Gradient and Hessian of a scalar field by central differences (2nd order
/// with one Richardson level when enabled, giving 4th order).
fn scalar_grad_hessian<T: Real>(
    f: &impl Fn(&[T]) -> Result<T>,
    x: &[T],
    h: T,
    richardson: bool,
) -> Result<(Vec<T>, Mat<T>)> {
    let n = x.len();
    let eval = |shift: &[(usize, T)]| -> Result<T> {
        let mut p = x.to_vec();
        for (axis, d) in shift {
            p[*axis] += *d;
        }
        f(&p)
    };
    let at = |h: T| -> Result<(Vec<T>, Mat<T>)> {
        let f0 = eval(&[])?;
        let mut grad = vec![T::zero(); n];
        let mut hess = Mat::zeros(n, n);
        let two = T::of(2.0);
        for a in 0..n {
            let fp = eval(&[(a, h)])?;
            let fm = eval(&[(a, -h)])?;
            grad[a] = (fp - fm) / (two * h);
            hess[(a, a)] = (fp - two * f0 + fm) / (h * h);
        }
        for a in 0..n {
            for b in 0..a {
                let fpp = eval(&[(a, h), (b, h)])?;
                let fpm = eval(&[(a, h), (b, -h)])?;
                let fmp = eval(&[(a, -h), (b, h)])?;
                let fmm = eval(&[(a, -h), (b, -h)])?;
                let v = (fpp - fpm - fmp + fmm) / (T::of(4.0) * h * h);
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        Ok((grad, hess))
    };
    let (g1, h1) = at(h)?;
    if !richardson {
        return Ok((g1, h1));
    }
    let (g2, h2) = at(h * T::of(0.5))?;
    // Base order 2: combined = (4 fine - coarse) / 3.
    let grad: Vec<T> = g1
        .iter()
        .zip(&g2)
        .map(|(c, fine)| (T::of(4.0) * *fine - *c) / T::of(3.0))
        .collect();
    let mut hess = h2.clone();
    for (o, c) in hess.data.iter_mut().zip(&h1.data) {
        *o = (T::of(4.0) * *o - *c) / T::of(3.0);
    }
    Ok((grad, hess))
}

/// Truncated normal-coordinate metric expansion built from the curvature at
/// the expansion point.
#[derive(Debug, Clone)]
pub struct NormalJet<T> {
    riem: R4<T>,
    order: u8,
}

impl<T: Real> NormalJet<T> {
    /// `order` is 2 or 4. Order 4 adds the quadratic-in-curvature term and is
    /// only valid when the caller asserts local symmetry (`nabla Riem = 0`),
    /// since the derivative-of-curvature coefficients are not computed.
    pub fn new(riem: R4<T>, order: u8, locally_symmetric: bool) -> Result<Self> {
        match order {
            2 => Ok(Self { riem, order }),
            4 => {
                if !locally_symmetric {
                    return Err(Error::InvalidArgument(
                        "order-4 jet requires asserting a locally symmetric metric".into(),
                    ));
                }
                Ok(Self { riem, order })
            }
            other => Err(Error::InvalidArgument(format!(
                "normal jet order must be 2 or 4, got {other}"
            ))),
        }
    }

    /// Evaluates the truncated expansion at normal coordinates `x`.
    pub fn eval(&self, x: &[T]) -> Mat<T> {
        let n = self.riem.n;
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut v = T::zero();
                for k in 0..n {
                    for l in 0..n {
                        v += self.riem.get(i, k, j, l) * x[k] * x[l];
                    }
                }
                a[(i, j)] = v;
            }
        }
        let third = T::one() / T::of(3.0);
        let mut g = Mat::identity(n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] -= third * a[(i, j)];
            }
        }
        if self.order == 4 {
            let aa = a.matmul(&a);
            let coef = T::of(2.0 / 45.0);
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] += coef * aa[(i, j)];
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{parse_builtin, parse_metric};

    fn cfg() -> FdConfig {
        FdConfig::default().numeric_only()
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let spec = parse_builtin("euclidean", 3).unwrap();
        let gamma = christoffel(&spec, &[0.1f64, -0.4, 0.7], &cfg()).unwrap();
        for g in &gamma {
            for v in &g.data {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_polar_christoffel_closed_form() {
        // Round 2-sphere polar chart: Gamma^1_22 = -sin cos, Gamma^2_12 = cot.
        let spec = parse_metric("dim 2;\ng11 = 1;\ng12 = 0;\ng22 = sin(x1)^2;\nbounds x1 = [0.3, 2.8];\nbounds x2 = [-10, 10];").unwrap();
        let t = std::f64::consts::FRAC_PI_3;
        let gamma = christoffel(&spec, &[t, 0.5], &cfg()).unwrap();
        assert!((gamma[0][(1, 1)] + t.sin() * t.cos()).abs() < 1e-9);
        assert!((gamma[1][(0, 1)] - t.cos() / t.sin()).abs() < 1e-9);
        // Exact index symmetry.
        for g in &gamma {
            assert_eq!(g[(0, 1)], g[(1, 0)]);
        }
    }

    #[test]
    fn sphere_sectional_curvature_is_positive_inverse_square_radius() {
        for a in [1.0f64, 2.0] {
            let spec = parse_builtin(&format!("sphere({a})"), 3).unwrap();
            let r = riemann(&spec, &[0.2, -0.1, 0.3], &cfg()).unwrap();
            let kappa = 1.0 / (a * a);
            for i in 0..3 {
                for k in 0..3 {
                    if i != k {
                        assert!(
                            (r.get(i, k, i, k) - kappa).abs() < 2e-7,
                            "sectional ({i},{k}) = {} for a={a}",
                            r.get(i, k, i, k)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn riemann_symmetries_hold() {
        let spec = parse_builtin("perturbed_sphere(1, 0.3, 0.8, 0.1, -0.2)", 2).unwrap();
        let r = riemann(&spec, &[0.25f64, 0.1], &cfg()).unwrap();
        let n = 2;
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        // Antisymmetry in (i,k) and (j,l); pair symmetry.
                        assert!((r.get(i, k, j, l) + r.get(k, i, j, l)).abs() < 1e-7);
                        assert!((r.get(i, k, j, l) + r.get(i, k, l, j)).abs() < 1e-7);
                        assert!((r.get(i, k, j, l) - r.get(j, l, i, k)).abs() < 1e-7);
                    }
                }
            }
        }
        // First Bianchi on a 3d example.
        let spec3 = parse_builtin("sphere(1.4)", 3).unwrap();
        let r3 = riemann(&spec3, &[0.1f64, 0.2, -0.3], &cfg()).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        let b = r3.get(i, k, j, l) + r3.get(j, k, l, i) + r3.get(l, k, i, j);
                        assert!(b.abs() < 1e-7, "bianchi {b:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn space_form_invariants_match_closed_forms() {
        // FD path against the space-form formulas, n = 2, 3.
        for (designator, dim, kappa) in [
            ("sphere(1)", 2usize, 1.0f64),
            ("sphere(2)", 3, 0.25),
            ("hyperbolic(1)", 2, -1.0),
            ("hyperbolic(1.5)", 3, -1.0 / 2.25),
        ] {
            let spec = parse_builtin(designator, dim).unwrap();
            let x: Vec<f64> = vec![0.12; dim];
            let inv = invariants_at(&spec, &x, &cfg()).unwrap();
            let n = dim as f64;
            let r_exact = n * (n - 1.0) * kappa;
            assert!(
                (inv.scalar - r_exact).abs() < 2e-6 * (1.0 + r_exact.abs()),
                "{designator}: R = {} vs {r_exact}",
                inv.scalar
            );
            let riem_exact = 2.0 * n * (n - 1.0) * kappa * kappa;
            assert!(
                (inv.riem_norm_sq - riem_exact).abs() < 5e-6 * (1.0 + riem_exact),
                "{designator}: |Riem|^2 = {} vs {riem_exact}",
                inv.riem_norm_sq
            );
            let ric_exact = n * (n - 1.0) * (n - 1.0) * kappa * kappa;
            assert!(
                (inv.ric_norm_sq - ric_exact).abs() < 5e-6 * (1.0 + ric_exact),
                "{designator}: |Ric|^2 = {} vs {ric_exact}",
                inv.ric_norm_sq
            );
            assert!(inv.lap_r.abs() < 1e-4, "{designator}: lap R = {}", inv.lap_r);
            // Traceless Ricci vanishes on space forms.
            assert!(inv.traceless_ricci.frobenius_norm_sq().sqrt() < 1e-6);
            // Ricci trace equals R.
            assert!((inv.ricci.trace() - inv.scalar).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_metrics_have_zero_invariants() {
        let spec = parse_builtin("flat_torus(6.28, 6.28)", 2).unwrap();
        let inv = invariants_at(&spec, &[1.0f64, 2.0], &cfg()).unwrap();
        assert!(inv.scalar.abs() < 1e-9);
        assert!(inv.riem_norm_sq < 1e-14);
        assert!(inv.ric_norm_sq < 1e-14);
        assert!(inv.lap_r.abs() < 1e-9);
    }

    #[test]
    fn analytic_flag_agrees_with_fd() {
        let spec = parse_builtin("product_sphere_circle(1.0, 0.7)", 3).unwrap();
        let x = [1.3f64, 2.0, 0.4];
        let fd = invariants_at(&spec, &x, &cfg()).unwrap();
        let an = invariants_at(&spec, &x, &FdConfig::default()).unwrap();
        assert!((fd.scalar - an.scalar).abs() < 1e-6 * (1.0 + an.scalar.abs()));
        assert!((fd.riem_norm_sq - an.riem_norm_sq).abs() < 1e-5 * (1.0 + an.riem_norm_sq));
        assert!((fd.ric_norm_sq - an.ric_norm_sq).abs() < 1e-5 * (1.0 + an.ric_norm_sq));
        // Product metric has nonzero traceless Ricci.
        assert!(an.traceless_ricci.frobenius_norm_sq() > 0.1);
    }

    #[test]
    fn invariants_respect_scaling_law() {
        // a -> 2a: R by 1/4, |Riem|^2 and |Ric|^2 by 1/16.
        let s1 = parse_builtin("sphere(1)", 3).unwrap();
        let s2 = parse_builtin("sphere(2)", 3).unwrap();
        let x = [0.1f64, 0.0, 0.2];
        let i1 = invariants_at(&s1, &x, &cfg()).unwrap();
        let i2 = invariants_at(&s2, &x, &cfg()).unwrap();
        assert!((i2.scalar - i1.scalar / 4.0).abs() < 1e-5);
        assert!((i2.riem_norm_sq - i1.riem_norm_sq / 16.0).abs() < 1e-5);
        assert!((i2.ric_norm_sq - i1.ric_norm_sq / 16.0).abs() < 1e-5);
    }

    #[test]
    fn chart_independence_of_scalars() {
        let st = parse_builtin("sphere(1)", 2).unwrap();
        let po = parse_builtin("sphere(1, polar)", 2).unwrap();
        let a = invariants_at(&st, &[0.3f64, -0.2], &cfg()).unwrap();
        let b = invariants_at(&po, &[1.1f64, 0.7], &cfg()).unwrap();
        assert!((a.scalar - b.scalar).abs() < 1e-6 * (1.0 + a.scalar.abs()));
        assert!((a.riem_norm_sq - b.riem_norm_sq).abs() < 1e-5 * (1.0 + a.riem_norm_sq));
        assert!((a.ric_norm_sq - b.ric_norm_sq).abs() < 1e-5 * (1.0 + a.ric_norm_sq));
    }

    #[test]
    fn normal_jet_matches_exact_sphere_expansion() {
        // Unit sphere: exact normal-coordinate metric is
        // g = x^ x^T + (sin^2 rho / rho^2)(I - x^ x^T), rho = |x|.
        let spec = parse_builtin("sphere(1)", 3).unwrap();
        let r = riemann(&spec, &[0.0f64, 0.0, 0.0], &FdConfig::default()).unwrap();
        let jet4 = NormalJet::new(r.clone(), 4, true).unwrap();
        let jet2 = NormalJet::new(r, 2, false).unwrap();
        for rho in [0.05f64, 0.1, 0.2] {
            let dir = [0.6f64, -0.64, 0.48]; // unit-ish; normalize below
            let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
            let x: Vec<f64> = dir.iter().map(|d| d / norm * rho).collect();
            let g4 = jet4.eval(&x);
            let g2 = jet2.eval(&x);
            let s = (rho.sin() / rho).powi(2);
            for i in 0..3 {
                for j in 0..3 {
                    let xh_i = x[i] / rho;
                    let xh_j = x[j] / rho;
                    let exact = xh_i * xh_j * (1.0 - s) + if i == j { s } else { 0.0 };
                    let err4 = (g4[(i, j)] - exact).abs();
                    let err2 = (g2[(i, j)] - exact).abs();
                    // Order-4 jet is accurate to O(rho^6); order-2 to O(rho^4).
                    assert!(err4 < 0.02 * rho.powi(6) + 1e-12, "rho={rho} err4={err4:e}");
                    assert!(err2 < 0.1 * rho.powi(4) + 1e-12, "rho={rho} err2={err2:e}");
                    // Symmetry of the jet.
                    assert_eq!(g4[(i, j)], g4[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn zero_curvature_jet_is_identity() {
        let jet = NormalJet::new(R4::<f64>::zeros(3), 2, false).unwrap();
        let g = jet.eval(&[0.4, 0.1, -0.2]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn order4_requires_local_symmetry_assertion() {
        assert!(NormalJet::new(R4::<f64>::zeros(2), 4, false).is_err());
    }

    #[test]
    fn margin_is_enforced() {
        let spec = parse_builtin("sphere(1, polar)", 2).unwrap();
        // x1 close to the lower chart bound 0.35.
        let err = invariants_at(&spec, &[0.4f64, 1.0], &cfg()).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
    }
}
