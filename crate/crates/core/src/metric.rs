//! Metric fields on a coordinate chart: a line-oriented definition format
//! for user metrics, built-in model metrics (with analytic curvature where
//! available), and positive-definite evaluation.
//!
//! Definition file format (UTF-8, `#` comments, `;`-terminated statements):
//!
//! ```text
//! dim 2;
//! g11 = 1;
//! g12 = 0;
//! g22 = sin(x1)^2;
//! bounds x1 = [0.2, 2.9];   # optional, per coordinate
//! ```
//!
//! Only the upper triangle is stored; evaluation returns the full symmetric
//! matrix and checks positive definiteness.

use crate::error::{Error, Result};
use crate::expr::{tokenize, Expr, ExprParser};
use crate::linalg::{symmetric_eigen, Mat};
use crate::real::Real;
use serde::Serialize;
use std::fmt::Write as _;

/// Default chart bounds when a coordinate carries no `bounds` statement.
pub const DEFAULT_BOUND: f64 = 1.0e12;

/// Chart selection for the round-sphere builtin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SphereChart {
    /// Conformal chart `g = (2 a^2 / (a^2 + |x|^2))^2 delta`.
    Stereographic,
    /// Iterated polar angles `g = a^2 (dt1^2 + sin^2 t1 dt2^2 + ...)`.
    Polar,
}

/// Built-in model metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Builtin {
    Euclidean,
    Sphere { radius: f64, chart: SphereChart },
    Hyperbolic { radius: f64 },
    FlatTorus { periods: Vec<f64> },
    /// Round sphere of dimension n-1 and radius `a`, times a circle of
    /// radius `b`; polar angles on the sphere factor, arclength on the
    /// circle factor.
    ProductSphereCircle { a: f64, b: f64 },
    /// Round stereographic sphere of radius `a` scaled by the conformal
    /// factor `(1 + amplitude * bump)^2`, where `bump` is the compactly
    /// supported polynomial `(1 - |x-center|^2/width^2)^6` on its support.
    PerturbedSphere {
        a: f64,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
}

/// How the metric components are produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MetricSource {
    Builtin(Builtin),
    /// Upper triangle, row-major: (0,0), (0,1), ..., (0,n-1), (1,1), ...
    Expressions(Vec<Expr>),
}

/// A metric field on a coordinate chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSpec {
    pub dim: usize,
    pub source: MetricSource,
    /// Per-coordinate chart bounds.
    pub bounds: Vec<(f64, f64)>,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    // (i, j) with i <= j in the row-major upper triangle.
    i * n - i * (i + 1) / 2 + j
}

impl MetricSpec {
    pub fn from_builtin(builtin: Builtin, dim: usize) -> Result<Self> {
        let bounds = builtin_bounds(&builtin, dim)?;
        Ok(Self {
            dim,
            source: MetricSource::Builtin(builtin),
            bounds,
        })
    }

    pub fn from_expressions(dim: usize, upper: Vec<Expr>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: dim * (dim + 1) / 2,
                got: upper.len(),
            });
        }
        Ok(Self {
            dim,
            source: MetricSource::Expressions(upper),
            bounds,
        })
    }

    pub fn in_bounds<T: Real>(&self, x: &[T]) -> bool {
        x.iter().zip(&self.bounds).all(|(xi, (lo, hi))| {
            *xi >= T::of(*lo) && *xi <= T::of(*hi)
        })
    }

    pub fn check_point<T: Real>(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for (k, (xi, (lo, hi))) in x.iter().zip(&self.bounds).enumerate() {
            if !(*xi >= T::of(*lo) && *xi <= T::of(*hi)) {
                return Err(Error::OutOfBounds {
                    point: x.iter().map(|v| v.as_f64()).collect(),
                    coordinate: k + 1,
                    lo: *lo,
                    hi: *hi,
                });
            }
        }
        Ok(())
    }

    /// Metric matrix at `x`, without the positive-definiteness check.
    /// The curvature stencils call this in bulk and check positivity once at
    /// the base point.
    pub fn eval_raw<T: Real>(&self, x: &[T]) -> Mat<T> {
        let n = self.dim;
        let mut g = Mat::zeros(n, n);
        match &self.source {
            MetricSource::Expressions(upper) => {
                for i in 0..n {
                    for j in i..n {
                        let v = upper[upper_index(n, i, j)].eval(x);
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
            }
            MetricSource::Builtin(b) => builtin_eval(b, n, x, &mut g),
        }
        g
    }

    /// Positive-definite symmetric metric matrix at an in-bounds point.
    pub fn eval<T: Real>(&self, x: &[T]) -> Result<Mat<T>> {
        self.check_point(x)?;
        let g = self.eval_raw(x);
        let (vals, _) = symmetric_eigen(&g);
        if vals[0] <= T::zero() {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: vals[0].as_f64(),
            });
        }
        Ok(g)
    }

    /// Closed-form curvature data for builtins that have it. Returns
    /// `(scalar, riem_norm_sq, ric_norm_sq, lap_r, ricci_frame)` in a
    /// g-orthonormal frame, or None when the metric has no analytic path.
    pub fn analytic_invariants<T: Real>(&self, _x: &[T]) -> Option<AnalyticInvariants<T>> {
        let MetricSource::Builtin(b) = &self.source else {
            return None;
        };
        let n = self.dim;
        let nf = T::of_usize(n);
        match b {
            Builtin::Euclidean | Builtin::FlatTorus { .. } => Some(AnalyticInvariants::flat(n)),
            Builtin::Sphere { radius, .. } => {
                Some(AnalyticInvariants::space_form(n, T::of(1.0 / (radius * radius))))
            }
            Builtin::Hyperbolic { radius } => {
                Some(AnalyticInvariants::space_form(n, T::of(-1.0 / (radius * radius))))
            }
            Builtin::ProductSphereCircle { a, .. } => {
                // Sphere factor S^{n-1}(a) carries all curvature.
                let m = n - 1;
                if m < 2 {
                    return Some(AnalyticInvariants::flat(n));
                }
                let mf = T::of_usize(m);
                let inv_a2 = T::of(1.0 / (a * a));
                let scalar = mf * (mf - T::one()) * inv_a2;
                let riem = T::of(2.0) * mf * (mf - T::one()) * inv_a2 * inv_a2;
                let ric = mf * (mf - T::one()) * (mf - T::one()) * inv_a2 * inv_a2;
                let mut ricci = Mat::zeros(n, n);
                for i in 0..m {
                    ricci[(i, i)] = (mf - T::one()) * inv_a2;
                }
                let mut riemann = crate::curvature::R4::zeros(n);
                let kappa = inv_a2;
                for i in 0..m {
                    for k in 0..m {
                        for j in 0..m {
                            for l in 0..m {
                                let d = |a: usize, b: usize| {
                                    if a == b {
                                        T::one()
                                    } else {
                                        T::zero()
                                    }
                                };
                                riemann.set(i, k, j, l, kappa * (d(i, j) * d(k, l) - d(i, l) * d(k, j)));
                            }
                        }
                    }
                }
                Some(AnalyticInvariants {
                    dim: n,
                    scalar,
                    riem_norm_sq: riem,
                    ric_norm_sq: ric,
                    lap_r: T::zero(),
                    ricci,
                    riemann,
                })
            }
            Builtin::PerturbedSphere { .. } => None,
            #[allow(unreachable_patterns)]
            _ => {
                let _ = nf;
                None
            }
        }
    }

    /// The builtin expressed through expression trees, where representable
    /// (the perturbed sphere's bump is piecewise and has no tree form).
    pub fn to_expression_form(&self) -> Option<MetricSpec> {
        let MetricSource::Builtin(b) = &self.source else {
            return Some(self.clone());
        };
        let n = self.dim;
        let exprs = builtin_expressions(b, n)?;
        Some(MetricSpec {
            dim: n,
            source: MetricSource::Expressions(exprs),
            bounds: self.bounds.clone(),
        })
    }

    /// Canonical definition-file text (expression sources only).
    pub fn print(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dim {};", self.dim);
        if let MetricSource::Expressions(upper) = &self.source {
            for i in 0..self.dim {
                for j in i..self.dim {
                    let _ = writeln!(
                        out,
                        "g{}{} = {};",
                        i + 1,
                        j + 1,
                        upper[upper_index(self.dim, i, j)].print()
                    );
                }
            }
        }
        for (k, (lo, hi)) in self.bounds.iter().enumerate() {
            if *lo != -DEFAULT_BOUND || *hi != DEFAULT_BOUND {
                let _ = writeln!(out, "bounds x{} = [{lo:?}, {hi:?}];", k + 1);
            }
        }
        out
    }
}

/// Analytic curvature payload for builtins (see `curvature` for the
/// finite-difference path and the shared invariants type).
#[derive(Debug, Clone)]
pub struct AnalyticInvariants<T> {
    pub dim: usize,
    pub scalar: T,
    pub riem_norm_sq: T,
    pub ric_norm_sq: T,
    pub lap_r: T,
    pub ricci: Mat<T>,
    pub riemann: crate::curvature::R4<T>,
}

impl<T: Real> AnalyticInvariants<T> {
    fn flat(n: usize) -> Self {
        Self {
            dim: n,
            scalar: T::zero(),
            riem_norm_sq: T::zero(),
            ric_norm_sq: T::zero(),
            lap_r: T::zero(),
            ricci: Mat::zeros(n, n),
            riemann: crate::curvature::R4::zeros(n),
        }
    }

    fn space_form(n: usize, kappa: T) -> Self {
        let nf = T::of_usize(n);
        let mut ricci = Mat::zeros(n, n);
        for i in 0..n {
            ricci[(i, i)] = (nf - T::one()) * kappa;
        }
        let mut riemann = crate::curvature::R4::zeros(n);
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let d = |a: usize, b: usize| if a == b { T::one() } else { T::zero() };
                        riemann.set(i, k, j, l, kappa * (d(i, j) * d(k, l) - d(i, l) * d(k, j)));
                    }
                }
            }
        }
        Self {
            dim: n,
            scalar: nf * (nf - T::one()) * kappa,
            riem_norm_sq: T::of(2.0) * nf * (nf - T::one()) * kappa * kappa,
            ric_norm_sq: nf * (nf - T::one()) * (nf - T::one()) * kappa * kappa,
            lap_r: T::zero(),
            ricci,
            riemann,
        }
    }
}

fn builtin_bounds(b: &Builtin, dim: usize) -> Result<Vec<(f64, f64)>> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "builtin metrics need dimension >= 2, got {dim}"
        )));
    }
    Ok(match b {
        Builtin::Euclidean => vec![(-DEFAULT_BOUND, DEFAULT_BOUND); dim],
        Builtin::Sphere { chart, .. } => match chart {
            // Stereographic chart covers everything but the antipode; keep a
            // comfortable margin.
            SphereChart::Stereographic => vec![(-4.0, 4.0); dim],
            SphereChart::Polar => {
                let mut b = vec![(0.35, std::f64::consts::PI - 0.35); dim - 1];
                b.push((-DEFAULT_BOUND, DEFAULT_BOUND));
                b
            }
        },
        Builtin::Hyperbolic { radius } => vec![(-0.85 * radius, 0.85 * radius); dim],
        Builtin::FlatTorus { periods } => {
            if periods.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: periods.len(),
                });
            }
            periods.iter().map(|p| (0.0, *p)).collect()
        }
        Builtin::ProductSphereCircle { b, .. } => {
            if dim < 3 {
                return Err(Error::InvalidArgument(
                    "product_sphere_circle needs dimension >= 3".into(),
                ));
            }
            let mut bb = vec![(0.35, std::f64::consts::PI - 0.35); dim - 2];
            bb.push((0.0, 2.0 * std::f64::consts::PI * b));
            bb.push((-DEFAULT_BOUND, DEFAULT_BOUND));
            // Last angle of the sphere is a full circle coordinate; order the
            // bounds as polar angles then the circle coordinate.
            bb.swap(dim - 2, dim - 1);
            bb.truncate(dim);
            bb
        }
        Builtin::PerturbedSphere { center, .. } => {
            if center.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: center.len(),
                });
            }
            vec![(-4.0, 4.0); dim]
        }
    })
}

fn builtin_eval<T: Real>(b: &Builtin, n: usize, x: &[T], g: &mut Mat<T>) {
    match b {
        Builtin::Euclidean | Builtin::FlatTorus { .. } => {
            for i in 0..n {
                g[(i, i)] = T::one();
            }
        }
        Builtin::Sphere { radius, chart } => match chart {
            SphereChart::Stereographic => {
                let a2 = T::of(radius * radius);
                let r2: T = x.iter().map(|v| *v * *v).sum();
                let f = T::of(2.0) * a2 / (a2 + r2);
                for i in 0..n {
                    g[(i, i)] = f * f;
                }
            }
            SphereChart::Polar => {
                let a2 = T::of(radius * radius);
                let mut prefix = T::one();
                for i in 0..n {
                    g[(i, i)] = a2 * prefix;
                    if i + 1 < n {
                        let s = x[i].sin();
                        prefix *= s * s;
                    }
                }
            }
        },
        Builtin::Hyperbolic { radius } => {
            let a2 = T::of(radius * radius);
            let r2: T = x.iter().map(|v| *v * *v).sum();
            let f = T::of(2.0) * a2 / (a2 - r2);
            for i in 0..n {
                g[(i, i)] = f * f;
            }
        }
        Builtin::ProductSphereCircle { a, b } => {
            // Coordinates: x1..x_{n-1} polar angles on S^{n-1}(a), x_n circle.
            let a2 = T::of(a * a);
            let mut prefix = T::one();
            for i in 0..(n - 1) {
                g[(i, i)] = a2 * prefix;
                if i + 1 < n - 1 {
                    let s = x[i].sin();
                    prefix *= s * s;
                }
            }
            g[(n - 1, n - 1)] = T::of(b * b);
        }
        Builtin::PerturbedSphere {
            a,
            amplitude,
            center,
            width,
        } => {
            let a2 = T::of(a * a);
            let r2: T = x.iter().map(|v| *v * *v).sum();
            let round = T::of(2.0) * a2 / (a2 + r2);
            let mut d2 = T::zero();
            for (xi, ci) in x.iter().zip(center) {
                let d = *xi - T::of(*ci);
                d2 += d * d;
            }
            let s = d2 / T::of(width * width);
            let bump = if s < T::one() {
                let u = T::one() - s;
                u * u * u * u * u * u
            } else {
                T::zero()
            };
            let f = round * (T::one() + T::of(*amplitude) * bump);
            for i in 0..n {
                g[(i, i)] = f * f;
            }
        }
    }
}

fn builtin_expressions(b: &Builtin, n: usize) -> Option<Vec<Expr>> {
    use Expr::*;
    let zero = || Const(0.0);
    let one = || Const(1.0);
    let sum_sq = |n: usize| {
        let mut acc = Pow(Box::new(Var(0)), Box::new(Const(2.0)));
        for i in 1..n {
            acc = Add(Box::new(acc), Box::new(Pow(Box::new(Var(i)), Box::new(Const(2.0)))));
        }
        acc
    };
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    match b {
        Builtin::Euclidean | Builtin::FlatTorus { .. } => {
            for i in 0..n {
                for j in i..n {
                    upper.push(if i == j { one() } else { zero() });
                }
            }
        }
        Builtin::Sphere { radius, chart } => match chart {
            SphereChart::Stereographic => {
                let a2 = radius * radius;
                let factor = Pow(
                    Box::new(Div(
                        Box::new(Mul(Box::new(Const(2.0)), Box::new(Const(a2)))),
                        Box::new(Add(Box::new(Const(a2)), Box::new(sum_sq(n)))),
                    )),
                    Box::new(Const(2.0)),
                );
                for i in 0..n {
                    for j in i..n {
                        upper.push(if i == j { factor.clone() } else { zero() });
                    }
                }
            }
            SphereChart::Polar => {
                let a2 = Const(radius * radius);
                for i in 0..n {
                    for j in i..n {
                        if i != j {
                            upper.push(zero());
                            continue;
                        }
                        let mut e = a2.clone();
                        for k in 0..i {
                            e = Mul(
                                Box::new(e),
                                Box::new(Pow(
                                    Box::new(Apply(crate::expr::Func::Sin, Box::new(Var(k)))),
                                    Box::new(Const(2.0)),
                                )),
                            );
                        }
                        upper.push(e);
                    }
                }
            }
        },
        Builtin::Hyperbolic { radius } => {
            let a2 = radius * radius;
            let factor = Pow(
                Box::new(Div(
                    Box::new(Mul(Box::new(Const(2.0)), Box::new(Const(a2)))),
                    Box::new(Sub(Box::new(Const(a2)), Box::new(sum_sq(n)))),
                )),
                Box::new(Const(2.0)),
            );
            for i in 0..n {
                for j in i..n {
                    upper.push(if i == j { factor.clone() } else { zero() });
                }
            }
        }
        Builtin::ProductSphereCircle { a, b } => {
            let a2 = Const(a * a);
            for i in 0..n {
                for j in i..n {
                    if i != j {
                        upper.push(zero());
                    } else if i == n - 1 {
                        upper.push(Const(b * b));
                    } else {
                        let mut e = a2.clone();
                        for k in 0..i {
                            e = Mul(
                                Box::new(e),
                                Box::new(Pow(
                                    Box::new(Apply(crate::expr::Func::Sin, Box::new(Var(k)))),
                                    Box::new(Const(2.0)),
                                )),
                            );
                        }
                        upper.push(e);
                    }
                }
            }
        }
        Builtin::PerturbedSphere { .. } => return None,
    }
    Some(upper)
}

/// Parses a metric-definition document.
pub fn parse_metric(text: &str) -> Result<MetricSpec> {
    let mut dim: Option<usize> = None;
    let mut components: Vec<Option<(Expr, usize, usize)>> = Vec::new();
    let mut bounds: Vec<(f64, f64)> = Vec::new();
    let mut seen: Vec<(usize, usize)> = Vec::new();

    // Strip comments, keep line structure for positions.
    let mut statements: Vec<(String, usize, usize)> = Vec::new(); // text, line, col of start
    {
        let mut current = String::new();
        let mut start: Option<(usize, usize)> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            for (colno, ch) in line.chars().enumerate() {
                if ch == ';' {
                    let (l, c) = start.unwrap_or((lineno + 1, colno + 1));
                    statements.push((current.clone(), l, c));
                    current.clear();
                    start = None;
                } else {
                    if start.is_none() && !ch.is_whitespace() {
                        start = Some((lineno + 1, colno + 1));
                    }
                    current.push(ch);
                }
            }
            current.push('\n');
        }
        if let Some((l, c)) = start {
            if !current.trim().is_empty() {
                return Err(Error::Parse {
                    line: l,
                    col: c,
                    message: "statement missing terminating `;`".into(),
                });
            }
        }
    }

    for (stmt, line, col) in &statements {
        let trimmed = stmt.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("dim") {
            let d: usize = rest.trim().parse().map_err(|_| Error::Parse {
                line: *line,
                col: *col,
                message: format!("malformed dimension `{}`", rest.trim()),
            })?;
            if d < 1 {
                return Err(Error::Parse {
                    line: *line,
                    col: *col,
                    message: "dimension must be >= 1".into(),
                });
            }
            dim = Some(d);
            components = vec![None; d * (d + 1) / 2];
            bounds = vec![(-DEFAULT_BOUND, DEFAULT_BOUND); d];
            continue;
        }
        let d = dim.ok_or_else(|| Error::Parse {
            line: *line,
            col: *col,
            message: "`dim n;` must come first".into(),
        })?;
        if let Some(rest) = trimmed.strip_prefix("bounds") {
            let (lhs, rhs) = rest.split_once('=').ok_or_else(|| Error::Parse {
                line: *line,
                col: *col,
                message: "bounds statement needs `= [lo, hi]`".into(),
            })?;
            let name = lhs.trim();
            let k = name
                .strip_prefix('x')
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|k| *k >= 1 && *k <= d)
                .ok_or_else(|| Error::Parse {
                    line: *line,
                    col: *col,
                    message: format!("unknown coordinate `{name}`"),
                })?;
            let body = rhs.trim();
            let inner = body
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| Error::Parse {
                    line: *line,
                    col: *col,
                    message: "bounds must be `[lo, hi]`".into(),
                })?;
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse {
                    line: *line,
                    col: *col,
                    message: "bounds must be `[lo, hi]`".into(),
                });
            }
            let lo: f64 = parts[0].trim().parse().map_err(|_| Error::Parse {
                line: *line,
                col: *col,
                message: format!("malformed bound `{}`", parts[0].trim()),
            })?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| Error::Parse {
                line: *line,
                col: *col,
                message: format!("malformed bound `{}`", parts[1].trim()),
            })?;
            if !(lo < hi) {
                return Err(Error::Parse {
                    line: *line,
                    col: *col,
                    message: "bounds must satisfy lo < hi".into(),
                });
            }
            bounds[k - 1] = (lo, hi);
            continue;
        }
        // Component statement gIJ = expr.
        let (lhs, rhs) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
            line: *line,
            col: *col,
            message: format!("unrecognized statement `{trimmed}`"),
        })?;
        let name = lhs.trim();
        let digits = name.strip_prefix('g').ok_or_else(|| Error::Parse {
            line: *line,
            col: *col,
            message: format!("unrecognized statement `{name} = ...`"),
        })?;
        if digits.len() != 2 || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Parse {
                line: *line,
                col: *col,
                message: format!("component must be gIJ with single digits, got `{name}`"),
            });
        }
        let i = digits.chars().next().unwrap().to_digit(10).unwrap() as usize;
        let j = digits.chars().nth(1).unwrap().to_digit(10).unwrap() as usize;
        if i < 1 || j < 1 || i > d || j > d || i > j {
            return Err(Error::Parse {
                line: *line,
                col: *col,
                message: format!("component g{i}{j} out of range for upper triangle of dim {d}"),
            });
        }
        // Column position of the expression within the original line.
        let expr_col = col + trimmed.len() - rhs.trim_start().len() - (trimmed.len() - lhs.len() - 1 - rhs.len());
        let expr = parse_component(rhs, *line, expr_col.max(1), d)?;
        components[upper_index(d, i - 1, j - 1)] = Some((expr, i, j));
        seen.push((i, j));
    }

    let d = dim.ok_or_else(|| Error::Parse {
        line: 1,
        col: 1,
        message: "missing `dim n;` header".into(),
    })?;
    let mut upper = Vec::with_capacity(d * (d + 1) / 2);
    for i in 1..=d {
        for j in i..=d {
            match components[upper_index(d, i - 1, j - 1)].take() {
                Some((e, _, _)) => upper.push(e),
                None => {
                    return Err(Error::MetricDefinition(format!("missing component g{i}{j}")));
                }
            }
        }
    }
    MetricSpec::from_expressions(d, upper, bounds)
}

fn parse_component(rhs: &str, line: usize, col: usize, dim: usize) -> Result<Expr> {
    let toks = tokenize(rhs, line, col)?;
    let expr = ExprParser::new(toks, line, col + rhs.chars().count()).parse_full()?;
    if let Some(max) = expr.max_var() {
        if max + 1 > dim {
            return Err(Error::Parse {
                line,
                col,
                message: format!("reference to undeclared variable x{} (dim {dim})", max + 1),
            });
        }
    }
    Ok(expr)
}

/// Parses a builtin designator like `sphere`, `sphere(0.5)`,
/// `sphere(1, polar)`, `flat_torus(1, 2)`,
/// `perturbed_sphere(1, 0.3, 0.7, 0.2, 0.0)` (radius, amplitude, width,
/// then the bump center coordinates, defaulting to the origin).
pub fn parse_builtin(designator: &str, dim: usize) -> Result<MetricSpec> {
    let designator = designator.trim();
    let (name, args): (&str, Vec<String>) = match designator.find('(') {
        None => (designator, Vec::new()),
        Some(p) => {
            let inner = designator[p..]
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::InvalidArgument(format!("malformed builtin `{designator}`")))?;
            (
                &designator[..p],
                inner
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
            )
        }
    };
    let num = |s: &String| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::InvalidArgument(format!("malformed numeric argument `{s}`")))
    };
    let builtin = match name {
        "euclidean" => Builtin::Euclidean,
        "sphere" => {
            let radius = args.first().map(num).transpose()?.unwrap_or(1.0);
            let chart = match args.get(1).map(|s| s.as_str()) {
                None | Some("stereographic") => SphereChart::Stereographic,
                Some("polar") => SphereChart::Polar,
                Some(other) => {
                    return Err(Error::InvalidArgument(format!("unknown sphere chart `{other}`")))
                }
            };
            Builtin::Sphere { radius, chart }
        }
        "hyperbolic" => Builtin::Hyperbolic {
            radius: args.first().map(num).transpose()?.unwrap_or(1.0),
        },
        "flat_torus" => {
            let periods = if args.is_empty() {
                vec![2.0 * std::f64::consts::PI; dim]
            } else {
                args.iter().map(num).collect::<Result<Vec<_>>>()?
            };
            Builtin::FlatTorus { periods }
        }
        "product_sphere_circle" => Builtin::ProductSphereCircle {
            a: args.first().map(num).transpose()?.unwrap_or(1.0),
            b: args.get(1).map(num).transpose()?.unwrap_or(1.0),
        },
        "perturbed_sphere" => {
            let a = args.first().map(num).transpose()?.unwrap_or(1.0);
            let amplitude = args.get(1).map(num).transpose()?.unwrap_or(0.3);
            let width = args.get(2).map(num).transpose()?.unwrap_or(0.8);
            let mut center = vec![0.0; dim];
            for (k, slot) in center.iter_mut().enumerate() {
                if let Some(v) = args.get(3 + k) {
                    *slot = num(v)?;
                }
            }
            Builtin::PerturbedSphere {
                a,
                amplitude,
                center,
                width,
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown builtin metric `{other}`"
            )))
        }
    };
    MetricSpec::from_builtin(builtin, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_round_sphere_chart() {
        let spec = parse_metric("dim 2;\ng11 = 1;\ng12 = 0;\ng22 = sin(x1)^2;").unwrap();
        assert_eq!(spec.dim, 2);
        let g = spec.eval(&[std::f64::consts::FRAC_PI_2, 0.3]).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g[(1, 1)] - 1.0).abs() < 1e-12);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn missing_component_is_reported() {
        let err = parse_metric("dim 2;\ng11 = 1;\ng12 = 0;").unwrap_err();
        assert!(err.to_string().contains("missing component g22"), "{err}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_metric("dim 3;\ng11 = x1^;").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undeclared_variable_is_rejected() {
        let err = parse_metric("dim 2;\ng11 = x3;\ng12 = 0;\ng22 = 1;").unwrap_err();
        assert!(err.to_string().contains("x3"), "{err}");
    }

    #[test]
    fn euclidean_evaluates_to_identity() {
        let spec = MetricSpec::from_builtin(Builtin::Euclidean, 3).unwrap();
        let g = spec.eval(&[0.3, -0.2, 1.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(g[(i, j)], expect);
            }
        }
    }

    #[test]
    fn polar_sphere_at_equator_is_identityish() {
        let spec = parse_builtin("sphere(1, polar)", 2).unwrap();
        let g = spec.eval(&[std::f64::consts::FRAC_PI_2, 1.0]).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_bounds_point_is_rejected() {
        let spec = parse_builtin("sphere(1, polar)", 2).unwrap();
        let err = spec.eval(&[0.05, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { coordinate: 1, .. }));
    }

    #[test]
    fn non_positive_definite_is_reported() {
        let spec = parse_metric("dim 2;\ng11 = 1;\ng12 = 2;\ng22 = 1;").unwrap();
        let err = spec.eval(&[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn builtin_matches_expression_form() {
        for designator in [
            "sphere(1.3)",
            "sphere(0.8, polar)",
            "hyperbolic(1.1)",
            "product_sphere_circle(1.2, 0.7)",
        ] {
            let dim = if designator.starts_with("product") { 3 } else { 2 };
            let spec = parse_builtin(designator, dim).unwrap();
            let exprs = spec.to_expression_form().unwrap();
            // Deterministic scatter of in-bounds points.
            let mut state = 7u64;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as f64) / (u64::MAX >> 33) as f64
            };
            for _ in 0..50 {
                let x: Vec<f64> = spec
                    .bounds
                    .iter()
                    .map(|(lo, hi)| {
                        let lo = lo.max(-2.0);
                        let hi = hi.min(2.0);
                        lo + (hi - lo) * next()
                    })
                    .collect();
                let g1 = spec.eval_raw(&x);
                let g2 = exprs.eval_raw(&x);
                for i in 0..dim {
                    for j in 0..dim {
                        assert!(
                            (g1[(i, j)] - g2[(i, j)]).abs() <= 1e-12 * (1.0 + g1[(i, j)].abs()),
                            "{designator} at {x:?}: ({i},{j}) {} vs {}",
                            g1[(i, j)],
                            g2[(i, j)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn print_parse_round_trip_on_user_metric() {
        let src = "dim 2;\ng11 = 1 + x1^2;\ng12 = x1 * x2;\ng22 = sin(x2)^2 + 2;\nbounds x1 = [-1.0, 1.0];";
        let spec = parse_metric(src).unwrap();
        let printed = spec.print();
        let spec2 = parse_metric(&printed).unwrap();
        assert_eq!(spec, spec2);
    }

    #[test]
    fn perturbed_sphere_reduces_to_round_outside_support() {
        let spec = parse_builtin("perturbed_sphere(1, 0.4, 0.5, 0.0, 0.0)", 2).unwrap();
        let round = parse_builtin("sphere(1)", 2).unwrap();
        let x = [1.2f64, 0.9]; // |x - center| > width
        let g1 = spec.eval_raw(&x);
        let g2 = round.eval_raw(&x);
        assert!((g1[(0, 0)] - g2[(0, 0)]).abs() < 1e-15);
        // And differs inside.
        let y = [0.1f64, 0.0];
        assert!((spec.eval_raw(&y)[(0, 0)] - round.eval_raw(&y)[(0, 0)]).abs() > 1e-3);
    }
}
