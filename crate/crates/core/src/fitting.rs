//! Least-squares fitting of asymptotic expansions in a radius parameter.

use crate::error::{Error, Result};
use crate::linalg::{least_squares, solve, Mat};
use crate::real::Real;
use serde::Serialize;

/// Result of fitting `value ~ sum_k c_k eps^{e_k}` over a sample window.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport<T> {
    /// What was fitted (filled in by the caller).
    pub model: String,
    pub exponents: Vec<f64>,
    pub coefficients: Vec<T>,
    pub std_errors: Vec<T>,
    /// Smallest and largest eps in the window.
    pub window: (T, T),
    pub samples: Vec<(T, T)>,
    pub residuals: Vec<T>,
    /// Log-log slope of the fit residual estimated from the two smallest
    /// eps samples; None when either residual is at rounding level.
    pub residual_decay_order: Option<T>,
    /// Anomalies noticed by the verifier (e.g. coefficient mismatches).
    pub flags: Vec<String>,
}

/// Fits the stated monomials by least squares. Requires at least
/// `exponents.len() + 2` samples with distinct eps values.
pub fn fit_expansion<T: Real>(samples: &[(T, T)], exponents: &[f64]) -> Result<ExpansionReport<T>> {
    let m = samples.len();
    let k = exponents.len();
    if m < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples to fit {} exponents, got {m}",
            k + 2,
            k
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in sorted.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::InvalidArgument(
                "eps values must be distinct".into(),
            ));
        }
    }
    let mut design = Mat::zeros(m, k);
    for (i, (eps, _)) in sorted.iter().enumerate() {
        for (j, e) in exponents.iter().enumerate() {
            design[(i, j)] = eps.powf(T::of(*e));
        }
    }
    let b: Vec<T> = sorted.iter().map(|(_, v)| *v).collect();
    let (coefficients, residuals) = least_squares(&design, &b)?;

    // Standard errors from the residual variance and (X^T X)^{-1}.
    let dof = (m - k).max(1);
    let s2: T = residuals.iter().map(|r| *r * *r).sum::<T>() / T::of_usize(dof);
    let xtx = design.transpose().matmul(&design);
    let mut std_errors = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = vec![T::zero(); k];
        e[j] = T::one();
        match solve(xtx.clone(), e) {
            Ok(col) => std_errors.push((s2 * col[j].max(T::zero())).sqrt()),
            Err(_) => std_errors.push(T::nan()),
        }
    }

    // Residual decay order: subtract every fitted term except the
    // highest-order monomial and measure the log-log slope of what remains
    // over the four smallest eps. For an honest fit this reads the top
    // exponent (e.g. 4 for a [2, 4] expansion fit).
    let top = exponents
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let floor = T::epsilon() * T::of(64.0) * (T::one() + b[0].abs());
    let mut logs: Vec<(T, T)> = Vec::new();
    for (i, (eps, y)) in sorted.iter().enumerate().take(4.max(k + 2).min(m)) {
        let mut z = *y;
        for (j, e) in exponents.iter().enumerate() {
            if j != top {
                z -= coefficients[j] * eps.powf(T::of(*e));
            }
        }
        if z.abs() > floor {
            logs.push((eps.ln(), z.abs().ln()));
        }
        let _ = i;
    }
    let decay = if logs.len() >= 2 {
        // Least-squares slope of log|z| against log eps.
        let mf = T::of_usize(logs.len());
        let sx: T = logs.iter().map(|(x, _)| *x).sum();
        let sy: T = logs.iter().map(|(_, y)| *y).sum();
        let sxx: T = logs.iter().map(|(x, _)| *x * *x).sum();
        let sxy: T = logs.iter().map(|(x, y)| *x * *y).sum();
        Some((mf * sxy - sx * sy) / (mf * sxx - sx * sx))
    } else {
        None
    };

    Ok(ExpansionReport {
        model: String::new(),
        exponents: exponents.to_vec(),
        coefficients,
        std_errors,
        window: (sorted[0].0, sorted[m - 1].0),
        samples: sorted,
        residuals,
        residual_decay_order: decay,
        flags: Vec::new(),
    })
}
