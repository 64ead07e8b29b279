//! Adaptive Dormand–Prince 5(4) integration for the small ODE systems used by
//! the radial shooters. Steps are clamped to land exactly on requested output
//! nodes so profiles can be sampled without dense-output interpolation.

use crate::error::{Error, Result};
use crate::real::Real;

/// Tolerances and step limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::tol(1e-12),
            atol: T::tol(1e-13),
            max_steps: 1_000_000,
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (`t_end > t0`).
///
/// When `record` is non-empty it must be strictly increasing inside
/// `(t0, t_end]`; the state at each node is appended to the returned vector in
/// order. The final state is always returned.
pub fn integrate<T: Real, const N: usize>(
    f: &impl Fn(T, &[T; N]) -> [T; N],
    t0: T,
    t_end: T,
    y0: [T; N],
    record: &[T],
    opts: &OdeOptions<T>,
) -> Result<([T; N], Vec<[T; N]>)> {
    // Dormand–Prince coefficients.
    let c = [
        T::zero(),
        T::of(1.0 / 5.0),
        T::of(3.0 / 10.0),
        T::of(4.0 / 5.0),
        T::of(8.0 / 9.0),
        T::one(),
        T::one(),
    ];
    let a: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // 5th-order weights equal the last A row; E holds (b5 - b4).
    let e: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];

    let mut t = t0;
    let mut y = y0;
    let mut k: [[T; N]; 7] = [[T::zero(); N]; 7];
    k[0] = f(t, &y);
    let span = t_end - t0;
    let mut h = span * T::of(1e-3);
    let mut out = Vec::with_capacity(record.len());
    let mut next_node = 0usize;
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::OdeSteps {
                max_steps: opts.max_steps,
                t: t.as_f64(),
            });
        }
        // Clamp to the next recording node and the interval end.
        let mut target = t_end;
        if next_node < record.len() && record[next_node] < target {
            target = record[next_node];
        }
        if t + h > target {
            h = target - t;
        }
        if h <= T::epsilon() * (T::one() + t.abs()) {
            // Degenerate step: node coincides with t.
            if next_node < record.len() && (record[next_node] - t).abs() <= T::epsilon() * (T::one() + t.abs()) {
                out.push(y);
                next_node += 1;
                h = span * T::of(1e-3);
                continue;
            }
            return Err(Error::OdeStepUnderflow { t: t.as_f64() });
        }

        // One embedded step.
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let aij = T::of(a[stage - 1][j]);
                if aij != T::zero() {
                    for (ysn, kjn) in ys.iter_mut().zip(kj.iter()) {
                        *ysn += h * aij * *kjn;
                    }
                }
            }
            k[stage] = f(t + c[stage] * h, &ys);
        }
        // k[6] is f at the 5th-order solution (FSAL); y5 is the stage-6 state.
        let mut y5 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let bj = T::of(a[5][j]);
            if bj != T::zero() {
                for (yn, kjn) in y5.iter_mut().zip(kj.iter()) {
                    *yn += h * bj * *kjn;
                }
            }
        }
        // Error estimate.
        let mut err = T::zero();
        for i in 0..N {
            let mut de = T::zero();
            for (j, kj) in k.iter().enumerate() {
                de += T::of(e[j]) * kj[i];
            }
            de *= h;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            let r = de / scale;
            err += r * r;
        }
        err = (err / T::of_usize(N)).sqrt();

        if err <= T::one() {
            t += h;
            y = y5;
            k[0] = k[6];
            if next_node < record.len()
                && (t - record[next_node]).abs() <= T::epsilon() * T::of(4.0) * (T::one() + t.abs())
            {
                out.push(y);
                next_node += 1;
            }
        }
        // PI-free standard step update.
        let order_root = T::of(0.2);
        let factor = if err == T::zero() {
            T::of(5.0)
        } else {
            (T::of(0.9) * err.powf(-order_root)).min(T::of(5.0)).max(T::of(0.2))
        };
        h = (h * factor).min(span);
    }
    Ok((y, out))
}
