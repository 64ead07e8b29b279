//! Closed-form special values: sphere areas via the half-integer gamma
//! ladder, and exact monomial moments over the unit sphere.

use crate::real::Real;

/// Gamma(k/2) for integer `half_twice = k >= 1`, built from the factorial and
/// half-integer ladders. Exact up to rounding for every integer dimension.
pub fn gamma_half<T: Real>(half_twice: u32) -> T {
    assert!(half_twice >= 1);
    if half_twice % 2 == 0 {
        // Gamma(m) = (m-1)!
        let m = half_twice / 2;
        let mut acc = T::one();
        for k in 1..m {
            acc *= T::of_usize(k as usize);
        }
        acc
    } else {
        // Gamma(1/2) = sqrt(pi); Gamma(x + 1) = x Gamma(x).
        let mut acc = T::PI().sqrt();
        let mut x = T::of(0.5);
        let steps = (half_twice - 1) / 2;
        for _ in 0..steps {
            acc *= x;
            x += T::one();
        }
        acc
    }
}

/// Surface area of the unit sphere S^{n-1} in R^n: 2 pi^{n/2} / Gamma(n/2).
pub fn sphere_area<T: Real>(n: usize) -> T {
    assert!(n >= 1);
    let half_n = T::of_usize(n) / T::of(2.0);
    T::of(2.0) * T::PI().powf(half_n) / gamma_half::<T>(n as u32)
}

/// Exact moment of a monomial over the unit sphere S^{n-1}:
/// `int_{S^{n-1}} prod x_i^{alpha_i} dsigma`.
///
/// Zero unless every exponent is even; otherwise
/// `2 prod Gamma((alpha_i+1)/2) / Gamma((n + |alpha|)/2)`.
pub fn sphere_monomial_moment<T: Real>(alpha: &[u32]) -> T {
    if alpha.iter().any(|a| a % 2 == 1) {
        return T::zero();
    }
    let n = alpha.len() as u32;
    let total: u32 = alpha.iter().sum();
    let mut num = T::of(2.0);
    for a in alpha {
        num *= gamma_half::<T>(a + 1);
    }
    num / gamma_half::<T>(n + total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_ladder_matches_known_values() {
        assert!((gamma_half::<f64>(2) - 1.0).abs() < 1e-15); // Gamma(1)
        assert!((gamma_half::<f64>(4) - 1.0).abs() < 1e-15); // Gamma(2)
        assert!((gamma_half::<f64>(6) - 2.0).abs() < 1e-15); // Gamma(3)
        assert!((gamma_half::<f64>(8) - 6.0).abs() < 1e-15); // Gamma(4)
        assert!((gamma_half::<f64>(1) - PI.sqrt()).abs() < 1e-15); // Gamma(1/2)
        assert!((gamma_half::<f64>(3) - 0.5 * PI.sqrt()).abs() < 1e-15); // Gamma(3/2)
        assert!((gamma_half::<f64>(5) - 0.75 * PI.sqrt()).abs() < 1e-15); // Gamma(5/2)
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert!((sphere_area::<f64>(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area::<f64>(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area::<f64>(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area::<f64>(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
        assert!((sphere_area::<f64>(6) - PI.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn moments_match_hand_values() {
        // int_{S^1} x^2 = pi ; int_{S^2} x^2 = 4 pi / 3 ; int_{S^2} x^2 y^2 = 4 pi / 15.
        assert!((sphere_monomial_moment::<f64>(&[2, 0]) - PI).abs() < 1e-14);
        assert!((sphere_monomial_moment::<f64>(&[2, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((sphere_monomial_moment::<f64>(&[2, 2, 0]) - 4.0 * PI / 15.0).abs() < 1e-13);
        assert_eq!(sphere_monomial_moment::<f64>(&[1, 2]), 0.0);
        // Total measure.
        assert!((sphere_monomial_moment::<f64>(&[0, 0, 0]) - 4.0 * PI).abs() < 1e-13);
    }
}
