//! Transport coefficients of the hydrodynamic description.
//!
//! The density flux is driven by `phi(r) = r (1 + a r)`; the mobility is
//! `sigma(r) = 2 r (1 - r) (1 + 2 a r)`, which factors as
//! `sigma = 2 chi phi'` with the static susceptibility `chi(r) = r (1 - r)`.

use crate::{Error, ModelParams, Result};

/// Diffusion potential `phi(r) = r (1 + a r)`.
#[inline]
pub fn phi(params: &ModelParams, r: f64) -> f64 {
    r * (1.0 + params.a * r)
}

/// Derivative `phi'(r) = 1 + 2 a r`; strictly positive on [0, 1] for a > -1/2.
#[inline]
pub fn phi_prime(params: &ModelParams, r: f64) -> f64 {
    1.0 + 2.0 * params.a * r
}

/// Static susceptibility `chi(r) = r (1 - r)`.
#[inline]
pub fn chi(r: f64) -> f64 {
    r * (1.0 - r)
}

/// Mobility `sigma(r) = 2 r (1 - r) (1 + 2 a r) = 2 chi(r) phi'(r)`.
#[inline]
pub fn sigma(params: &ModelParams, r: f64) -> f64 {
    2.0 * chi(r) * phi_prime(params, r)
}

/// Largest value of `phi'` on [0, 1]: `max(1, 1 + 2a)`.
#[inline]
pub fn phi_prime_max(params: &ModelParams) -> f64 {
    (1.0 + 2.0 * params.a).max(1.0)
}

/// Inverse of `phi` on [0, 1].
///
/// `phi` is strictly increasing on [0, 1] with range [0, 1 + a]; the inverse
/// uses the cancellation-free quadratic root `2y / (1 + sqrt(1 + 4 a y))`
/// (exact for a = 0) followed by one Newton step, so `|phi(r) - y| <= 1e-12`.
pub fn phi_inverse(params: &ModelParams, y: f64) -> Result<f64> {
    let a = params.a;
    let hi = 1.0 + a;
    if !y.is_finite() || y < -1e-12 || y > hi + 1e-12 {
        return Err(Error::domain(format!(
            "phi_inverse: y = {y} outside the range [0, {hi}] of phi"
        )));
    }
    let y = y.clamp(0.0, hi);
    let disc = (1.0 + 4.0 * a * y).max(0.0);
    let mut r = 2.0 * y / (1.0 + disc.sqrt());
    // One Newton polish; phi' >= min(1, 1 + 2a) > 0 keeps it well-posed.
    let dp = phi_prime(params, r);
    if dp > 0.0 {
        r -= (phi(params, r) - y) / dp;
    }
    Ok(r.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(a: f64) -> ModelParams {
        ModelParams::new(a, 1, 2).unwrap()
    }

    #[test]
    fn point_values() {
        let p1 = params(1.0);
        assert_eq!(phi(&p1, 0.5), 0.75);
        assert_eq!(phi_prime(&p1, 0.5), 2.0);
        assert_eq!(chi(0.5), 0.25);
        assert_eq!(sigma(&p1, 0.5), 1.0);
        let p0 = params(0.0);
        assert_eq!(phi(&p0, 0.3), 0.3);
        assert_eq!(sigma(&p0, 0.3), 2.0 * 0.3 * 0.7);
    }

    #[test]
    fn sigma_vanishes_at_lattice_gas_extremes() {
        for a in [-0.4, 0.0, 1.0, 3.0] {
            let p = params(a);
            assert_eq!(sigma(&p, 0.0), 0.0);
            assert_eq!(sigma(&p, 1.0), 0.0);
        }
    }

    /// Independent reference for the inverse: bisection on [0, 1].
    fn phi_inverse_bisect(p: &ModelParams, y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(p, mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn inverse_matches_bisection_reference() {
        let p = params(1.0);
        let r = phi_inverse(&p, 0.84).unwrap();
        let r_ref = phi_inverse_bisect(&p, 0.84);
        assert!((r - r_ref).abs() < 1e-12, "r = {r}, reference = {r_ref}");
        // Frozen four-digit value of the reference root.
        assert!((r - 0.5440).abs() < 5e-5);
    }

    #[test]
    fn inverse_is_identity_without_interaction() {
        let p = params(0.0);
        for y in [0.0, 0.17, 0.5, 0.93, 1.0] {
            assert!((phi_inverse(&p, y).unwrap() - y).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_rejects_out_of_range() {
        let p = params(1.0);
        assert!(phi_inverse(&p, 2.1).is_err());
        assert!(phi_inverse(&p, -0.2).is_err());
        let pneg = params(-0.4);
        assert!(phi_inverse(&pneg, 0.7).is_err()); // range is [0, 0.6]
    }

    proptest! {
        #[test]
        fn einstein_relation_holds(a in -0.49f64..4.0, r in 0.0f64..=1.0) {
            let p = params(a);
            let lhs = sigma(&p, r);
            let rhs = 2.0 * chi(r) * phi_prime(&p, r);
            prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()));
        }

        #[test]
        fn inverse_round_trips(a in -0.49f64..4.0, r in 0.0f64..=1.0) {
            let p = params(a);
            let y = phi(&p, r);
            let back = phi_inverse(&p, y).unwrap();
            prop_assert!((phi(&p, back) - y).abs() <= 1e-12);
            prop_assert!((back - r).abs() <= 1e-9);
        }
    }
}
