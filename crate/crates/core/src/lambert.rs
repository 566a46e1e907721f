//! Lower real branch of the Lambert W function.
//!
//! `W_-1(x)` is the solution `w <= -1` of `w * exp(w) = x` for `x` in
//! `[-1/e, 0)`. Evaluation uses a series around the branch point or the
//! logarithmic asymptote as a starting guess, refined by Halley iteration.

use std::f64::consts::E;

use crate::error::{Error, Result};

const NEG_INV_E: f64 = -1.0 / E;
const MAX_ITERATIONS: usize = 64;
const REL_TOL: f64 = 1e-12;

/// Evaluate `W_-1(x)`.
pub fn lambert_w_m1(x: f64) -> Result<f64> {
    if !(NEG_INV_E..0.0).contains(&x) {
        // Allow the representable neighbourhood of -1/e, which rounds either way.
        if x.is_finite() && x < NEG_INV_E && NEG_INV_E - x <= 4.0 * f64::EPSILON {
            return Ok(-1.0);
        }
        return Err(Error::LambertDomain(x));
    }
    if x == NEG_INV_E {
        return Ok(-1.0);
    }

    let mut w = initial_guess(x);
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let next = (w - step).min(-1.0);
        let done = (next - w).abs() <= REL_TOL * next.abs();
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series in p = -sqrt(2(1 + e x)) about the branch point.
        let p = -(2.0 * (1.0 + E * x)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with an arbitrary-precision library (40 digits).
    const REFERENCE: [(f64, f64); 5] = [
        (-0.2, -2.542_641_357_773_526_4),
        (-0.1, -3.577_152_063_957_297_2),
        (-0.01, -6.472_775_124_394_004_7),
        (-1e-5, -14.163_600_815_810_183),
        (-1e-12, -31.067_172_842_017_231),
    ];

    #[test]
    fn matches_reference_values() {
        for (x, expected) in REFERENCE {
            let w = lambert_w_m1(x).unwrap();
            assert!(
                ((w - expected) / expected).abs() < 1e-12,
                "W_-1({x}) = {w}, expected {expected}"
            );
        }
    }

    #[test]
    fn branch_point() {
        assert_eq!(lambert_w_m1(-1.0 / E).unwrap(), -1.0);
        let near = lambert_w_m1(-1.0 / E + 1e-10).unwrap();
        assert!(near < -1.0 && near > -1.0001);
    }

    #[test]
    fn inverts_w_exp_w() {
        let mut x = -0.367;
        while x < -1e-300 {
            let w = lambert_w_m1(x).unwrap();
            assert!(w <= -1.0);
            assert!(((w * w.exp() - x) / x).abs() < 1e-10, "x = {x}");
            x *= 0.37;
        }
    }

    #[test]
    fn rejects_outside_domain() {
        for x in [0.0, 0.5, -0.5, f64::NAN, f64::NEG_INFINITY] {
            assert!(matches!(lambert_w_m1(x), Err(Error::LambertDomain(_))));
        }
    }
}
