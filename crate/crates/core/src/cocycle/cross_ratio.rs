use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::boundary::{forward_product, limit_form, limit_vector};
use crate::error::{Error, Result};

/// Below this, `|φ(v)|` makes the limit formula ill-conditioned.
const PHI_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossRatio {
    pub value: f64,
    /// The two limit vectors coincide, so the value is trivially 0.
    pub degenerate: bool,
    /// Some `|φ(v)|` fell below `1e-8`.
    pub ill_conditioned: bool,
}

/// `log(‖A'v_{b'}‖ ‖A v_b‖ / (‖A'v_b‖ ‖A v_{b'}‖))` with `A = a[n-1]⋯a[0]`,
/// `A' = a'[m-1]⋯a'[0]` and `v_b`, `v_{b'}` the limit vectors of the full
/// past words.
pub fn cross_ratio(
    a: &[Matrix2<f64>],
    a_prime: &[Matrix2<f64>],
    b: &[Matrix2<f64>],
    b_prime: &[Matrix2<f64>],
    n: usize,
    m: usize,
) -> Result<CrossRatio> {
    if n > a.len() || m > a_prime.len() {
        return Err(Error::Precondition("future word shorter than requested length".into()));
    }
    let vb = limit_vector(b, b.len())?.v;
    let vb2 = limit_vector(b_prime, b_prime.len())?.v;
    let big_a = forward_product(a, n);
    let big_a2 = forward_product(a_prime, m);
    let lhs = big_a2.log_norm_apply(&vb2.vec()) - big_a2.log_norm_apply(&vb.vec());
    let rhs = big_a.log_norm_apply(&vb2.vec()) - big_a.log_norm_apply(&vb.vec());
    Ok(CrossRatio {
        value: lhs - rhs,
        degenerate: vb.proj_distance(&vb2) < 1e-12,
        ill_conditioned: false,
    })
}

/// `log(|φ_{a'}(v_{b'})| |φ_a(v_b)| / (|φ_{a'}(v_b)| |φ_a(v_{b'})|))`, the
/// limit of [`cross_ratio`] as `n, m → ∞`.
pub fn cross_ratio_limit(
    a: &[Matrix2<f64>],
    a_prime: &[Matrix2<f64>],
    b: &[Matrix2<f64>],
    b_prime: &[Matrix2<f64>],
) -> Result<CrossRatio> {
    let vb = limit_vector(b, b.len())?.v.vec();
    let vb2 = limit_vector(b_prime, b_prime.len())?.v.vec();
    let phi = limit_form(a, a.len())?.v.vec();
    let phi2 = limit_form(a_prime, a_prime.len())?.v.vec();
    let vals = [phi2.dot(&vb2).abs(), phi.dot(&vb).abs(), phi2.dot(&vb).abs(), phi.dot(&vb2).abs()];
    let ill_conditioned = vals.iter().any(|v| *v < PHI_FLOOR);
    let value = (vals[0].ln() - vals[2].ln()) - (vals[3].ln() - vals[1].ln());
    Ok(CrossRatio { value, degenerate: (vb - vb2).norm() < 1e-12, ill_conditioned })
}

/// First lengths at which `log ‖a[n-1]⋯a[0]‖` and `log ‖a'[m-1]⋯a'[0]‖`
/// exceed `threshold`.
pub fn matched_lengths(a: &[Matrix2<f64>], a_prime: &[Matrix2<f64>], threshold: f64) -> Option<(usize, usize)> {
    let first = |w: &[Matrix2<f64>]| {
        let mut p = crate::boundary::RenormProduct::identity();
        for (k, g) in w.iter().enumerate() {
            p.left_mul(g);
            if p.log_norm() >= threshold {
                return Some(k + 1);
            }
        }
        None
    };
    Some((first(a)?, first(a_prime)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words() -> (Vec<Matrix2<f64>>, Vec<Matrix2<f64>>) {
        let p = Matrix2::new(2.0, 1.0, 1.0, 1.0);
        let q = Matrix2::new(1.0, 1.0, 1.0, 2.0);
        let w1: Vec<_> = (0..80).map(|i| if i % 3 == 0 { p } else { q }).collect();
        let w2: Vec<_> = (0..80).map(|i| if i % 2 == 0 { p } else { q }).collect();
        (w1, w2)
    }

    #[test]
    fn identical_pasts_or_futures_give_zero() {
        let (w1, w2) = words();
        assert_eq!(cross_ratio(&w1, &w2, &w1, &w1, 60, 60).unwrap().value, 0.0);
        assert_eq!(cross_ratio(&w1, &w1, &w1, &w2, 60, 60).unwrap().value, 0.0);
    }

    #[test]
    fn swapping_negates() {
        let (w1, w2) = words();
        let x = cross_ratio(&w1, &w2, &w2, &w1, 60, 60).unwrap().value;
        let y = cross_ratio(&w1, &w2, &w1, &w2, 60, 60).unwrap().value;
        let z = cross_ratio(&w2, &w1, &w2, &w1, 60, 60).unwrap().value;
        assert_eq!(x, -y);
        assert_eq!(x, -z);
    }

    #[test]
    fn matched_lengths_cross_threshold() {
        let (w1, w2) = words();
        let (n, m) = matched_lengths(&w1, &w2, 30.0).unwrap();
        assert!(forward_product(&w1, n).log_norm() >= 30.0);
        assert!(forward_product(&w1, n - 1).log_norm() < 30.0);
        assert!(forward_product(&w2, m).log_norm() >= 30.0);
    }
}
