//! The function `F(p, z) = log(1 - p + p e^z)` that governs every disorder
//! average, its order-4 power series, and the exact linearization
//! coefficients of `f(x) = F(p, γ(x - c))` on the finite sets of values that
//! spin products can take.
//!
//! Coefficients are always evaluated from [`big_f`] itself. The truncated
//! series is kept only to test remainder scaling.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Above this argument `e^z` is factored out of the logarithm.
const LARGE_ARGUMENT: f64 = 30.0;

/// `F(p, z) = log(1 - p + p e^z)`.
pub fn big_f(p: f64, z: f64) -> f64 {
    if p == 1.0 {
        return z;
    }
    if p == 0.0 || z == 0.0 {
        return 0.0;
    }
    if z > LARGE_ARGUMENT {
        z + (p + (1.0 - p) * (-z).exp()).ln()
    } else {
        (p * z.exp_m1()).ln_1p()
    }
}

/// Truncation of the power series of `F(p, ·)` at `z^order`, `order ∈ 1..=4`.
pub fn series_f(p: f64, z: f64, order: u32) -> Result<f64> {
    if !(1..=4).contains(&order) {
        return Err(Error::invalid(
            "order",
            order,
            "series is available for orders 1..=4",
        ));
    }
    let coefficients = series_coefficients(p);
    let mut acc = 0.0;
    for c in coefficients[..order as usize].iter().rev() {
        acc = (acc + c) * z;
    }
    Ok(acc)
}

/// Coefficients of `z, z², z³, z⁴` in the expansion of `F(p, z)`.
pub fn series_coefficients(p: f64) -> [f64; 4] {
    [
        p,
        p * (1.0 - p) / 2.0,
        p * (2.0 * p * p - 3.0 * p + 1.0) / 6.0,
        p * (((-6.0 * p + 12.0) * p - 7.0) * p + 1.0) / 24.0,
    ]
}

/// `f(x) = a0 + a1 x` on `x ∈ {-1, +1}` for `f(x) = F(p, γ(x - m²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub p: f64,
    pub gamma: f64,
    pub m: f64,
}

pub fn pair_coefficients(p: f64, gamma: f64, m: f64) -> PairCoefficients {
    let f = |x: f64| big_f(p, gamma * (x - m * m));
    let (up, down) = (f(1.0), f(-1.0));
    PairCoefficients {
        a0: 0.5 * (up + down),
        a1: 0.5 * (up - down),
        p,
        gamma,
        m,
    }
}

/// `f(x1 + x2) = b0 + b1 x1 + b2 x2 + b12 x1 x2` on `x1, x2 ∈ {-1, +1}` for
/// `f(x) = F(p, γ(x - 2m²))`. The two single-replica coefficients coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCoefficients {
    pub b0: f64,
    pub b1: f64,
    pub b12: f64,
    pub p: f64,
    pub gamma: f64,
    pub m: f64,
}

impl QuadCoefficients {
    pub fn b2(&self) -> f64 {
        self.b1
    }
}

pub fn quad_coefficients(p: f64, gamma: f64, m: f64) -> QuadCoefficients {
    let f = |x: f64| big_f(p, gamma * (x - 2.0 * m * m));
    let (plus, zero, minus) = (f(2.0), f(0.0), f(-2.0));
    QuadCoefficients {
        b0: 0.25 * (plus + minus + 2.0 * zero),
        b1: 0.25 * (plus - minus),
        b12: 0.25 * (plus + minus - 2.0 * zero),
        p,
        gamma,
        m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSplit {
    pub even: f64,
    pub odd: f64,
}

/// Even and odd parts in `z` of `F(p, γ(z + y))`.
pub fn symmetric_split(p: f64, gamma: f64, z: f64, y: f64) -> SymmetricSplit {
    let forward = big_f(p, gamma * (z + y));
    let backward = big_f(p, gamma * (-z + y));
    SymmetricSplit {
        even: 0.5 * (forward + backward),
        odd: 0.5 * (forward - backward),
    }
}

/// Second-order approximations of the even and odd parts:
/// `pγy + ½p(1-p)γ²(z² + y²)` and `pγz + p(1-p)γ²zy`.
pub fn split_leading_terms(p: f64, gamma: f64, z: f64, y: f64) -> SymmetricSplit {
    let curvature = p * (1.0 - p) * gamma * gamma;
    SymmetricSplit {
        even: p * gamma * y + 0.5 * curvature * (z * z + y * y),
        odd: p * gamma * z + curvature * z * y,
    }
}

/// `|F(p, z) - series_F(p, z, 4)| / |z|⁵` at `z0, z0/2, …` (`halvings + 1` points).
pub fn series_remainder_ratios(p: f64, z0: f64, halvings: u32) -> Vec<f64> {
    (0..=halvings)
        .map(|i| {
            let z = z0 / f64::from(1u32 << i);
            let series = series_f(p, z, 4).expect("order 4 is supported");
            (big_f(p, z) - series).abs() / z.abs().powi(5)
        })
        .collect()
}

/// Remainders of [`symmetric_split`] against [`split_leading_terms`], each
/// divided by `pγ³`, at `γ0, γ0/2, …` (`halvings + 1` points).
pub fn split_remainder_ratios(
    p: f64,
    gamma0: f64,
    z: f64,
    y: f64,
    halvings: u32,
) -> Vec<SymmetricSplit> {
    (0..=halvings)
        .map(|i| {
            let gamma = gamma0 / f64::from(1u32 << i);
            let exact = symmetric_split(p, gamma, z, y);
            let lead = split_leading_terms(p, gamma, z, y);
            let scale = p * gamma.powi(3);
            SymmetricSplit {
                even: (exact.even - lead.even).abs() / scale,
                odd: (exact.odd - lead.odd).abs() / scale,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_f(p: f64, z: f64) -> f64 {
        (1.0 - p + p * z.exp()).ln()
    }

    #[test]
    fn big_f_examples() {
        for &p in &[0.0, 0.2, 0.5, 1.0] {
            assert_eq!(big_f(p, 0.0), 0.0);
        }
        for &z in &[-50.0, -1.0, 0.3, 40.0, 800.0] {
            assert_eq!(big_f(1.0, z), z);
        }
        assert!((big_f(0.5, 1.0) - 0.620_114_506_958_277_5).abs() < 1e-15);
    }

    #[test]
    fn big_f_large_arguments_are_finite() {
        let v = big_f(0.3, 1000.0);
        assert!((v - (1000.0 + 0.3f64.ln())).abs() < 1e-12);
        let v = big_f(0.3, -1000.0);
        assert!((v - 0.7f64.ln()).abs() < 1e-15);
        // Continuity across the switch.
        let below = big_f(0.3, LARGE_ARGUMENT);
        let above = big_f(0.3, LARGE_ARGUMENT + 1e-9);
        assert!((above - below).abs() < 1e-8);
    }

    #[test]
    fn series_examples() {
        for order in 1..=4 {
            assert_eq!(series_f(0.3, 0.0, order).unwrap(), 0.0);
        }
        assert!((series_f(0.5, 0.1, 2).unwrap() - 0.05125).abs() < 1e-15);
        for &z in &[-0.4, 0.2, 1.3] {
            assert!((series_f(1.0, z, 4).unwrap() - z).abs() < 1e-15);
        }
        assert!(series_f(0.5, 0.1, 0).is_err());
        assert!(series_f(0.5, 0.1, 5).is_err());
    }

    #[test]
    fn pair_coefficient_examples() {
        let c = pair_coefficients(1.0, 0.07, 0.6);
        assert!((c.a0 + 0.07 * 0.36).abs() < 1e-15);
        assert!((c.a1 - 0.07).abs() < 1e-15);
        let c = pair_coefficients(0.4, 0.0, 0.6);
        assert_eq!((c.a0, c.a1), (0.0, 0.0));

        let c = pair_coefficients(0.5, 0.01, 0.9);
        let up = naive_f(0.5, 0.01 * (1.0 - 0.81));
        let down = naive_f(0.5, 0.01 * (-1.0 - 0.81));
        assert!((c.a0 - 0.5 * (up + down)).abs() < 1e-15);
        assert!((c.a1 - 0.5 * (up - down)).abs() < 1e-15);
    }

    #[test]
    fn quad_coefficient_examples() {
        let c = quad_coefficients(1.0, 0.05, 0.7);
        assert!((c.b0 + 2.0 * 0.05 * 0.49).abs() < 1e-15);
        assert!((c.b1 - 0.05).abs() < 1e-15);
        assert!(c.b12.abs() < 1e-15);
        assert_eq!(c.b2(), c.b1);
        let c = quad_coefficients(0.3, 0.0, 0.7);
        assert_eq!((c.b0, c.b1, c.b12), (0.0, 0.0, 0.0));

        let (p, g, m) = (0.5, 0.02, 0.8);
        let c = quad_coefficients(p, g, m);
        let f = |x: f64| naive_f(p, g * (x - 2.0 * m * m));
        assert!((c.b0 - (f(2.0) + f(-2.0) + 2.0 * f(0.0)) / 4.0).abs() < 1e-15);
        assert!((c.b1 - (f(2.0) - f(-2.0)) / 4.0).abs() < 1e-15);
        assert!((c.b12 - (f(2.0) + f(-2.0) - 2.0 * f(0.0)) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn quad_coefficients_reconstruct_f_on_all_pairs() {
        let (p, g, m) = (0.37, 0.11, 0.55);
        let c = quad_coefficients(p, g, m);
        for &x1 in &[-1.0, 1.0] {
            for &x2 in &[-1.0, 1.0] {
                let exact = big_f(p, g * (x1 + x2 - 2.0 * m * m));
                let linear = c.b0 + c.b1 * x1 + c.b2() * x2 + c.b12 * x1 * x2;
                assert!((exact - linear).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn split_examples() {
        let s = symmetric_split(0.3, 0.2, 0.0, 1.5);
        assert_eq!(s.odd, 0.0);
        // At p = 0.5 the cubic term vanishes, so the remainder shrinks at least
        // like γ³ as γ is halved.
        let (p, z, y) = (0.5, 1.0, 2.0);
        let mut gamma = 0.01;
        let mut previous = f64::INFINITY;
        for _ in 0..5 {
            let s = symmetric_split(p, gamma, z, y);
            let lead = split_leading_terms(p, gamma, z, y);
            let ratio = (s.even - lead.even).abs() / (p * gamma.powi(3));
            assert!(ratio <= previous * 1.01);
            previous = ratio;
            gamma *= 0.5;
        }
        assert!(previous < 1.0);
    }

    proptest! {
        #[test]
        fn split_reconstructs(p in 0.0f64..=1.0, gamma in 0.0f64..0.5, z in -3.0f64..3.0, y in -3.0f64..3.0) {
            let s = symmetric_split(p, gamma, z, y);
            let full = big_f(p, gamma * (z + y));
            prop_assert!((s.even + s.odd - full).abs() <= 1e-14 * (1.0 + full.abs()));
        }

        #[test]
        fn big_f_matches_naive(p in 0.0f64..=1.0, z in -20.0f64..20.0) {
            let a = big_f(p, z);
            let b = naive_f(p, z);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn pair_coefficients_relative_precision(p in 0.01f64..=1.0, gamma in 1e-4f64..0.5, m in 0.0f64..1.0) {
            let c = pair_coefficients(p, gamma, m);
            let up = big_f(p, gamma * (1.0 - m * m));
            let down = big_f(p, gamma * (-1.0 - m * m));
            let scale = up.abs() + down.abs();
            prop_assert!((c.a0 + c.a1 - up).abs() <= 1e-14 * scale);
            prop_assert!((c.a0 - c.a1 - down).abs() <= 1e-14 * scale);
        }
    }
}
