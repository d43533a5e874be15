//! Gamma and Beta functions.
//!
//! `log_gamma` shifts its argument upward with the recurrence
//! `Γ(y+1) = yΓ(y)` until the Stirling series converges to full double
//! precision, then subtracts the logarithm of the accumulated product.

use crate::error::{Error, Result};

/// Below this the argument is shifted before the asymptotic series is applied.
const STIRLING_CUTOFF: f64 = 15.0;

/// `B_{2k} / (2k (2k-1))` for k = 1..=8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_6;

fn ln_gamma_stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Horner in 1/z^2, innermost term first.
    let series = STIRLING_COEFFS
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * inv2 + c)
        * inv;
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series
}

/// Natural logarithm of the Gamma function for `y > 0`.
pub fn log_gamma(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires y > 0, got {y}")));
    }
    if y >= STIRLING_CUTOFF {
        return Ok(ln_gamma_stirling(y));
    }
    let mut z = y;
    let mut product = 1.0;
    while z < STIRLING_CUTOFF {
        product *= z;
        z += 1.0;
    }
    Ok(ln_gamma_stirling(z) - product.ln())
}

/// `Γ(y)` for moderate positive arguments.
pub fn gamma(y: f64) -> Result<f64> {
    log_gamma(y).map(f64::exp)
}

/// Euler Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "beta requires positive arguments, got ({a}, {b})"
        )));
    }
    Ok((log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Reference values from a 40-digit mpmath evaluation.
    const LOG_GAMMA_REF: [(f64, f64); 12] = [
        (0.001, 6.907_178_885_383_853_682_512),
        (0.1, 2.252_712_651_734_205_959_870),
        (0.5, 0.572_364_942_924_700_087_072),
        (1.5, -0.120_782_237_635_245_222_346),
        (2.5, 0.284_682_870_472_919_159_632),
        (7.3, 7.147_892_523_022_249_032_777),
        (10.0, 12.801_827_480_081_469_611_208),
        (33.3, 82.603_723_581_654_952_928_323),
        (150.5, 602.513_954_870_585_411_950_738),
        (1000.0, 5905.220_423_209_181_211_826),
        (123_456.7, 1_323_900.975_390_918_294_941),
        (1_000_000.0, 12_815_504.569_147_611_659_977),
    ];

    #[test]
    fn trivial_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-14);
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn matches_high_precision_reference() {
        for &(y, want) in &LOG_GAMMA_REF {
            let got = log_gamma(y).unwrap();
            // exp(got)/exp(want) - 1 for moderate results; relative error of
            // the logarithm itself once its magnitude makes that meaningless.
            let tol = if want.abs() < 100.0 { 1e-12 } else { 1e-15 * want.abs() };
            assert!((got - want).abs() <= tol, "y={y}: {got} vs {want}");
        }
    }

    #[test]
    fn factorials_and_half_integers() {
        let mut fact = 1.0f64;
        for n in 1..=30u32 {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            let g = gamma(n as f64).unwrap();
            assert!((g / fact - 1.0).abs() < 1e-13, "Γ({n})");
        }
        // Γ(n + 1/2) = (2n)! √π / (4^n n!)
        let mut g = PI.sqrt();
        for n in 0..20 {
            let y = n as f64 + 0.5;
            assert!((gamma(y).unwrap() / g - 1.0).abs() < 1e-13, "Γ({y})");
            g *= y;
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(beta(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(beta(1.0, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn beta_examples() {
        assert!((beta(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta(0.5, 0.5).unwrap() / PI - 1.0).abs() < 1e-13);
        // mpmath: B(2.5, 1.25) = 0.27242156408229816212...
        let b = beta(2.5, 1.25).unwrap();
        assert!((b / 0.272_421_564_082_298_162_126 - 1.0).abs() < 1e-11, "{b}");
        // mpmath: B(1.25, 0.5)
        let b = beta(1.25, 0.5).unwrap();
        assert!((b / 1.748_038_369_528_079_873_643 - 1.0).abs() < 1e-11, "{b}");
    }

    #[test]
    fn beta_gamma_product_oracle() {
        // Independent route: direct Gamma products for small integer/half-integer arguments.
        for &(a, b) in &[(2.0, 3.0), (1.5, 2.5), (3.5, 0.5), (4.0, 1.5)] {
            let want = gamma(a).unwrap() * gamma(b).unwrap() / gamma(a + b).unwrap();
            assert!((beta(a, b).unwrap() / want - 1.0).abs() < 1e-12);
        }
        // B(2,3) = 1!2!/4! = 1/12
        assert!((beta(2.0, 3.0).unwrap() * 12.0 - 1.0).abs() < 1e-13);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn beta_is_symmetric(a in 0.01f64..60.0, b in 0.01f64..60.0) {
                let ab = beta(a, b).unwrap();
                let ba = beta(b, a).unwrap();
                prop_assert!((ab - ba).abs() <= 1e-14 * ab.abs());
            }

            #[test]
            fn beta_with_unit_argument(a in 0.01f64..50.0) {
                let got = beta(a, 1.0).unwrap();
                prop_assert!((got * a - 1.0).abs() <= 1e-12, "a={} got={}", a, got);
            }

            #[test]
            fn gamma_recurrence(y in 0.01f64..150.0) {
                let lhs = log_gamma(y + 1.0).unwrap();
                let rhs = log_gamma(y).unwrap() + y.ln();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }
}
