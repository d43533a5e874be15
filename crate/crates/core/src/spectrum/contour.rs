//! The oscillatory integral `I_ℓ` as a contour integral over the quarter
//! arc `z = e^{it}`, `t ∈ [0, π/2]`, with principal-branch powers.
//!
//! With `φ = 2t`, `z − 1/z = 2i sin t` and
//! `I_ℓ = 2 ∫₀^{π/2} sin((2ℓ+1)t) sin^{2H+1} t dt`. The integrand
//! `f(z) = z^{2ℓ} (z − 1/z)^{2H+1} / (2^{2H+1} i^{2H+2})` satisfies
//! `2 Im ∫ f dz = I_ℓ`. The variant normalized by `2^{2H} i^{2H+1}` differs by
//! the factor `2i`; its value is exposed separately for comparison.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::HurstIndex;
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, QuadratureRule};

const PANEL_ORDER: usize = 20;
/// Dyadic levels used to grade the first panel towards the `t^{2H+1}` cusp.
const GRADING_LEVELS: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Normalization {
    Matched,
    Unit,
}

/// Smallest admissible panel count for degree `ℓ`.
pub fn min_contour_panels(degree: usize) -> usize {
    64 * (degree + 1)
}

/// `2 Im ∫_C f_ℓ(z) dz` with the normalization that reproduces `I_ℓ`.
pub fn contour_imag(degree: usize, hurst: HurstIndex, panels: usize) -> Result<f64> {
    arc_integral(degree, hurst, panels, Normalization::Matched).map(|v| 2.0 * v.im)
}

/// The same quantity for `z^{2ℓ}(z − 1/z)^{2H+1} / (2^{2H} i^{2H+1})`.
///
/// This equals `2i` times the matched integrand, so its doubled imaginary part
/// is `4 ∫₀^{π/2} cos((2ℓ+1)t) sin^{2H+1} t dt`, not `I_ℓ`.
pub fn contour_imag_unit_normalized(degree: usize, hurst: HurstIndex, panels: usize) -> Result<f64> {
    arc_integral(degree, hurst, panels, Normalization::Unit).map(|v| 2.0 * v.im)
}

fn panel_edges(panels: usize) -> Vec<(f64, f64)> {
    let h = FRAC_PI_2 / panels as f64;
    let mut edges = Vec::with_capacity(panels + GRADING_LEVELS as usize);
    let mut lo = h / 2f64.powi(GRADING_LEVELS as i32);
    edges.push((0.0, lo));
    for _ in 0..GRADING_LEVELS {
        edges.push((lo, 2.0 * lo));
        lo *= 2.0;
    }
    for k in 1..panels {
        let b = if k + 1 == panels { FRAC_PI_2 } else { h * (k + 1) as f64 };
        edges.push((h * k as f64, b));
    }
    edges
}

fn arc_integral(degree: usize, hurst: HurstIndex, panels: usize, norm: Normalization) -> Result<Complex64> {
    if panels < min_contour_panels(degree) {
        return Err(Error::Config(format!(
            "contour quadrature for degree {degree} needs at least {} panels, got {panels}",
            min_contour_panels(degree)
        )));
    }
    let h = hurst.value();
    let p = 2.0 * h + 1.0;
    let i = Complex64::i();
    let scale = match norm {
        Normalization::Matched => 2f64.powf(p) * Complex64::from_polar(1.0, (2.0 * h + 2.0) * FRAC_PI_2),
        Normalization::Unit => 2f64.powf(2.0 * h) * Complex64::from_polar(1.0, p * FRAC_PI_2),
    };
    let rule: QuadratureRule = gauss_legendre(PANEL_ORDER)?;
    let mut total = Complex64::new(0.0, 0.0);
    let mut prev_arg: Option<(f64, f64)> = None;
    for (a, b) in panel_edges(panels) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut panel = Complex64::new(0.0, 0.0);
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let t = mid + half * x;
            let z = Complex64::from_polar(1.0, t);
            let diff = z - z.inv();
            let arg = diff.arg();
            if let Some((t0, a0)) = prev_arg {
                if (arg - a0).abs() > PI / 2.0 {
                    return Err(Error::BranchCut { t: 0.5 * (t0 + t), from: a0, to: arg });
                }
            }
            prev_arg = Some((t, arg));
            let f = z.powi(2 * degree as i32) * diff.powf(p) / scale;
            panel += f * (i * z) * *w;
        }
        total += panel * half;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{oscillatory_I, DEFAULT_TOL};

    fn h(v: f64) -> HurstIndex {
        HurstIndex::new(v).unwrap()
    }

    #[test]
    fn examples() {
        let v = contour_imag(1, h(0.5), 128).unwrap();
        assert!((v + 4.0 / 15.0).abs() < 1e-6, "{v}");
        let v = contour_imag(0, h(0.5), 64).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-6, "{v}");
        let v = contour_imag(4, h(0.1), 320).unwrap();
        let w = oscillatory_I(4, h(0.1), DEFAULT_TOL).unwrap();
        assert!((v - w).abs() < 1e-6);
    }

    #[test]
    fn too_few_panels() {
        assert!(matches!(contour_imag(2, h(0.3), 191), Err(Error::Config(_))));
    }

    #[test]
    fn unit_normalization_is_off_by_two_i() {
        // 4 ∫₀^{π/2} cos(3t) sin² t dt = −28/15 at ℓ = 1, H = ½.
        let v = contour_imag_unit_normalized(1, h(0.5), 128).unwrap();
        assert!((v + 28.0 / 15.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn grading_covers_the_arc() {
        let e = panel_edges(64);
        assert_eq!(e[0].0, 0.0);
        assert_eq!(e.last().unwrap().1, FRAC_PI_2);
        assert!(e.windows(2).all(|w| (w[0].1 - w[1].0).abs() < 1e-15 && w[0].0 < w[0].1));
    }
}
