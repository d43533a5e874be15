//! The one-dimensional integrals behind the spectrum: the direct Legendre
//! projection, the Dirichlet-Mehler route and the Beta-function forms.

use std::f64::consts::{PI, SQRT_2};

use super::HurstIndex;
use crate::error::{Error, Result};
use crate::harmonics::legendre_p_batch;
use crate::numerics::{
    beta, gamma, integrate_adaptive, integrate_adaptive_panels, integrate_adaptive_panels_batch, Integral,
};

/// Smallest accepted absolute tolerance for the spectrum integrals.
pub const MIN_TOL: f64 = 1e-13;
/// Tolerance used when none is specified.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Bisection depth limit; leaves room to resolve the `θ^{2H}` cusp at zero.
const MAX_DEPTH: u32 = 64;

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= MIN_TOL) || !tol.is_finite() {
        return Err(Error::Config(format!("tolerance must be finite and >= {MIN_TOL:e}, got {tol}")));
    }
    Ok(())
}

/// Equal panels on `[0, upper]`, four per oscillation of a degree-`ℓ` kernel.
fn oscillation_panels(degree: usize, upper: f64) -> Vec<f64> {
    let n = 4 * (degree + 1);
    (0..=n)
        .map(|k| if k == n { upper } else { upper * k as f64 / n as f64 })
        .collect()
}

/// `d_ℓ = ∫₀^π θ^{2H} P_ℓ(cos θ) sin θ dθ` with its error estimate.
pub fn dl_quadrature_integral(degree: usize, hurst: HurstIndex, tol: f64) -> Result<Integral> {
    check_tol(tol)?;
    let two_h = 2.0 * hurst.value();
    let f = |theta: &[f64], out: &mut [f64]| {
        for (tc, oc) in theta.chunks(16).zip(out.chunks_mut(16)) {
            let mut c = [0.0; 16];
            for (ci, t) in c.iter_mut().zip(tc) {
                *ci = t.cos();
            }
            legendre_p_batch(degree, &c[..tc.len()], oc);
            for (o, t) in oc.iter_mut().zip(tc) {
                *o *= t.powf(two_h) * t.sin();
            }
        }
    };
    integrate_adaptive_panels_batch(f, &oscillation_panels(degree, PI), tol, MAX_DEPTH)
}

pub fn dl_quadrature(degree: usize, hurst: HurstIndex, tol: f64) -> Result<f64> {
    dl_quadrature_integral(degree, hurst, tol).map(|i| i.value)
}

/// `∫₀^π sin((ℓ+½)φ) sin^{2H+1}(φ/2) dφ`.
#[allow(non_snake_case)]
pub fn oscillatory_I(degree: usize, hurst: HurstIndex, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let freq = degree as f64 + 0.5;
    let p = 2.0 * hurst.value() + 1.0;
    let f = |phi: f64| (freq * phi).sin() * (0.5 * phi).sin().powf(p);
    integrate_adaptive_panels(f, &oscillation_panels(degree, PI), tol, MAX_DEPTH).map(|i| i.value)
}

/// `∫₀^φ sin^{2H}(θ/2) sin θ / sqrt(cos θ − cos φ) dθ`, evaluated numerically.
///
/// With `u = sin(θ/2)` and `s = sin(φ/2)` the integral becomes
/// `2√2 ∫₀^s u^{2H+1} / sqrt(s² − u²) du`; the further substitution
/// `u = s sin t` removes the inverse square root at `u = s`, leaving
/// `2√2 ∫₀^{π/2} (s sin t)^{2H+1} dt`.
pub fn inner_integral(phi: f64, hurst: HurstIndex) -> Result<f64> {
    if !(phi > 0.0 && phi <= PI) {
        return Err(Error::Domain(format!("φ must lie in (0, π], got {phi}")));
    }
    let s = (0.5 * phi).sin();
    let p = 2.0 * hurst.value() + 1.0;
    let tol = (1e-15 * s.powf(p)).max(f64::MIN_POSITIVE);
    let integral = integrate_adaptive(|t: f64| (s * t.sin()).powf(p), 0.0, 0.5 * PI, tol, MAX_DEPTH)
        .or_else(|e| match e {
            // Relative tolerance near the floating-point floor; accept the estimate.
            Error::Convergence { estimate, error, .. } if error <= 1e-13 * s.powf(p) => Ok(Integral {
                value: estimate,
                error,
                segments: 0,
            }),
            other => Err(other),
        })?;
    Ok(2.0 * SQRT_2 * integral.value)
}

/// The Beta-function value `√2 B(H+1, ½) sin^{2H+1}(φ/2)` of [`inner_integral`].
pub fn inner_integral_closed_form(phi: f64, hurst: HurstIndex) -> Result<f64> {
    if !(phi > 0.0 && phi <= PI) {
        return Err(Error::Domain(format!("φ must lie in (0, π], got {phi}")));
    }
    let h = hurst.value();
    Ok(SQRT_2 * beta(h + 1.0, 0.5)? * (0.5 * phi).sin().powf(2.0 * h + 1.0))
}

/// `d̃_ℓ = 2^{2H+1}/π · B(H+1, ½) · I_ℓ`.
pub fn dl_mehler(degree: usize, hurst: HurstIndex, tol: f64) -> Result<f64> {
    let h = hurst.value();
    let i = oscillatory_I(degree, hurst, tol)?;
    Ok(2f64.powf(2.0 * h + 1.0) / PI * beta(h + 1.0, 0.5)? * i)
}

/// `sin((H + ½)π)`, written as `sin((½ − H)π)` so that it is exactly zero at
/// `H = ½`.
fn phase_factor(h: f64) -> f64 {
    ((0.5 - h) * PI).sin()
}

/// `(2/π) B(H+1, ½) B(2H+2, ℓ−H+½) sin((H+½)π)` for `ℓ >= 1`.
pub fn dl_closed_form(degree: usize, hurst: HurstIndex) -> Result<f64> {
    if degree == 0 {
        return Err(Error::Usage("the Beta closed form is not defined for degree 0".into()));
    }
    let h = hurst.value();
    let b = beta(2.0 * h + 2.0, degree as f64 - h + 0.5)?;
    Ok(2.0 / PI * beta(h + 1.0, 0.5)? * b * phase_factor(h))
}

/// `(2/π) B(H+1, ½) Γ(2H+2) sin((H+½)π)`, the limit of `ℓ^{2H+2}` times the
/// closed form.
pub fn asymptotic_constant(hurst: HurstIndex) -> f64 {
    let h = hurst.value();
    // Arguments lie in [1, 3]; the special functions cannot fail there.
    let b = beta(h + 1.0, 0.5).expect("positive arguments");
    let g = gamma(2.0 * h + 2.0).expect("positive argument");
    2.0 / PI * b * g * phase_factor(h)
}
