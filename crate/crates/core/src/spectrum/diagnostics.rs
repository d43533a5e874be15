//! Report-only comparisons between the spectrum routes, and the decay check.

use serde::Serialize;

use super::{dl_closed_form, dl_mehler, dl_quadrature, HurstIndex, PowerSpectrum};
use crate::error::{Error, Result};

/// `d̃_ℓ <= d_ℓ <= 2^{2H} d̃_ℓ`, checked both signed and on magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub degree: usize,
    pub hurst: f64,
    pub d: f64,
    pub d_tilde: f64,
    pub signed_holds: bool,
    pub magnitude_holds: bool,
}

pub fn sandwich_report(degree: usize, hurst: HurstIndex, tol: f64) -> Result<SandwichReport> {
    let d = dl_quadrature(degree, hurst, tol)?;
    let d_tilde = dl_mehler(degree, hurst, tol)?;
    let factor = 2f64.powf(2.0 * hurst.value());
    Ok(SandwichReport {
        degree,
        hurst: hurst.value(),
        d,
        d_tilde,
        signed_holds: d_tilde <= d && d <= factor * d_tilde,
        magnitude_holds: d_tilde.abs() <= d.abs() && d.abs() <= factor * d_tilde.abs(),
    })
}

/// Range of `|d_ℓ| ℓ^{2H+2}` over a degree window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub ell_min: usize,
    pub ell_max: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: usize,
    pub argmax: usize,
    /// `max_ratio / min_ratio` (infinite when some `d_ℓ` vanishes).
    pub spread: f64,
    /// Relative change of the mean ratio between the lower and upper halves
    /// of the top octave `[ℓ_max/2, ℓ_max]`.
    pub drift: f64,
}

pub fn decay_check(spectrum: &PowerSpectrum, ell_min: usize, ell_max: usize) -> Result<DecayReport> {
    if ell_min < 8 || ell_max > spectrum.lmax() || ell_min >= ell_max {
        return Err(Error::Usage(format!(
            "decay window [{ell_min}, {ell_max}] must satisfy 8 <= min < max <= {}",
            spectrum.lmax()
        )));
    }
    let exponent = 2.0 * spectrum.hurst().value() + 2.0;
    let ratio = |l: usize| spectrum.magnitude(l) * (l as f64).powf(exponent);
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut argmin, mut argmax) = (ell_min, ell_min);
    for l in ell_min..=ell_max {
        let r = ratio(l);
        if r < min_ratio {
            min_ratio = r;
            argmin = l;
        }
        if r > max_ratio {
            max_ratio = r;
            argmax = l;
        }
    }
    let octave_lo = (ell_max / 2).max(ell_min);
    let mid = (octave_lo + ell_max) / 2;
    let mean = |a: usize, b: usize| (a..=b).map(ratio).sum::<f64>() / (b - a + 1) as f64;
    let lower = mean(octave_lo, mid);
    let upper = mean((mid + 1).min(ell_max), ell_max);
    Ok(DecayReport {
        ell_min,
        ell_max,
        min_ratio,
        max_ratio,
        argmin,
        argmax,
        spread: max_ratio / min_ratio,
        drift: (upper / lower - 1.0).abs(),
    })
}

/// One row comparing the Beta closed form with the two integral routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyRow {
    pub hurst: f64,
    pub degree: usize,
    /// Absent at degree 0, where the closed form is undefined.
    pub closed_form: Option<f64>,
    pub mehler: f64,
    pub quadrature: f64,
    /// `|closed_form| − |mehler|`.
    pub magnitude_gap: Option<f64>,
    pub sign_matches_mehler: Option<bool>,
}

pub fn closed_form_discrepancy(hurst_set: &[HurstIndex], lmax: usize, tol: f64) -> Result<Vec<DiscrepancyRow>> {
    let mut rows = Vec::with_capacity(hurst_set.len() * (lmax + 1));
    for &hurst in hurst_set {
        for degree in 0..=lmax {
            let mehler = dl_mehler(degree, hurst, tol)?;
            let quadrature = dl_quadrature(degree, hurst, tol)?;
            let closed_form = if degree == 0 {
                None
            } else {
                Some(dl_closed_form(degree, hurst)?)
            };
            rows.push(DiscrepancyRow {
                hurst: hurst.value(),
                degree,
                closed_form,
                mehler,
                quadrature,
                magnitude_gap: closed_form.map(|c| c.abs() - mehler.abs()),
                sign_matches_mehler: closed_form.map(|c| c.signum() == mehler.signum() && c != 0.0),
            });
        }
    }
    Ok(rows)
}
