//! The angular power spectrum `d_ℓ` of the field.
//!
//! `d_ℓ = ∫₀^π θ^{2H} P_ℓ(cos θ) sin θ dθ` is computed by adaptive quadrature.
//! Two further routes exist for comparison: the Dirichlet-Mehler value
//! `d̃_ℓ` (see [`dl_mehler`]) and its Beta-function closed form
//! ([`dl_closed_form`]). Values are stored signed; `d_ℓ <= 0` for `ℓ >= 1`,
//! and simulation uses the magnitudes `π|d_ℓ|` as modal variances.

mod cache;
mod contour;
mod diagnostics;
mod integrals;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

pub use cache::{cache_file_name, load_or_build, load_spectrum, save_spectrum, SpectrumCache, FORMAT_VERSION};
pub use contour::{contour_imag, contour_imag_unit_normalized, min_contour_panels};
pub use diagnostics::{
    closed_form_discrepancy, decay_check, sandwich_report, DecayReport, DiscrepancyRow, SandwichReport,
};
pub use integrals::{
    asymptotic_constant, dl_closed_form, dl_mehler, dl_quadrature, dl_quadrature_integral, inner_integral,
    inner_integral_closed_form, oscillatory_I, DEFAULT_TOL, MIN_TOL,
};

/// The Hurst index `H ∈ (0, ½]`; the field exists only on this range.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstIndex(f64);

impl HurstIndex {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h <= 0.5 {
            Ok(HurstIndex(h))
        } else {
            Err(Error::Domain(format!(
                "Hurst index must lie in (0, 1/2] for the spherical field to exist, got {h}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HurstIndex {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        HurstIndex::new(h)
    }
}

impl From<HurstIndex> for f64 {
    fn from(h: HurstIndex) -> f64 {
        h.0
    }
}

impl fmt::Display for HurstIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Quadrature,
    Mehler,
    ClosedForm,
}

impl SpectrumMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumMethod::Quadrature => "quadrature",
            SpectrumMethod::Mehler => "mehler",
            SpectrumMethod::ClosedForm => "closed_form",
        }
    }

    /// The value of `d_ℓ` under this method. The closed form has no degree-0
    /// member, so degree 0 falls back to the Mehler integral there.
    pub fn degree_value(self, degree: usize, hurst: HurstIndex, tol: f64) -> Result<f64> {
        match self {
            SpectrumMethod::Quadrature => dl_quadrature(degree, hurst, tol),
            SpectrumMethod::Mehler => dl_mehler(degree, hurst, tol),
            SpectrumMethod::ClosedForm if degree == 0 => dl_mehler(0, hurst, tol),
            SpectrumMethod::ClosedForm => dl_closed_form(degree, hurst),
        }
    }
}

impl fmt::Display for SpectrumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Signed spectrum values `d_0..=d_L` together with how they were computed.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    hurst: HurstIndex,
    values: Vec<f64>,
    method: SpectrumMethod,
    tol: f64,
}

impl PowerSpectrum {
    /// Wraps precomputed values, enforcing the sign pattern of the quadrature
    /// method: `d_0 > 0` and `d_ℓ <= tol` for `ℓ >= 1`. Exact zeros occur (at
    /// `H = ½` every even `ℓ >= 2` vanishes), so the bound is not strict.
    pub fn from_values(hurst: HurstIndex, method: SpectrumMethod, tol: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Usage("a spectrum needs at least degrees 0 and 1".into()));
        }
        if let Some(l) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Consistency(format!("d_{l} is not finite")));
        }
        if method == SpectrumMethod::Quadrature {
            if !(values[0] > 0.0) {
                return Err(Error::Consistency(format!("d_0 must be positive, got {}", values[0])));
            }
            if let Some(l) = (1..values.len()).find(|&l| values[l] > tol) {
                return Err(Error::Consistency(format!(
                    "d_{l} = {} is positive beyond the tolerance {tol:e}",
                    values[l]
                )));
            }
        }
        Ok(PowerSpectrum {
            hurst,
            values,
            method,
            tol,
        })
    }

    pub fn hurst(&self) -> HurstIndex {
        self.hurst
    }

    /// Truncation degree `L`.
    pub fn lmax(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, degree: usize) -> f64 {
        self.values[degree]
    }

    /// `|d_ℓ|`, the quantity consumed by simulation and conditional variances.
    pub fn magnitude(&self, degree: usize) -> f64 {
        self.values[degree].abs()
    }

    pub fn method(&self) -> SpectrumMethod {
        self.method
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Degrees `0..=L` only.
    pub fn truncated(&self, lmax: usize) -> Result<PowerSpectrum> {
        if lmax > self.lmax() || lmax == 0 {
            return Err(Error::Usage(format!("cannot truncate a degree-{} spectrum to {lmax}", self.lmax())));
        }
        Ok(PowerSpectrum {
            values: self.values[..=lmax].to_vec(),
            ..self.clone()
        })
    }

    pub(crate) fn require_quadrature(&self) -> Result<()> {
        if self.method != SpectrumMethod::Quadrature {
            return Err(Error::Usage(format!(
                "a quadrature spectrum is required, got the {} method",
                self.method
            )));
        }
        Ok(())
    }

    pub(crate) fn require_degree(&self, lmax: usize) -> Result<()> {
        if lmax > self.lmax() {
            return Err(Error::Usage(format!(
                "truncation degree {lmax} exceeds the spectrum degree {}",
                self.lmax()
            )));
        }
        Ok(())
    }
}

/// Quadrature spectrum `d_0..=d_L`.
pub fn build_spectrum(hurst: HurstIndex, lmax: usize, tol: f64) -> Result<PowerSpectrum> {
    build_spectrum_with(Execution::default(), SpectrumMethod::Quadrature, hurst, lmax, tol)
}

/// Spectrum by any method. Each degree is an independent pure computation and
/// the results are assembled in degree order, so the output does not depend
/// on the execution mode.
pub fn build_spectrum_with(
    exec: Execution,
    method: SpectrumMethod,
    hurst: HurstIndex,
    lmax: usize,
    tol: f64,
) -> Result<PowerSpectrum> {
    if lmax == 0 {
        return Err(Error::Usage("spectrum truncation degree must be at least 1".into()));
    }
    if !(tol >= MIN_TOL) {
        return Err(Error::Config(format!("tolerance must be >= {MIN_TOL:e}, got {tol}")));
    }
    // Large degrees cost the most; schedule them first.
    let values = exec.try_map(lmax + 1, |k| {
        let degree = lmax - k;
        method
            .degree_value(degree, hurst, tol)
            .map_err(|e| Error::SpectrumDegree {
                degree,
                source: Box::new(e),
            })
    })?;
    let values: Vec<f64> = values.into_iter().rev().collect();
    PowerSpectrum::from_values(hurst, method, tol, values)
}
