//! Versioned JSON cache files for spectra.
//!
//! Floats are written by `serde_json`, whose shortest round-trip formatting
//! reads back to the identical bit pattern.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_spectrum_with, HurstIndex, PowerSpectrum, SpectrumMethod};
use crate::error::{Error, Result};
use crate::io::{unix_timestamp, write_json};
use crate::par::Execution;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumCache {
    pub format_version: u32,
    #[serde(rename = "H")]
    pub hurst: f64,
    #[serde(rename = "L")]
    pub lmax: usize,
    pub method: SpectrumMethod,
    pub tol: f64,
    pub values: Vec<f64>,
    pub build_timestamp: u64,
}

impl SpectrumCache {
    pub fn from_spectrum(s: &PowerSpectrum) -> Self {
        SpectrumCache {
            format_version: FORMAT_VERSION,
            hurst: s.hurst().value(),
            lmax: s.lmax(),
            method: s.method(),
            tol: s.tol(),
            values: s.values().to_vec(),
            build_timestamp: unix_timestamp(),
        }
    }
}

pub fn save_spectrum(path: &Path, spectrum: &PowerSpectrum) -> Result<()> {
    write_json(path, &SpectrumCache::from_spectrum(spectrum))
}

/// Degrees re-derived on load to catch files whose values were altered.
fn spot_degrees(lmax: usize) -> Vec<usize> {
    let mut d = vec![0, 1, lmax / 2, lmax];
    d.dedup();
    d
}

/// Reads and validates a cache file. Rejects other format versions, shape
/// mismatches, invalid parameters, and values that disagree with a fresh
/// computation at a few spot-check degrees.
pub fn load_spectrum(path: &Path) -> Result<PowerSpectrum> {
    let integrity = |reason: String| Error::Integrity {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cache: SpectrumCache =
        serde_json::from_str(&text).map_err(|e| integrity(format!("not a spectrum cache: {e}")))?;
    if cache.format_version != FORMAT_VERSION {
        return Err(integrity(format!(
            "format version {} is not the supported version {FORMAT_VERSION}",
            cache.format_version
        )));
    }
    if cache.values.len() != cache.lmax + 1 {
        return Err(integrity(format!(
            "L = {} but {} values are stored",
            cache.lmax,
            cache.values.len()
        )));
    }
    let hurst = HurstIndex::new(cache.hurst).map_err(|e| integrity(e.to_string()))?;
    for degree in spot_degrees(cache.lmax) {
        let fresh = cache
            .method
            .degree_value(degree, hurst, cache.tol)
            .map_err(|e| integrity(format!("cannot re-derive d_{degree}: {e}")))?;
        let stored = cache.values[degree];
        if !((stored - fresh).abs() <= 10.0 * cache.tol + 1e-9 * fresh.abs()) {
            return Err(integrity(format!("d_{degree} = {stored} but recomputation gives {fresh}")));
        }
    }
    PowerSpectrum::from_values(hurst, cache.method, cache.tol, cache.values).map_err(|e| integrity(e.to_string()))
}

/// File name keyed by every input that affects the values.
pub fn cache_file_name(hurst: HurstIndex, lmax: usize, tol: f64, method: SpectrumMethod) -> String {
    format!("spectrum_H{hurst}_L{lmax}_tol{tol:e}_{method}_v{FORMAT_VERSION}.json")
}

/// Loads the cached spectrum from `dir`, or builds and stores it.
pub fn load_or_build(
    dir: &Path,
    exec: Execution,
    method: SpectrumMethod,
    hurst: HurstIndex,
    lmax: usize,
    tol: f64,
) -> Result<(PowerSpectrum, PathBuf)> {
    let path = dir.join(cache_file_name(hurst, lmax, tol, method));
    if path.exists() {
        let s = load_spectrum(&path)?;
        if s.hurst() != hurst || s.lmax() != lmax || s.method() != method || s.tol() != tol {
            return Err(Error::Integrity {
                path,
                reason: "cache contents do not match its key".into(),
            });
        }
        return Ok((s, path));
    }
    let s = build_spectrum_with(exec, method, hurst, lmax, tol)?;
    save_spectrum(&path, &s)?;
    Ok((s, path))
}
