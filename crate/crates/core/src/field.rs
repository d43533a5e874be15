//! The field itself: analytic covariance, truncated Karhunen-Loève
//! synthesis, an exact finite-dimensional sampler, and variogram sums.
//!
//! A realization truncated at degree `L` is
//! `B(x) = Σ_{ℓ=1}^{L} sqrt(π|d_ℓ|) Σ_m ε_{ℓm} (Y_{ℓm}(x) − Y_{ℓm}(N))`
//! with `ε_{ℓ0}` real standard normal, `ε_{ℓm} = (u + iv)/√2` for `m >= 1`
//! and `ε_{ℓ,−m} = (−1)^m conj(ε_{ℓm})`, which makes every term pair real.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonics::{bands_at, flat_index, legendre_p_all, sph_harm};
use crate::io::{fmt_f64, write_atomic};
use crate::numerics::random::standard_normal;
use crate::numerics::{cholesky_psd, gauss_legendre, RandomStream, SymMatrix};
use crate::par::Execution;
use crate::spectrum::{HurstIndex, PowerSpectrum};
use crate::sphere::{geodesic_distance, SpherePoint};

/// Largest admissible imaginary part of a synthesized value, relative to
/// `1 + |value|`.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// `R(x, y) = ½[d(x,N)^{2H} + d(y,N)^{2H} − d(x,y)^{2H}]`.
pub fn covariance(x: &SpherePoint, y: &SpherePoint, hurst: HurstIndex) -> f64 {
    let e = 2.0 * hurst.value();
    0.5 * (x.theta().powf(e) + y.theta().powf(e) - geodesic_distance(x, y).powf(e))
}

/// `d(x, y)^{2H}`.
pub fn variogram(x: &SpherePoint, y: &SpherePoint, hurst: HurstIndex) -> f64 {
    geodesic_distance(x, y).powf(2.0 * hurst.value())
}

/// The second-order structure of the field for one Hurst index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceModel {
    hurst: HurstIndex,
}

impl CovarianceModel {
    pub fn new(hurst: HurstIndex) -> Self {
        CovarianceModel { hurst }
    }

    pub fn hurst(&self) -> HurstIndex {
        self.hurst
    }

    pub fn covariance(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        covariance(x, y, self.hurst)
    }

    pub fn variogram(&self, x: &SpherePoint, y: &SpherePoint) -> f64 {
        variogram(x, y, self.hurst)
    }

    pub fn matrix(&self, points: &[SpherePoint]) -> SymMatrix {
        SymMatrix::from_fn(points.len(), |i, j| self.covariance(&points[i], &points[j]))
    }
}

/// `Y_{ℓm}(x) − Y_{ℓm}(N)` for all `(ℓ, m)` up to `lmax` at a set of points,
/// in the flat layout `ℓ² + ℓ + m`.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    lmax: usize,
    values: Vec<Complex64>,
}

impl ModalBasis {
    pub fn new(lmax: usize, points: &[SpherePoint]) -> Self {
        let width = (lmax + 1) * (lmax + 1);
        let north = bands_at(lmax, &SpherePoint::NORTH);
        let mut values = Vec::with_capacity(width * points.len());
        for p in points {
            for (band, pole) in bands_at(lmax, p).iter().zip(&north) {
                values.extend(band.values().iter().zip(pole.values()).map(|(y, y0)| y - y0));
            }
        }
        ModalBasis { lmax, values }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn width(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    /// `ΔY_{ℓm}` at point `i`.
    pub fn get(&self, i: usize, degree: usize, order: i64) -> Complex64 {
        self.values[i * self.width() + flat_index(degree, order)]
    }

    fn row(&self, i: usize) -> &[Complex64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }
}

/// One draw of the modal coefficients, evaluable anywhere on the sphere.
#[derive(Debug, Clone)]
pub struct KLRealization {
    spectrum: PowerSpectrum,
    lmax: usize,
    coefficients: Vec<Complex64>,
    /// `sqrt(π|d_ℓ|) ε_{ℓm}`, the products actually summed.
    weighted: Vec<Complex64>,
    stream: RandomStream,
}

/// Draws `ε_{ℓm}` for `ℓ <= L` from the start of `stream`.
///
/// Degrees are drawn in increasing order; within a degree `ε_{ℓ0}` comes
/// first, then the real and imaginary parts for `m = 1..=ℓ`.
pub fn draw_coefficients(
    hurst: HurstIndex,
    lmax: usize,
    spectrum: &PowerSpectrum,
    stream: &RandomStream,
) -> Result<KLRealization> {
    spectrum.require_quadrature()?;
    spectrum.require_degree(lmax)?;
    if spectrum.hurst() != hurst {
        return Err(Error::Usage(format!(
            "spectrum was built for H = {} but H = {hurst} was requested",
            spectrum.hurst()
        )));
    }
    let mut rng = stream.rng();
    let mut coefficients = vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)];
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for l in 0..=lmax {
        coefficients[flat_index(l, 0)] = Complex64::new(standard_normal(&mut rng), 0.0);
        for m in 1..=l as i64 {
            let u = standard_normal(&mut rng);
            let v = standard_normal(&mut rng);
            let e = Complex64::new(u, v) * inv_sqrt2;
            coefficients[flat_index(l, m)] = e;
            coefficients[flat_index(l, -m)] = if m % 2 == 0 { e.conj() } else { -e.conj() };
        }
    }
    let weighted = (0..=lmax)
        .flat_map(|l| {
            let a = (PI * spectrum.magnitude(l)).sqrt();
            let c = &coefficients;
            (-(l as i64)..=(l as i64)).map(move |m| c[flat_index(l, m)] * a)
        })
        .collect();
    Ok(KLRealization {
        spectrum: spectrum.clone(),
        lmax,
        coefficients,
        weighted,
        stream: *stream,
    })
}

impl KLRealization {
    pub fn hurst(&self) -> HurstIndex {
        self.spectrum.hurst()
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn spectrum(&self) -> &PowerSpectrum {
        &self.spectrum
    }

    pub fn stream(&self) -> RandomStream {
        self.stream
    }

    /// `ε_{ℓm}`.
    pub fn coefficient(&self, degree: usize, order: i64) -> Complex64 {
        self.coefficients[flat_index(degree, order)]
    }

    /// `sqrt(π|d_ℓ|)`.
    pub fn amplitude(&self, degree: usize) -> f64 {
        (PI * self.spectrum.magnitude(degree)).sqrt()
    }

    /// Field value at `x`.
    pub fn evaluate(&self, x: &SpherePoint) -> Result<f64> {
        let basis = ModalBasis::new(self.lmax, std::slice::from_ref(x));
        Ok(self.evaluate_basis(&basis)?[0])
    }

    /// Field values at all points of a precomputed basis. The basis may have a
    /// higher degree than the realization.
    pub fn evaluate_basis(&self, basis: &ModalBasis) -> Result<Vec<f64>> {
        if basis.lmax() < self.lmax {
            return Err(Error::Usage(format!(
                "basis degree {} is below the realization degree {}",
                basis.lmax(),
                self.lmax
            )));
        }
        let n = self.weighted.len();
        (0..basis.len())
            .map(|i| {
                let row = &basis.row(i)[..n];
                let sum: Complex64 = self.weighted.iter().zip(row).map(|(c, y)| c * y).sum();
                check_real(sum)
            })
            .collect()
    }

    pub fn evaluate_many(&self, points: &[SpherePoint]) -> Result<Vec<f64>> {
        self.evaluate_basis(&ModalBasis::new(self.lmax, points))
    }
}

fn check_real(sum: Complex64) -> Result<f64> {
    if sum.im.abs() > IMAG_RESIDUE_TOL * (1.0 + sum.re.abs()) {
        return Err(Error::Consistency(format!(
            "synthesized value {} has imaginary residue {:e}",
            sum.re, sum.im
        )));
    }
    Ok(sum.re)
}

/// `Σ_{ℓ=1}^{L} (2ℓ+1)/2 · |d_ℓ| · (1 − P_ℓ(cos γ))`, the variogram of the
/// truncated field at separation `γ`.
pub fn variogram_truncated(gamma: f64, spectrum: &PowerSpectrum, lmax: usize) -> Result<f64> {
    if !(0.0..=PI).contains(&gamma) {
        return Err(Error::Domain(format!("separation must lie in [0, π], got {gamma}")));
    }
    spectrum.require_degree(lmax)?;
    let p = legendre_p_all(lmax, gamma.cos())?;
    Ok((1..=lmax)
        .map(|l| (2 * l + 1) as f64 / 2.0 * spectrum.magnitude(l) * (1.0 - p[l]))
        .sum())
}

/// Covariance of the truncated field from the addition theorem:
/// `Σ_{ℓ=1}^{L} |d_ℓ| (2ℓ+1)/4 [P_ℓ(x·y) − P_ℓ(x·N) − P_ℓ(N·y) + 1]`.
pub fn kl_covariance_truncated(x: &SpherePoint, y: &SpherePoint, spectrum: &PowerSpectrum, lmax: usize) -> Result<f64> {
    spectrum.require_degree(lmax)?;
    let pxy = legendre_p_all(lmax, x.dot(y))?;
    let px = legendre_p_all(lmax, x.theta().cos())?;
    let py = legendre_p_all(lmax, y.theta().cos())?;
    Ok((1..=lmax)
        .map(|l| spectrum.magnitude(l) * (2 * l + 1) as f64 / 4.0 * (pxy[l] - px[l] - py[l] + 1.0))
        .sum())
}

/// The same covariance summed mode by mode:
/// `π Σ_{ℓ=1}^{L} |d_ℓ| Σ_m ΔY_{ℓm}(x) conj(ΔY_{ℓm}(y))`.
pub fn kl_covariance_modal(x: &SpherePoint, y: &SpherePoint, spectrum: &PowerSpectrum, lmax: usize) -> Result<f64> {
    spectrum.require_degree(lmax)?;
    let basis = ModalBasis::new(lmax, &[*x, *y]);
    let mut total = Complex64::new(0.0, 0.0);
    for l in 1..=lmax {
        let band: Complex64 = (-(l as i64)..=(l as i64))
            .map(|m| basis.get(0, l, m) * basis.get(1, l, m).conj())
            .sum();
        total += band * spectrum.magnitude(l);
    }
    check_real(total * PI)
}

/// `n_samples` joint draws of the exact field at `points`, by Cholesky
/// factorization of the analytic covariance. Points at `N` are identically 0
/// and take no part in the factorization.
pub fn exact_gaussian_oracle(
    points: &[SpherePoint],
    hurst: HurstIndex,
    stream: &RandomStream,
    n_samples: usize,
) -> Result<Vec<Vec<f64>>> {
    for i in 0..points.len() {
        for j in 0..i {
            if geodesic_distance(&points[i], &points[j]) == 0.0 {
                return Err(Error::Usage(format!("points {j} and {i} coincide")));
            }
        }
    }
    let active: Vec<usize> = (0..points.len()).filter(|&i| !points[i].is_north_pole()).collect();
    let model = CovarianceModel::new(hurst);
    let sub: Vec<SpherePoint> = active.iter().map(|&i| points[i]).collect();
    let chol = cholesky_psd(&model.matrix(&sub), 0.0)?;
    let mut rng = stream.rng();
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z: Vec<f64> = (0..active.len()).map(|_| standard_normal(&mut rng)).collect();
        let x = chol.mul_lower(&z);
        let mut row = vec![0.0; points.len()];
        for (k, &i) in active.iter().enumerate() {
            row[i] = x[k];
        }
        out.push(row);
    }
    Ok(out)
}

/// Product-rule settings for integrating over the sphere: Gauss-Legendre in
/// `cos θ` times the trapezoid rule in `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SphereQuadrature {
    pub theta_order: usize,
    pub phi_count: usize,
}

impl SphereQuadrature {
    /// The smallest grid that integrates products of two degree-`lmax`
    /// harmonics exactly.
    pub fn resolving(lmax: usize) -> Self {
        SphereQuadrature {
            theta_order: lmax + 1,
            phi_count: 2 * lmax + 2,
        }
    }

    fn resolves(&self, lmax: usize) -> bool {
        self.theta_order >= lmax + 1 && self.phi_count >= 2 * lmax + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recovered {
    /// The modal amplitude is zero, so the coefficient cannot be recovered.
    Undefined,
    Coefficient(Complex64),
}

/// Projects the synthesized field onto `conj(Y_{ℓm})` and divides by the
/// modal amplitude. Because `Y_{ℓm}(N)` only shifts the field by a constant,
/// the projection returns `ε_{ℓm}` itself for `1 <= ℓ <= L`, and zero for
/// `ℓ > L`.
pub fn recover_coefficient(r: &KLRealization, degree: usize, order: i64, quad: SphereQuadrature) -> Result<Recovered> {
    if order.unsigned_abs() as usize > degree {
        return Err(Error::Domain(format!("|m| = {} exceeds degree {degree}", order.abs())));
    }
    r.spectrum.require_degree(degree)?;
    let need = r.lmax.max(degree);
    if !quad.resolves(need) {
        return Err(Error::Config(format!(
            "grid {}x{} cannot resolve degree {need} (need θ order >= {} and φ count >= {})",
            quad.theta_order,
            quad.phi_count,
            need + 1,
            2 * need + 1
        )));
    }
    let amplitude = r.amplitude(degree);
    if degree == 0 || amplitude == 0.0 {
        return Ok(Recovered::Undefined);
    }
    let rule = gauss_legendre(quad.theta_order)?;
    let dphi = TAU / quad.phi_count as f64;
    let mut points = Vec::with_capacity(quad.theta_order * quad.phi_count);
    let mut weights = Vec::with_capacity(points.capacity());
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        let theta = x.acos();
        for j in 0..quad.phi_count {
            points.push(SpherePoint::from_angles(theta, j as f64 * dphi)?);
            weights.push(w * dphi);
        }
    }
    let values = r.evaluate_many(&points)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for ((p, v), w) in points.iter().zip(&values).zip(&weights) {
        sum += sph_harm(degree, order, p)?.conj() * (v * w);
    }
    Ok(Recovered::Coefficient(sum / amplitude))
}

/// Writes `theta,phi,value` rows.
pub fn write_realization_csv(path: &Path, points: &[SpherePoint], values: &[f64]) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::Usage(format!("{} points but {} values", points.len(), values.len())));
    }
    let mut body = String::from("theta,phi,value\n");
    for (p, v) in points.iter().zip(values) {
        body.push_str(&format!("{},{},{}\n", fmt_f64(p.theta()), fmt_f64(p.phi()), fmt_f64(*v)));
    }
    write_atomic(path, body.as_bytes())
}

/// Reads a `theta,phi,value` file back.
pub fn read_realization_csv(path: &Path) -> Result<Vec<(SpherePoint, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta", "phi", "value"] {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            reason: "expected header `theta,phi,value`".into(),
        });
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<(f64, f64, f64)>() {
        let (theta, phi, value) = row?;
        out.push((SpherePoint::from_angles(theta, phi)?, value));
    }
    Ok(out)
}

/// Sample moments from a batch of truncated realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloVariogram {
    pub realizations: usize,
    /// Mean of `(B(x) − B(y))²` per pair.
    pub variogram: Vec<f64>,
    pub variogram_se: Vec<f64>,
    /// Mean of `B` at each pair's first point.
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Largest `|B(N)|` seen over all realizations.
    pub max_abs_at_north: f64,
}

/// Draws `n` realizations at degree `L`, realization `i` from `stream.child(i)`,
/// and accumulates the sample variogram at each pair. The result does not
/// depend on the execution mode.
pub fn monte_carlo_variogram(
    exec: Execution,
    spectrum: &PowerSpectrum,
    lmax: usize,
    pairs: &[(SpherePoint, SpherePoint)],
    n: usize,
    stream: &RandomStream,
) -> Result<MonteCarloVariogram> {
    if n < 2 {
        return Err(Error::Usage("need at least two realizations for standard errors".into()));
    }
    let mut points: Vec<SpherePoint> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    points.push(SpherePoint::NORTH);
    let basis = ModalBasis::new(lmax, &points);
    let hurst = spectrum.hurst();
    let draws = exec.try_map(n, |i| {
        let r = draw_coefficients(hurst, lmax, spectrum, &stream.child(i as u64))?;
        r.evaluate_basis(&basis)
    })?;
    let k = pairs.len();
    let mut sq = vec![(0.0, 0.0); k];
    let mut lin = vec![(0.0, 0.0); k];
    let mut max_north: f64 = 0.0;
    for v in &draws {
        for j in 0..k {
            let d = (v[2 * j] - v[2 * j + 1]).powi(2);
            sq[j].0 += d;
            sq[j].1 += d * d;
            lin[j].0 += v[2 * j];
            lin[j].1 += v[2 * j] * v[2 * j];
        }
        max_north = max_north.max(v[2 * k].abs());
    }
    let nf = n as f64;
    let moments = |(s, s2): (f64, f64)| {
        let mean = s / nf;
        let var = (s2 - nf * mean * mean).max(0.0) / (nf - 1.0);
        (mean, (var / nf).sqrt())
    };
    let (variogram, variogram_se) = sq.into_iter().map(moments).unzip();
    let (mean, mean_se) = lin.into_iter().map(moments).unzip();
    Ok(MonteCarloVariogram {
        realizations: n,
        variogram,
        variogram_se,
        mean,
        mean_se,
        max_abs_at_north: max_north,
    })
}
