//! Conditional variances of the field and the strong local nondeterminism
//! ratio `Var(B(x) | B(x_1), ..., B(x_n)) / ε^{2H}`, where
//! `ε = min_{0 <= k <= n} d(x, x_k)` and `x_0 = N`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{covariance, kl_covariance_truncated};
use crate::harmonics::AssocLegendreTable;
use crate::io::{fmt_f64, write_atomic, write_json};
use crate::numerics::{regression_residual, Regression, RandomStream, SymMatrix};
use crate::par::Execution;
use crate::spectrum::{HurstIndex, PowerSpectrum};
use crate::sphere::{geodesic_distance, uniform_point, SpherePoint};

/// A target point and the points it is conditioned on. The anchor `N` is
/// always implicitly present.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub target: SpherePoint,
    pub points: Vec<SpherePoint>,
}

impl Configuration {
    pub fn new(target: SpherePoint, points: Vec<SpherePoint>) -> Self {
        Configuration { target, points }
    }

    /// Distance from the target to the nearest of `N, x_1, ..., x_n`.
    pub fn epsilon(&self) -> f64 {
        self.points
            .iter()
            .map(|p| geodesic_distance(&self.target, p))
            .fold(self.target.theta(), f64::min)
    }

    /// Distance to the nearest of `x_1, ..., x_n` only; `None` when `n = 0`.
    pub fn epsilon_without_anchor(&self) -> Option<f64> {
        self.points
            .iter()
            .map(|p| geodesic_distance(&self.target, p))
            .reduce(f64::min)
    }

    /// Indices of the points that carry information: points at `N` (where the
    /// field is zero) and exact repeats of earlier points are dropped.
    fn informative(&self) -> Vec<usize> {
        let mut keep: Vec<usize> = Vec::with_capacity(self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            if p.is_north_pole() {
                continue;
            }
            if keep.iter().any(|&k| geodesic_distance(&self.points[k], p) == 0.0) {
                continue;
            }
            keep.push(i);
        }
        keep
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VarianceMethod {
    Exact,
    Truncated { lmax: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SLNDReport {
    pub conditional_variance: f64,
    /// `ε` with the anchor `N` included.
    pub epsilon: f64,
    /// `ε` over the conditioning points only.
    pub epsilon_without_anchor: Option<f64>,
    /// `conditional_variance / ε^{2H}`; `None` when `ε = 0`.
    pub ratio: Option<f64>,
    pub degenerate: bool,
    /// Regression weights `γ_1, ..., γ_n` (zero for dropped points).
    pub weights: Vec<f64>,
    pub method: VarianceMethod,
    pub jitter: f64,
    /// Amount by which a slightly negative residual was raised to zero.
    pub clamped: f64,
}

/// Regresses the target on the informative conditioning points under the
/// covariance `k`, and maps the weights back to the original indices.
fn regress(
    c: &Configuration,
    hurst: HurstIndex,
    method: VarianceMethod,
    k: impl Fn(&SpherePoint, &SpherePoint) -> Result<f64>,
) -> Result<SLNDReport> {
    let keep = c.informative();
    let pts: Vec<SpherePoint> = keep.iter().map(|&i| c.points[i]).collect();
    let mut cov = SymMatrix::zeros(pts.len());
    for i in 0..pts.len() {
        for j in 0..=i {
            cov.set(i, j, k(&pts[i], &pts[j])?);
        }
    }
    let cross = pts.iter().map(|p| k(&c.target, p)).collect::<Result<Vec<f64>>>()?;
    let var = k(&c.target, &c.target)?;
    let Regression {
        residual,
        weights: w,
        clamped,
        jitter,
    } = regression_residual(&cov, &cross, var)?;
    let mut weights = vec![0.0; c.points.len()];
    for (&i, wi) in keep.iter().zip(w) {
        weights[i] = wi;
    }
    let epsilon = c.epsilon();
    let degenerate = epsilon == 0.0;
    Ok(SLNDReport {
        conditional_variance: residual,
        epsilon,
        epsilon_without_anchor: c.epsilon_without_anchor(),
        ratio: (!degenerate).then(|| residual / epsilon.powf(2.0 * hurst.value())),
        degenerate,
        weights,
        method,
        jitter,
        clamped,
    })
}

/// `Var(B(x) | B(x_1), ..., B(x_n))` by the Schur complement of the analytic
/// covariance.
pub fn conditional_variance_exact(c: &Configuration, hurst: HurstIndex) -> Result<SLNDReport> {
    regress(c, hurst, VarianceMethod::Exact, |x, y| Ok(covariance(x, y, hurst)))
}

/// The same conditional variance for the field truncated at degree `L`.
pub fn conditional_variance_truncated(c: &Configuration, spectrum: &PowerSpectrum, lmax: usize) -> Result<SLNDReport> {
    regress(c, spectrum.hurst(), VarianceMethod::Truncated { lmax }, |x, y| {
        kl_covariance_truncated(x, y, spectrum, lmax)
    })
}

/// Least-squares predictor weights of `B(x)` on `B(x_1), ..., B(x_n)`.
pub fn optimal_weights(c: &Configuration, hurst: HurstIndex) -> Result<Vec<f64>> {
    if c.points.is_empty() {
        return Err(Error::Usage("optimal weights need at least one conditioning point".into()));
    }
    Ok(conditional_variance_exact(c, hurst)?.weights)
}

/// `π Σ_{ℓ=1}^{L} |d_ℓ| Σ_m |Y_{ℓm}(x) − Σ_{j=0}^{n} γ_j Y_{ℓm}(x_j)|²` with
/// `x_0 = N` and `γ_0 = 1 − Σ_{j>=1} γ_j`, summed mode by mode.
///
/// Since the weights are real, the `−m` term has the same modulus as the `m`
/// term, so only `m >= 0` is visited.
pub fn quadratic_form_truncated(c: &Configuration, weights: &[f64], spectrum: &PowerSpectrum, lmax: usize) -> Result<f64> {
    if weights.len() != c.points.len() {
        return Err(Error::Usage(format!(
            "{} weights for {} conditioning points",
            weights.len(),
            c.points.len()
        )));
    }
    if lmax > spectrum.lmax() {
        return Err(Error::Usage(format!("degree {lmax} exceeds the spectrum degree {}", spectrum.lmax())));
    }
    let gamma0 = 1.0 - weights.iter().sum::<f64>();
    // Signed terms: the target with +1, every anchor with −γ_j.
    let mut terms: Vec<(SpherePoint, f64)> = vec![(c.target, 1.0), (SpherePoint::NORTH, -gamma0)];
    terms.extend(c.points.iter().zip(weights).map(|(p, w)| (*p, -w)));
    let tables: Vec<AssocLegendreTable> = terms.iter().map(|(p, _)| AssocLegendreTable::at_point(lmax, p)).collect();
    let mut total = 0.0;
    for l in 1..=lmax {
        let mut band = 0.0;
        for m in 0..=l {
            let z: Complex64 = terms
                .iter()
                .zip(&tables)
                .map(|((p, g), t)| Complex64::from_polar(g * t.get(l, m), m as f64 * p.phi()))
                .sum();
            band += if m == 0 { z.norm_sqr() } else { 2.0 * z.norm_sqr() };
        }
        total += spectrum.magnitude(l) * band;
    }
    Ok(PI * total)
}

/// `conditional_variance_exact` with the SLND ratio. A zero `ε` is flagged as
/// degenerate rather than reported as an error.
pub fn slnd_ratio(c: &Configuration, hurst: HurstIndex) -> Result<SLNDReport> {
    conditional_variance_exact(c, hurst)
}

/// Lemma-style lower-bound check on the truncated modal sum
/// `Σ_{ℓ=0}^{L} |d_ℓ| Σ_m |Y_{ℓm}(x) − Σ_{j=1}^{n} γ_j Y_{ℓm}(x_j)|²`
/// (no anchor, no factor π), minimized over `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaBound {
    pub lhs_min: f64,
    /// `ε` over `x_1, ..., x_n`, the convention of the lemma.
    pub epsilon: f64,
    /// `ε` including `N`, for comparison.
    pub epsilon_with_anchor: f64,
    pub epsilon_pow: f64,
    /// `lhs_min / ε^{2H}`, rounded down so that `C₂ ε^{2H} <= lhs_min`.
    pub c2_estimate: Option<f64>,
    pub degenerate: bool,
    pub weights: Vec<f64>,
}

pub fn lemma_bound_check(c: &Configuration, spectrum: &PowerSpectrum, lmax: usize) -> Result<LemmaBound> {
    let Some(epsilon) = c.epsilon_without_anchor() else {
        return Err(Error::Usage("the lemma bound needs at least one conditioning point".into()));
    };
    if lmax > spectrum.lmax() {
        return Err(Error::Usage(format!("degree {lmax} exceeds the spectrum degree {}", spectrum.lmax())));
    }
    let k = |x: &SpherePoint, y: &SpherePoint| -> Result<f64> {
        let p = crate::harmonics::legendre_p_all(lmax, x.dot(y))?;
        Ok((0..=lmax)
            .map(|l| spectrum.magnitude(l) * (2 * l + 1) as f64 / (4.0 * PI) * p[l])
            .sum())
    };
    let pts = &c.points;
    let mut cov = SymMatrix::zeros(pts.len());
    for i in 0..pts.len() {
        for j in 0..=i {
            cov.set(i, j, k(&pts[i], &pts[j])?);
        }
    }
    let cross = pts.iter().map(|p| k(&c.target, p)).collect::<Result<Vec<f64>>>()?;
    let reg = regression_residual(&cov, &cross, k(&c.target, &c.target)?)?;
    let epsilon_pow = epsilon.powf(2.0 * spectrum.hurst().value());
    let degenerate = epsilon == 0.0;
    let c2_estimate = (!degenerate).then(|| {
        let mut c2 = reg.residual / epsilon_pow;
        while c2 > 0.0 && c2 * epsilon_pow > reg.residual {
            c2 = f64::from_bits(c2.to_bits() - 1);
        }
        c2
    });
    Ok(LemmaBound {
        lhs_min: if degenerate { 0.0 } else { reg.residual },
        epsilon,
        epsilon_with_anchor: c.epsilon(),
        epsilon_pow,
        c2_estimate,
        degenerate,
        weights: reg.weights,
    })
}

/// How a trial configuration was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Uniform,
    DyadicCluster,
    GreatCircle,
    NearNorth,
}

impl Family {
    fn of_trial(i: usize) -> Family {
        match i % 4 {
            0 => Family::Uniform,
            1 => Family::DyadicCluster,
            2 => Family::GreatCircle,
            _ => Family::NearNorth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointRecord {
    pub theta: f64,
    pub phi: f64,
}

impl From<&SpherePoint> for PointRecord {
    fn from(p: &SpherePoint) -> Self {
        PointRecord {
            theta: p.theta(),
            phi: p.phi(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigRecord {
    pub target: PointRecord,
    pub points: Vec<PointRecord>,
}

impl From<&Configuration> for ConfigRecord {
    fn from(c: &Configuration) -> Self {
        ConfigRecord {
            target: (&c.target).into(),
            points: c.points.iter().map(PointRecord::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub family: Family,
    pub n: usize,
    pub epsilon: f64,
    pub cv: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub p1: f64,
    pub p5: f64,
    pub p50: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K2Estimate {
    #[serde(rename = "H")]
    pub hurst: f64,
    pub trials: usize,
    pub n_max: usize,
    pub eps_range: (f64, f64),
    pub min_ratio: f64,
    pub quantiles: Quantiles,
    pub worst_trial: usize,
    pub worst_config: ConfigRecord,
    pub degenerate_trials: usize,
    pub seed: u64,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub configurations: Vec<Configuration>,
}

/// Log-uniform draw from `[lo, hi]`.
fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// A uniform point at colatitude at least `min_theta`.
fn point_away_from_north<R: Rng>(rng: &mut R, min_theta: f64) -> SpherePoint {
    loop {
        let p = uniform_point(rng);
        if p.theta() >= min_theta {
            return p;
        }
    }
}

fn random_bearing<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.0..std::f64::consts::TAU)
}

/// Builds the configuration of trial `i` from its own stream.
pub fn trial_configuration(i: usize, n_max: usize, eps_range: (f64, f64), stream: &RandomStream) -> (Family, Configuration) {
    let (lo, hi) = eps_range;
    let mut rng = stream.child(i as u64).rng();
    let n = rng.gen_range(0..=n_max);
    let family = Family::of_trial(i);
    let config = match family {
        Family::Uniform => loop {
            let target = uniform_point(&mut rng);
            let points: Vec<SpherePoint> = (0..n).map(|_| uniform_point(&mut rng)).collect();
            let c = Configuration::new(target, points);
            if c.epsilon() >= lo {
                break c;
            }
        },
        Family::DyadicCluster => {
            // Points at distances s, 2s, 4s, ... in random directions.
            let target = point_away_from_north(&mut rng, hi);
            let s = log_uniform(&mut rng, lo, hi);
            let points = (0..n)
                .map(|j| {
                    let r = (s * 2f64.powi(j as i32) * (1.0 + 0.1 * rng.gen::<f64>())).min(PI);
                    target.offset(r, random_bearing(&mut rng))
                })
                .collect();
            Configuration::new(target, points)
        }
        Family::GreatCircle => {
            // Nearly collinear points on both sides of the target.
            let target = point_away_from_north(&mut rng, hi);
            let s = log_uniform(&mut rng, lo, hi);
            let bearing = random_bearing(&mut rng);
            let points = (0..n)
                .map(|j| {
                    let step = (j / 2 + 1) as f64 * s * (1.0 + 0.05 * rng.gen::<f64>());
                    let side = if j % 2 == 0 { 0.0 } else { PI };
                    let wobble = 1e-3 * (rng.gen::<f64>() - 0.5);
                    target.offset(step.min(PI), bearing + side + wobble)
                })
                .collect();
            Configuration::new(target, points)
        }
        Family::NearNorth => {
            // Target within the ε scale of N, neighbours just as close.
            let s = log_uniform(&mut rng, lo, hi);
            let target = SpherePoint::NORTH.offset(s, random_bearing(&mut rng));
            let points = (0..n)
                .map(|_| {
                    let r = s * (1.0 + 2.0 * rng.gen::<f64>());
                    target.offset(r, random_bearing(&mut rng))
                })
                .collect();
            Configuration::new(target, points)
        }
    };
    (family, config)
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Empirical SLND constant: the smallest ratio over `trials` sampled
/// configurations. Trial `i` draws from `stream.child(i)`, so a run with more
/// trials extends, and never changes, a shorter run with the same stream.
pub fn estimate_k2(
    exec: Execution,
    hurst: HurstIndex,
    trials: usize,
    n_max: usize,
    eps_range: (f64, f64),
    stream: &RandomStream,
) -> Result<K2Estimate> {
    if trials == 0 {
        return Err(Error::Usage("at least one trial is required".into()));
    }
    let (lo, hi) = eps_range;
    if !(lo > 0.0 && lo <= hi && hi <= PI) {
        return Err(Error::Usage(format!("ε range must satisfy 0 < min <= max <= π, got [{lo}, {hi}]")));
    }
    let results = exec.try_map(trials, |i| {
        let (family, c) = trial_configuration(i, n_max, eps_range, stream);
        let r = slnd_ratio(&c, hurst)?;
        Ok::<_, Error>((family, c, r))
    })?;
    let mut records = Vec::with_capacity(trials);
    let mut configurations = Vec::with_capacity(trials);
    let mut ratios = Vec::with_capacity(trials);
    let (mut min_ratio, mut worst_trial) = (f64::INFINITY, 0);
    for (i, (family, c, r)) in results.into_iter().enumerate() {
        if let Some(v) = r.ratio {
            ratios.push(v);
            if v < min_ratio {
                min_ratio = v;
                worst_trial = i;
            }
        }
        records.push(TrialRecord {
            trial: i,
            family,
            n: c.points.len(),
            epsilon: r.epsilon,
            cv: r.conditional_variance,
            ratio: r.ratio,
        });
        configurations.push(c);
    }
    ratios.sort_by(f64::total_cmp);
    let degenerate_trials = trials - ratios.len();
    Ok(K2Estimate {
        hurst: hurst.value(),
        trials,
        n_max,
        eps_range,
        min_ratio,
        quantiles: Quantiles {
            p1: quantile(&ratios, 0.01),
            p5: quantile(&ratios, 0.05),
            p50: quantile(&ratios, 0.5),
        },
        worst_trial,
        worst_config: (&configurations[worst_trial]).into(),
        degenerate_trials,
        seed: stream.seed,
        records,
        configurations,
    })
}

/// Writes the experiment summary JSON.
pub fn write_k2_json(path: &Path, estimate: &K2Estimate) -> Result<()> {
    write_json(path, estimate)
}

/// Writes one `n,epsilon,cv,ratio` row per trial; a degenerate trial has an
/// empty ratio.
pub fn write_k2_csv(path: &Path, estimate: &K2Estimate) -> Result<()> {
    let mut body = String::from("n,epsilon,cv,ratio\n");
    for r in &estimate.records {
        let ratio = r.ratio.map(fmt_f64).unwrap_or_default();
        body.push_str(&format!("{},{},{},{}\n", r.n, fmt_f64(r.epsilon), fmt_f64(r.cv), ratio));
    }
    write_atomic(path, body.as_bytes())
}
