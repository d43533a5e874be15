//! Dense symmetric matrices, jittered Cholesky, and Gaussian regression.

use crate::error::{Error, Result};

/// Dense symmetric matrix stored as its packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    lower: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            lower: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated on the lower triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut lower = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                lower.push(f(i, j));
            }
        }
        SymMatrix { dim, lower }
    }

    /// Reads a full row-major matrix, using only its lower triangle.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Usage("matrix rows must be square".into()));
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.lower[packed(i, j)] = v;
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to the given row/column indices.
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Smallest eigenvalue by cyclic Jacobi rotation; meant for small
    /// matrices in diagnostics and tests.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return f64::NAN;
        }
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
            if off <= 1e-30 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
    }
}

/// Lower-triangular Cholesky factor of `m + jitter·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Diagonal jitter that was added before the factorization succeeded.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.lower[packed(i, j)]
        }
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.dim {
            let row = &self.lower[packed(i, 0)..=packed(i, i)];
            let s: f64 = row[..i].iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        for i in (0..self.dim).rev() {
            let mut s = x[i];
            for k in (i + 1)..self.dim {
                s -= self.lower[packed(k, i)] * x[k];
            }
            x[i] = s / self.lower[packed(i, i)];
        }
        x
    }

    /// Solves `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `L z`, the map from white noise to correlated samples.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let row = &self.lower[packed(i, 0)..=packed(i, i)];
                row.iter().zip(z).map(|(l, v)| l * v).sum()
            })
            .collect()
    }

    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_fn(self.dim, |i, j| {
            (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum()
        })
    }
}

/// Pivots at or below this fraction of the largest diagonal entry count as
/// breakdown and trigger more jitter.
const PIVOT_FLOOR: f64 = 1e-13;
/// First nonzero jitter, relative to the largest diagonal entry.
const JITTER_FLOOR: f64 = 1e-14;
/// Largest admissible jitter, relative to the largest diagonal entry.
pub const JITTER_CAP: f64 = 1e-6;

fn try_cholesky(m: &SymMatrix, jitter: f64, floor: f64) -> Option<Vec<f64>> {
    let n = m.dim;
    let mut l = vec![0.0; m.lower.len()];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.get(i, j);
            if i == j {
                s += jitter;
            }
            let (ri, rj) = (packed(i, 0), packed(j, 0));
            for k in 0..j {
                s -= l[ri + k] * l[rj + k];
            }
            if i == j {
                if !(s > floor) {
                    return None;
                }
                l[ri + i] = s.sqrt();
            } else {
                l[ri + j] = s / l[rj + j];
            }
        }
    }
    Some(l)
}

/// Cholesky factorization with geometric jitter escalation.
///
/// The first attempt adds `jitter_start`; each failure multiplies the jitter
/// by ten (starting from `1e-14·max_diag` when `jitter_start` is zero). The
/// jitter may not exceed `1e-6·max_diag`.
pub fn cholesky_psd(m: &SymMatrix, jitter_start: f64) -> Result<CholeskyFactor> {
    if !(jitter_start >= 0.0) {
        return Err(Error::Usage(format!("jitter_start must be nonnegative, got {jitter_start}")));
    }
    let scale = m.max_diag();
    if m.dim == 0 {
        return Ok(CholeskyFactor {
            dim: 0,
            lower: Vec::new(),
            jitter: 0.0,
        });
    }
    if !(scale > 0.0) {
        return Err(Error::NotPsd {
            jitter: 0.0,
            cap: 0.0,
        });
    }
    let cap = JITTER_CAP * scale;
    let floor = PIVOT_FLOOR * scale;
    let mut jitter = jitter_start;
    loop {
        if let Some(lower) = try_cholesky(m, jitter, floor) {
            return Ok(CholeskyFactor {
                dim: m.dim,
                lower,
                jitter,
            });
        }
        jitter = if jitter == 0.0 {
            JITTER_FLOOR * scale
        } else {
            jitter * 10.0
        };
        if jitter > cap * (1.0 + 1e-12) {
            return Err(Error::NotPsd { jitter, cap });
        }
    }
}

/// Outcome of regressing a target on correlated predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    /// `var_target − crossᵀ cov⁻¹ cross`, clamped at zero.
    pub residual: f64,
    /// `cov⁻¹ cross`.
    pub weights: Vec<f64>,
    /// Amount added by the clamp (zero if the raw residual was nonnegative).
    pub clamped: f64,
    pub jitter: f64,
}

/// Conditional variance of a Gaussian target given correlated predictors.
pub fn regression_residual(cov: &SymMatrix, cross: &[f64], var_target: f64) -> Result<Regression> {
    if cov.dim() != cross.len() {
        return Err(Error::Usage(format!(
            "covariance is {0}x{0} but cross-covariance has {1} entries",
            cov.dim(),
            cross.len()
        )));
    }
    if cross.is_empty() {
        return Ok(Regression {
            residual: var_target.max(0.0),
            weights: Vec::new(),
            clamped: (-var_target).max(0.0),
            jitter: 0.0,
        });
    }
    let chol = cholesky_psd(cov, 0.0)?;
    let y = chol.solve_lower(cross);
    let explained: f64 = y.iter().map(|v| v * v).sum();
    let raw = var_target - explained;
    let weights = chol.solve_upper(&y);
    Ok(Regression {
        residual: raw.max(0.0),
        weights,
        clamped: (-raw).max(0.0),
        jitter: chol.jitter(),
    })
}
