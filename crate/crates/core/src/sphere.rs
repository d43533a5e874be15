//! Points on the unit sphere, geodesic distance and point-set generators.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RandomStream;

/// A point on S², kept both as a unit vector and as (colatitude, longitude).
///
/// Longitude is reduced to `[0, 2π)` and set to zero at either pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    v: [f64; 3],
    theta: f64,
    phi: f64,
}

impl SpherePoint {
    /// The North pole `N`, the point where the field is pinned to zero.
    pub const NORTH: SpherePoint = SpherePoint {
        v: [0.0, 0.0, 1.0],
        theta: 0.0,
        phi: 0.0,
    };

    pub fn north_pole() -> Self {
        Self::NORTH
    }

    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::Domain(format!(
                "colatitude must lie in [0, π] and longitude be finite, got ({theta}, {phi})"
            )));
        }
        if theta == 0.0 || theta == PI {
            let z = if theta == 0.0 { 1.0 } else { -1.0 };
            return Ok(SpherePoint {
                v: [0.0, 0.0, z],
                theta,
                phi: 0.0,
            });
        }
        let phi = phi.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative input
        let phi = if phi >= TAU { 0.0 } else { phi };
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Ok(SpherePoint {
            v: [st * cp, st * sp, ct],
            theta,
            phi,
        })
    }

    /// Normalizes `v` onto the sphere.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain(format!("cannot normalize vector {v:?}")));
        }
        let u = [v[0] / norm, v[1] / norm, v[2] / norm];
        let rho = u[0].hypot(u[1]);
        let theta = rho.atan2(u[2]);
        if rho == 0.0 {
            return Self::from_angles(theta, 0.0);
        }
        Self::from_angles(theta, u[1].atan2(u[0]))
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        self.v
    }

    /// Colatitude θ ∈ [0, π].
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Longitude φ ∈ [0, 2π).
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn antipode(&self) -> Self {
        let v = self.v;
        Self::from_vector([-v[0], -v[1], -v[2]]).expect("unit vector")
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        let (a, b) = (self.v, other.v);
        (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0)
    }

    pub fn is_north_pole(&self) -> bool {
        self.theta == 0.0
    }

    /// Point at geodesic distance `dist` from `self` in direction `bearing`
    /// (radians, measured from the local southward meridian direction).
    pub fn offset(&self, dist: f64, bearing: f64) -> Self {
        let (e1, e2) = self.tangent_frame();
        let (sb, cb) = bearing.sin_cos();
        let (sd, cd) = dist.sin_cos();
        let v = self.v;
        let w = [
            cd * v[0] + sd * (cb * e1[0] + sb * e2[0]),
            cd * v[1] + sd * (cb * e1[1] + sb * e2[1]),
            cd * v[2] + sd * (cb * e1[2] + sb * e2[2]),
        ];
        Self::from_vector(w).expect("rotation of a unit vector is nonzero")
    }

    /// Orthonormal tangent basis at the point.
    fn tangent_frame(&self) -> ([f64; 3], [f64; 3]) {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        // ∂/∂θ and ∂/∂φ directions; well-defined at the poles because φ = 0 there
        ([ct * cp, ct * sp, -st], [-sp, cp, 0.0])
    }
}

/// Great-circle distance in `[0, π]`.
///
/// Uses `atan2(|x × y|, ⟨x, y⟩)`, which equals the clamped arccosine of the
/// inner product but keeps full relative accuracy for nearly coincident and
/// nearly antipodal points.
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> f64 {
    let (a, b) = (x.v, y.v);
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let cross = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    cross.atan2(dot).clamp(0.0, PI)
}

/// `n` i.i.d. uniform points (z uniform on [-1, 1], φ uniform on [0, 2π)).
pub fn sample_uniform(stream: &RandomStream, n: usize) -> Vec<SpherePoint> {
    let mut rng = stream.rng();
    (0..n).map(|_| uniform_point(&mut rng)).collect()
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> SpherePoint {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    SpherePoint::from_angles(z.acos(), phi).expect("acos lies in [0, π]")
}

/// Deterministic golden-angle spiral with `n` quasi-uniform points.
pub fn fibonacci_grid(n: usize) -> Result<Vec<SpherePoint>> {
    if n == 0 {
        return Err(Error::Usage("fibonacci grid needs at least one point".into()));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            SpherePoint::from_angles(z.clamp(-1.0, 1.0).acos(), i as f64 * golden)
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRow {
    theta: f64,
    phi: f64,
}

/// Reads a `theta,phi` CSV (radians, one point per row).
pub fn read_points_csv(path: &Path) -> Result<Vec<SpherePoint>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "theta" || &headers[1] != "phi" {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            reason: format!("expected header `theta,phi`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<PointRow>() {
        let row = row?;
        out.push(SpherePoint::from_angles(row.theta, row.phi)?);
    }
    Ok(out)
}

/// Writes points in the `theta,phi` CSV format.
pub fn write_points_csv(path: &Path, points: &[SpherePoint]) -> Result<()> {
    let mut body = String::from("theta,phi\n");
    for p in points {
        body.push_str(&crate::io::fmt_f64(p.theta()));
        body.push(',');
        body.push_str(&crate::io::fmt_f64(p.phi()));
        body.push('\n');
    }
    crate::io::write_atomic(path, body.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    #[test]
    fn from_angles_examples() {
        let n = SpherePoint::from_angles(0.0, 1.234).unwrap();
        assert_eq!(n.unit_vector(), [0.0, 0.0, 1.0]);
        assert_eq!(n.phi(), 0.0);
        assert!(n.is_north_pole());
        let p = SpherePoint::from_angles(PI / 2.0, 0.0).unwrap();
        assert!(close3(p.unit_vector(), [1.0, 0.0, 0.0], 1e-15));
        let p = SpherePoint::from_angles(PI / 3.0, PI / 4.0).unwrap();
        assert!((p.unit_vector()[2] - 0.5).abs() < 1e-15);
        let p = SpherePoint::from_angles(1.0, -0.5).unwrap();
        assert!((p.phi() - (TAU - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn from_angles_rejects_out_of_range() {
        assert!(matches!(SpherePoint::from_angles(-0.1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(SpherePoint::from_angles(3.2, 0.0), Err(Error::Domain(_))));
        assert!(SpherePoint::from_angles(1.0, f64::NAN).is_err());
    }

    #[test]
    fn distance_examples() {
        let n = SpherePoint::NORTH;
        assert_eq!(geodesic_distance(&n, &n), 0.0);
        assert!((geodesic_distance(&n, &n.antipode()) - PI).abs() < 1e-15);
        for &t in &[1e-9, 1e-4, 0.3, 1.7, 3.1] {
            let p = SpherePoint::from_angles(t, 2.0).unwrap();
            assert!((geodesic_distance(&n, &p) - t).abs() < 1e-12 * t.max(1.0));
        }
    }

    #[test]
    fn offset_moves_by_requested_distance() {
        let stream = RandomStream::new(5, 5);
        for p in sample_uniform(&stream, 50) {
            for &d in &[1e-3, 0.1, 1.0] {
                let q = p.offset(d, 0.7);
                assert!((geodesic_distance(&p, &q) - d).abs() < 1e-12);
            }
        }
        let q = SpherePoint::NORTH.offset(0.25, 0.0);
        assert!((q.theta() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_sampling_moments() {
        let n = 100_000;
        let pts = sample_uniform(&RandomStream::new(11, 0), n);
        let nf = n as f64;
        for k in 0..3 {
            let mean = pts.iter().map(|p| p.unit_vector()[k]).sum::<f64>() / nf;
            assert!(mean.abs() < 4.0 * (1.0 / 3f64.sqrt()) / nf.sqrt(), "axis {k}: {mean}");
        }
        // Var(z²) = 1/5 - 1/9 for z uniform on [-1, 1]
        let m2 = pts.iter().map(|p| p.unit_vector()[2].powi(2)).sum::<f64>() / nf;
        let se = ((1.0 / 5.0 - 1.0 / 9.0) / nf).sqrt();
        assert!((m2 - 1.0 / 3.0).abs() < 4.0 * se, "{m2}");
        assert_eq!(pts, sample_uniform(&RandomStream::new(11, 0), n));
    }

    #[test]
    fn fibonacci_examples() {
        assert_eq!(fibonacci_grid(1).unwrap().len(), 1);
        assert!(fibonacci_grid(0).is_err());
        let pts = fibonacci_grid(1000).unwrap();
        for p in &pts {
            let v = p.unit_vector();
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let nn: Vec<f64> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                pts.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| geodesic_distance(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let lo = nn.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = nn.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 4.0, "nearest-neighbour spread {}", hi / lo);
    }

    #[test]
    fn points_csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("sfbm-points-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pts.csv");
        let pts = sample_uniform(&RandomStream::new(3, 3), 25);
        write_points_csv(&path, &pts).unwrap();
        let back = read_points_csv(&path).unwrap();
        for (a, b) in pts.iter().zip(&back) {
            assert_eq!(a.theta(), b.theta());
            assert_eq!(a.phi(), b.phi());
        }
        std::fs::write(&path, "lat,lon\n0.1,0.2\n").unwrap();
        assert!(matches!(read_points_csv(&path), Err(Error::Integrity { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }

    fn rotate(v: [f64; 3]) -> [f64; 3] {
        // fixed rotation: 0.7 rad about z followed by 1.1 rad about x
        let (s1, c1) = 0.7f64.sin_cos();
        let (s2, c2) = 1.1f64.sin_cos();
        let a = [c1 * v[0] - s1 * v[1], s1 * v[0] + c1 * v[1], v[2]];
        [a[0], c2 * a[1] - s2 * a[2], s2 * a[1] + c2 * a[2]]
    }

    fn arb_point() -> impl Strategy<Value = SpherePoint> {
        (0.0..=PI, 0.0..TAU).prop_map(|(t, p)| SpherePoint::from_angles(t, p).unwrap())
    }

    proptest! {
        #[test]
        fn point_invariants(p in arb_point()) {
            let v = p.unit_vector();
            let (st, ct) = p.theta().sin_cos();
            let (sp, cp) = p.phi().sin_cos();
            prop_assert!(close3(v, [st * cp, st * sp, ct], 1e-12));
            prop_assert!((geodesic_distance(&SpherePoint::NORTH, &p) - p.theta()).abs() < 1e-12);
            let q = SpherePoint::from_vector(v).unwrap();
            prop_assert!(close3(q.unit_vector(), v, 1e-12));
        }

        #[test]
        fn metric_properties(x in arb_point(), y in arb_point(), z in arb_point()) {
            let dxy = geodesic_distance(&x, &y);
            prop_assert_eq!(dxy, geodesic_distance(&y, &x));
            prop_assert!(geodesic_distance(&x, &z) <= dxy + geodesic_distance(&y, &z) + 1e-12);
            let rx = SpherePoint::from_vector(rotate(x.unit_vector())).unwrap();
            let ry = SpherePoint::from_vector(rotate(y.unit_vector())).unwrap();
            prop_assert!((geodesic_distance(&rx, &ry) - dxy).abs() < 1e-12);
        }
    }
}
