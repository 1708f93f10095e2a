//! Reference clouds `u^(n)` for transport quantiles.

use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{in_general_position, normalized, Point, PointCloud};
use crate::rng;

/// Perturbation rounds tried by [`ensure_general_position`].
pub const GENERAL_POSITION_RETRIES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RefKind {
    /// Uniform direction times a radius uniform on `[0, 1]`.
    SphericalUniform,
    /// Halton points (bases = first `d` primes) mapped to `[-1, 1]^d`.
    HaltonCube,
    /// Radii `j/(radii + 1)`, `j = 1..=radii`, times `directions` unit
    /// vectors: equally spaced angles in the plane, a Fibonacci sphere in 3D.
    /// `center` adds one copy of the origin.
    SphericalGrid {
        radii: usize,
        directions: usize,
        #[serde(default)]
        center: bool,
    },
    /// Standard normal.
    Gaussian,
}

impl RefKind {
    pub fn name(&self) -> &'static str {
        match self {
            RefKind::SphericalUniform => "spherical_uniform",
            RefKind::HaltonCube => "halton_cube",
            RefKind::SphericalGrid { .. } => "spherical_grid",
            RefKind::Gaussian => "gaussian",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefSpec {
    #[serde(flatten)]
    pub kind: RefKind,
    pub n: usize,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// When set, the cloud is perturbed into general position.
    #[serde(default)]
    pub jitter: Option<f64>,
}

impl RefSpec {
    pub fn new(kind: RefKind, n: usize, dim: usize, seed: u64) -> Self {
        RefSpec { kind, n, dim, seed, jitter: None }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = Some(jitter);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::InvalidArgument("reference clouds need n >= 1 and dim >= 1".into()));
        }
        if let Some(j) = self.jitter {
            if !(j >= 0.0 && j.is_finite()) {
                return Err(Error::InvalidArgument(format!("jitter {j} must be a finite non-negative number")));
            }
        }
        if let RefKind::SphericalGrid { radii, directions, center } = self.kind {
            if !matches!(self.dim, 2 | 3) {
                return Err(Error::Unsupported(format!("spherical grid in dimension {}", self.dim)));
            }
            let expected = radii * directions + usize::from(center);
            if expected != self.n {
                return Err(Error::InvalidArgument(format!(
                    "spherical grid with {radii} radii and {directions} directions has {expected} points, not {}",
                    self.n
                )));
            }
        }
        if self.kind == RefKind::HaltonCube && self.dim > PRIMES.len() {
            return Err(Error::Unsupported(format!("Halton sequence in dimension {}", self.dim)));
        }
        Ok(())
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// The `index`-th Halton point in `[0, 1)^dim` (indices start at 1).
pub fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

fn unit_directions_plane(m: usize) -> Vec<Vec<f64>> {
    (0..m).map(|k| TAU * k as f64 / m as f64).map(|a| vec![a.cos(), a.sin()]).collect()
}

fn fibonacci_sphere(m: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / m as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn random_unit(dim: usize, rng: &mut rng::Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&g) {
            return u;
        }
    }
}

/// Generates the reference cloud described by `spec`.
pub fn generate(spec: &RefSpec) -> Result<PointCloud> {
    spec.validate()?;
    let RefSpec { n, dim, seed, .. } = *spec;
    let mut rng = rng::stream(seed, 0);
    let rows: Vec<Vec<f64>> = match spec.kind {
        RefKind::SphericalUniform => {
            let radius = Uniform::new(0.0, 1.0).expect("valid range");
            (0..n)
                .map(|_| {
                    let u = random_unit(dim, &mut rng);
                    let r: f64 = rng.sample(radius);
                    u.into_iter().map(|c| c * r).collect()
                })
                .collect()
        }
        RefKind::HaltonCube => {
            (1..=n as u64).map(|k| halton_point(k, dim).into_iter().map(|c| 2.0 * c - 1.0).collect()).collect()
        }
        RefKind::SphericalGrid { radii, directions, center } => {
            let dirs = if dim == 2 { unit_directions_plane(directions) } else { fibonacci_sphere(directions) };
            let mut rows: Vec<Vec<f64>> = (1..=radii)
                .flat_map(|j| {
                    let r = j as f64 / (radii + 1) as f64;
                    dirs.iter().map(move |s| s.iter().map(|c| c * r).collect())
                })
                .collect();
            if center {
                rows.push(vec![0.0; dim]);
            }
            rows
        }
        RefKind::Gaussian => (0..n).map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect()).collect(),
    };
    let cloud = PointCloud::from_rows(rows)?.with_label(spec.kind.name());
    match spec.jitter {
        Some(j) if j > 0.0 => ensure_general_position(&cloud, j, rng::split(seed, 1)),
        _ => Ok(cloud),
    }
}

/// Returns `cloud` if it is already in general position; otherwise adds
/// seeded uniform noise in `[-jitter, jitter]^d` until it is.
pub fn ensure_general_position(cloud: &PointCloud, jitter: f64, seed: u64) -> Result<PointCloud> {
    if !(jitter > 0.0 && jitter.is_finite()) {
        return Err(Error::InvalidArgument(format!("jitter must be positive, got {jitter}")));
    }
    if in_general_position(cloud) {
        return Ok(cloud.clone());
    }
    let noise = Uniform::new_inclusive(-jitter, jitter).expect("valid range");
    for attempt in 0..GENERAL_POSITION_RETRIES {
        let mut rng = rng::stream(seed, attempt as u64 + 1);
        let points = cloud
            .iter()
            .map(|p| Point::new(p.coords().iter().map(|c| c + rng.sample(noise)).collect()))
            .collect::<Result<Vec<_>>>()?;
        let candidate = PointCloud::new(points)?.with_label(cloud.label());
        if in_general_position(&candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::RetryLimit(GENERAL_POSITION_RETRIES))
}

/// Jitter used by [`sweep_instance`].
pub const SWEEP_JITTER: f64 = 1e-6;

/// A random contamination-sweep instance: a spherical-uniform reference
/// perturbed into general position and a standard normal target, both of
/// size `n`, derived from one seed.
pub fn sweep_instance(seed: u64, n: usize, dim: usize) -> Result<(PointCloud, PointCloud)> {
    let reference = generate(&RefSpec::new(RefKind::SphericalUniform, n, dim, seed).with_jitter(SWEEP_JITTER))?;
    let target = generate(&RefSpec::new(RefKind::Gaussian, n, dim, rng::split(seed, 0xface)))?;
    Ok((reference, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_prefix() {
        let c = generate(&RefSpec::new(RefKind::HaltonCube, 3, 1, 0)).unwrap();
        let xs: Vec<f64> = c.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, -0.5, 0.5]);
        let h = halton_point(5, 2);
        assert_eq!(h[0], 0.625);
        assert!((h[1] - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn planar_grid() {
        let spec = RefSpec::new(RefKind::SphericalGrid { radii: 1, directions: 4, center: false }, 4, 2, 0);
        let c = generate(&spec).unwrap();
        let expected = [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.0, -0.5]];
        for (p, e) in c.iter().zip(expected) {
            assert!((p[0] - e[0]).abs() < 1e-15 && (p[1] - e[1]).abs() < 1e-15, "{p}");
        }
        let bad = RefSpec::new(RefKind::SphericalGrid { radii: 2, directions: 4, center: false }, 9, 2, 0);
        assert!(generate(&bad).is_err());
        let centered = RefSpec::new(RefKind::SphericalGrid { radii: 2, directions: 4, center: true }, 9, 2, 0);
        assert_eq!(generate(&centered).unwrap().len(), 9);
        let d4 = RefSpec::new(RefKind::SphericalGrid { radii: 1, directions: 4, center: false }, 4, 4, 0);
        assert!(matches!(generate(&d4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn fibonacci_directions_are_unit() {
        let spec = RefSpec::new(RefKind::SphericalGrid { radii: 3, directions: 20, center: false }, 60, 3, 0);
        let c = generate(&spec).unwrap();
        for (k, p) in c.iter().enumerate() {
            let r = (k / 20 + 1) as f64 / 4.0;
            assert!((p.norm() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_generation_is_deterministic_and_supported() {
        for kind in [RefKind::SphericalUniform, RefKind::Gaussian, RefKind::HaltonCube] {
            let spec = RefSpec::new(kind.clone(), 200, 3, 11);
            let a = generate(&spec).unwrap();
            assert_eq!(a, generate(&spec).unwrap());
            match kind {
                RefKind::SphericalUniform => assert!(a.iter().all(|p| p.norm() <= 1.0)),
                RefKind::HaltonCube => assert!(a.iter().all(|p| p.coords().iter().all(|c| c.abs() <= 1.0))),
                _ => {}
            }
        }
        let a = generate(&RefSpec::new(RefKind::SphericalUniform, 10, 2, 1)).unwrap();
        let b = generate(&RefSpec::new(RefKind::SphericalUniform, 10, 2, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn general_position_repair() {
        let diamond = PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
        let fixed = ensure_general_position(&diamond, 1e-6, 3).unwrap();
        assert!(in_general_position(&fixed));
        assert!(fixed.iter().zip(&diamond).all(|(a, b)| a.distance(b) <= 2e-6));

        let tri = PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(ensure_general_position(&tri, 1e-6, 3).unwrap(), tri);

        let line = PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert!(ensure_general_position(&line, 0.0, 3).is_err());
    }

    #[test]
    fn jittered_spec_is_in_general_position() {
        let spec =
            RefSpec::new(RefKind::SphericalGrid { radii: 2, directions: 4, center: true }, 9, 2, 5).with_jitter(1e-6);
        assert!(in_general_position(&generate(&spec).unwrap()));
    }

    #[test]
    fn spec_json() {
        let json = r#"{"kind":"spherical_grid","radii":1,"directions":4,"n":4,"dim":2}"#;
        let spec: RefSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, RefKind::SphericalGrid { radii: 1, directions: 4, center: false });
    }
}
