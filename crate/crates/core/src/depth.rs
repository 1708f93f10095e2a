//! Tukey (halfspace) depth, lower Tukey depth, minimizing directions and
//! reference-side depth contours.
//!
//! Depth is the minimum, over unit directions `v`, of the fraction of cloud
//! points in the closed halfspace `{y : <v, y - x> >= 0}`. The lower depth
//! replaces the minimum by `(n + 1)/n` minus the maximum. Both are evaluated
//! by enumerating a finite candidate set of directions:
//!
//! * `d = 1`: the two directions `-1` and `+1`;
//! * `d = 2`: every critical angle (a cloud point on the boundary line)
//!   and the midpoint of every arc between consecutive critical angles;
//! * `d >= 3`: the normals of hyperplanes through `x` and `d - 1` other
//!   points, each with [`TILTS_PER_NORMAL`] random infinitesimal tilts.
//!
//! The first two are exact. The tilt scheme is exact with probability one
//! but not certified. Depths are carried as integer counts over `n`.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{normalized, orthogonal_direction, Point, PointCloud};
use crate::rng;

/// Relative slack when deciding whether a point lies in a closed halfspace.
pub const DIRECTION_TOLERANCE: f64 = 1e-12;

/// Random tilts tried around each candidate normal for `d >= 3`.
pub const TILTS_PER_NORMAL: usize = 32;

/// Magnitude of each tilt, relative to the unit normal.
pub const TILT_MAGNITUDE: f64 = 1e-7;

/// Rounding grid for the lexicographic tie-break between directions.
const TIE_BREAK_GRID: f64 = 1e-9;

const TILT_STREAM: u64 = 0x7117_0000;
const FALLBACK_DIRECTIONS: usize = 256;

/// An exact depth `count / n`.
///
/// Comparisons are by rational value, so `2/10 == 1/5`.
#[derive(Clone, Copy, Debug)]
pub struct DepthValue {
    count: usize,
    n: usize,
}

impl DepthValue {
    pub fn new(count: usize, n: usize) -> Result<Self> {
        if n == 0 || count > n {
            return Err(Error::InvalidArgument(format!("depth {count}/{n} outside [0, 1]")));
        }
        Ok(DepthValue { count, n })
    }

    pub fn count(self) -> usize {
        self.count
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn value(self) -> f64 {
        self.count as f64 / self.n as f64
    }

    /// `self - k/n`, clamped at zero.
    pub fn minus_fraction(self, k: usize) -> Self {
        DepthValue { count: self.count.saturating_sub(k), n: self.n }
    }

    /// Rewrites the value over denominator `n`, when it is representable.
    pub fn with_denominator(self, n: usize) -> Option<Self> {
        let num = self.count as u128 * n as u128;
        (n > 0 && num % self.n as u128 == 0).then(|| DepthValue { count: (num / self.n as u128) as usize, n })
    }
}

impl PartialEq for DepthValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DepthValue {}

impl PartialOrd for DepthValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DepthValue {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.count as u128 * other.n as u128).cmp(&(other.count as u128 * self.n as u128))
    }
}

impl fmt::Display for DepthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.count, self.n)
    }
}

impl FromStr for DepthValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected a fraction k/n, got {s:?}"));
        let (k, n) = s.trim().split_once('/').ok_or_else(bad)?;
        let k = k.trim().parse().map_err(|_| bad())?;
        let n = n.trim().parse().map_err(|_| bad())?;
        DepthValue::new(k, n)
    }
}

impl Serialize for DepthValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DepthValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How candidate directions are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DepthMode {
    Exact,
    /// `directions` uniformly random unit vectors. The resulting depth is an
    /// upper bound on the exact depth (and the lower depth a lower bound).
    Approximate {
        directions: usize,
        seed: u64,
    },
}

impl DepthMode {
    /// Parses `exact` or `approx:M`; the seed is supplied separately.
    pub fn parse(s: &str, seed: u64) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(DepthMode::Exact),
            other => {
                let m = other
                    .strip_prefix("approx:")
                    .and_then(|m| m.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown depth mode {other:?}")))?;
                Ok(DepthMode::Approximate { directions: m, seed })
            }
        }
    }
}

/// A depth together with the directions that attain it.
#[derive(Clone, Debug, Serialize)]
pub struct DepthResult {
    pub depth: DepthValue,
    /// Directions attaining the extremal closed-halfspace count: minimizers
    /// for [`tukey_depth`], maximizers for [`lower_tukey_depth`].
    pub directions: Vec<Vec<f64>>,
    pub mode: DepthMode,
}

/// Closed-halfspace counts over a candidate direction set.
struct HalfspaceCounts {
    directions: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl HalfspaceCounts {
    fn extremal(&self, pick: impl Fn(usize, usize) -> bool) -> (usize, Vec<Vec<f64>>) {
        let mut best = self.counts[0];
        for &c in &self.counts[1..] {
            if pick(c, best) {
                best = c;
            }
        }
        let dirs = self
            .directions
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c == best)
            .map(|(d, _)| d.clone())
            .unique_by(|d| rounded_key(d))
            .collect();
        (best, dirs)
    }
}

fn rounded_key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x / TIE_BREAK_GRID).round() as i64).collect()
}

/// Number of cloud points in the closed halfspace through `x` with outward normal `v`.
pub fn halfspace_count(v: &[f64], x: &Point, cloud: &PointCloud) -> usize {
    let x = x.coords();
    cloud
        .iter()
        .filter(|p| {
            let (mut proj, mut sq) = (0.0, 0.0);
            for ((pc, xc), vc) in p.coords().iter().zip(x).zip(v) {
                let w = pc - xc;
                proj += vc * w;
                sq += w * w;
            }
            proj >= -DIRECTION_TOLERANCE * sq.sqrt()
        })
        .count()
}

/// Differences `X_j - x` for the points distinct from `x`.
fn offsets(x: &Point, cloud: &PointCloud) -> Vec<Vec<f64>> {
    cloud.iter().map(|p| p.diff(x)).filter(|w| w.iter().any(|&c| c != 0.0)).collect()
}

fn planar_candidates(x: &Point, cloud: &PointCloud) -> Vec<Vec<f64>> {
    let mut crit: Vec<f64> = offsets(x, cloud)
        .iter()
        .flat_map(|w| {
            let a = w[1].atan2(w[0]);
            [a + FRAC_PI_2, a - FRAC_PI_2]
        })
        .map(|a| a.rem_euclid(TAU))
        .collect();
    if crit.is_empty() {
        return vec![vec![1.0, 0.0]];
    }
    crit.sort_by(f64::total_cmp);
    crit.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    let m = crit.len();
    let mut angles = Vec::with_capacity(2 * m);
    for k in 0..m {
        angles.push(crit[k]);
        let next = if k + 1 < m { crit[k + 1] } else { crit[0] + TAU };
        angles.push(0.5 * (crit[k] + next));
    }
    if m == 1 {
        angles.push(crit[0] + PI);
    }
    angles.into_iter().map(|a| vec![a.cos(), a.sin()]).collect()
}

fn spatial_candidates(x: &Point, cloud: &PointCloud) -> Vec<Vec<f64>> {
    let d = x.dim();
    let ws = offsets(x, cloud);
    let mut rng = rng::stream(TILT_STREAM, d as u64);
    let mut dirs = Vec::new();
    for k in 0..d {
        for s in [-1.0, 1.0] {
            let mut e = vec![0.0; d];
            e[k] = s;
            dirs.push(e);
        }
    }
    let mut found_normal = false;
    for subset in ws.iter().cloned().combinations(d - 1) {
        let Some(normal) = orthogonal_direction(&subset) else { continue };
        found_normal = true;
        for s in [-1.0, 1.0] {
            let base: Vec<f64> = normal.iter().map(|c| s * c).collect();
            for _ in 0..TILTS_PER_NORMAL {
                let tilted: Vec<f64> =
                    base.iter().map(|c| c + TILT_MAGNITUDE * rng.sample::<f64, _>(StandardNormal)).collect();
                dirs.extend(normalized(&tilted));
            }
            dirs.push(base);
        }
    }
    if !found_normal {
        dirs.extend(random_directions(d, FALLBACK_DIRECTIONS, &mut rng));
    }
    dirs
}

fn random_directions(d: usize, m: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        out.extend(normalized(&g));
    }
    out
}

fn candidate_counts(x: &Point, cloud: &PointCloud, mode: DepthMode) -> Result<HalfspaceCounts> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if x.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), found: x.dim() });
    }
    let directions = match mode {
        DepthMode::Approximate { directions: 0, .. } => {
            return Err(Error::InvalidArgument("approximate depth needs at least one direction".into()))
        }
        DepthMode::Approximate { directions, seed } => {
            random_directions(cloud.dim(), directions, &mut rng::stream(seed, 0))
        }
        DepthMode::Exact => match cloud.dim() {
            1 => vec![vec![-1.0], vec![1.0]],
            2 => planar_candidates(x, cloud),
            _ => spatial_candidates(x, cloud),
        },
    };
    let counts = directions.iter().map(|v| halfspace_count(v, x, cloud)).collect();
    Ok(HalfspaceCounts { directions, counts })
}

/// Tukey depth of `x` with respect to `cloud`.
pub fn tukey_depth(x: &Point, cloud: &PointCloud, mode: DepthMode) -> Result<DepthResult> {
    let counts = candidate_counts(x, cloud, mode)?;
    let (count, directions) = counts.extremal(|c, best| c < best);
    Ok(DepthResult { depth: DepthValue::new(count, cloud.len())?, directions, mode })
}

/// Lower Tukey depth `(n + 1)/n - max_v #{<v, X_i - x> >= 0}/n`.
///
/// The returned directions maximize the closed-halfspace count; their
/// negations minimize the open-halfspace count.
pub fn lower_tukey_depth(x: &Point, cloud: &PointCloud, mode: DepthMode) -> Result<DepthResult> {
    let counts = candidate_counts(x, cloud, mode)?;
    let (count, directions) = counts.extremal(|c, best| c > best);
    Ok(DepthResult { depth: DepthValue::new(cloud.len() + 1 - count, cloud.len())?, directions, mode })
}

/// Lexicographically smallest direction, comparing coordinates rounded to `1e-9`.
pub fn lexicographic_first(directions: &[Vec<f64>]) -> Option<Vec<f64>> {
    directions.iter().min_by(|a, b| rounded_key(a).cmp(&rounded_key(b))).cloned()
}

/// One exact depth-minimizing direction, chosen by [`lexicographic_first`].
pub fn min_depth_direction(x: &Point, cloud: &PointCloud) -> Result<Vec<f64>> {
    let result = tukey_depth(x, cloud, DepthMode::Exact)?;
    Ok(lexicographic_first(&result.directions).expect("candidate set is never empty"))
}

/// Exact depth of every cloud point within the cloud.
pub fn cloud_depths(cloud: &PointCloud) -> Result<Vec<DepthValue>> {
    cloud.iter().map(|p| tukey_depth(p, cloud, DepthMode::Exact).map(|r| r.depth)).collect()
}

/// Indices of the cloud points whose exact depth equals `tau`. May be empty.
pub fn depth_contour_ref(cloud: &PointCloud, tau: DepthValue) -> Result<Vec<usize>> {
    Ok(contour_indices(&cloud_depths(cloud)?, tau))
}

pub(crate) fn contour_indices(depths: &[DepthValue], tau: DepthValue) -> Vec<usize> {
    depths.iter().positions(|&d| d == tau).collect()
}

/// The maximal depth over the cloud and the indices attaining it.
pub fn max_depth(cloud: &PointCloud) -> Result<(DepthValue, Vec<usize>)> {
    let depths = cloud_depths(cloud)?;
    let best = *depths.iter().max().ok_or(Error::EmptyCloud)?;
    Ok((best, contour_indices(&depths, best)))
}
