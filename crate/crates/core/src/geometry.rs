//! Points, point clouds, cones and the set-level geometry shared by the rest
//! of the crate.
//!
//! Geometry is carried out in `f64` with explicit tolerances. Only depth
//! counts are exact; see [`crate::depth::DepthValue`].

use std::fmt;
use std::ops::Index;

use itertools::Itertools;
use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// A point in `R^d` with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("a point needs at least one coordinate".into()));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Point(coords))
    }

    /// The origin of `R^dim`.
    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist2(&self.0, &other.0).sqrt()
    }

    /// `self - other` as a plain vector.
    pub fn diff(&self, other: &Point) -> Vec<f64> {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.dim() });
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        Point::new(coords).map_err(serde::de::Error::custom)
    }
}

impl From<f64> for Point {
    /// A one-dimensional point. Panics on a non-finite value.
    fn from(x: f64) -> Self {
        Point::new(vec![x]).expect("finite coordinate")
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(", "))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Scales `v` to unit length. Returns `None` for the zero vector.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// An ordered list of points of a common dimension.
///
/// Index identity matters: matchings refer to points by position.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    dim: usize,
    label: String,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCloud)?;
        let dim = first.dim();
        for p in &points {
            p.check_dim(dim)?;
        }
        Ok(PointCloud { points, dim, label: String::new() })
    }

    /// Builds a cloud from raw coordinate rows.
    pub fn from_rows<R: Into<Vec<f64>>>(rows: impl IntoIterator<Item = R>) -> Result<Self> {
        let points = rows.into_iter().map(|r| Point::new(r.into())).collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// A one-dimensional cloud.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_rows(values.iter().map(|&v| vec![v]))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn get(&self, i: usize) -> Result<&Point> {
        self.points.get(i).ok_or(Error::IndexOutOfRange { index: i, len: self.len() })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// The points at `indices`, in that order. Returns `None` when the
    /// selection is empty (clouds are never empty).
    pub fn select(&self, indices: &[usize]) -> Option<PointCloud> {
        let points: Vec<Point> = indices.iter().map(|&i| self.points[i].clone()).collect();
        (!points.is_empty()).then(|| PointCloud { points, dim: self.dim, label: self.label.clone() })
    }

    /// Replaces the point at `i`, keeping the dimension.
    pub fn replace(&mut self, i: usize, p: Point) -> Result<()> {
        p.check_dim(self.dim)?;
        let len = self.len();
        *self.points.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, len })? = p;
        Ok(())
    }

    pub fn centroid(&self) -> Point {
        let mut c = vec![0.0; self.dim];
        for p in &self.points {
            for (ci, x) in c.iter_mut().zip(p.coords()) {
                *ci += x;
            }
        }
        let n = self.len() as f64;
        Point(c.into_iter().map(|x| x / n).collect())
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max(dist2(a.coords(), b.coords()));
            }
        }
        best.sqrt()
    }

    pub(crate) fn check_same_dim(&self, other: &PointCloud) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}

impl Index<usize> for PointCloud {
    type Output = Point;

    fn index(&self, i: usize) -> &Point {
        &self.points[i]
    }
}

impl<'a> IntoIterator for &'a PointCloud {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

impl Serialize for PointCloud {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.points.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PointCloud {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let points = Vec::<Point>::deserialize(deserializer)?;
        PointCloud::new(points).map_err(serde::de::Error::custom)
    }
}

fn check_unit(axis: &[f64]) -> Result<()> {
    if (norm(axis) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("axis must be a unit vector, has norm {}", norm(axis))));
    }
    Ok(())
}

fn check_half_angle(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("half-angle {theta} outside (0, pi/2)")));
    }
    Ok(())
}

/// The convex cone `{x + v : <v, e> >= cos(theta) |v|}`.
#[derive(Clone, Debug)]
pub struct Cone {
    vertex: Point,
    axis: Vec<f64>,
    half_angle: f64,
}

impl Cone {
    pub fn new(vertex: Point, axis: Vec<f64>, half_angle: f64) -> Result<Self> {
        vertex.check_dim(axis.len())?;
        check_unit(&axis)?;
        check_half_angle(half_angle)?;
        Ok(Cone { vertex, axis, half_angle })
    }

    pub fn vertex(&self) -> &Point {
        &self.vertex
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    /// Membership test. The vertex itself belongs to the cone.
    pub fn contains(&self, z: &Point) -> Result<bool> {
        z.check_dim(self.vertex.dim())?;
        let v = z.diff(&self.vertex);
        Ok(dot(&v, &self.axis) >= self.half_angle.cos() * norm(&v))
    }
}

/// The non-convex region `{y : <u - y, e> <= |u - y| tan(theta)}` that a
/// monotone map must send a [`Cone`] into.
#[derive(Clone, Debug)]
pub struct AntiCone {
    apex: Point,
    axis: Vec<f64>,
    half_angle: f64,
}

impl AntiCone {
    pub fn new(apex: Point, axis: Vec<f64>, half_angle: f64) -> Result<Self> {
        apex.check_dim(axis.len())?;
        check_unit(&axis)?;
        check_half_angle(half_angle)?;
        Ok(AntiCone { apex, axis, half_angle })
    }

    pub fn apex(&self) -> &Point {
        &self.apex
    }

    pub fn contains(&self, y: &Point) -> Result<bool> {
        self.contains_with_slack(y, 0.0)
    }

    /// Membership with an absolute slack added to the right-hand side.
    pub fn contains_with_slack(&self, y: &Point, slack: f64) -> Result<bool> {
        y.check_dim(self.apex.dim())?;
        let w = self.apex.diff(y);
        let s = self.half_angle.sin().abs();
        let ratio = s / (1.0 - s * s).sqrt();
        Ok(dot(&w, &self.axis) <= norm(&w) * ratio + slack)
    }
}

pub fn in_cone(z: &Point, cone: &Cone) -> Result<bool> {
    cone.contains(z)
}

pub fn in_anticone(y: &Point, anticone: &AntiCone) -> Result<bool> {
    anticone.contains(y)
}

/// Exact Hausdorff distance between two finite sets, `O(|A| |B|)`.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    a.check_same_dim(b)?;
    let directed = |from: &PointCloud, to: &PointCloud| {
        from.iter()
            .map(|p| to.iter().map(|q| dist2(p.coords(), q.coords())).fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)).sqrt())
}

/// Ratio of the smallest to the largest singular value of the rows, or 0
/// when every row vanishes. Rows must outnumber neither the columns nor zero.
fn relative_min_singular_value(rows: &[Vec<f64>]) -> f64 {
    let r = rows.len();
    let c = rows[0].len();
    let sv = if r == 2 && c == 2 {
        let m = Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
        m.singular_values().as_slice().to_vec()
    } else {
        DMatrix::from_fn(r, c, |i, j| rows[i][j]).singular_values().as_slice().to_vec()
    };
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    sv.iter().cloned().fold(f64::INFINITY, f64::min) / max
}

/// Whether the points at `idx` are affinely independent.
fn affinely_independent(cloud: &PointCloud, idx: &[usize]) -> bool {
    if idx.len() <= 1 {
        return true;
    }
    let base = &cloud[idx[0]];
    let rows: Vec<Vec<f64>> = idx[1..].iter().map(|&i| cloud[i].diff(base)).collect();
    if cloud.dim() == 1 {
        return rows[0][0] != 0.0;
    }
    relative_min_singular_value(&rows) > RANK_TOLERANCE
}

/// True iff no affine hyperplane holds more than `d` of the points, i.e.
/// every `(d+1)`-subset is affinely independent.
///
/// In one dimension a hyperplane is a single point, so this reduces to all
/// points being distinct.
pub fn in_general_position(cloud: &PointCloud) -> bool {
    let d = cloud.dim();
    if d == 1 {
        let mut xs: Vec<f64> = cloud.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        return xs.windows(2).all(|w| w[0] != w[1]);
    }
    (0..cloud.len()).combinations(d + 1).all(|idx| affinely_independent(cloud, &idx))
}

/// A unit vector orthogonal to the `d - 1` given rows of length `d`, or
/// `None` when the rows do not span a hyperplane.
pub(crate) fn orthogonal_direction(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = rows.first()?.len();
    if rows.len() + 1 != d || relative_min_singular_value(rows) <= RANK_TOLERANCE {
        return None;
    }
    if d == 2 {
        return normalized(&[-rows[0][1], rows[0][0]]);
    }
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (r, row) in rows.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            m[(r, c)] = x;
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let (k, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    normalized(v_t.row(k).transpose().as_slice())
}

/// Unit normal of the hyperplane through `d` affinely independent points.
fn hyperplane_normal(cloud: &PointCloud, idx: &[usize]) -> Option<Vec<f64>> {
    let base = &cloud[idx[0]];
    let rows: Vec<Vec<f64>> = idx[1..].iter().map(|&i| cloud[i].diff(base)).collect();
    orthogonal_direction(&rows)
}

/// Largest number of cloud points lying on a common affine hyperplane.
///
/// Hyperplanes are enumerated from affinely independent `d`-subsets, which is
/// exact but combinatorial; intended for desk-scale `n`. For `d = 1` a
/// hyperplane is a single point and the result is the largest multiplicity.
pub fn max_hyperplane_count(cloud: &PointCloud) -> Result<usize> {
    let d = cloud.dim();
    let n = cloud.len();
    if n < d {
        return Err(Error::Degenerate(format!("{n} points cannot span a hyperplane in dimension {d}")));
    }
    if d == 1 {
        let counts = cloud.iter().map(|p| p[0].to_bits()).counts();
        return Ok(counts.values().copied().max().unwrap_or(0));
    }
    let tol = RANK_TOLERANCE * cloud.diameter().max(f64::MIN_POSITIVE);
    let mut best = None;
    for idx in (0..n).combinations(d) {
        let Some(normal) = hyperplane_normal(cloud, &idx) else { continue };
        let base = &cloud[idx[0]];
        let on = cloud.iter().filter(|p| dot(&p.diff(base), &normal).abs() <= tol).count();
        best = Some(best.map_or(on, |b: usize| b.max(on)));
    }
    // No spanning subset means the cloud sits inside a lower-dimensional flat.
    Ok(best.unwrap_or(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn diamond() -> PointCloud {
        PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap()
    }

    #[test]
    fn cone_membership() {
        let cone = Cone::new(p(&[0.0, 0.0]), vec![1.0, 0.0], FRAC_PI_4).unwrap();
        assert!(in_cone(&p(&[1.0, 0.0]), &cone).unwrap());
        assert!(!in_cone(&p(&[0.0, 1.0]), &cone).unwrap());
        assert!(in_cone(&p(&[0.0, 0.0]), &cone).unwrap());
        assert!(matches!(in_cone(&p(&[1.0]), &cone), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn anticone_membership() {
        let u = p(&[0.5, -2.0]);
        let a = AntiCone::new(u.clone(), vec![0.0, 1.0], FRAC_PI_6).unwrap();
        assert!(in_anticone(&p(&[0.5, -1.0]), &a).unwrap());
        // <u - y, e> = 1 > tan(pi/6)
        assert!(!in_anticone(&p(&[0.5, -3.0]), &a).unwrap());
        assert!(in_anticone(&u, &a).unwrap());
    }

    #[test]
    fn cone_rejects_bad_parameters() {
        assert!(Cone::new(p(&[0.0, 0.0]), vec![2.0, 0.0], 0.3).is_err());
        assert!(Cone::new(p(&[0.0, 0.0]), vec![1.0, 0.0], std::f64::consts::FRAC_PI_2).is_err());
        assert!(AntiCone::new(p(&[0.0, 0.0]), vec![1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let a = PointCloud::from_scalars(&[0.0, 1.0]).unwrap();
        let b = PointCloud::from_scalars(&[0.0, 5.0]).unwrap();
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let s0 = PointCloud::from_scalars(&[0.0]).unwrap();
        let s3 = PointCloud::from_scalars(&[3.0]).unwrap();
        assert_eq!(hausdorff(&s0, &s3).unwrap(), 3.0);
        assert_eq!(hausdorff(&a, &b).unwrap(), 4.0);
        assert!(hausdorff(&a, &diamond()).is_err());
    }

    #[test]
    fn general_position_examples() {
        let line = PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap();
        let tri = PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(!in_general_position(&line));
        assert!(in_general_position(&tri));
        assert!(!in_general_position(&diamond()));
        assert!(in_general_position(&PointCloud::from_scalars(&[1.0, 2.0, 3.0]).unwrap()));
        assert!(!in_general_position(&PointCloud::from_scalars(&[1.0, 2.0, 1.0]).unwrap()));
    }

    #[test]
    fn hyperplane_counts() {
        assert_eq!(max_hyperplane_count(&diamond()).unwrap(), 3);
        let tri = PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(max_hyperplane_count(&tri).unwrap(), 2);
        let line = PointCloud::from_scalars(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(max_hyperplane_count(&line).unwrap(), 1);
        let single = PointCloud::from_rows([[0.0, 0.0]]).unwrap();
        assert!(max_hyperplane_count(&single).is_err());
        let flat = PointCloud::from_rows([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 5.0, 0.0]]).unwrap();
        assert_eq!(max_hyperplane_count(&flat).unwrap(), 4);
    }

    #[test]
    fn cloud_validation() {
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyCloud)));
        assert!(PointCloud::from_rows(vec![vec![0.0, 1.0], vec![1.0]]).is_err());
        assert!(matches!(Point::new(vec![f64::NAN]), Err(Error::NonFinite(0))));
    }
}
