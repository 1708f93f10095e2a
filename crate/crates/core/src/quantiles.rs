//! Center-outward quantiles, ranks, contours and medians built from an
//! optimal matching.
//!
//! The quantile map sends reference point `u_i` to `X_sigma(i)`; the
//! distribution map is its inverse. The depth of a target point is the
//! Tukey depth of its reference preimage inside the reference cloud, so
//! everything here is defined on sample points only.

use serde::Serialize;

use crate::depth::{cloud_depths, contour_indices, DepthValue};
use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};
use crate::transport::{solve_assignment, Matching};

#[derive(Clone, Debug)]
pub struct TransportQuantileFn {
    reference: PointCloud,
    target: PointCloud,
    matching: Matching,
    inverse: Vec<usize>,
    ref_depths: Vec<DepthValue>,
}

impl TransportQuantileFn {
    /// Solves the transport problem and computes exact reference depths.
    pub fn fit(reference: PointCloud, target: PointCloud) -> Result<Self> {
        let matching = solve_assignment(&reference, &target)?;
        let depths = cloud_depths(&reference)?;
        Self::from_parts(reference, target, matching, depths)
    }

    /// Assembles a quantile function from an existing matching and
    /// precomputed reference depths (one per reference point).
    pub fn from_parts(
        reference: PointCloud,
        target: PointCloud,
        matching: Matching,
        ref_depths: Vec<DepthValue>,
    ) -> Result<Self> {
        let n = reference.len();
        if target.len() != n || matching.len() != n || ref_depths.len() != n {
            return Err(Error::SizeMismatch { reference: n, target: target.len() });
        }
        reference.check_same_dim(&target)?;
        let inverse = matching.inverse();
        Ok(TransportQuantileFn { reference, target, matching, inverse, ref_depths })
    }

    pub fn reference(&self) -> &PointCloud {
        &self.reference
    }

    pub fn target(&self) -> &PointCloud {
        &self.target
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn reference_depths(&self) -> &[DepthValue] {
        &self.ref_depths
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    /// `Q(u_i)`: the target point matched to reference index `i`.
    pub fn quantile(&self, i: usize) -> Result<&Point> {
        let j = *self.matching.sigma.get(i).ok_or(Error::IndexOutOfRange { index: i, len: self.len() })?;
        Ok(&self.target[j])
    }

    /// `F(X_j)`: the reference index matched to target index `j`.
    pub fn distribution(&self, j: usize) -> Result<usize> {
        self.inverse.get(j).copied().ok_or(Error::IndexOutOfRange { index: j, len: self.len() })
    }

    /// Depth of target point `j`: Tukey depth of its reference preimage.
    pub fn transport_depth(&self, j: usize) -> Result<DepthValue> {
        Ok(self.ref_depths[self.distribution(j)?])
    }

    /// Image of the reference points whose depth is exactly `tau`.
    pub fn transport_contour(&self, tau: DepthValue) -> ContourSet {
        let ref_indices = contour_indices(&self.ref_depths, tau);
        let target_indices: Vec<usize> = ref_indices.iter().map(|&i| self.matching.sigma[i]).collect();
        ContourSet {
            tau,
            points: target_indices.iter().map(|&j| self.target[j].clone()).collect(),
            ref_preimage: ref_indices.iter().map(|&i| self.reference[i].clone()).collect(),
            target_indices,
            ref_indices,
        }
    }

    /// The deepest reference depth.
    pub fn max_reference_depth(&self) -> DepthValue {
        *self.ref_depths.iter().max().expect("clouds are never empty")
    }

    /// The median set: image of every reference point of maximal depth.
    pub fn transport_median(&self) -> ContourSet {
        self.transport_contour(self.max_reference_depth())
    }

    /// Every target index with its depth, deepest first, ties by index.
    pub fn transport_ranks(&self) -> Vec<(usize, DepthValue)> {
        let mut ranks: Vec<(usize, DepthValue)> =
            (0..self.len()).map(|j| (j, self.ref_depths[self.inverse[j]])).collect();
        ranks.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranks
    }

    /// Distinct reference depths in increasing order.
    pub fn depth_levels(&self) -> Vec<DepthValue> {
        let mut levels = self.ref_depths.clone();
        levels.sort();
        levels.dedup();
        levels
    }
}

/// A depth contour: target points whose reference preimages have depth `tau`.
#[derive(Clone, Debug, Serialize)]
pub struct ContourSet {
    pub tau: DepthValue,
    pub points: Vec<Point>,
    pub ref_preimage: Vec<Point>,
    #[serde(skip)]
    pub target_indices: Vec<usize>,
    #[serde(skip)]
    pub ref_indices: Vec<usize>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// The contour as a cloud, or `None` when empty.
    pub fn to_cloud(&self) -> Option<PointCloud> {
        PointCloud::new(self.points.clone()).ok()
    }
}
