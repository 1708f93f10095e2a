//! Transport-based center-outward quantiles and depth on finite samples,
//! with an empirical harness for finite-sample breakdown points.
//!
//! A reference cloud `U` is matched to a target cloud `X` of the same size by
//! the assignment minimizing total squared Euclidean distance. Tukey depth on
//! `U` is then pushed through the matching to rank, contour and take the
//! median of `X`.
//!
//! ```
//! use otdepth::{depth::tukey_depth, DepthMode, PointCloud, TransportQuantileFn};
//!
//! let cloud = PointCloud::from_scalars(&[1.0, 2.0, 3.0, 4.0, 5.0])?;
//! let td = tukey_depth(&cloud[2], &cloud, DepthMode::Exact)?;
//! assert_eq!(td.depth.to_string(), "3/5");
//!
//! let q = TransportQuantileFn::fit(cloud.clone(), cloud)?;
//! assert_eq!(q.transport_median().points[0][0], 3.0);
//! # Ok::<(), otdepth::Error>(())
//! ```
//!
//! Modules:
//!
//! - [`geometry`]: points, clouds, cones, Hausdorff distance, general position.
//! - [`depth`]: exact and approximate (lower) Tukey depth with rational values.
//! - [`transport`]: the assignment solver, brute-force oracle and monotonicity checks.
//! - [`quantiles`]: quantile and distribution maps, ranks, contours, medians.
//! - [`breakdown`]: contamination plans and breakdown-point estimates.
//! - [`reference`]: seeded reference clouds.
//! - [`io`]: CSV point clouds.

pub mod breakdown;
pub mod depth;
pub mod error;
pub mod geometry;
pub mod io;
pub mod quantiles;
pub mod reference;
pub mod rng;
pub mod transport;

pub use breakdown::{BreakdownEstimate, ContaminationPlan, DivergenceVerdict, HarnessOptions, Strategy};
pub use depth::{DepthMode, DepthResult, DepthValue};
pub use error::{Error, Result};
pub use geometry::{Point, PointCloud};
pub use quantiles::{ContourSet, TransportQuantileFn};
pub use reference::{RefKind, RefSpec};
pub use transport::Matching;

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
