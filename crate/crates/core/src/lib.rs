//! Surface reconstruction from sparse, unoriented 3D point clouds.
//!
//! The pipeline has three stages:
//!
//! 1. **Upsampling** ([`upsample`]): a quadratic patch is fitted around every
//!    input point and sampled over a 2D parameter domain, producing a dense
//!    point cloud with analytically induced (unoriented) normals.
//! 2. **Distance field** ([`field`]): the unsigned distance `Φ(q)` to the
//!    surface is estimated as a weighted average of point-to-tangent-plane
//!    distances over the query's K nearest dense samples; the gradient
//!    `Θ(q)` is a separately weighted average of the aligned normals.
//! 3. **Extraction** ([`extract`]): an edge-based marching cubes variant
//!    detects surface crossings on all 28 vertex pairs of each grid cell
//!    using the gradient field, matches the detections against the classic
//!    256-case lookup table by XOR cost, and emits triangles. Because the
//!    field is unsigned, open and multi-layer surfaces survive extraction.
//!
//! [`shapes`] provides analytic ground-truth fields for validation and
//! [`metrics`] the evaluation protocol (Chamfer distance, F-score, UDF
//! value/gradient error). [`pipeline`] ties everything together behind a
//! single configuration struct; the `udfmesh` binary is a thin CLI on top.

pub mod error;
pub mod extract;
pub mod field;
pub mod geom;
pub mod grid;
pub mod io;
pub mod kdtree;
pub mod mesh;
pub mod metrics;
pub mod patch;
pub mod pipeline;
pub mod shapes;
pub mod tables;
pub mod upsample;

pub use error::{Error, Result};
pub use field::{DistanceField, WeightScheme};
pub use geom::{Aabb, OrientedPointCloud, Point3, PointCloud, Vec3};
pub use grid::UdfGrid;
pub use kdtree::SpatialIndex;
pub use mesh::TriangleMesh;
pub use pipeline::PipelineConfig;
