//! Unsigned distance field estimation from a dense oriented cloud.
//!
//! For a query `q`, the K nearest dense samples are collected, their
//! unoriented normals are flipped to face `q`, and
//!
//! - the distance is the weighted average of the point-to-tangent-plane
//!   distances `⟨ñ_k, q − p_k⟩` (exact for planar neighborhoods),
//! - the gradient is the separately weighted, normalized average of the
//!   aligned normals.
//!
//! Value and gradient weighting are independent: swapping the value scheme
//! cannot change the gradient. A point-to-point estimate is kept alongside
//! as the comparison baseline.

use crate::error::{Error, Result};
use crate::geom::{OrientedPointCloud, Point3, PointCloud, Vec3};
use crate::kdtree::SpatialIndex;

/// Neighbor weighting kernel.
///
/// Weights are nonnegative and normalized to sum to one. If a neighbor
/// coincides with the query (distance below 1e-12), it takes all the
/// weight; this keeps the field exactly zero on the samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WeightScheme {
    Uniform,
    /// `(distance + 1e-12)^-power`, normalized.
    InverseDistance {
        power: f64,
    },
    /// `exp(-d²/h²)` with `h` the distance to the farthest neighbor.
    #[default]
    Gaussian,
}

impl WeightScheme {
    pub fn inverse_distance() -> Self {
        WeightScheme::InverseDistance { power: 2.0 }
    }

    /// Weights for neighbors at the given (sorted, nondecreasing) distances.
    pub fn weights_from_distances(&self, distances: &[f64]) -> Vec<f64> {
        assert!(!distances.is_empty());
        if let Some(hit) = distances.iter().position(|&d| d < 1e-12) {
            let mut w = vec![0.0; distances.len()];
            w[hit] = 1.0;
            return w;
        }
        let mut w: Vec<f64> = match self {
            WeightScheme::Uniform => vec![1.0; distances.len()],
            WeightScheme::InverseDistance { power } => distances
                .iter()
                .map(|&d| (d + 1e-12).powf(-power))
                .collect(),
            WeightScheme::Gaussian => {
                let h = *distances.last().unwrap();
                distances
                    .iter()
                    .map(|&d| (-d * d / (h * h)).exp())
                    .collect()
            }
        };
        let total: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= total;
        }
        w
    }

    pub fn weights(&self, frame: &NeighborFrame) -> Vec<f64> {
        let distances: Vec<f64> = frame.neighbors.iter().map(|n| n.distance).collect();
        self.weights_from_distances(&distances)
    }
}

/// One neighbor of a query point, with its alignment data.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor {
    pub id: usize,
    pub point: Point3,
    /// `q − p_k`.
    pub offset: Vec3,
    pub distance: f64,
    /// Unoriented sample normal.
    pub normal: Vec3,
    /// Normal flipped toward the query; `⟨aligned, offset⟩ >= 0`.
    pub aligned: Vec3,
    /// Patch source id of the dense sample.
    pub source: usize,
}

/// K-nearest-neighbor context of one query, reused between the distance
/// and gradient estimates.
#[derive(Debug, Clone)]
pub struct NeighborFrame {
    pub query: Point3,
    pub neighbors: Vec<Neighbor>,
}

/// Flips `n` so it points from `p` toward `q`; the boundary case
/// `⟨n, q − p⟩ = 0` keeps `+n`.
pub fn align_normal(n: &Vec3, p: &Point3, q: &Point3) -> Vec3 {
    if n.dot(&(q - p)) < 0.0 {
        -n
    } else {
        *n
    }
}

/// Queryable unsigned distance field over a dense oriented cloud.
///
/// Immutable after construction; concurrent queries are safe.
#[derive(Debug, Clone)]
pub struct DistanceField {
    cloud: OrientedPointCloud,
    index: SpatialIndex,
    k: usize,
    value_scheme: WeightScheme,
    gradient_scheme: WeightScheme,
}

impl DistanceField {
    pub fn new(
        cloud: OrientedPointCloud,
        k: usize,
        value_scheme: WeightScheme,
        gradient_scheme: WeightScheme,
    ) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if cloud.len() < k {
            return Err(Error::TooFewPoints {
                got: cloud.len(),
                need: k,
            });
        }
        let index = SpatialIndex::build(&PointCloud {
            points: cloud.points.clone(),
        })?;
        Ok(Self {
            cloud,
            index,
            k,
            value_scheme,
            gradient_scheme,
        })
    }

    pub fn with_defaults(cloud: OrientedPointCloud) -> Result<Self> {
        Self::new(cloud, 10, WeightScheme::Gaussian, WeightScheme::Gaussian)
    }

    pub fn cloud(&self) -> &OrientedPointCloud {
        &self.cloud
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Collects the query's K nearest samples with aligned normals.
    pub fn frame(&self, q: &Point3) -> NeighborFrame {
        let hits = self.index.knn(q, self.k);
        let neighbors = hits
            .into_iter()
            .map(|(id, distance)| {
                let point = self.cloud.points[id];
                let normal = self.cloud.normals[id];
                Neighbor {
                    id,
                    point,
                    offset: q - point,
                    distance,
                    normal,
                    aligned: align_normal(&normal, &point, q),
                    source: self.cloud.source_index[id],
                }
            })
            .collect();
        NeighborFrame {
            query: *q,
            neighbors,
        }
    }

    /// Point-to-tangent-plane distance estimate, with the frame for reuse.
    pub fn udf_with_frame(&self, q: &Point3) -> (f64, NeighborFrame) {
        let frame = self.frame(q);
        (self.udf_from_frame(&frame), frame)
    }

    /// Point-to-tangent-plane distance estimate `Φ(q) >= 0`.
    pub fn udf(&self, q: &Point3) -> f64 {
        self.udf_with_frame(q).0
    }

    pub fn udf_from_frame(&self, frame: &NeighborFrame) -> f64 {
        let w = self.value_scheme.weights(frame);
        frame
            .neighbors
            .iter()
            .zip(&w)
            .map(|(n, wi)| wi * n.aligned.dot(&n.offset))
            .sum()
    }

    /// Point-to-point baseline: weighted mean of neighbor distances.
    pub fn udf_p2p(&self, q: &Point3) -> f64 {
        let frame = self.frame(q);
        let w = self.value_scheme.weights(&frame);
        frame
            .neighbors
            .iter()
            .zip(&w)
            .map(|(n, wi)| wi * n.distance)
            .sum()
    }

    /// Unit gradient estimate from a frame produced for the same query.
    ///
    /// Errors when the weighted aligned normals cancel (queries pinched
    /// between opposing sheets); see [`DistanceField::gradient_with_fallback`].
    pub fn gradient(&self, frame: &NeighborFrame) -> Result<Vec3> {
        self.gradient_over(&frame.neighbors, &frame.query)
    }

    /// Gradient with the nearest-sheet fallback: if the full neighborhood
    /// cancels, the estimate is retried over only the neighbors sharing the
    /// nearest neighbor's patch source.
    pub fn gradient_with_fallback(&self, frame: &NeighborFrame) -> Result<Vec3> {
        match self.gradient(frame) {
            Ok(g) => Ok(g),
            Err(_) => {
                let source = frame.neighbors[0].source;
                let sheet: Vec<Neighbor> = frame
                    .neighbors
                    .iter()
                    .filter(|n| n.source == source)
                    .copied()
                    .collect();
                self.gradient_over(&sheet, &frame.query)
            }
        }
    }

    fn gradient_over(&self, neighbors: &[Neighbor], q: &Point3) -> Result<Vec3> {
        let distances: Vec<f64> = neighbors.iter().map(|n| n.distance).collect();
        let w = self.gradient_scheme.weights_from_distances(&distances);
        let mut sum = Vec3::zeros();
        for (n, wi) in neighbors.iter().zip(&w) {
            sum += n.aligned * *wi;
        }
        let len = sum.norm();
        if len < 1e-9 {
            return Err(Error::AmbiguousGradient {
                x: q.x,
                y: q.y,
                z: q.z,
            });
        }
        Ok(sum / len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_field(schemes: (WeightScheme, WeightScheme)) -> DistanceField {
        // 21x21 grid on z = 0 with alternating normal orientations, as an
        // upsampler would produce them.
        let mut points = Vec::new();
        let mut normals = Vec::new();
        let mut source = Vec::new();
        for i in 0..21 {
            for j in 0..21 {
                points.push(Point3::new(
                    -0.5 + i as f64 / 20.0,
                    -0.5 + j as f64 / 20.0,
                    0.0,
                ));
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                normals.push(Vec3::new(0.0, 0.0, sign));
                source.push(i * 21 + j);
            }
        }
        let cloud = OrientedPointCloud::new(points, normals, source).unwrap();
        DistanceField::new(cloud, 10, schemes.0, schemes.1).unwrap()
    }

    #[test]
    fn align_keeps_facing_normal() {
        let n = align_normal(&Vec3::z(), &Point3::origin(), &Point3::new(0.0, 0.0, 0.5));
        assert_eq!(n, Vec3::z());
    }

    #[test]
    fn align_flips_opposing_normal() {
        let n = align_normal(&Vec3::z(), &Point3::origin(), &Point3::new(0.0, 0.0, -0.5));
        assert_eq!(n, -Vec3::z());
    }

    #[test]
    fn align_tangent_query_keeps_positive_sign() {
        let n = align_normal(&Vec3::z(), &Point3::origin(), &Point3::new(0.3, -0.1, 0.0));
        assert_eq!(n, Vec3::z());
    }

    #[test]
    fn uniform_weights() {
        let w = WeightScheme::Uniform.weights_from_distances(&[0.5, 0.1, 0.7, 0.2]);
        assert_eq!(w, vec![0.25; 4]);
    }

    #[test]
    fn inverse_distance_weights() {
        let w = WeightScheme::inverse_distance().weights_from_distances(&[1.0, 2.0]);
        assert!((w[0] - 0.8).abs() < 1e-9);
        assert!((w[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn coincident_neighbor_takes_all_weight() {
        for scheme in [
            WeightScheme::Uniform,
            WeightScheme::inverse_distance(),
            WeightScheme::Gaussian,
        ] {
            let w = scheme.weights_from_distances(&[0.0, 0.3, 0.6]);
            assert_eq!(w, vec![1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn weights_are_normalized_and_nonnegative() {
        let distances = [0.11, 0.13, 0.21, 0.34, 0.55];
        for scheme in [
            WeightScheme::Uniform,
            WeightScheme::inverse_distance(),
            WeightScheme::Gaussian,
        ] {
            let w = scheme.weights_from_distances(&distances);
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn plane_distance_is_exact_for_all_schemes() {
        let schemes = [
            WeightScheme::Uniform,
            WeightScheme::inverse_distance(),
            WeightScheme::Gaussian,
        ];
        for vs in schemes {
            for gs in schemes {
                let field = plane_field((vs, gs));
                let q = Point3::new(0.013, -0.17, 0.07);
                let (phi, frame) = field.udf_with_frame(&q);
                assert!((phi - 0.07).abs() < 1e-15, "{vs:?}/{gs:?}: {phi}");
                let g = field.gradient(&frame).unwrap();
                assert_eq!(g, Vec3::z());
            }
        }
    }

    #[test]
    fn field_is_zero_on_samples() {
        let field = plane_field((WeightScheme::Gaussian, WeightScheme::Gaussian));
        let q = field.cloud().points[37];
        assert_eq!(field.udf(&q), 0.0);
        assert_eq!(field.udf_p2p(&q), 0.0);
    }

    #[test]
    fn p2p_overshoots_on_planes() {
        // Off-axis neighbors contribute sqrt(h² + d²) > h to the point-to-
        // point average, so it exceeds the exact plane distance.
        let field = plane_field((WeightScheme::Gaussian, WeightScheme::Gaussian));
        let q = Point3::new(0.013, -0.17, 0.002);
        let p2t = field.udf(&q);
        let p2p = field.udf_p2p(&q);
        assert!(p2p > p2t);
        assert!(p2p > 0.002);
    }

    #[test]
    fn gradient_ignores_value_scheme_bitwise() {
        let q = Point3::new(0.31, 0.11, 0.04);
        let mut images = Vec::new();
        for vs in [
            WeightScheme::Uniform,
            WeightScheme::inverse_distance(),
            WeightScheme::Gaussian,
        ] {
            let field = plane_field((vs, WeightScheme::Gaussian));
            let frame = field.frame(&q);
            let g = field.gradient(&frame).unwrap();
            images.push([g.x.to_bits(), g.y.to_bits(), g.z.to_bits()]);
        }
        assert_eq!(images[0], images[1]);
        assert_eq!(images[1], images[2]);
    }

    /// Two opposing horizontal planes; queries midway cancel.
    fn two_sheet_field() -> DistanceField {
        let mut points = Vec::new();
        let mut normals = Vec::new();
        let mut source = Vec::new();
        for i in 0..11 {
            for j in 0..11 {
                let x = -0.5 + i as f64 / 10.0;
                let y = -0.5 + j as f64 / 10.0;
                points.push(Point3::new(x, y, 0.1));
                normals.push(Vec3::z());
                source.push(0);
                points.push(Point3::new(x, y, -0.1));
                normals.push(Vec3::z());
                source.push(1);
            }
        }
        let cloud = OrientedPointCloud::new(points, normals, source).unwrap();
        DistanceField::new(cloud, 10, WeightScheme::Uniform, WeightScheme::Uniform).unwrap()
    }

    #[test]
    fn midpoint_between_sheets_is_ambiguous() {
        let field = two_sheet_field();
        // Exactly midway above a sample column: aligned normals split ±z
        // evenly under uniform weights.
        let frame = field.frame(&Point3::new(0.0, 0.0, 0.0));
        assert!(matches!(
            field.gradient(&frame),
            Err(Error::AmbiguousGradient { .. })
        ));
    }

    #[test]
    fn nearest_sheet_fallback_resolves_ambiguity() {
        let field = two_sheet_field();
        let frame = field.frame(&Point3::new(0.0, 0.0, 0.0));
        let g = field.gradient_with_fallback(&frame).unwrap();
        // The nearest sheet (tie broken by id) is the z = +0.1 plane whose
        // aligned normals point down toward the query.
        assert!((g.norm() - 1.0).abs() < 1e-12);
        assert!(g.z.abs() > 0.999);
    }

    #[test]
    fn sphere_gradient_is_nearly_radial_outside() {
        use crate::shapes::{sample_surface_oriented, AnalyticShape};
        let shape = AnalyticShape::sphere(Point3::origin(), 0.4);
        let (points, normals) = sample_surface_oriented(&shape, 20_000, 5).unwrap();
        let n = points.len();
        let cloud = OrientedPointCloud::new(points.points, normals, (0..n).collect()).unwrap();
        let field = DistanceField::with_defaults(cloud).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        use rand::{Rng, SeedableRng};
        for _ in 0..100 {
            let dir = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if dir.norm() < 1e-3 {
                continue;
            }
            let dir = dir.normalize();
            let q = Point3::origin() + dir * (0.4 + rng.random_range(0.01..0.05));
            let frame = field.frame(&q);
            let g = field.gradient(&frame).unwrap();
            let angle = g.dot(&dir).clamp(-1.0, 1.0).acos().to_degrees();
            assert!(angle < 5.0, "gradient off radial by {angle} deg at {q:?}");
        }
    }

    #[test]
    fn phi_is_nonnegative_everywhere() {
        let field = plane_field((WeightScheme::Gaussian, WeightScheme::Gaussian));
        let mut q = Point3::new(-0.43, 0.21, -0.33);
        for step in 0..100 {
            q.z = -0.33 + step as f64 * 0.007;
            assert!(field.udf(&q) >= 0.0);
        }
    }
}
