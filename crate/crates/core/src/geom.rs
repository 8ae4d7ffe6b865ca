//! Fundamental geometric types: points, clouds, bounding boxes.
//!
//! Shapes are conventionally normalized so that the input bounding box fits
//! inside the unit cube `[-0.5, 0.5]^3`; [`Normalization`] records the
//! uniform scale and translation so results can be mapped back.

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

/// An unordered set of 3D sample positions.
///
/// Points are kept in insertion order; ids used throughout the crate are
/// indices into `points`. Duplicates are permitted but counted.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    /// Builds a cloud, rejecting empty input and non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has non-finite coordinates"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points that coincide exactly with an earlier point.
    pub fn duplicate_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut dups = 0;
        for p in &self.points {
            let key = (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
            if !seen.insert(key) {
                dups += 1;
            }
        }
        dups
    }

    /// Axis-aligned bounding box of the cloud.
    pub fn aabb(&self) -> Aabb {
        let mut min = self.points[0];
        let mut max = self.points[0];
        for p in &self.points {
            min = Point3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
            max = Point3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
        }
        Aabb { min, max }
    }
}

/// A dense point cloud carrying one unit, unoriented normal per point.
///
/// `source_index[j]` is the id of the input point whose fitted patch
/// produced dense sample `j`; samples from one patch belong to one local
/// sheet of the surface.
#[derive(Debug, Clone)]
pub struct OrientedPointCloud {
    pub points: Vec<Point3>,
    pub normals: Vec<Vec3>,
    pub source_index: Vec<usize>,
}

impl OrientedPointCloud {
    pub fn new(points: Vec<Point3>, normals: Vec<Vec3>, source_index: Vec<usize>) -> Result<Self> {
        if points.len() != normals.len() || points.len() != source_index.len() {
            return Err(Error::InvalidParameter(format!(
                "length mismatch: {} points, {} normals, {} source ids",
                points.len(),
                normals.len(),
                source_index.len()
            )));
        }
        for (j, n) in normals.iter().enumerate() {
            if (n.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "normal {j} is not unit length (norm {})",
                    n.norm()
                )));
            }
        }
        Ok(Self {
            points,
            normals,
            source_index,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> PointCloud {
        PointCloud {
            points: self.points.clone(),
        }
    }
}

/// Axis-aligned bounding box; `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(Error::InvalidParameter(format!(
                "invalid bounding box: min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn extents(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    /// Grows the box by `margin` in every direction.
    pub fn padded(&self, margin: f64) -> Aabb {
        let m = Vec3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }
}

/// Uniform scale + translation mapping a cloud into `[-0.5, 0.5]^3`.
#[derive(Debug, Clone, Copy)]
pub struct Normalization {
    pub center: Point3,
    pub scale: f64,
}

impl Normalization {
    /// Fits `cloud`'s bounding box inside the unit cube centered at origin.
    /// Degenerate (single-point) clouds map to the origin with scale 1.
    pub fn fit(cloud: &PointCloud) -> Self {
        let aabb = cloud.aabb();
        let extent = aabb.extents().max();
        let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
        Normalization {
            center: aabb.center(),
            scale,
        }
    }

    pub fn identity() -> Self {
        Normalization {
            center: Point3::origin(),
            scale: 1.0,
        }
    }

    pub fn to_unit(&self, p: &Point3) -> Point3 {
        Point3::from((p - self.center) * self.scale)
    }

    pub fn from_unit(&self, p: &Point3) -> Point3 {
        self.center + p.coords / self.scale
    }

    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud {
            points: cloud.points.iter().map(|p| self.to_unit(p)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cloud_rejected() {
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyCloud)));
    }

    #[test]
    fn nan_rejected() {
        let r = PointCloud::new(vec![Point3::new(0.0, f64::NAN, 0.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn duplicates_counted() {
        let cloud = PointCloud::new(vec![
            Point3::new(1.0, 2.0, 3.0),
            Point3::new(1.0, 2.0, 3.0),
            Point3::new(0.0, 0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(cloud.duplicate_count(), 1);
    }

    #[test]
    fn aabb_bounds() {
        let cloud = PointCloud::new(vec![
            Point3::new(-1.0, 0.0, 2.0),
            Point3::new(3.0, -2.0, 1.0),
        ])
        .unwrap();
        let bb = cloud.aabb();
        assert_eq!(bb.min, Point3::new(-1.0, -2.0, 1.0));
        assert_eq!(bb.max, Point3::new(3.0, 0.0, 2.0));
    }

    #[test]
    fn aabb_min_above_max_rejected() {
        assert!(Aabb::new(Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn normalization_round_trip() {
        let cloud = PointCloud::new(vec![
            Point3::new(10.0, 20.0, 30.0),
            Point3::new(14.0, 21.0, 29.0),
        ])
        .unwrap();
        let norm = Normalization::fit(&cloud);
        let unit = norm.apply(&cloud);
        let bb = unit.aabb();
        assert!(bb.min.x >= -0.5 - 1e-12 && bb.max.x <= 0.5 + 1e-12);
        for (orig, mapped) in cloud.points.iter().zip(&unit.points) {
            let back = norm.from_unit(mapped);
            assert!((back - orig).norm() < 1e-12);
        }
    }

    #[test]
    fn oriented_cloud_rejects_non_unit_normals() {
        let r = OrientedPointCloud::new(
            vec![Point3::origin()],
            vec![Vec3::new(0.0, 0.0, 2.0)],
            vec![0],
        );
        assert!(r.is_err());
    }
}
