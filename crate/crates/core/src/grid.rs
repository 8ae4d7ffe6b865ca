//! Regular lattice of sampled distance/gradient values.
//!
//! The grid stores `resolution + 1` vertices per axis in f32 (the dump
//! format precision); all downstream math promotes to f64. A vertex whose
//! gradient could not be resolved even by the nearest-sheet fallback is
//! *flagged* by storing a zero gradient; zero gradients automatically fail
//! the opposite-direction test during extraction, so flagged vertices act
//! as non-intersecting except through the near-surface threshold rule.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::geom::{Aabb, Point3, Vec3};
use crate::shapes::FieldOracle;

#[derive(Debug, Clone, PartialEq)]
pub struct UdfGrid {
    resolution: usize,
    bbox: Aabb,
    phi: Vec<f32>,
    grad: Vec<[f32; 3]>,
}

impl UdfGrid {
    pub fn new(resolution: usize, bbox: Aabb, phi: Vec<f32>, grad: Vec<[f32; 3]>) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(
                "grid resolution must be at least 2".into(),
            ));
        }
        if bbox.extents().min() <= 0.0 {
            return Err(Error::InvalidParameter(
                "grid bounding box is degenerate".into(),
            ));
        }
        let n = resolution + 1;
        let expect = n * n * n;
        if phi.len() != expect || grad.len() != expect {
            return Err(Error::InvalidParameter(format!(
                "grid payload has {} values, expected {expect}",
                phi.len()
            )));
        }
        if phi.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "grid distances must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            resolution,
            bbox,
            phi,
            grad,
        })
    }

    /// Cells per axis.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Lattice vertices per axis (`resolution + 1`).
    pub fn verts_per_axis(&self) -> usize {
        self.resolution + 1
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn cell_extents(&self) -> Vec3 {
        self.bbox.extents() / self.resolution as f64
    }

    /// Linear index of lattice vertex `(x, y, z)`, x-major.
    pub fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        let n = self.verts_per_axis();
        (x * n + y) * n + z
    }

    pub fn vertex(&self, x: usize, y: usize, z: usize) -> Point3 {
        let r = self.resolution as f64;
        let e = self.bbox.extents();
        Point3::new(
            self.bbox.min.x + e.x * x as f64 / r,
            self.bbox.min.y + e.y * y as f64 / r,
            self.bbox.min.z + e.z * z as f64 / r,
        )
    }

    pub fn phi_at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.phi[self.idx(x, y, z)] as f64
    }

    pub fn grad_at(&self, x: usize, y: usize, z: usize) -> Vec3 {
        let g = self.grad[self.idx(x, y, z)];
        Vec3::new(g[0] as f64, g[1] as f64, g[2] as f64)
    }

    /// True when the gradient at the vertex was left unresolved.
    pub fn is_flagged(&self, x: usize, y: usize, z: usize) -> bool {
        let g = self.grad[self.idx(x, y, z)];
        (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) < 0.25
    }

    pub fn flagged_count(&self) -> usize {
        self.grad
            .iter()
            .filter(|g| g[0] * g[0] + g[1] * g[1] + g[2] * g[2] < 0.25)
            .count()
    }

    pub fn raw_phi(&self) -> &[f32] {
        &self.phi
    }

    pub fn raw_grad(&self) -> &[[f32; 3]] {
        &self.grad
    }

    /// Samples an estimated field at every lattice vertex (parallel; the
    /// result does not depend on the thread count).
    pub fn sample_from_field(field: &DistanceField, resolution: usize, bbox: Aabb) -> Result<Self> {
        let proto = Self::layout(resolution, bbox)?;
        let n = proto.verts_per_axis();
        let data: Vec<(f32, [f32; 3])> = (0..n * n * n)
            .into_par_iter()
            .map(|i| {
                let (x, y, z) = (i / (n * n), (i / n) % n, i % n);
                let q = proto.vertex(x, y, z);
                let (phi, frame) = field.udf_with_frame(&q);
                let grad = match field.gradient_with_fallback(&frame) {
                    Ok(g) => [g.x as f32, g.y as f32, g.z as f32],
                    Err(_) => [0.0; 3], // flagged
                };
                (phi.max(0.0) as f32, grad)
            })
            .collect();
        let (phi, grad) = data.into_iter().unzip();
        Self::new(resolution, bbox, phi, grad)
    }

    /// Samples an exact oracle field at every lattice vertex.
    pub fn sample_from_oracle(oracle: &FieldOracle, resolution: usize, bbox: Aabb) -> Result<Self> {
        let proto = Self::layout(resolution, bbox)?;
        let n = proto.verts_per_axis();
        let data: Vec<(f32, [f32; 3])> = (0..n * n * n)
            .into_par_iter()
            .map(|i| {
                let (x, y, z) = (i / (n * n), (i / n) % n, i % n);
                let s = oracle.eval(&proto.vertex(x, y, z));
                let grad = match s.gradient {
                    Some(g) => [g.x as f32, g.y as f32, g.z as f32],
                    None => [0.0; 3],
                };
                (s.udf as f32, grad)
            })
            .collect();
        let (phi, grad) = data.into_iter().unzip();
        Self::new(resolution, bbox, phi, grad)
    }

    fn layout(resolution: usize, bbox: Aabb) -> Result<Self> {
        Self::new(
            resolution,
            bbox,
            vec![0.0; (resolution + 1).pow(3)],
            vec![[1.0, 0.0, 0.0]; (resolution + 1).pow(3)],
        )
    }

    /// Re-expresses the grid in a uniformly scaled frame: the bounding box
    /// is replaced and distances divided by `scale`; gradient directions
    /// are invariant under uniform scaling.
    pub fn rescaled(&self, scale: f64, bbox: Aabb) -> Result<Self> {
        let phi = self
            .phi
            .iter()
            .map(|&p| (p as f64 / scale) as f32)
            .collect();
        Self::new(self.resolution, bbox, phi, self.grad.clone())
    }
}

/// Cubic-cell grid box: the cloud's bounding box padded by `padding_cells`
/// cells on every side, with one cell size shared by all axes.
pub fn padded_grid_bbox(
    cloud_aabb: &Aabb,
    resolution: usize,
    padding_cells: usize,
) -> Result<Aabb> {
    if resolution <= 2 * padding_cells {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} leaves no interior cells after {padding_cells}-cell padding"
        )));
    }
    let extent = cloud_aabb.extents().max();
    if extent <= 0.0 {
        return Err(Error::InvalidParameter(
            "cloud bounding box is degenerate".into(),
        ));
    }
    let cell = extent / (resolution - 2 * padding_cells) as f64;
    let half = cell * resolution as f64 / 2.0;
    let c = cloud_aabb.center();
    Aabb::new(
        Point3::new(c.x - half, c.y - half, c.z - half),
        Point3::new(c.x + half, c.y + half, c.z + half),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::AnalyticShape;

    fn unit_box() -> Aabb {
        Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap()
    }

    #[test]
    fn constant_oracle_grid_has_constant_values() {
        // A plane far below the box: every vertex sees the same distance
        // only if the field is constant, so use direct construction.
        let n = 27;
        let grid = UdfGrid::new(2, unit_box(), vec![0.5; n], vec![[0.0, 0.0, 1.0]; n]).unwrap();
        assert_eq!(grid.verts_per_axis(), 3);
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    assert_eq!(grid.phi_at(x, y, z), 0.5);
                }
            }
        }
    }

    #[test]
    fn oracle_grid_matches_analytic_values() {
        let shape = AnalyticShape::sphere(Point3::origin(), 0.4);
        let oracle = FieldOracle::Shape(shape.clone());
        let grid = UdfGrid::sample_from_oracle(&oracle, 16, unit_box()).unwrap();
        for x in 0..=16 {
            for y in 0..=16 {
                for z in 0..=16 {
                    let q = grid.vertex(x, y, z);
                    let want = shape.eval(&q).udf as f32;
                    assert_eq!(grid.phi_at(x, y, z) as f32, want);
                }
            }
        }
    }

    #[test]
    fn lattice_vertices_span_the_box() {
        let grid = UdfGrid::layout(8, unit_box()).unwrap();
        assert_eq!(grid.vertex(0, 0, 0), Point3::new(-0.5, -0.5, -0.5));
        assert_eq!(grid.vertex(8, 8, 8), Point3::new(0.5, 0.5, 0.5));
        let mid = grid.vertex(4, 4, 4);
        assert!((mid.coords.norm()) < 1e-15);
    }

    #[test]
    fn padded_bbox_is_cubic_with_margin() {
        let cloud_bb =
            Aabb::new(Point3::new(-0.35, -0.35, 0.0), Point3::new(0.35, 0.35, 0.0)).unwrap();
        let bb = padded_grid_bbox(&cloud_bb, 64, 2).unwrap();
        let e = bb.extents();
        assert!((e.x - e.y).abs() < 1e-12 && (e.y - e.z).abs() < 1e-12);
        let cell = e.x / 64.0;
        assert!((cell - 0.7 / 60.0).abs() < 1e-12);
        // Two cells of margin around the cloud in every direction.
        assert!(bb.min.x <= -0.35 - 1.999 * cell);
        assert!(bb.max.z >= 0.0 + 1.999 * cell);
    }

    #[test]
    fn payload_size_mismatch_rejected() {
        assert!(UdfGrid::new(2, unit_box(), vec![0.0; 26], vec![[0.0; 3]; 26]).is_err());
    }

    #[test]
    fn negative_phi_rejected() {
        let mut phi = vec![0.0f32; 27];
        phi[3] = -0.1;
        assert!(UdfGrid::new(2, unit_box(), phi, vec![[0.0; 3]; 27]).is_err());
    }
}
