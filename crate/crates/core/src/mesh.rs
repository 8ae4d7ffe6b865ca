//! Indexed triangle mesh.

use crate::geom::{Aabb, Point3};

/// Triangle mesh with optional per-vertex provenance.
///
/// `provenance` records, for meshes produced by grid extraction, the global
/// grid-edge key each vertex was welded on; it is empty for meshes from
/// other sources (file readers, tests).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
    pub provenance: Vec<u64>,
}

impl TriangleMesh {
    /// Builds a mesh; panics if a triangle references a missing vertex.
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Self {
        for t in &triangles {
            for &v in t {
                assert!(v < vertices.len(), "triangle references vertex {v}");
            }
        }
        Self {
            vertices,
            triangles,
            provenance: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn aabb(&self) -> Option<Aabb> {
        let first = *self.vertices.first()?;
        let mut min = first;
        let mut max = first;
        for v in &self.vertices {
            min = Point3::new(min.x.min(v.x), min.y.min(v.y), min.z.min(v.z));
            max = Point3::new(max.x.max(v.x), max.y.max(v.y), max.z.max(v.z));
        }
        Some(Aabb { min, max })
    }

    /// Area of triangle `t`.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let ab = self.vertices[b] - self.vertices[a];
        let ac = self.vertices[c] - self.vertices[a];
        ab.cross(&ac).norm() * 0.5
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }
}
