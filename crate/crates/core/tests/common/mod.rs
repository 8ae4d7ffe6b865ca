//! Shared helpers for integration tests: an independent classic
//! (sign-based) marching cubes used as the extraction oracle.

use std::collections::HashMap;

use udfmesh::geom::{Aabb, Point3};
use udfmesh::mesh::TriangleMesh;
use udfmesh::tables::{CORNER_OFFSETS, EDGE_CORNERS, TRIANGLE_TABLE};

/// Classic marching cubes on a signed field sampled at lattice vertices:
/// corner inside when `sdf < 0`, vertices linearly interpolated at the
/// zero crossing, welded on global grid edges. Shares only the lookup
/// table with the edge-based implementation under test; traversal,
/// classification, and interpolation are independent.
pub fn classic_signed_mc<F: Fn(&Point3) -> f64>(
    sdf: F,
    resolution: usize,
    bbox: Aabb,
) -> TriangleMesh {
    let n = resolution + 1;
    let ext = bbox.extents();
    let vertex = |x: usize, y: usize, z: usize| {
        Point3::new(
            bbox.min.x + ext.x * x as f64 / resolution as f64,
            bbox.min.y + ext.y * y as f64 / resolution as f64,
            bbox.min.z + ext.z * z as f64 / resolution as f64,
        )
    };
    let mut values = vec![0.0f64; n * n * n];
    let idx = |x: usize, y: usize, z: usize| (x * n + y) * n + z;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                values[idx(x, y, z)] = sdf(&vertex(x, y, z));
            }
        }
    }

    let mut vertex_of_key: HashMap<u64, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for cx in 0..resolution {
        for cy in 0..resolution {
            for cz in 0..resolution {
                let mut config = 0usize;
                for (c, off) in CORNER_OFFSETS.iter().enumerate() {
                    if values[idx(cx + off[0], cy + off[1], cz + off[2])] < 0.0 {
                        config |= 1 << c;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                let row = &TRIANGLE_TABLE[config];
                let mut i = 0;
                while i < row.len() && row[i] >= 0 {
                    let mut ids = [0usize; 3];
                    for (slot, &e) in row[i..i + 3].iter().enumerate() {
                        let [ca, cb] = EDGE_CORNERS[e as usize];
                        let (oa, ob) = (CORNER_OFFSETS[ca], CORNER_OFFSETS[cb]);
                        let a = (cx + oa[0], cy + oa[1], cz + oa[2]);
                        let b = (cx + ob[0], cy + ob[1], cz + ob[2]);
                        let axis = if oa[0] != ob[0] {
                            0
                        } else if oa[1] != ob[1] {
                            1
                        } else {
                            2
                        };
                        let base = (a.0.min(b.0), a.1.min(b.1), a.2.min(b.2));
                        let key = ((axis * n + base.0) as u64 * n as u64 + base.1 as u64)
                            * n as u64
                            + base.2 as u64;
                        let next = vertices.len();
                        ids[slot] = *vertex_of_key.entry(key).or_insert_with(|| {
                            let va = values[idx(a.0, a.1, a.2)];
                            let vb = values[idx(b.0, b.1, b.2)];
                            let t = va / (va - vb);
                            let pa = vertex(a.0, a.1, a.2);
                            let pb = vertex(b.0, b.1, b.2);
                            vertices.push(pa + (pb - pa) * t);
                            next
                        });
                    }
                    if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
                        triangles.push(ids);
                    }
                    i += 3;
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}
