//! Edge-based marching cubes over an unsigned distance grid.
//!
//! Signed marching cubes classifies cell corners by the sign of the field;
//! an unsigned field has no sign, so crossings are detected per *edge*
//! instead, on all 28 corner pairs of each cell:
//!
//! - a pair crosses the surface when the two gradients oppose each other
//!   and each points from the pair midpoint toward its own endpoint (the
//!   endpoints face one interior sheet from opposite sides), or
//! - either endpoint's distance is below the near-surface threshold `tau`.
//!
//! The 28 detection bits rarely form a perfectly consistent corner
//! 2-coloring, so the corner occupancy is chosen as the one among all 256
//! configurations whose implied crossing pattern has the smallest XOR
//! distance to the detections. Triangles then come from the classic
//! lookup table, with vertices interpolated by inverse distance weights
//! and welded across cells on shared grid edges.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::geom::{Point3, Vec3};
use crate::grid::UdfGrid;
use crate::mesh::TriangleMesh;
use crate::tables::{
    CORNER_OFFSETS, CORNER_PAIRS, EDGE_CORNERS, PAIR_PATTERNS, TRIANGLE_COUNT, TRIANGLE_TABLE,
};

/// True when the segment `q1 q2` is deemed to cross the surface.
///
/// Flagged grid vertices carry a zero gradient, which fails the opposition
/// test by construction, so they only ever intersect through the `tau`
/// rule.
pub fn detect_edge_intersection(
    q1: &Point3,
    q2: &Point3,
    phi1: f64,
    phi2: f64,
    g1: &Vec3,
    g2: &Vec3,
    tau: f64,
) -> bool {
    if phi1 < tau || phi2 < tau {
        return true;
    }
    if g1.dot(g2) >= 0.0 {
        return false;
    }
    let o = nalgebra::center(q1, q2);
    g1.dot(&(q1 - o)) > 0.0 && g2.dot(&(q2 - o)) > 0.0
}

/// Surface point on segment `q1 q2`: endpoints weighted by the *opposite*
/// endpoint's distance, so the vertex sits proportionally closer to the
/// smaller distance. Both distances zero yields the midpoint.
pub fn intersection_vertex(q1: &Point3, q2: &Point3, phi1: f64, phi2: f64) -> Point3 {
    let total = phi1 + phi2;
    if total <= 0.0 {
        return nalgebra::center(q1, q2);
    }
    Point3::from((q2.coords * phi1 + q1.coords * phi2) / total)
}

/// Vertex placement including the near-surface rule: when either endpoint
/// is within `tau` of the surface, the endpoint with the smaller distance
/// *is* the intersection.
pub fn edge_vertex(q1: &Point3, q2: &Point3, phi1: f64, phi2: f64, tau: f64) -> Point3 {
    if phi1 < tau || phi2 < tau {
        if phi1 <= phi2 {
            *q1
        } else {
            *q2
        }
    } else {
        intersection_vertex(q1, q2, phi1, phi2)
    }
}

/// Picks the corner occupancy best matching 28 detection booleans
/// (indexed per [`CORNER_PAIRS`]).
pub fn match_cube_configuration(detections: &[bool; 28]) -> u8 {
    let mut bits = 0u32;
    for (p, &d) in detections.iter().enumerate() {
        if d {
            bits |= 1 << p;
        }
    }
    match_detection_bits(bits)
}

/// Bit-set form of [`match_cube_configuration`]; bit `p` of `detections`
/// corresponds to `CORNER_PAIRS[p]`.
///
/// Minimizes the XOR cost over all 256 occupancies; ties prefer fewer
/// emitted triangles, then the smaller occupancy byte. The cost is
/// invariant under global complement, so the triangle-count tie-break is
/// what resolves each complement pair.
pub fn match_detection_bits(detections: u32) -> u8 {
    let mut best = 0usize;
    let mut best_key = (u32::MAX, u8::MAX, 0usize);
    for occ in 0..256usize {
        let key = (
            (detections ^ PAIR_PATTERNS[occ]).count_ones(),
            TRIANGLE_COUNT[occ],
            occ,
        );
        if key < best_key {
            best_key = key;
            best = occ;
        }
    }
    best as u8
}

/// Runs edge-based marching cubes over the grid.
///
/// Deterministic: cells are emitted in x-major cell order and vertices are
/// welded on global grid-edge keys, so the output is identical regardless
/// of thread count. An empty mesh is valid output.
pub fn extract_mesh(grid: &UdfGrid, tau: f64) -> TriangleMesh {
    let r = grid.resolution();
    let n = grid.verts_per_axis();

    // Per-cell triangle emission, keyed by global grid edges.
    let cells: Vec<Vec<[u64; 3]>> = (0..r * r * r)
        .into_par_iter()
        .map(|ci| {
            let (cx, cy, cz) = (ci / (r * r), (ci / r) % r, ci % r);
            let mut pos = [Point3::origin(); 8];
            let mut phi = [0.0f64; 8];
            let mut grad = [Vec3::zeros(); 8];
            for (corner, off) in CORNER_OFFSETS.iter().enumerate() {
                let (x, y, z) = (cx + off[0], cy + off[1], cz + off[2]);
                pos[corner] = grid.vertex(x, y, z);
                phi[corner] = grid.phi_at(x, y, z);
                grad[corner] = grid.grad_at(x, y, z);
            }

            let mut bits = 0u32;
            for (p, pair) in CORNER_PAIRS.iter().enumerate() {
                let (a, b) = (pair[0], pair[1]);
                if detect_edge_intersection(
                    &pos[a], &pos[b], phi[a], phi[b], &grad[a], &grad[b], tau,
                ) {
                    bits |= 1 << p;
                }
            }
            if bits == 0 {
                return Vec::new();
            }

            let occ = match_detection_bits(bits);
            let row = &TRIANGLE_TABLE[occ as usize];
            let mut tris = Vec::new();
            let mut i = 0;
            while i < row.len() && row[i] >= 0 {
                let key = |e: i8| -> u64 {
                    let [ca, cb] = EDGE_CORNERS[e as usize];
                    let (oa, ob) = (CORNER_OFFSETS[ca], CORNER_OFFSETS[cb]);
                    let axis = (0..3).find(|&d| oa[d] != ob[d]).unwrap();
                    let base = [
                        cx + oa[0].min(ob[0]),
                        cy + oa[1].min(ob[1]),
                        cz + oa[2].min(ob[2]),
                    ];
                    ((axis * n + base[0]) as u64 * n as u64 + base[1] as u64) * n as u64
                        + base[2] as u64
                };
                tris.push([key(row[i]), key(row[i + 1]), key(row[i + 2])]);
                i += 3;
            }
            tris
        })
        .collect();

    // Deterministic weld pass in cell order: one vertex per grid edge key,
    // then position-exact merging. The near-surface rule snaps vertices of
    // different edges onto a shared lattice vertex; merging those collapses
    // the zero-area corner cuts that would otherwise dangle as fake
    // boundary geometry.
    let mut vertex_of_key: HashMap<u64, usize> = HashMap::new();
    let mut id_of_position: HashMap<[u64; 3], usize> = HashMap::new();
    let mut emitted: std::collections::HashSet<[usize; 3]> = std::collections::HashSet::new();
    let mut vertices = Vec::new();
    let mut provenance = Vec::new();
    let mut triangles = Vec::new();
    for tris in cells {
        for keys in tris {
            let mut ids = [0usize; 3];
            for (slot, &key) in keys.iter().enumerate() {
                let id = match vertex_of_key.get(&key) {
                    Some(&id) => id,
                    None => {
                        let p = edge_vertex_from_key(grid, key, tau);
                        let bits = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
                        let id = *id_of_position.entry(bits).or_insert_with(|| {
                            vertices.push(p);
                            provenance.push(key);
                            vertices.len() - 1
                        });
                        vertex_of_key.insert(key, id);
                        id
                    }
                };
                ids[slot] = id;
            }
            if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
                continue;
            }
            // Face-parallel triangles (all vertices on one cell face) can
            // be emitted by both incident cells; keep the first copy.
            let mut sorted = ids;
            sorted.sort_unstable();
            if emitted.insert(sorted) {
                triangles.push(ids);
            }
        }
    }

    let mut mesh = TriangleMesh::new(vertices, triangles);
    mesh.provenance = provenance;
    mesh
}

fn edge_vertex_from_key(grid: &UdfGrid, key: u64, tau: f64) -> Point3 {
    let n = grid.verts_per_axis() as u64;
    let z = (key % n) as usize;
    let y = ((key / n) % n) as usize;
    let rest = (key / (n * n)) as usize;
    let axis = rest / grid.verts_per_axis();
    let x = rest % grid.verts_per_axis();
    let (mut x2, mut y2, mut z2) = (x, y, z);
    match axis {
        0 => x2 += 1,
        1 => y2 += 1,
        _ => z2 += 1,
    }
    edge_vertex(
        &grid.vertex(x, y, z),
        &grid.vertex(x2, y2, z2),
        grid.phi_at(x, y, z),
        grid.phi_at(x2, y2, z2),
        tau,
    )
}
