//! Analytic shapes with exact unsigned distance, gradient, and surface
//! sampling, plus a brute-force mesh distance query.
//!
//! These are the ground-truth references the rest of the crate is tested
//! against. Gradients are reported as `None` wherever the true distance
//! field is not differentiable (on the surface, at centers, on medial axes).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud, Vec3};
use crate::mesh::TriangleMesh;

/// Closed-form test surface.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticShape {
    /// Points `x` with `⟨normal, x⟩ = offset`; sampling covers the unit
    /// square around the anchor point `offset·normal`.
    Plane {
        normal: Vec3,
        offset: f64,
    },
    Sphere {
        center: Point3,
        radius: f64,
    },
    /// Axis-aligned torus around `center`, tube axis +z.
    Torus {
        center: Point3,
        major: f64,
        minor: f64,
    },
    /// Axis-aligned box.
    Box {
        center: Point3,
        half_extents: Vec3,
    },
    /// Open flat disk in the plane through `center` orthogonal to `normal`.
    DiskPatch {
        center: Point3,
        normal: Vec3,
        radius: f64,
    },
}

/// Exact field evaluation result.
#[derive(Debug, Clone, Copy)]
pub struct OracleSample {
    pub udf: f64,
    /// `None` where the distance field is not differentiable.
    pub gradient: Option<Vec3>,
    pub closest: Point3,
}

impl AnalyticShape {
    pub fn plane(normal: Vec3, offset: f64) -> Self {
        AnalyticShape::Plane {
            normal: normal.normalize(),
            offset,
        }
    }

    pub fn sphere(center: Point3, radius: f64) -> Self {
        assert!(radius > 0.0);
        AnalyticShape::Sphere { center, radius }
    }

    pub fn torus(center: Point3, major: f64, minor: f64) -> Self {
        assert!(major > 0.0 && minor > 0.0 && minor < major);
        AnalyticShape::Torus {
            center,
            major,
            minor,
        }
    }

    pub fn cuboid(center: Point3, half_extents: Vec3) -> Self {
        assert!(half_extents.min() > 0.0);
        AnalyticShape::Box {
            center,
            half_extents,
        }
    }

    pub fn disk(center: Point3, normal: Vec3, radius: f64) -> Self {
        assert!(radius > 0.0);
        AnalyticShape::DiskPatch {
            center,
            normal: normal.normalize(),
            radius,
        }
    }

    /// Exact unsigned distance, gradient, and closest surface point at `q`.
    pub fn eval(&self, q: &Point3) -> OracleSample {
        match self {
            AnalyticShape::Plane { normal, offset } => {
                let s = normal.dot(&q.coords) - offset;
                OracleSample {
                    udf: s.abs(),
                    gradient: direction(*normal * s.signum(), s.abs()),
                    closest: q - *normal * s,
                }
            }
            AnalyticShape::Sphere { center, radius } => {
                let d = q - center;
                let rho = d.norm();
                if rho < 1e-12 {
                    // Center: every surface point is nearest.
                    return OracleSample {
                        udf: *radius,
                        gradient: None,
                        closest: center + Vec3::x() * *radius,
                    };
                }
                let dir = d / rho;
                let closest = center + dir * *radius;
                OracleSample {
                    udf: (rho - radius).abs(),
                    gradient: direction(dir * (rho - radius).signum(), (rho - radius).abs()),
                    closest,
                }
            }
            AnalyticShape::Torus {
                center,
                major,
                minor,
            } => {
                let v = q - center;
                let rho = (v.x * v.x + v.y * v.y).sqrt();
                if rho < 1e-9 {
                    // On the symmetry axis: nearest points form a circle.
                    let ring = center + Vec3::x() * *major;
                    let w = q - ring;
                    return OracleSample {
                        udf: (w.norm() - minor).abs(),
                        gradient: None,
                        closest: ring + w.normalize() * *minor,
                    };
                }
                let ring = center + Vec3::new(v.x / rho * major, v.y / rho * major, 0.0);
                let w = q - ring;
                let dw = w.norm();
                if dw < 1e-9 {
                    // On the tube center circle (medial axis).
                    return OracleSample {
                        udf: *minor,
                        gradient: None,
                        closest: ring + Vec3::z() * *minor,
                    };
                }
                let dir = w / dw;
                OracleSample {
                    udf: (dw - minor).abs(),
                    gradient: direction(dir * (dw - minor).signum(), (dw - minor).abs()),
                    closest: ring + dir * *minor,
                }
            }
            AnalyticShape::Box {
                center,
                half_extents,
            } => {
                let local = q - center;
                let outside = (0..3).any(|i| local[i].abs() > half_extents[i]);
                if outside {
                    let clamped = Vec3::new(
                        local.x.clamp(-half_extents.x, half_extents.x),
                        local.y.clamp(-half_extents.y, half_extents.y),
                        local.z.clamp(-half_extents.z, half_extents.z),
                    );
                    let closest = center + clamped;
                    let w = q - closest;
                    let udf = w.norm();
                    OracleSample {
                        udf,
                        gradient: direction(w / udf, udf),
                        closest,
                    }
                } else {
                    // Inside: snap to the nearest face.
                    let gaps = [
                        half_extents.x - local.x.abs(),
                        half_extents.y - local.y.abs(),
                        half_extents.z - local.z.abs(),
                    ];
                    let mut axis = 0;
                    for i in 1..3 {
                        if gaps[i] < gaps[axis] {
                            axis = i;
                        }
                    }
                    let udf = gaps[axis];
                    let ambiguous = gaps
                        .iter()
                        .enumerate()
                        .any(|(i, g)| i != axis && (g - udf).abs() < 1e-12);
                    let mut snapped = local;
                    snapped[axis] =
                        half_extents[axis] * if local[axis] >= 0.0 { 1.0 } else { -1.0 };
                    let closest = center + snapped;
                    let w = q - closest;
                    OracleSample {
                        udf,
                        gradient: if ambiguous {
                            None
                        } else {
                            direction(w / udf, udf)
                        },
                        closest,
                    }
                }
            }
            AnalyticShape::DiskPatch {
                center,
                normal,
                radius,
            } => {
                let v = q - center;
                let s = v.dot(normal);
                let proj = q - *normal * s;
                let radial = proj - center;
                let rho = radial.norm();
                if rho <= *radius {
                    OracleSample {
                        udf: s.abs(),
                        gradient: direction(*normal * s.signum(), s.abs()),
                        closest: proj,
                    }
                } else {
                    let rim = center + radial / rho * *radius;
                    let w = q - rim;
                    let udf = w.norm();
                    OracleSample {
                        udf,
                        gradient: direction(w / udf, udf),
                        closest: rim,
                    }
                }
            }
        }
    }
}

fn direction(v: Vec3, dist: f64) -> Option<Vec3> {
    if dist < 1e-12 {
        None
    } else {
        Some(v)
    }
}

/// Any orthonormal pair completing `n` to a frame; deterministic in `n`.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = n.cross(&helper).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Draws `n` area-uniform surface samples; deterministic per seed.
pub fn sample_surface(shape: &AnalyticShape, n: usize, seed: u64) -> Result<PointCloud> {
    Ok(PointCloud {
        points: sample_surface_oriented(shape, n, seed)?.0.points,
    })
}

/// Area-uniform surface samples together with true surface normals.
pub fn sample_surface_oriented(
    shape: &AnalyticShape,
    n: usize,
    seed: u64,
) -> Result<(PointCloud, Vec<Vec3>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    match shape {
        AnalyticShape::Plane { normal, offset } => {
            let anchor = Point3::origin() + *normal * *offset;
            let (t1, t2) = tangent_basis(normal);
            for _ in 0..n {
                let a: f64 = rng.random_range(-0.5..0.5);
                let b: f64 = rng.random_range(-0.5..0.5);
                points.push(anchor + t1 * a + t2 * b);
                normals.push(*normal);
            }
        }
        AnalyticShape::Sphere { center, radius } => {
            for _ in 0..n {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).max(0.0).sqrt();
                let dir = Vec3::new(s * phi.cos(), s * phi.sin(), z);
                points.push(center + dir * *radius);
                normals.push(dir);
            }
        }
        AnalyticShape::Torus {
            center,
            major,
            minor,
        } => {
            // Rejection in the tube angle corrects for the area element
            // (major + minor·cos ψ) dψ dθ.
            while points.len() < n {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let psi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let accept: f64 = rng.random();
                if accept * (major + minor) > major + minor * psi.cos() {
                    continue;
                }
                let ring = major + minor * psi.cos();
                points.push(
                    center + Vec3::new(ring * theta.cos(), ring * theta.sin(), minor * psi.sin()),
                );
                normals.push(Vec3::new(
                    psi.cos() * theta.cos(),
                    psi.cos() * theta.sin(),
                    psi.sin(),
                ));
            }
        }
        AnalyticShape::Box {
            center,
            half_extents,
        } => {
            let h = half_extents;
            let face_areas = [
                4.0 * h.y * h.z, // -x, +x
                4.0 * h.y * h.z,
                4.0 * h.x * h.z, // -y, +y
                4.0 * h.x * h.z,
                4.0 * h.x * h.y, // -z, +z
                4.0 * h.x * h.y,
            ];
            let total: f64 = face_areas.iter().sum();
            for _ in 0..n {
                let mut pick = rng.random_range(0.0..total);
                let mut face = 0;
                for (i, a) in face_areas.iter().enumerate() {
                    if pick < *a {
                        face = i;
                        break;
                    }
                    pick -= a;
                }
                let axis = face / 2;
                let sign = if face % 2 == 0 { -1.0 } else { 1.0 };
                let mut p = Vec3::new(
                    rng.random_range(-h.x..h.x),
                    rng.random_range(-h.y..h.y),
                    rng.random_range(-h.z..h.z),
                );
                p[axis] = sign * h[axis];
                points.push(center + p);
                let mut nrm = Vec3::zeros();
                nrm[axis] = sign;
                normals.push(nrm);
            }
        }
        AnalyticShape::DiskPatch {
            center,
            normal,
            radius,
        } => {
            let (t1, t2) = tangent_basis(normal);
            for _ in 0..n {
                let r = radius * rng.random_range(0.0..1.0f64).sqrt();
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                points.push(center + t1 * (r * phi.cos()) + t2 * (r * phi.sin()));
                normals.push(*normal);
            }
        }
    }
    Ok((PointCloud::new(points)?, normals))
}

/// Ground-truth field backed by either a closed-form shape or a mesh.
#[derive(Debug, Clone)]
pub enum FieldOracle {
    Shape(AnalyticShape),
    Mesh(TriangleMesh),
}

impl FieldOracle {
    pub fn eval(&self, q: &Point3) -> OracleSample {
        match self {
            FieldOracle::Shape(s) => s.eval(q),
            FieldOracle::Mesh(m) => {
                let (udf, closest) = mesh_udf_bruteforce(m, q);
                OracleSample {
                    udf,
                    gradient: direction((q - closest) / udf, udf),
                    closest,
                }
            }
        }
    }
}

/// Exact distance from `q` to `mesh`: minimum over all triangles.
pub fn mesh_udf_bruteforce(mesh: &TriangleMesh, q: &Point3) -> (f64, Point3) {
    assert!(!mesh.triangles.is_empty(), "mesh has no triangles");
    let mut best = (f64::INFINITY, Point3::origin());
    for tri in &mesh.triangles {
        let cp = closest_point_on_triangle(
            &mesh.vertices[tri[0]],
            &mesh.vertices[tri[1]],
            &mesh.vertices[tri[2]],
            q,
        );
        let d2 = (q - cp).norm_squared();
        if d2 < best.0 {
            best = (d2, cp);
        }
    }
    (best.0.sqrt(), best.1)
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(a: &Point3, b: &Point3, c: &Point3, p: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = va + vb + vc;
    if denom <= 0.0 {
        // Degenerate triangle: fall back to the nearest edge.
        let e1 = closest_point_on_segment(a, b, p);
        let e2 = closest_point_on_segment(b, c, p);
        let e3 = closest_point_on_segment(c, a, p);
        return [e1, e2, e3]
            .into_iter()
            .min_by(|x, y| {
                (p - x)
                    .norm_squared()
                    .partial_cmp(&(p - y).norm_squared())
                    .unwrap()
            })
            .unwrap();
    }
    let v = vb / denom;
    let w = vc / denom;
    a + ab * v + ac * w
}

fn closest_point_on_segment(a: &Point3, b: &Point3, p: &Point3) -> Point3 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Normalized central-difference gradient of a scalar field; `None` when
/// the differences cancel (zero vector).
pub fn finite_difference_gradient<F: Fn(&Point3) -> f64>(
    field: F,
    q: &Point3,
    h: f64,
) -> Option<Vec3> {
    assert!(h > 0.0);
    let mut g = Vec3::zeros();
    for axis in 0..3 {
        let mut lo = *q;
        let mut hi = *q;
        lo[axis] -= h;
        hi[axis] += h;
        g[axis] = (field(&hi) - field(&lo)) / (2.0 * h);
    }
    let len = g.norm();
    if len < 1e-12 {
        None
    } else {
        Some(g / len)
    }
}
