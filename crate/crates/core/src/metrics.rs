//! Evaluation protocol: Chamfer distance, F-score, field error statistics,
//! surface sampling, and mesh diagnostics.
//!
//! Naming note: the F-score follows the convention that attaches the
//! reconstructed-side fraction to *recall* (fraction of reconstructed
//! samples within `eps` of ground truth) and the ground-truth-side
//! fraction to *precision*. Counts are normalized to fractions so the
//! score lands in `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::geom::{Point3, PointCloud, Vec3};
use crate::kdtree::SpatialIndex;
use crate::mesh::TriangleMesh;
use crate::shapes::FieldOracle;

/// Symmetric mean nearest-neighbor distance (L1 form, non-squared):
/// `½·mean_a min_b ‖a−b‖ + ½·mean_b min_a ‖a−b‖`.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(0.5 * directed_mean_nn(a, b)? + 0.5 * directed_mean_nn(b, a)?)
}

fn directed_mean_nn(from: &PointCloud, to: &PointCloud) -> Result<f64> {
    let index = SpatialIndex::build(to)?;
    // Distances gathered in order, then summed sequentially, so the result
    // does not depend on the parallel schedule.
    let dists: Vec<f64> = from
        .points
        .par_iter()
        .map(|p| index.nearest_distance(p))
        .collect();
    Ok(dists.iter().sum::<f64>() / dists.len() as f64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FScore {
    pub eps: f64,
    pub f: f64,
    pub precision: f64,
    pub recall: f64,
}

/// F-score at threshold `eps` between reconstructed samples `rec` and
/// ground-truth samples `gt`.
pub fn f_score(rec: &PointCloud, gt: &PointCloud, eps: f64) -> Result<FScore> {
    if rec.is_empty() || gt.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let recall = fraction_within(rec, gt, eps)?;
    let precision = fraction_within(gt, rec, eps)?;
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(FScore {
        eps,
        f,
        precision,
        recall,
    })
}

fn fraction_within(from: &PointCloud, to: &PointCloud, eps: f64) -> Result<f64> {
    let index = SpatialIndex::build(to)?;
    let hits: Vec<bool> = from
        .points
        .par_iter()
        .map(|p| index.nearest_distance(p) < eps)
        .collect();
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

/// `1 − ⟨pred, gt⟩` for unit vectors; 0 when parallel, 2 when antiparallel.
pub fn gradient_cosine_error(pred: &Vec3, gt: &Vec3) -> f64 {
    1.0 - pred.dot(gt)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct UdfErrors {
    /// Mean absolute distance error over the near-surface band.
    pub mae: f64,
    /// Mean gradient angle error in degrees (oracle-undefined gradients
    /// are skipped).
    pub grad_angle_mean_deg: f64,
    /// Number of lattice vertices inside the band.
    pub band_size: usize,
}

/// Which distance estimate the protocol evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceEstimate {
    PointToTangent,
    PointToPoint,
}

/// Field accuracy protocol: a `resolution³` lattice spans the unit cube
/// `[-0.5, 0.5]³`, vertices whose *oracle* distance lies strictly inside
/// `(5e-4, 0.02)` are selected, and value/gradient errors are averaged
/// over the selection.
pub fn udf_error_protocol(
    field: &DistanceField,
    oracle: &FieldOracle,
    resolution: usize,
    estimate: DistanceEstimate,
) -> Result<UdfErrors> {
    const BAND_LO: f64 = 5e-4;
    const BAND_HI: f64 = 0.02;
    let n = resolution;
    let coord = |i: usize| -0.5 + i as f64 / (n - 1) as f64;

    let stats: Vec<(f64, Option<f64>)> = (0..n * n * n)
        .into_par_iter()
        .filter_map(|idx| {
            let q = Point3::new(coord(idx / (n * n)), coord((idx / n) % n), coord(idx % n));
            let truth = oracle.eval(&q);
            if truth.udf <= BAND_LO || truth.udf >= BAND_HI {
                return None;
            }
            let (phi, frame) = field.udf_with_frame(&q);
            let value = match estimate {
                DistanceEstimate::PointToTangent => phi,
                DistanceEstimate::PointToPoint => field.udf_p2p(&q),
            };
            let angle = match (truth.gradient, field.gradient_with_fallback(&frame)) {
                (Some(gt), Ok(pred)) => Some(pred.dot(&gt).clamp(-1.0, 1.0).acos().to_degrees()),
                _ => None,
            };
            Some(((value - truth.udf).abs(), angle))
        })
        .collect();

    if stats.is_empty() {
        return Err(Error::EmptyEvaluationBand);
    }
    let mae = stats.iter().map(|s| s.0).sum::<f64>() / stats.len() as f64;
    let angles: Vec<f64> = stats.iter().filter_map(|s| s.1).collect();
    let grad_angle_mean_deg = if angles.is_empty() {
        f64::NAN
    } else {
        angles.iter().sum::<f64>() / angles.len() as f64
    };
    Ok(UdfErrors {
        mae,
        grad_angle_mean_deg,
        band_size: stats.len(),
    })
}

/// Draws `n` area-uniform samples from the mesh surface (area-weighted
/// triangle choice, uniform barycentric point); deterministic per seed.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::ZeroAreaMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let pick: f64 = rng.random_range(0.0..total);
        let t = cumulative.partition_point(|&c| c <= pick);
        let [a, b, c] = mesh.triangles[t.min(mesh.triangles.len() - 1)];
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        points.push(Point3::from(
            mesh.vertices[a].coords * wa
                + mesh.vertices[b].coords * wb
                + mesh.vertices[c].coords * wc,
        ));
    }
    PointCloud::new(points)
}

/// Connectivity and boundary statistics of a mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MeshStats {
    pub vertex_count: usize,
    pub triangle_count: usize,
    /// Edges incident to exactly one triangle.
    pub boundary_edges: usize,
    /// `V − E + F` over vertices referenced by triangles.
    pub euler_characteristic: i64,
    pub connected_components: usize,
    pub euler_per_component: Vec<i64>,
    pub degenerate_triangles: usize,
}

/// Computes boundary/Euler/component diagnostics.
pub fn mesh_diagnostics(mesh: &TriangleMesh) -> MeshStats {
    use std::collections::HashMap;

    let degenerate_triangles = mesh
        .triangles
        .iter()
        .filter(|t| t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        .count();

    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    let mut parent: Vec<usize> = (0..mesh.vertices.len()).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut referenced = vec![false; mesh.vertices.len()];
    let mut face_count_ok = 0usize;
    for t in &mesh.triangles {
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            continue;
        }
        face_count_ok += 1;
        for &(a, b) in &[(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        for &v in t {
            referenced[v] = true;
        }
    }

    let boundary_edges = edge_count.values().filter(|&&c| c == 1).count();

    // Per-component tallies over referenced vertices.
    let mut comp_of_root: HashMap<usize, usize> = HashMap::new();
    let mut v_per = Vec::new();
    let mut e_per: Vec<i64> = Vec::new();
    let mut f_per: Vec<i64> = Vec::new();
    for (v, flagged) in referenced.iter().enumerate() {
        if !flagged {
            continue;
        }
        let root = find(&mut parent, v);
        let c = *comp_of_root.entry(root).or_insert_with(|| {
            v_per.push(0i64);
            e_per.push(0);
            f_per.push(0);
            v_per.len() - 1
        });
        v_per[c] += 1;
    }
    for &(a, _b) in edge_count.keys() {
        let root = find(&mut parent, a);
        e_per[comp_of_root[&root]] += 1;
    }
    for t in &mesh.triangles {
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            continue;
        }
        let root = find(&mut parent, t[0]);
        f_per[comp_of_root[&root]] += 1;
    }
    let euler_per_component: Vec<i64> = (0..v_per.len())
        .map(|c| v_per[c] - e_per[c] + f_per[c])
        .collect();
    let referenced_vertices = referenced.iter().filter(|&&r| r).count();

    MeshStats {
        vertex_count: mesh.vertices.len(),
        triangle_count: mesh.triangles.len(),
        boundary_edges,
        euler_characteristic: referenced_vertices as i64 - edge_count.len() as i64
            + face_count_ok as i64,
        connected_components: v_per.len(),
        euler_per_component,
        degenerate_triangles,
    }
}

/// Full evaluation report as emitted by the `eval` command.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub cd: f64,
    pub cd_x100: f64,
    pub f_scores: Vec<FScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub udf_mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_angle_mean_deg: Option<f64>,
    pub mesh: MeshStats,
}

impl EvalReport {
    /// Line-oriented `key=value` rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("cd={}\n", self.cd));
        out.push_str(&format!("cd_x100={}\n", self.cd_x100));
        for fs in &self.f_scores {
            out.push_str(&format!("f1@{}={}\n", fs.eps, fs.f));
            out.push_str(&format!("precision@{}={}\n", fs.eps, fs.precision));
            out.push_str(&format!("recall@{}={}\n", fs.eps, fs.recall));
        }
        if let Some(mae) = self.udf_mae {
            out.push_str(&format!("udf_mae={mae}\n"));
        }
        if let Some(angle) = self.grad_angle_mean_deg {
            out.push_str(&format!("grad_angle_deg={angle}\n"));
        }
        out.push_str(&format!("vertices={}\n", self.mesh.vertex_count));
        out.push_str(&format!("triangles={}\n", self.mesh.triangle_count));
        out.push_str(&format!("boundary_edges={}\n", self.mesh.boundary_edges));
        out.push_str(&format!("euler={}\n", self.mesh.euler_characteristic));
        out.push_str(&format!("components={}\n", self.mesh.connected_components));
        out.push_str(&format!(
            "degenerate_triangles={}\n",
            self.mesh.degenerate_triangles
        ));
        out
    }
}
