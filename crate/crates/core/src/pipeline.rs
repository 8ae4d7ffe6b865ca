//! End-to-end reconstruction pipeline and its configuration.
//!
//! The pipeline runs in a normalized frame (input bounding box scaled into
//! the unit cube) so the parameter-domain bound, neighborhood sizes, and
//! `tau` keep their intended meaning on arbitrarily scaled inputs. All
//! outputs are mapped back: meshes are emitted in world coordinates and
//! grids are dumped world-frame with distances rescaled (`tau` scales along
//! with them; the effective grid-frame value is reported so a standalone
//! extraction can reproduce a pipelined one exactly).

use crate::error::{Error, Result};
use crate::extract::extract_mesh;
use crate::field::{DistanceField, WeightScheme};
use crate::geom::{Aabb, Normalization, OrientedPointCloud, PointCloud};
use crate::grid::{padded_grid_bbox, UdfGrid};
use crate::mesh::TriangleMesh;
use crate::upsample::{upsample, UpsampleParams};

/// Every knob of the reconstruction pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub upsample: UpsampleParams,
    /// Neighborhood size for field queries.
    pub k: usize,
    pub value_scheme: WeightScheme,
    pub gradient_scheme: WeightScheme,
    /// Grid cells per axis.
    pub resolution: usize,
    /// Near-surface threshold, in normalized units.
    pub tau: f64,
    /// Grid margin around the cloud, in cells.
    pub padding_cells: usize,
    /// Seed for sampling-based commands (shape generation, evaluation).
    pub seed: u64,
    /// Normalize the input into the unit cube before processing.
    pub normalize: bool,
    /// Worker thread cap; 0 uses the rayon default.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            upsample: UpsampleParams::default(),
            k: 10,
            value_scheme: WeightScheme::Gaussian,
            gradient_scheme: WeightScheme::Gaussian,
            resolution: 128,
            tau: 5e-4,
            padding_cells: 2,
            seed: 0,
            normalize: true,
            threads: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.upsample.validate()?;
        if self.k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.tau < 0.0 {
            return Err(Error::InvalidParameter("tau must be nonnegative".into()));
        }
        if self.resolution < 2 {
            return Err(Error::InvalidParameter(
                "resolution must be at least 2".into(),
            ));
        }
        if self.resolution <= 2 * self.padding_cells {
            return Err(Error::InvalidParameter(
                "resolution must exceed twice the padding".into(),
            ));
        }
        Ok(())
    }
}

/// Runs `f` under a dedicated rayon pool capped at `threads` workers
/// (0 = rayon default). All pipeline stages produce thread-count-independent
/// results; the cap only limits parallelism.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// World-frame distance grid plus the bookkeeping needed to reuse it.
#[derive(Debug, Clone)]
pub struct GridOutput {
    pub grid: UdfGrid,
    /// `tau` converted into the grid's units; extraction with this value
    /// reproduces `reconstruct` exactly.
    pub effective_tau: f64,
    pub dense_points: usize,
    pub planar_fallbacks: usize,
    pub flagged_vertices: usize,
}

/// Full reconstruction result.
#[derive(Debug, Clone)]
pub struct ReconstructionOutput {
    pub mesh: TriangleMesh,
    pub grid: GridOutput,
}

/// Upsampled dense cloud in world coordinates.
pub fn upsample_cloud(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<OrientedPointCloud> {
    cfg.validate()?;
    with_threads(cfg.threads, || -> Result<OrientedPointCloud> {
        let norm = normalization(cloud, cfg);
        let unit = norm.apply(cloud);
        let up = upsample(&unit, &cfg.upsample)?;
        let points = up.cloud.points.iter().map(|p| norm.from_unit(p)).collect();
        OrientedPointCloud::new(points, up.cloud.normals, up.cloud.source_index)
    })?
}

/// Builds the world-frame distance grid for `cloud`.
pub fn compute_grid(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<GridOutput> {
    cfg.validate()?;
    with_threads(cfg.threads, || compute_grid_inner(cloud, cfg))?
}

/// Runs the whole pipeline: upsample, estimate the field on a grid,
/// extract the mesh.
pub fn reconstruct(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<ReconstructionOutput> {
    cfg.validate()?;
    with_threads(cfg.threads, || -> Result<ReconstructionOutput> {
        let grid = compute_grid_inner(cloud, cfg)?;
        let mesh = extract_mesh(&grid.grid, grid.effective_tau);
        Ok(ReconstructionOutput { mesh, grid })
    })?
}

fn normalization(cloud: &PointCloud, cfg: &PipelineConfig) -> Normalization {
    if cfg.normalize {
        Normalization::fit(cloud)
    } else {
        Normalization::identity()
    }
}

fn compute_grid_inner(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<GridOutput> {
    let norm = normalization(cloud, cfg);
    let unit = norm.apply(cloud);
    let up = upsample(&unit, &cfg.upsample)?;
    let dense_points = up.cloud.len();
    let planar_fallbacks = up.planar_fallbacks;
    let field = DistanceField::new(up.cloud, cfg.k, cfg.value_scheme, cfg.gradient_scheme)?;
    let unit_bbox = padded_grid_bbox(&unit.aabb(), cfg.resolution, cfg.padding_cells)?;
    let unit_grid = UdfGrid::sample_from_field(&field, cfg.resolution, unit_bbox)?;
    let world_bbox = Aabb::new(
        norm.from_unit(&unit_bbox.min),
        norm.from_unit(&unit_bbox.max),
    )?;
    let grid = unit_grid.rescaled(norm.scale, world_bbox)?;
    let flagged_vertices = grid.flagged_count();
    Ok(GridOutput {
        grid,
        effective_tau: cfg.tau / norm.scale,
        dense_points,
        planar_fallbacks,
        flagged_vertices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;
    use crate::shapes::{sample_surface, AnalyticShape};

    fn small_cfg(res: usize) -> PipelineConfig {
        PipelineConfig {
            resolution: res,
            ..Default::default()
        }
    }

    #[test]
    fn sphere_reconstruction_is_closed_and_near_truth() {
        let shape = AnalyticShape::sphere(Point3::origin(), 0.4);
        let cloud = sample_surface(&shape, 2000, 3).unwrap();
        let out = reconstruct(&cloud, &small_cfg(48)).unwrap();
        assert!(!out.mesh.is_empty());
        let stats = crate::metrics::mesh_diagnostics(&out.mesh);
        // Field noise at the tau scale can pinch isolated vertices; the
        // mesh must still be one essentially-closed component.
        assert_eq!(stats.connected_components, 1);
        assert!(
            (stats.boundary_edges as f64) < 0.002 * stats.triangle_count as f64,
            "boundary edges {} of {} triangles",
            stats.boundary_edges,
            stats.triangle_count
        );
        // Every mesh vertex should be near the true sphere.
        let worst = out
            .mesh
            .vertices
            .iter()
            .map(|v| shape.eval(v).udf)
            .fold(0.0f64, f64::max);
        let cell = out.grid.grid.cell_extents().x;
        assert!(worst < cell, "worst vertex error {worst} vs cell {cell}");
    }

    #[test]
    fn scaling_the_input_scales_the_output() {
        let shape = AnalyticShape::sphere(Point3::origin(), 0.4);
        let cloud = sample_surface(&shape, 1500, 5).unwrap();
        let scaled = PointCloud {
            points: cloud
                .points
                .iter()
                .map(|p| Point3::from(p.coords * 40.0))
                .collect(),
        };
        let out = reconstruct(&scaled, &small_cfg(32)).unwrap();
        let bb = out.mesh.aabb().unwrap();
        // Mesh must come back in world scale (radius ~16).
        assert!(bb.max.x > 10.0 && bb.max.x < 20.0);
    }

    #[test]
    fn thread_cap_does_not_change_the_mesh() {
        let shape = AnalyticShape::torus(Point3::origin(), 0.3, 0.12);
        let cloud = sample_surface(&shape, 1500, 9).unwrap();
        let mut cfg = small_cfg(32);
        cfg.threads = 1;
        let a = reconstruct(&cloud, &cfg).unwrap();
        cfg.threads = 8;
        let b = reconstruct(&cloud, &cfg).unwrap();
        assert_eq!(a.mesh.triangles, b.mesh.triangles);
        assert_eq!(a.mesh.vertices.len(), b.mesh.vertices.len());
        for (va, vb) in a.mesh.vertices.iter().zip(&b.mesh.vertices) {
            assert_eq!(va.x.to_bits(), vb.x.to_bits());
            assert_eq!(va.y.to_bits(), vb.y.to_bits());
            assert_eq!(va.z.to_bits(), vb.z.to_bits());
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cloud = sample_surface(&AnalyticShape::sphere(Point3::origin(), 0.4), 100, 1).unwrap();
        let cfg = PipelineConfig {
            resolution: 3,
            padding_cells: 2,
            ..Default::default()
        };
        assert!(reconstruct(&cloud, &cfg).is_err());
    }
}
