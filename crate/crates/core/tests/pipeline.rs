//! End-to-end pipeline integration: staged runs must compose to the same
//! result as the one-shot reconstruction, including through the grid dump
//! format.

use udfmesh::extract::extract_mesh;
use udfmesh::geom::Point3;
use udfmesh::io::{dump_udf_grid, load_udf_grid, write_mesh};
use udfmesh::metrics::{chamfer_distance, mesh_diagnostics, sample_mesh_surface};
use udfmesh::pipeline::{self, PipelineConfig};
use udfmesh::shapes::{sample_surface, AnalyticShape};

fn cfg(resolution: usize) -> PipelineConfig {
    PipelineConfig {
        resolution,
        ..Default::default()
    }
}

#[test]
fn staged_grid_extraction_equals_reconstruct() {
    // Input already in the unit cube, normalization off: the grid frame is
    // the world frame and tau needs no rescaling, so the staged path must
    // be byte-identical to the one-shot path.
    let shape = AnalyticShape::sphere(Point3::origin(), 0.4);
    let cloud = sample_surface(&shape, 1500, 42).unwrap();
    let mut config = cfg(32);
    config.normalize = false;

    let one_shot = pipeline::reconstruct(&cloud, &config).unwrap();
    let staged_grid = pipeline::compute_grid(&cloud, &config).unwrap();
    assert_eq!(staged_grid.effective_tau, config.tau);

    let dir = tempfile::tempdir().unwrap();
    let grid_path = dir.path().join("field.udfg");
    dump_udf_grid(&grid_path, &staged_grid.grid).unwrap();
    let loaded = load_udf_grid(&grid_path).unwrap();
    assert_eq!(loaded, staged_grid.grid);

    let staged_mesh = extract_mesh(&loaded, staged_grid.effective_tau);
    let a = dir.path().join("a.ply");
    let b = dir.path().join("b.ply");
    write_mesh(&a, &one_shot.mesh).unwrap();
    write_mesh(&b, &staged_mesh).unwrap();
    assert_eq!(
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        "staged and one-shot meshes differ"
    );
}

#[test]
fn normalized_pipeline_reports_rescaled_tau() {
    // A shape far from unit scale: the dumped grid is world-frame, so the
    // effective tau must grow with the world extent.
    let shape = AnalyticShape::sphere(Point3::origin(), 0.4);
    let base = sample_surface(&shape, 1500, 7).unwrap();
    let scaled = udfmesh::geom::PointCloud {
        points: base
            .points
            .iter()
            .map(|p| Point3::from(p.coords * 25.0))
            .collect(),
    };
    let config = cfg(32);
    let grid = pipeline::compute_grid(&scaled, &config).unwrap();
    // Normalized tau scales back up by the cloud's world extent (~20).
    let extent = scaled.aabb().extents().max();
    assert!((grid.effective_tau - config.tau * extent).abs() < 1e-9);
    assert!(extent > 19.0 && extent < 20.0);

    let mesh = extract_mesh(&grid.grid, grid.effective_tau);
    let bb = mesh.aabb().unwrap();
    assert!(bb.max.x > 8.0, "mesh should be in world coordinates");
}

#[test]
fn torus_reconstruction_is_accurate_and_genus_one() {
    let shape = AnalyticShape::torus(Point3::origin(), 0.3, 0.12);
    let cloud = sample_surface(&shape, 4000, 11).unwrap();
    let out = pipeline::reconstruct(&cloud, &cfg(64)).unwrap();
    let d = mesh_diagnostics(&out.mesh);
    assert_eq!(d.connected_components, 1);
    // A clean torus has Euler characteristic 0; tau-scale pinches may
    // perturb it slightly but the genus must be visible.
    assert!(
        d.euler_characteristic.abs() <= 4,
        "euler {}",
        d.euler_characteristic
    );

    let rec = sample_mesh_surface(&out.mesh, 100_000, 12).unwrap();
    let gt = sample_surface(&shape, 100_000, 13).unwrap();
    let cd = chamfer_distance(&rec, &gt).unwrap();
    let cell = out.grid.grid.cell_extents().x;
    assert!(cd < cell, "cd {cd} vs cell {cell}");
}

#[test]
fn box_reconstruction_keeps_sharp_shape_accuracy() {
    // Sharp creases are where the tangent-plane estimate is weakest: the
    // mesh frays there at the cell scale. The guarantees that hold are
    // geometric: sub-cell accuracy overall and nothing drifting away from
    // the true surface.
    let shape = AnalyticShape::cuboid(
        Point3::origin(),
        udfmesh::geom::Vec3::new(0.3, 0.25, 0.2),
    );
    let cloud = sample_surface(&shape, 4000, 31).unwrap();
    let out = pipeline::reconstruct(&cloud, &cfg(64)).unwrap();
    let rec = sample_mesh_surface(&out.mesh, 100_000, 32).unwrap();
    let gt = sample_surface(&shape, 100_000, 33).unwrap();
    let cd = chamfer_distance(&rec, &gt).unwrap();
    let cell = out.grid.grid.cell_extents().x;
    assert!(cd < cell, "cd {cd} vs cell {cell}");
    // Crease extensions shed a little debris; it must stay an
    // area-negligible fraction of the surface.
    let stray = rec
        .points
        .iter()
        .filter(|p| shape.eval(p).udf > 2.0 * cell)
        .count();
    let frac = stray as f64 / rec.len() as f64;
    assert!(frac < 0.01, "stray surface fraction {frac}");
}

#[test]
fn multi_layer_surfaces_reconstruct_both_sheets() {
    // Two parallel disks: an unsigned field represents both layers; the
    // reconstruction must keep two separate components, not fuse them.
    let top = AnalyticShape::disk(Point3::new(0.0, 0.0, 0.08), udfmesh::geom::Vec3::z(), 0.3);
    let bottom = AnalyticShape::disk(Point3::new(0.0, 0.0, -0.08), udfmesh::geom::Vec3::z(), 0.3);
    let mut points = sample_surface(&top, 2500, 21).unwrap().points;
    points.extend(sample_surface(&bottom, 2500, 22).unwrap().points);
    let cloud = udfmesh::geom::PointCloud::new(points).unwrap();

    let out = pipeline::reconstruct(&cloud, &cfg(64)).unwrap();
    let d = mesh_diagnostics(&out.mesh);
    assert_eq!(d.connected_components, 2, "expected two sheets");
    assert!(d.boundary_edges > 0, "sheets are open");

    // Every mesh vertex should hug one of the two planes.
    let worst = out
        .mesh
        .vertices
        .iter()
        .map(|v| (v.z.abs() - 0.08).abs())
        .fold(0.0f64, f64::max);
    let cell = out.grid.grid.cell_extents().x;
    assert!(worst < cell, "vertices stray {worst} from the disk planes");
}
