//! Densification of a sparse cloud through per-point patch fitting.
//!
//! Every input point gets a quadratic patch; all patches are evaluated at
//! one shared parameter sample set, so an input of `N` points yields
//! `N·M` dense samples with analytic normals. Patch fitting is independent
//! per point and runs in parallel; the output ordering (input id major,
//! parameter sample minor) does not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{OrientedPointCloud, Point3, PointCloud, Vec3};
use crate::kdtree::SpatialIndex;
use crate::patch::{fit_local_patch, ParamSamples, QuadraticPatch};

/// Parameters of the upsampling stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpsampleParams {
    /// Dense samples per input point.
    pub m: usize,
    /// Half-width of the square parameter domain.
    pub delta: f64,
    /// Neighborhood size for patch fitting.
    pub k_fit: usize,
    /// Relative ridge regularization weight.
    pub ridge: f64,
    /// Side length of the lattice the parameter samples are picked from.
    pub grid_side: usize,
}

impl Default for UpsampleParams {
    fn default() -> Self {
        Self {
            m: 16,
            delta: 0.1,
            k_fit: 20,
            ridge: 1e-6,
            grid_side: 16,
        }
    }
}

impl UpsampleParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if self.k_fit < 6 {
            return Err(Error::InvalidParameter(
                "k_fit must be at least 6 (one per patch coefficient)".into(),
            ));
        }
        if self.ridge < 0.0 {
            return Err(Error::InvalidParameter("ridge must be nonnegative".into()));
        }
        if self.m > self.grid_side * self.grid_side {
            return Err(Error::InvalidParameter(format!(
                "m = {} exceeds the {}x{} sample lattice",
                self.m, self.grid_side, self.grid_side
            )));
        }
        Ok(())
    }
}

/// Dense cloud plus fitting diagnostics.
#[derive(Debug, Clone)]
pub struct UpsampleResult {
    pub cloud: OrientedPointCloud,
    /// Patches whose quadratic fit folded over and fell back to the PCA plane.
    pub planar_fallbacks: usize,
    /// Mean of the per-patch weighted residual RMS values.
    pub mean_residual_rms: f64,
}

/// Upsamples `cloud` by the factor `params.m`.
///
/// Points whose quadratic patch degenerates (parallel Jacobian columns
/// somewhere in the sample domain) fall back to their PCA tangent plane;
/// only a fully collinear neighborhood is an error.
pub fn upsample(cloud: &PointCloud, params: &UpsampleParams) -> Result<UpsampleResult> {
    params.validate()?;
    if cloud.len() < params.k_fit {
        return Err(Error::TooFewPoints {
            got: cloud.len(),
            need: params.k_fit,
        });
    }
    let samples = ParamSamples::farthest_point(params.m, params.delta, params.grid_side)?;
    let index = SpatialIndex::build(cloud)?;

    struct PerPoint {
        points: Vec<Point3>,
        normals: Vec<Vec3>,
        fell_back: bool,
        residual_rms: f64,
    }

    let per_point: Vec<Result<PerPoint>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let patch =
                fit_local_patch(cloud, &index, i, params.k_fit, params.ridge, params.delta)?;
            let (evaluated, fell_back) = match evaluate_all(&patch, &samples) {
                Some(ev) => (ev, false),
                None => {
                    let planar = planar_patch(&patch);
                    let ev = evaluate_all(&planar, &samples)
                        .ok_or(Error::DegenerateNeighborhood { point: i })?;
                    (ev, true)
                }
            };
            let (points, normals) = evaluated;
            Ok(PerPoint {
                points,
                normals,
                fell_back,
                residual_rms: patch.residual_rms,
            })
        })
        .collect();

    let mut points = Vec::with_capacity(cloud.len() * params.m);
    let mut normals = Vec::with_capacity(cloud.len() * params.m);
    let mut source_index = Vec::with_capacity(cloud.len() * params.m);
    let mut planar_fallbacks = 0;
    let mut rms_sum = 0.0;
    for (i, res) in per_point.into_iter().enumerate() {
        let pp = res?;
        planar_fallbacks += pp.fell_back as usize;
        rms_sum += pp.residual_rms;
        source_index.extend(std::iter::repeat_n(i, pp.points.len()));
        points.extend(pp.points);
        normals.extend(pp.normals);
    }

    Ok(UpsampleResult {
        cloud: OrientedPointCloud::new(points, normals, source_index)?,
        planar_fallbacks,
        mean_residual_rms: rms_sum / cloud.len() as f64,
    })
}

/// Evaluates position and normal at every parameter sample, or `None` if
/// the patch Jacobian degenerates anywhere.
fn evaluate_all(
    patch: &QuadraticPatch,
    samples: &ParamSamples,
) -> Option<(Vec<Point3>, Vec<Vec3>)> {
    let mut points = Vec::with_capacity(samples.len());
    let mut normals = Vec::with_capacity(samples.len());
    for &uv in samples.uvs() {
        let p = patch.evaluate(uv);
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return None;
        }
        points.push(p);
        normals.push(patch.normal(uv).ok()?);
    }
    Some((points, normals))
}

/// Linear patch spanning the fitting frame's tangent plane.
fn planar_patch(patch: &QuadraticPatch) -> QuadraticPatch {
    let mut coeffs = nalgebra::SMatrix::<f64, 3, 6>::zeros();
    coeffs.set_column(1, &patch.frame.column(0).into_owned());
    coeffs.set_column(2, &patch.frame.column(1).into_owned());
    QuadraticPatch {
        center: patch.center,
        coeffs,
        frame: patch.frame,
        residual_rms: patch.residual_rms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::chamfer_distance;
    use crate::shapes::{sample_surface, AnalyticShape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn m_one_reproduces_the_input() {
        let cloud = sample_surface(&AnalyticShape::sphere(Point3::origin(), 0.5), 200, 42).unwrap();
        let params = UpsampleParams {
            m: 1,
            ..Default::default()
        };
        let result = upsample(&cloud, &params).unwrap();
        assert_eq!(result.cloud.len(), cloud.len());
        for (dense, input) in result.cloud.points.iter().zip(&cloud.points) {
            assert_eq!(dense, input);
        }
    }

    #[test]
    fn sphere_upsampling_stays_on_the_sphere() {
        let shape = AnalyticShape::sphere(Point3::origin(), 0.5);
        let cloud = sample_surface(&shape, 3000, 7).unwrap();
        let result = upsample(&cloud, &UpsampleParams::default()).unwrap();
        assert_eq!(result.cloud.len(), 48000);

        let input_index = SpatialIndex::build(&cloud).unwrap();
        let mean_spacing = cloud
            .points
            .iter()
            .map(|p| input_index.knn(p, 2)[1].1)
            .sum::<f64>()
            / cloud.len() as f64;

        let reference = sample_surface(&shape, 48000, 8).unwrap();
        let cd = chamfer_distance(&result.cloud.positions(), &reference).unwrap();
        assert!(cd < 2.0 * mean_spacing, "cd {cd} vs spacing {mean_spacing}");
    }

    #[test]
    fn noisy_plane_is_smoothed() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let sigma = 0.005;
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                let x = -0.5 + i as f64 / 39.0;
                let y = -0.5 + j as f64 / 39.0;
                // Box-Muller; only the noise needs to be Gaussian here.
                let (u1, u2): (f64, f64) = (rng.random_range(1e-12..1.0), rng.random());
                let z = sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                pts.push(Point3::new(x, y, z));
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let input_rms =
            (cloud.points.iter().map(|p| p.z * p.z).sum::<f64>() / cloud.len() as f64).sqrt();
        let result = upsample(&cloud, &UpsampleParams::default()).unwrap();
        let dense_rms = (result.cloud.points.iter().map(|p| p.z * p.z).sum::<f64>()
            / result.cloud.len() as f64)
            .sqrt();
        assert!(
            dense_rms < input_rms,
            "dense rms {dense_rms} vs input {input_rms}"
        );
    }

    #[test]
    fn dense_normals_are_unit() {
        let shape = AnalyticShape::sphere(Point3::origin(), 0.5);
        let cloud = sample_surface(&shape, 500, 3).unwrap();
        let result = upsample(&cloud, &UpsampleParams::default()).unwrap();
        for n in &result.cloud.normals {
            assert!((n.norm() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn upsampling_is_deterministic() {
        let shape = AnalyticShape::sphere(Point3::origin(), 0.5);
        let cloud = sample_surface(&shape, 400, 21).unwrap();
        let a = upsample(&cloud, &UpsampleParams::default()).unwrap();
        let b = upsample(&cloud, &UpsampleParams::default()).unwrap();
        for (pa, pb) in a.cloud.points.iter().zip(&b.cloud.points) {
            assert_eq!(pa.x.to_bits(), pb.x.to_bits());
            assert_eq!(pa.y.to_bits(), pb.y.to_bits());
            assert_eq!(pa.z.to_bits(), pb.z.to_bits());
        }
        for (na, nb) in a.cloud.normals.iter().zip(&b.cloud.normals) {
            assert_eq!(na.x.to_bits(), nb.x.to_bits());
        }
    }

    #[test]
    fn collinear_cloud_errors() {
        let pts: Vec<Point3> = (0..30)
            .map(|i| Point3::new(i as f64 * 0.01, 0.0, 0.0))
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        assert!(upsample(&cloud, &UpsampleParams::default()).is_err());
    }

    #[test]
    fn quadratic_inputs_are_reproduced_exactly() {
        // Points on z = x² + y², sampled densely enough that each patch
        // sees a locally quadratic graph over its own tangent frame; every
        // dense sample must then satisfy the height equation to fit
        // tolerance. (A quadric is quadratic over a *tilted* frame only up
        // to a cubic term that shrinks with the neighborhood radius.)
        let mut pts = Vec::new();
        for i in 0..200 {
            for j in 0..200 {
                let x = -0.15 + 0.3 * i as f64 / 199.0;
                let y = -0.15 + 0.3 * j as f64 / 199.0;
                pts.push(Point3::new(x, y, x * x + y * y));
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let result = upsample(&cloud, &UpsampleParams::default()).unwrap();
        let worst = result
            .cloud
            .points
            .iter()
            .map(|p| (p.z - (p.x * p.x + p.y * p.y)).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-6, "max height-field residual {worst}");
    }

    #[test]
    fn tilted_plane_inputs_are_reproduced_exactly() {
        // Planes are exactly representable over any tangent frame, so even
        // a coarse sloped sampling must come back to machine precision.
        let normal = Vec3::new(0.3, -0.5, 0.8).normalize();
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                let u = -0.5 + i as f64 / 39.0;
                let v = -0.5 + j as f64 / 39.0;
                // Orthogonal in-plane directions.
                let t1 = Vec3::new(0.8, 0.0, -0.3).normalize();
                let t2 = normal.cross(&t1);
                pts.push(Point3::origin() + t1 * u + t2 * v);
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let result = upsample(&cloud, &UpsampleParams::default()).unwrap();
        let worst = result
            .cloud
            .points
            .iter()
            .map(|p| p.coords.dot(&normal).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-9, "max plane residual {worst}");
    }
}
