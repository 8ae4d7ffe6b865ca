//! Local quadratic surface patches.
//!
//! Around every input point a patch `f(u) = p + A·E(u)` is fitted, where
//! `u = (u1, u2)` ranges over a square parameter domain,
//! `E(u) = [1, u1, u2, u1², u1·u2, u2²]ᵀ` and `A` is a 3×6 coefficient
//! matrix acting in world coordinates. The constant column of `A` is pinned
//! to zero so `f(0) = p` exactly; denoising still happens through the
//! weighted least-squares fit over the neighborhood.
//!
//! Patch normals come from the parameterization itself: the normalized
//! cross product of the two Jacobian columns of `f`.

use nalgebra::{Matrix3, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud, Vec3};
use crate::kdtree::SpatialIndex;

/// 2D parameter-domain sample set shared by all patches.
///
/// The first sample is always `(0, 0)`, so each input point reproduces
/// itself in the upsampled output.
#[derive(Debug, Clone)]
pub struct ParamSamples {
    uvs: Vec<Vector2<f64>>,
    delta: f64,
}

impl ParamSamples {
    /// Picks `m` samples from `[-delta, delta]²`: the seed `(0, 0)` plus
    /// `m - 1` farthest-point selections over a `grid_side × grid_side`
    /// lattice spanning the domain. Fully deterministic; FPS ties are
    /// broken by row-major lattice scan order.
    pub fn farthest_point(m: usize, delta: f64, grid_side: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if delta <= 0.0 {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if grid_side < 2 {
            return Err(Error::InvalidParameter(
                "grid_side must be at least 2".into(),
            ));
        }
        if m > grid_side * grid_side {
            return Err(Error::InvalidParameter(format!(
                "cannot pick {m} samples from a {grid_side}x{grid_side} lattice"
            )));
        }

        let coord = |i: usize| -delta + 2.0 * delta * i as f64 / (grid_side - 1) as f64;
        let lattice: Vec<Vector2<f64>> = (0..grid_side)
            .flat_map(|i| (0..grid_side).map(move |j| Vector2::new(coord(i), coord(j))))
            .collect();

        let mut uvs = Vec::with_capacity(m);
        uvs.push(Vector2::new(0.0, 0.0));
        let mut min_d2: Vec<f64> = lattice.iter().map(|c| c.norm_squared()).collect();
        while uvs.len() < m {
            let mut best = 0;
            for (idx, &d2) in min_d2.iter().enumerate() {
                if d2 > min_d2[best] {
                    best = idx;
                }
            }
            let chosen = lattice[best];
            uvs.push(chosen);
            for (idx, d2) in min_d2.iter_mut().enumerate() {
                *d2 = d2.min((lattice[idx] - chosen).norm_squared());
            }
        }
        Ok(Self { uvs, delta })
    }

    pub fn uvs(&self) -> &[Vector2<f64>] {
        &self.uvs
    }

    pub fn len(&self) -> usize {
        self.uvs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uvs.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// A fitted quadratic patch around one input point.
#[derive(Debug, Clone)]
pub struct QuadraticPatch {
    /// Patch anchor `p`; `evaluate(0) == p`.
    pub center: Point3,
    /// World-frame coefficients; column 0 is identically zero.
    pub coeffs: SMatrix<f64, 3, 6>,
    /// Orthonormal fitting frame, columns `t1, t2, n`.
    pub frame: Matrix3<f64>,
    /// Weighted RMS of the fit residuals, world units.
    pub residual_rms: f64,
}

impl QuadraticPatch {
    /// `f(u) = p + A·[1, u1, u2, u1², u1·u2, u2²]ᵀ`.
    pub fn evaluate(&self, u: Vector2<f64>) -> Point3 {
        let e = basis(u);
        self.center + self.coeffs * e
    }

    /// Unit, unoriented normal: normalized cross product of the Jacobian
    /// columns `∂f/∂u1` and `∂f/∂u2`.
    pub fn normal(&self, u: Vector2<f64>) -> Result<Vec3> {
        let (j1, j2) = self.jacobian(u);
        let n = j1.cross(&j2);
        let len = n.norm();
        if len < 1e-12 {
            return Err(Error::DegenerateJacobian);
        }
        Ok(n / len)
    }

    /// Jacobian columns of the parameterization at `u`.
    pub fn jacobian(&self, u: Vector2<f64>) -> (Vec3, Vec3) {
        let a = &self.coeffs;
        let j1 = a.column(1) + a.column(3) * (2.0 * u.x) + a.column(4) * u.y;
        let j2 = a.column(2) + a.column(4) * u.x + a.column(5) * (2.0 * u.y);
        (j1, j2)
    }
}

fn basis(u: Vector2<f64>) -> SVector<f64, 6> {
    SVector::<f64, 6>::from([1.0, u.x, u.y, u.x * u.x, u.x * u.y, u.y * u.y])
}

/// Fits a quadratic patch around `cloud.points[point_id]`.
///
/// The tangent frame comes from PCA of the `k_fit` nearest neighbors.
/// Neighbor projections are rescaled so the farthest neighbor sits at the
/// parameter-domain corner radius `√2·delta`: the sample domain then stays
/// inside the fitted neighborhood instead of extrapolating beyond it. The Gaussian-
/// weighted least-squares system is solved through an SVD whose singular
/// values are floored at `ridge` relative to the largest one, which keeps
/// near-degenerate neighborhoods stable without biasing exact data.
pub fn fit_local_patch(
    cloud: &PointCloud,
    index: &SpatialIndex,
    point_id: usize,
    k_fit: usize,
    ridge: f64,
    delta: f64,
) -> Result<QuadraticPatch> {
    if cloud.len() < k_fit {
        return Err(Error::TooFewPoints {
            got: cloud.len(),
            need: k_fit,
        });
    }
    let center = cloud.points[point_id];
    let neighbors = index.knn(&center, k_fit);

    let frame = pca_frame(cloud, &neighbors, point_id)?;
    let t1: Vec3 = frame.column(0).into();
    let t2: Vec3 = frame.column(1).into();

    // Bandwidth: distance to the k-th neighbor.
    let h = neighbors.last().unwrap().1;
    if h <= 0.0 {
        return Err(Error::DegenerateNeighborhood { point: point_id });
    }

    // Weighted rows over the basis [v1, v2, v1², v1v2, v2²] with v = the
    // tangent projection scaled by 1/h (constant term pinned to zero so
    // the patch interpolates its center).
    let k = neighbors.len();
    let mut design = nalgebra::DMatrix::<f64>::zeros(k, 5);
    let mut rhs = nalgebra::DMatrix::<f64>::zeros(k, 3);
    let mut w_sum = 0.0;
    for (row, &(j, dist)) in neighbors.iter().enumerate() {
        let offset = cloud.points[j] - center;
        let v = Vector2::new(offset.dot(&t1), offset.dot(&t2)) / h;
        let w = (-(dist * dist) / (h * h)).exp();
        let sw = w.sqrt();
        w_sum += w;
        design.set_row(
            row,
            &nalgebra::RowSVector::<f64, 5>::from([v.x, v.y, v.x * v.x, v.x * v.y, v.y * v.y])
                .scale(sw),
        );
        rhs.set_row(
            row,
            &nalgebra::RowVector3::new(offset.x, offset.y, offset.z).scale(sw),
        );
    }
    let svd = design.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max.is_nan() || sigma_max <= 0.0 {
        return Err(Error::DegenerateNeighborhood { point: point_id });
    }
    let beta = svd
        .solve(&rhs, ridge * sigma_max)
        .map_err(|_| Error::DegenerateNeighborhood { point: point_id })?;

    // Map the unit-bandwidth coordinates onto the sample domain:
    // v = u/(√2·δ), so the domain corner lands on the farthest-neighbor
    // radius and no sample leaves the data support.
    let mut coeffs = SMatrix::<f64, 3, 6>::zeros();
    let s1 = 1.0 / (std::f64::consts::SQRT_2 * delta);
    let s2 = s1 * s1;
    for c in 0..3 {
        coeffs[(c, 1)] = beta[(0, c)] * s1;
        coeffs[(c, 2)] = beta[(1, c)] * s1;
        coeffs[(c, 3)] = beta[(2, c)] * s2;
        coeffs[(c, 4)] = beta[(3, c)] * s2;
        coeffs[(c, 5)] = beta[(4, c)] * s2;
    }

    let residual = &rhs - &design * &beta;
    let residual_rms = (residual.norm_squared() / w_sum).sqrt();

    Ok(QuadraticPatch {
        center,
        coeffs,
        frame,
        residual_rms,
    })
}

/// PCA of the neighborhood about its centroid. Columns of the returned
/// frame are `t1` (largest variance), `t2`, and `n = t1 × t2`.
fn pca_frame(
    cloud: &PointCloud,
    neighbors: &[(usize, f64)],
    point_id: usize,
) -> Result<Matrix3<f64>> {
    let mut centroid = Vec3::zeros();
    for &(j, _) in neighbors {
        centroid += cloud.points[j].coords;
    }
    centroid /= neighbors.len() as f64;

    let mut cov = Matrix3::<f64>::zeros();
    for &(j, _) in neighbors {
        let d = cloud.points[j].coords - centroid;
        cov += d * d.transpose();
    }
    cov /= neighbors.len() as f64;

    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let lam1 = eig.eigenvalues[order[0]].max(0.0);
    let lam2 = eig.eigenvalues[order[1]].max(0.0);
    if lam1 <= 0.0 || lam2 <= lam1 * 1e-12 {
        return Err(Error::DegenerateNeighborhood { point: point_id });
    }

    let mut t1: Vec3 = eig.eigenvectors.column(order[0]).into();
    let mut t2: Vec3 = eig.eigenvectors.column(order[1]).into();
    canonicalize_sign(&mut t1);
    canonicalize_sign(&mut t2);
    // Re-orthogonalize t2 against t1 to guard against eigensolver drift.
    t2 -= t1 * t1.dot(&t2);
    t2 /= t2.norm();
    let n = t1.cross(&t2);
    Ok(Matrix3::from_columns(&[t1, t2, n]))
}

/// Flips `v` so its largest-magnitude component is positive, making the
/// eigenvector sign choice (and the whole pipeline) reproducible.
fn canonicalize_sign(v: &mut Vec3) {
    let mut lead = 0;
    for i in 1..3 {
        if v[i].abs() > v[lead].abs() {
            lead = i;
        }
    }
    if v[lead] < 0.0 {
        *v = -*v;
    }
}
