//! Command-line driver for the reconstruction pipeline.
//!
//! Subcommands: `gen` (analytic shape → point cloud), `upsample` (cloud →
//! dense oriented cloud), `udf` (cloud → distance grid dump), `emc`
//! (grid dump → mesh), `reconstruct` (cloud → mesh, full pipeline), and
//! `eval` (mesh vs ground truth → metrics report).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use udfmesh::extract::extract_mesh;
use udfmesh::field::{DistanceField, WeightScheme};
use udfmesh::geom::{Point3, Vec3};
use udfmesh::io;
use udfmesh::metrics::{
    chamfer_distance, f_score, mesh_diagnostics, sample_mesh_surface, udf_error_protocol,
    DistanceEstimate, EvalReport,
};
use udfmesh::pipeline::{self, PipelineConfig};
use udfmesh::shapes::{sample_surface, sample_surface_oriented, AnalyticShape, FieldOracle};

#[derive(Parser)]
#[command(
    name = "udfmesh",
    about = "Surface reconstruction from sparse unoriented point clouds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a point cloud from an analytic shape.
    Gen {
        /// Shape spec: sphere:R | torus:R,r | plane:nx,ny,nz,off | box:hx,hy,hz | disk:R
        #[arg(long)]
        shape: String,
        /// Number of surface samples.
        #[arg(long, default_value_t = 3000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also store true normals (PLY output only).
        #[arg(long)]
        normals: bool,
        /// Output path (.xyz or .ply).
        #[arg(long)]
        out: PathBuf,
    },
    /// Densify a cloud with quadratic patches; writes positions + normals.
    Upsample {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output path (.ply keeps normals, .xyz drops them).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Estimate the distance field on a grid and dump it (.udfg).
    Udf {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Extract a mesh from a previously dumped grid (standalone extraction).
    Emc {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Near-surface threshold in grid units (use the effective_tau
        /// reported by `udf` to reproduce `reconstruct` exactly).
        #[arg(long, default_value_t = 5e-4)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Full pipeline: cloud in, mesh out.
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Compare a reconstructed mesh against ground truth.
    Eval {
        /// Reconstructed mesh (.obj or .ply).
        #[arg(long)]
        rec: PathBuf,
        /// Ground-truth mesh file.
        #[arg(long, conflicts_with = "gt_shape")]
        gt: Option<PathBuf>,
        /// Ground-truth analytic shape spec.
        #[arg(long)]
        gt_shape: Option<String>,
        /// F-score thresholds (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = [0.005, 0.01])]
        eps: Vec<f64>,
        /// Surface samples per side for CD/F-score.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Also evaluate field accuracy from this input cloud (requires
        /// --gt-shape; cloud must live in the unit cube).
        #[arg(long)]
        field_cloud: Option<PathBuf>,
        /// Write the report as JSON here as well.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
}

/// Pipeline flags; unset flags fall back to the config file, then to
/// defaults.
#[derive(Args, Debug, Default)]
struct ParamArgs {
    /// Optional key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Upsampling factor M.
    #[arg(long)]
    m: Option<usize>,
    /// Parameter-domain half width.
    #[arg(long)]
    delta: Option<f64>,
    /// Patch-fit neighborhood size.
    #[arg(long)]
    k_fit: Option<usize>,
    /// Relative regularization floor of the patch fit.
    #[arg(long)]
    ridge: Option<f64>,
    /// FPS source lattice side.
    #[arg(long)]
    grid_side: Option<usize>,
    /// Field query neighborhood size K.
    #[arg(long)]
    knn: Option<usize>,
    /// Distance weighting: uniform | invdist[:power] | gaussian.
    #[arg(long)]
    value_scheme: Option<String>,
    /// Gradient weighting: uniform | invdist[:power] | gaussian.
    #[arg(long)]
    grad_scheme: Option<String>,
    /// Grid resolution (cells per axis).
    #[arg(long)]
    res: Option<usize>,
    /// Near-surface threshold (normalized units).
    #[arg(long)]
    tau: Option<f64>,
    /// Grid padding around the cloud, in cells.
    #[arg(long)]
    padding: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Normalize input into the unit cube (true/false).
    #[arg(long)]
    normalize: Option<bool>,
    /// Worker thread cap (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            apply_config_file(&mut cfg, path)?;
        }
        let up = &mut cfg.upsample;
        if let Some(v) = self.m {
            up.m = v;
        }
        if let Some(v) = self.delta {
            up.delta = v;
        }
        if let Some(v) = self.k_fit {
            up.k_fit = v;
        }
        if let Some(v) = self.ridge {
            up.ridge = v;
        }
        if let Some(v) = self.grid_side {
            up.grid_side = v;
        }
        if let Some(v) = self.knn {
            cfg.k = v;
        }
        if let Some(s) = &self.value_scheme {
            cfg.value_scheme = parse_scheme(s)?;
        }
        if let Some(s) = &self.grad_scheme {
            cfg.gradient_scheme = parse_scheme(s)?;
        }
        if let Some(v) = self.res {
            cfg.resolution = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.padding {
            cfg.padding_cells = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.normalize {
            cfg.normalize = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        Ok(cfg)
    }
}

fn apply_config_file(cfg: &mut PipelineConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    for (num, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), num + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let err = |e: String| anyhow!("{}:{}: {e}", path.display(), num + 1);
        match key {
            "m" => cfg.upsample.m = value.parse().map_err(|_| err("bad m".into()))?,
            "delta" => cfg.upsample.delta = value.parse().map_err(|_| err("bad delta".into()))?,
            "k_fit" => cfg.upsample.k_fit = value.parse().map_err(|_| err("bad k_fit".into()))?,
            "ridge" => cfg.upsample.ridge = value.parse().map_err(|_| err("bad ridge".into()))?,
            "grid_side" => {
                cfg.upsample.grid_side = value.parse().map_err(|_| err("bad grid_side".into()))?
            }
            "knn" => cfg.k = value.parse().map_err(|_| err("bad knn".into()))?,
            "value_scheme" => cfg.value_scheme = parse_scheme(value)?,
            "grad_scheme" => cfg.gradient_scheme = parse_scheme(value)?,
            "res" => cfg.resolution = value.parse().map_err(|_| err("bad res".into()))?,
            "tau" => cfg.tau = value.parse().map_err(|_| err("bad tau".into()))?,
            "padding" => {
                cfg.padding_cells = value.parse().map_err(|_| err("bad padding".into()))?
            }
            "seed" => cfg.seed = value.parse().map_err(|_| err("bad seed".into()))?,
            "normalize" => {
                cfg.normalize = value.parse().map_err(|_| err("bad normalize".into()))?
            }
            "threads" => cfg.threads = value.parse().map_err(|_| err("bad threads".into()))?,
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }
    Ok(())
}

fn parse_scheme(s: &str) -> Result<WeightScheme> {
    let lower = s.to_ascii_lowercase();
    if lower == "uniform" {
        return Ok(WeightScheme::Uniform);
    }
    if lower == "gaussian" {
        return Ok(WeightScheme::Gaussian);
    }
    if let Some(rest) = lower.strip_prefix("invdist") {
        let power = match rest.strip_prefix(':') {
            Some(p) => p
                .parse()
                .map_err(|_| anyhow!("bad inverse-distance power '{p}'"))?,
            None if rest.is_empty() => 2.0,
            _ => bail!("unknown weight scheme '{s}'"),
        };
        return Ok(WeightScheme::InverseDistance { power });
    }
    bail!("unknown weight scheme '{s}' (expected uniform | invdist[:power] | gaussian)")
}

fn parse_shape(spec: &str) -> Result<AnalyticShape> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("shape spec '{spec}' needs kind:params"))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad number '{t}' in shape spec"))
        })
        .collect::<Result<_>>()?;
    match (kind, nums.as_slice()) {
        ("sphere", [r]) => Ok(AnalyticShape::sphere(Point3::origin(), *r)),
        ("torus", [major, minor]) => Ok(AnalyticShape::torus(Point3::origin(), *major, *minor)),
        ("plane", [nx, ny, nz, off]) => Ok(AnalyticShape::plane(Vec3::new(*nx, *ny, *nz), *off)),
        ("box", [hx, hy, hz]) => Ok(AnalyticShape::cuboid(
            Point3::origin(),
            Vec3::new(*hx, *hy, *hz),
        )),
        ("disk", [r]) => Ok(AnalyticShape::disk(Point3::origin(), Vec3::z(), *r)),
        _ => bail!(
            "unknown shape spec '{spec}' (sphere:R | torus:R,r | plane:nx,ny,nz,off | box:hx,hy,hz | disk:R)"
        ),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            shape,
            n,
            seed,
            normals,
            out,
        } => {
            let shape = parse_shape(&shape)?;
            if normals {
                let (cloud, ns) = sample_surface_oriented(&shape, n, seed)?;
                if out.extension().and_then(|e| e.to_str()) != Some("ply") {
                    bail!("--normals requires a .ply output");
                }
                io::write_point_cloud(&out, &cloud, Some(&ns))?;
                println!("points={n} normals=true out={}", out.display());
            } else {
                let cloud = sample_surface(&shape, n, seed)?;
                io::write_point_cloud(&out, &cloud, None)?;
                println!("points={n} out={}", out.display());
            }
        }
        Command::Upsample { input, out, params } => {
            let cfg = params.resolve()?;
            let cloud = io::read_point_cloud(&input)?;
            let dense = pipeline::upsample_cloud(&cloud, &cfg)?;
            let positions = dense.positions();
            let normals = if out.extension().and_then(|e| e.to_str()) == Some("ply") {
                Some(dense.normals.as_slice())
            } else {
                None
            };
            io::write_point_cloud(&out, &positions, normals)?;
            println!(
                "input_points={} dense_points={} out={}",
                cloud.len(),
                dense.len(),
                out.display()
            );
        }
        Command::Udf { input, out, params } => {
            let cfg = params.resolve()?;
            let cloud = io::read_point_cloud(&input)?;
            let grid = pipeline::compute_grid(&cloud, &cfg)?;
            io::dump_udf_grid(&out, &grid.grid)?;
            println!(
                "resolution={} dense_points={} planar_fallbacks={} flagged_vertices={} effective_tau={} out={}",
                grid.grid.resolution(),
                grid.dense_points,
                grid.planar_fallbacks,
                grid.flagged_vertices,
                grid.effective_tau,
                out.display()
            );
        }
        Command::Emc {
            grid,
            out,
            tau,
            threads,
        } => {
            let loaded = io::load_udf_grid(&grid)?;
            let mesh = pipeline::with_threads(threads, || extract_mesh(&loaded, tau))?;
            io::write_mesh(&out, &mesh)?;
            println!(
                "vertices={} triangles={} out={}",
                mesh.vertices.len(),
                mesh.triangles.len(),
                out.display()
            );
        }
        Command::Reconstruct { input, out, params } => {
            let cfg = params.resolve()?;
            let cloud = io::read_point_cloud(&input)?;
            let result = pipeline::reconstruct(&cloud, &cfg)?;
            io::write_mesh(&out, &result.mesh)?;
            println!(
                "input_points={} duplicate_points={} dense_points={} vertices={} triangles={} planar_fallbacks={} flagged_vertices={} out={}",
                cloud.len(),
                cloud.duplicate_count(),
                result.grid.dense_points,
                result.mesh.vertices.len(),
                result.mesh.triangles.len(),
                result.grid.planar_fallbacks,
                result.grid.flagged_vertices,
                out.display()
            );
        }
        Command::Eval {
            rec,
            gt,
            gt_shape,
            eps,
            samples,
            field_cloud,
            json,
            params,
        } => {
            let cfg = params.resolve()?;
            let report = pipeline::with_threads(cfg.threads, || -> Result<EvalReport> {
                let rec_mesh = io::read_mesh(&rec)?;
                let rec_samples = sample_mesh_surface(&rec_mesh, samples, cfg.seed)?;
                let gt_shape_parsed = gt_shape.as_deref().map(parse_shape).transpose()?;
                let gt_samples = match (&gt, &gt_shape_parsed) {
                    (Some(path), None) => {
                        let gt_mesh = io::read_mesh(path)?;
                        sample_mesh_surface(&gt_mesh, samples, cfg.seed + 1)?
                    }
                    (None, Some(shape)) => sample_surface(shape, samples, cfg.seed + 1)?,
                    _ => bail!("eval needs exactly one of --gt or --gt-shape"),
                };
                let cd = chamfer_distance(&rec_samples, &gt_samples)?;
                let mut f_scores = Vec::new();
                for e in &eps {
                    f_scores.push(f_score(&rec_samples, &gt_samples, *e)?);
                }
                let (udf_mae, grad_angle) = match (&field_cloud, &gt_shape_parsed) {
                    (Some(path), Some(shape)) => {
                        let cloud = io::read_point_cloud(path)?;
                        let dense = pipeline::upsample_cloud(&cloud, &cfg)?;
                        let field = DistanceField::new(
                            dense,
                            cfg.k,
                            cfg.value_scheme,
                            cfg.gradient_scheme,
                        )?;
                        let oracle = FieldOracle::Shape(shape.clone());
                        let errs = udf_error_protocol(
                            &field,
                            &oracle,
                            64,
                            DistanceEstimate::PointToTangent,
                        )?;
                        (Some(errs.mae), Some(errs.grad_angle_mean_deg))
                    }
                    (Some(_), None) => bail!("--field-cloud requires --gt-shape"),
                    _ => (None, None),
                };
                Ok(EvalReport {
                    cd,
                    cd_x100: cd * 100.0,
                    f_scores,
                    udf_mae,
                    grad_angle_mean_deg: grad_angle,
                    mesh: mesh_diagnostics(&rec_mesh),
                })
            })??;
            print!("{}", report.render_text());
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            }
        }
    }
    Ok(())
}
