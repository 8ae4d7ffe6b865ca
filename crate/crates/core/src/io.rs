//! File formats: XYZ/PLY point clouds, OBJ/PLY meshes, and the binary
//! distance-grid dump.
//!
//! XYZ is plain ASCII, one `x y z` triple per line, `#` starting a
//! comment. PLY is read in both ASCII and binary-little-endian forms;
//! writers always emit binary little-endian with f32 coordinates. OBJ uses
//! `v`/`f` records with 1-based indices. ASCII floats are written in
//! shortest round-trip form, so an XYZ write/read cycle is bit-exact.
//!
//! Grid dump layout (all little-endian):
//! `"UDFG"` magic, `u16` version (= 1), `u32` resolution (cells per axis),
//! six `f64` bounding-box values (min xyz, max xyz), then `(R+1)³` records
//! of `f32` distance + 3 × `f32` gradient in x-major vertex order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Point3, PointCloud, Vec3};
use crate::grid::UdfGrid;
use crate::mesh::TriangleMesh;

const UDFG_MAGIC: &[u8; 4] = b"UDFG";
const UDFG_VERSION: u16 = 1;

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Reads a point cloud from `.xyz` or `.ply` (positions only; any normals
/// in the file are ignored — the pipeline never consumes input normals).
pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    match extension(path).as_str() {
        "xyz" => read_xyz(path),
        "ply" => {
            let (points, _normals, _faces) = read_ply(path)?;
            PointCloud::new(points)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "point cloud format '{other}' (expected xyz or ply)"
        ))),
    }
}

/// Writes a point cloud; `.xyz` stores positions only, `.ply` also stores
/// normals when provided.
pub fn write_point_cloud(path: &Path, cloud: &PointCloud, normals: Option<&[Vec3]>) -> Result<()> {
    match extension(path).as_str() {
        "xyz" => write_xyz(path, cloud),
        "ply" => write_ply_points(path, cloud, normals),
        other => Err(Error::UnsupportedFormat(format!(
            "point cloud format '{other}' (expected xyz or ply)"
        ))),
    }
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    let content = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (num, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                path,
                num + 1,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        let mut coords = [0.0f64; 3];
        for (i, f) in fields.iter().enumerate() {
            coords[i] = f
                .parse()
                .map_err(|_| parse_err(path, num + 1, format!("invalid number '{f}'")))?;
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    PointCloud::new(points)
}

pub fn write_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in &cloud.points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a mesh from `.obj` or `.ply`.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    match extension(path).as_str() {
        "obj" => read_obj(path),
        "ply" => {
            let (points, _normals, faces) = read_ply(path)?;
            Ok(TriangleMesh::new(points, faces))
        }
        other => Err(Error::UnsupportedFormat(format!(
            "mesh format '{other}' (expected obj or ply)"
        ))),
    }
}

/// Writes a mesh to `.obj` (ASCII) or `.ply` (binary little-endian, f32).
pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    match extension(path).as_str() {
        "obj" => write_obj(path, mesh),
        "ply" => write_ply_mesh(path, mesh),
        other => Err(Error::UnsupportedFormat(format!(
            "mesh format '{other}' (expected obj or ply)"
        ))),
    }
}

fn read_obj(path: &Path) -> Result<TriangleMesh> {
    let content = std::fs::read_to_string(path)?;
    let mut vertices: Vec<Point3> = Vec::new();
    let mut triangles = Vec::new();
    for (num, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = it
                        .next()
                        .ok_or_else(|| parse_err(path, num + 1, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(path, num + 1, format!("invalid number '{tok}'")))?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut ids = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let raw_idx: i64 = first
                        .parse()
                        .map_err(|_| parse_err(path, num + 1, format!("invalid index '{tok}'")))?;
                    let idx = if raw_idx < 0 {
                        vertices.len() as i64 + raw_idx
                    } else {
                        raw_idx - 1
                    };
                    if idx < 0 || idx as usize >= vertices.len() {
                        return Err(parse_err(
                            path,
                            num + 1,
                            format!("index {raw_idx} out of range"),
                        ));
                    }
                    ids.push(idx as usize);
                }
                if ids.len() < 3 {
                    return Err(parse_err(path, num + 1, "face needs at least 3 vertices"));
                }
                for i in 1..ids.len() - 1 {
                    triangles.push([ids[0], ids[i], ids[i + 1]]);
                }
            }
            _ => {} // vn/vt/usemtl/... ignored
        }
    }
    Ok(TriangleMesh::new(vertices, triangles))
}

fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyType {
    F32,
    F64,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl PlyType {
    fn parse(tok: &str) -> Option<Self> {
        Some(match tok {
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::F32 | PlyType::I32 | PlyType::U32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read_binary(self, bytes: &[u8]) -> f64 {
        match self {
            PlyType::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyType::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
            PlyType::I8 => bytes[0] as i8 as f64,
            PlyType::U8 => bytes[0] as f64,
            PlyType::I16 => i16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            PlyType::U16 => u16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            PlyType::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyType::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
        }
    }
}

/// Minimal PLY reader: positions, optional normals, optional triangulated
/// faces. ASCII and binary little-endian.
#[allow(clippy::type_complexity)]
fn read_ply(path: &Path) -> Result<(Vec<Point3>, Option<Vec<Vec3>>, Vec<[usize; 3]>)> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;

    // Header is ASCII up to "end_header".
    let header_end = raw
        .windows(10)
        .position(|w| w == b"end_header")
        .ok_or_else(|| parse_err(path, 0, "missing end_header"))?;
    let body_start = header_end
        + raw[header_end..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(path, 0, "missing newline after end_header"))?
        + 1;
    let header = std::str::from_utf8(&raw[..header_end])
        .map_err(|_| parse_err(path, 0, "header is not valid UTF-8"))?;

    let mut ascii = None;
    let mut vertex_count = 0usize;
    let mut face_count = 0usize;
    let mut vertex_props: Vec<(PlyType, String)> = Vec::new();
    let mut face_list: Option<(PlyType, PlyType)> = None;
    let mut current = "";
    for (num, line) in header.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["ply"] | ["comment", ..] | [] => {}
            ["format", "ascii", _] => ascii = Some(true),
            ["format", "binary_little_endian", _] => ascii = Some(false),
            ["format", other, _] => {
                return Err(parse_err(
                    path,
                    num + 1,
                    format!("unsupported format {other}"),
                ))
            }
            ["element", "vertex", n] => {
                vertex_count = n
                    .parse()
                    .map_err(|_| parse_err(path, num + 1, "bad vertex count"))?;
                current = "vertex";
            }
            ["element", "face", n] => {
                face_count = n
                    .parse()
                    .map_err(|_| parse_err(path, num + 1, "bad face count"))?;
                current = "face";
            }
            ["element", _, _] => current = "other",
            ["property", "list", count_ty, index_ty, _name] if current == "face" => {
                let ct = PlyType::parse(count_ty)
                    .ok_or_else(|| parse_err(path, num + 1, "bad list count type"))?;
                let it = PlyType::parse(index_ty)
                    .ok_or_else(|| parse_err(path, num + 1, "bad list index type"))?;
                face_list = Some((ct, it));
            }
            ["property", ty, name] if current == "vertex" => {
                let t = PlyType::parse(ty)
                    .ok_or_else(|| parse_err(path, num + 1, format!("bad property type {ty}")))?;
                vertex_props.push((t, (*name).to_string()));
            }
            ["property", ..] => {}
            ["end_header"] => break,
            _ => {
                return Err(parse_err(
                    path,
                    num + 1,
                    format!("bad header line '{line}'"),
                ))
            }
        }
    }
    let ascii = ascii.ok_or_else(|| parse_err(path, 0, "missing format line"))?;
    let find = |name: &str| vertex_props.iter().position(|(_, n)| n == name);
    let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(parse_err(path, 0, "vertex element lacks x/y/z")),
    };
    let normal_idx = match (find("nx"), find("ny"), find("nz")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };

    let mut points = Vec::with_capacity(vertex_count);
    let mut normals = normal_idx.map(|_| Vec::with_capacity(vertex_count));
    let mut faces = Vec::with_capacity(face_count);

    if ascii {
        let body = std::str::from_utf8(&raw[body_start..])
            .map_err(|_| parse_err(path, 0, "ascii body is not valid UTF-8"))?;
        let mut lines = body.lines().filter(|l| !l.trim().is_empty());
        for e in 0..vertex_count {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(path, e + 1, "unexpected end of vertex data"))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap_or(f64::NAN))
                .collect();
            if vals.len() < vertex_props.len() || vals.iter().any(|v| v.is_nan()) {
                return Err(parse_err(path, e + 1, "malformed vertex element"));
            }
            points.push(Point3::new(vals[ix], vals[iy], vals[iz]));
            if let (Some(ns), Some((a, b, c))) = (normals.as_mut(), normal_idx) {
                ns.push(Vec3::new(vals[a], vals[b], vals[c]));
            }
        }
        for e in 0..face_count {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(path, e + 1, "unexpected end of face data"))?;
            let vals: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap_or(-1))
                .collect();
            if vals.is_empty() || vals[0] < 3 || vals.len() != 1 + vals[0] as usize {
                return Err(parse_err(path, e + 1, "malformed face element"));
            }
            push_face(&vals[1..], points.len(), &mut faces)
                .map_err(|msg| parse_err(path, e + 1, msg))?;
        }
    } else {
        let mut body = &raw[body_start..];
        let stride: usize = vertex_props.iter().map(|(t, _)| t.size()).sum();
        if body.len() < stride * vertex_count {
            return Err(parse_err(path, 0, "binary vertex data truncated"));
        }
        for _ in 0..vertex_count {
            let mut offset = 0;
            let mut vals = Vec::with_capacity(vertex_props.len());
            for (t, _) in &vertex_props {
                vals.push(t.read_binary(&body[offset..]));
                offset += t.size();
            }
            points.push(Point3::new(vals[ix], vals[iy], vals[iz]));
            if let (Some(ns), Some((a, b, c))) = (normals.as_mut(), normal_idx) {
                ns.push(Vec3::new(vals[a], vals[b], vals[c]));
            }
            body = &body[stride..];
        }
        if face_count > 0 {
            let (count_ty, index_ty) =
                face_list.ok_or_else(|| parse_err(path, 0, "face element lacks list property"))?;
            for e in 0..face_count {
                if body.len() < count_ty.size() {
                    return Err(parse_err(path, e + 1, "binary face data truncated"));
                }
                let n = count_ty.read_binary(body) as usize;
                body = &body[count_ty.size()..];
                if n < 3 || body.len() < n * index_ty.size() {
                    return Err(parse_err(path, e + 1, "malformed face element"));
                }
                let mut ids = Vec::with_capacity(n);
                for _ in 0..n {
                    ids.push(index_ty.read_binary(body) as i64);
                    body = &body[index_ty.size()..];
                }
                push_face(&ids, points.len(), &mut faces)
                    .map_err(|msg| parse_err(path, e + 1, msg))?;
            }
        }
    }
    Ok((points, normals, faces))
}

fn push_face(
    ids: &[i64],
    vertex_count: usize,
    faces: &mut Vec<[usize; 3]>,
) -> std::result::Result<(), String> {
    for &id in ids {
        if id < 0 || id as usize >= vertex_count {
            return Err(format!("vertex index {id} out of range"));
        }
    }
    for i in 1..ids.len() - 1 {
        faces.push([ids[0] as usize, ids[i] as usize, ids[i + 1] as usize]);
    }
    Ok(())
}

fn write_ply_points(path: &Path, cloud: &PointCloud, normals: Option<&[Vec3]>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    if normals.is_some() {
        writeln!(w, "property float nx")?;
        writeln!(w, "property float ny")?;
        writeln!(w, "property float nz")?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
        if let Some(ns) = normals {
            for c in [ns[i].x, ns[i].y, ns[i].z] {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_ply_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    writeln!(w, "element face {}", mesh.triangles.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for p in &mesh.vertices {
        for c in [p.x, p.y, p.z] {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8])?;
        for &v in t {
            w.write_all(&(v as i32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Serializes a grid to the UDFG binary layout.
pub fn dump_udf_grid(path: &Path, grid: &UdfGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(UDFG_MAGIC)?;
    w.write_all(&UDFG_VERSION.to_le_bytes())?;
    w.write_all(&(grid.resolution() as u32).to_le_bytes())?;
    let bb = grid.bbox();
    for v in [bb.min.x, bb.min.y, bb.min.z, bb.max.x, bb.max.y, bb.max.z] {
        w.write_all(&v.to_le_bytes())?;
    }
    for (phi, grad) in grid.raw_phi().iter().zip(grid.raw_grad()) {
        w.write_all(&phi.to_le_bytes())?;
        for g in grad {
            w.write_all(&g.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a grid dump, validating magic, version, and payload size.
pub fn load_udf_grid(path: &Path) -> Result<UdfGrid> {
    let corrupt = |msg: &str| Error::CorruptGrid {
        path: path.display().to_string(),
        msg: msg.to_string(),
    };
    let raw = std::fs::read(path)?;
    if raw.len() < 58 {
        return Err(corrupt("file shorter than header"));
    }
    if &raw[0..4] != UDFG_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u16::from_le_bytes(raw[4..6].try_into().unwrap());
    if version != UDFG_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let resolution = u32::from_le_bytes(raw[6..10].try_into().unwrap()) as usize;
    let mut bb = [0.0f64; 6];
    for (i, v) in bb.iter_mut().enumerate() {
        *v = f64::from_le_bytes(raw[10 + i * 8..18 + i * 8].try_into().unwrap());
    }
    let n = resolution + 1;
    let expect = 58 + n * n * n * 16;
    if raw.len() != expect {
        return Err(corrupt(&format!(
            "payload size {} does not match resolution (expected {expect})",
            raw.len()
        )));
    }
    let mut phi = Vec::with_capacity(n * n * n);
    let mut grad = Vec::with_capacity(n * n * n);
    let mut o = 58;
    for _ in 0..n * n * n {
        phi.push(f32::from_le_bytes(raw[o..o + 4].try_into().unwrap()));
        grad.push([
            f32::from_le_bytes(raw[o + 4..o + 8].try_into().unwrap()),
            f32::from_le_bytes(raw[o + 8..o + 12].try_into().unwrap()),
            f32::from_le_bytes(raw[o + 12..o + 16].try_into().unwrap()),
        ]);
        o += 16;
    }
    let bbox = Aabb::new(
        Point3::new(bb[0], bb[1], bb[2]),
        Point3::new(bb[3], bb[4], bb[5]),
    )
    .map_err(|_| corrupt("invalid bounding box"))?;
    UdfGrid::new(resolution, bbox, phi, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn xyz_basic_parse() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.xyz");
        std::fs::write(&p, "0 0 0\n1 2 3\n").unwrap();
        let cloud = read_point_cloud(&p).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.points[1], Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn xyz_comments_and_blanks_skipped() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.xyz");
        std::fs::write(&p, "# header\n\n0.5 0 0 # trailing\n").unwrap();
        let cloud = read_point_cloud(&p).unwrap();
        assert_eq!(cloud.len(), 1);
    }

    #[test]
    fn xyz_short_line_cites_line_number() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.xyz");
        std::fs::write(&p, "0 0 0\n1 1 1\n1 2\n").unwrap();
        match read_point_cloud(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn xyz_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("rt.xyz");
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let cloud = PointCloud::new(
            (0..10_000)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1e-6..1e-6),
                        rng.random_range(-1e12..1e12),
                    )
                })
                .collect(),
        )
        .unwrap();
        write_point_cloud(&p, &cloud, None).unwrap();
        let back = read_point_cloud(&p).unwrap();
        for (a, b) in cloud.points.iter().zip(&back.points) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
    }

    #[test]
    fn obj_single_triangle_layout() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("t.obj");
        let mesh = TriangleMesh::new(
            vec![
                Point3::origin(),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        );
        write_mesh(&p, &mesh).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert!(text.lines().any(|l| l == "f 1 2 3"));
        let back = read_mesh(&p).unwrap();
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.triangles, mesh.triangles);
    }

    #[test]
    fn empty_mesh_round_trips() {
        let dir = tempdir().unwrap();
        for name in ["e.obj", "e.ply"] {
            let p = dir.path().join(name);
            write_mesh(&p, &TriangleMesh::default()).unwrap();
            let back = read_mesh(&p).unwrap();
            assert!(back.vertices.is_empty() && back.triangles.is_empty());
        }
    }

    #[test]
    fn ply_mesh_round_trip_f32() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.ply");
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let vertices: Vec<Point3> = (0..50)
            .map(|_| {
                Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let triangles: Vec<[usize; 3]> = (0..30)
            .map(|_| {
                [
                    rng.random_range(0..50),
                    rng.random_range(0..50),
                    rng.random_range(0..50),
                ]
            })
            .collect();
        let mesh = TriangleMesh::new(vertices, triangles);
        write_mesh(&p, &mesh).unwrap();
        let back = read_mesh(&p).unwrap();
        assert_eq!(back.triangles, mesh.triangles);
        for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn ply_ascii_read() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.ply");
        std::fs::write(
            &p,
            "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\n\
             property float x\nproperty float y\nproperty float z\n\
             element face 1\nproperty list uchar int vertex_indices\nend_header\n\
             0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
        )
        .unwrap();
        let mesh = read_mesh(&p).unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn ply_cloud_with_normals_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("n.ply");
        let cloud = PointCloud::new(vec![Point3::new(0.25, 0.5, -0.125)]).unwrap();
        let normals = vec![Vec3::z()];
        write_point_cloud(&p, &cloud, Some(&normals)).unwrap();
        let (pts, ns, _) = read_ply(&p).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((ns.unwrap()[0] - Vec3::z()).norm() < 1e-7);
        // And the generic cloud reader ignores the normals.
        let back = read_point_cloud(&p).unwrap();
        assert_eq!(back.len(), 1);
    }

    fn tiny_grid() -> UdfGrid {
        let bbox = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        let n = 27;
        let phi: Vec<f32> = (0..n).map(|i| i as f32 * 0.01).collect();
        let grad: Vec<[f32; 3]> = (0..n)
            .map(|i| {
                if i % 5 == 0 {
                    [0.0; 3]
                } else {
                    [0.0, 0.0, 1.0]
                }
            })
            .collect();
        UdfGrid::new(2, bbox, phi, grad).unwrap()
    }

    #[test]
    fn udfg_file_size_matches_layout() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("g.udfg");
        dump_udf_grid(&p, &tiny_grid()).unwrap();
        let len = std::fs::metadata(&p).unwrap().len();
        assert_eq!(len, 4 + 2 + 4 + 48 + 27 * 16);
    }

    #[test]
    fn udfg_round_trip_exact() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("g.udfg");
        let grid = tiny_grid();
        dump_udf_grid(&p, &grid).unwrap();
        let back = load_udf_grid(&p).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn udfg_truncated_file_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("g.udfg");
        dump_udf_grid(&p, &tiny_grid()).unwrap();
        let mut raw = std::fs::read(&p).unwrap();
        raw.truncate(raw.len() - 10);
        std::fs::write(&p, &raw).unwrap();
        assert!(matches!(load_udf_grid(&p), Err(Error::CorruptGrid { .. })));
    }

    #[test]
    fn udfg_bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("g.udfg");
        dump_udf_grid(&p, &tiny_grid()).unwrap();
        let mut raw = std::fs::read(&p).unwrap();
        raw[0] = b'X';
        std::fs::write(&p, &raw).unwrap();
        assert!(matches!(load_udf_grid(&p), Err(Error::CorruptGrid { .. })));
    }
}
