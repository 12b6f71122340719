//! Minimal Wavefront OBJ reading and writing for triangle meshes.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::ExportError;
use crate::mesh::Mesh;

/// Positions, normals and 0-based triangle indices as stored in an OBJ file.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

impl ObjMesh {
    pub fn to_mesh(&self) -> Result<Mesh, ExportError> {
        Mesh::new(
            self.vertices.iter().map(|v| Point3::new(v[0], v[1], v[2])).collect(),
            self.faces.clone(),
        )
        .map_err(|e| ExportError::Data(e.to_string()))
    }
}

/// OBJ text for a mesh. Floats use Rust's shortest round-trip formatting, so
/// reading the file back reproduces the positions exactly.
pub fn obj_string(mesh: &Mesh, name: &str) -> String {
    let mut out = String::with_capacity(mesh.vertex_count() * 80 + mesh.triangle_count() * 40);
    let _ = writeln!(out, "# colonforge mesh");
    let _ = writeln!(out, "# vertices: {}", mesh.vertex_count());
    let _ = writeln!(out, "# faces: {}", mesh.triangle_count());
    let _ = writeln!(out, "o {name}");
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for n in mesh.normals() {
        let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
    }
    for [a, b, c] in mesh.triangles() {
        let (a, b, c) = (a + 1, b + 1, c + 1);
        let _ = writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}");
    }
    out
}

pub fn write_obj(mesh: &Mesh, name: &str, path: &Path) -> Result<(), ExportError> {
    std::fs::write(path, obj_string(mesh, name)).map_err(|source| ExportError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_obj(text: &str) -> Result<ObjMesh, String> {
    let mut mesh = ObjMesh {
        vertices: Vec::new(),
        normals: Vec::new(),
        faces: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let err = |what: &str| format!("line {}: {what}", lineno + 1);
        match parts.next() {
            Some("v") => mesh.vertices.push(parse_triple(&mut parts).ok_or_else(|| err("bad vertex"))?),
            Some("vn") => mesh.normals.push(parse_triple(&mut parts).ok_or_else(|| err("bad normal"))?),
            Some("f") => {
                let idx: Vec<u32> = parts
                    .map(|tok| {
                        tok.split('/')
                            .next()
                            .and_then(|i| i.parse::<u32>().ok())
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                    })
                    .collect::<Option<_>>()
                    .ok_or_else(|| err("bad face index"))?;
                if idx.len() != 3 {
                    return Err(err("only triangular faces are supported"));
                }
                mesh.faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    let n = mesh.vertices.len() as u32;
    if let Some(f) = mesh.faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
        return Err(format!("face {f:?} references a missing vertex"));
    }
    Ok(mesh)
}

fn parse_triple<'a>(parts: &mut impl Iterator<Item = &'a str>) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    for slot in &mut out {
        *slot = parts.next()?.parse().ok()?;
    }
    Some(out)
}

pub fn read_obj(path: &Path) -> Result<ObjMesh, ExportError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExportError::Read {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_obj(&text).map_err(|reason| ExportError::Read {
        path: path.to_path_buf(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_polyp, PolypParams};
    use crate::rng::SeededRng;

    #[test]
    fn positions_round_trip_exactly() {
        let polyp = make_polyp(
            &PolypParams {
                longitude_bands: 12,
                latitude_rings: 7,
                ..PolypParams::default()
            },
            &mut SeededRng::new(1, 1, "p"),
        )
        .unwrap();
        let parsed = parse_obj(&obj_string(polyp.mesh(), "polyp")).unwrap();
        assert_eq!(parsed.faces, polyp.mesh().triangles());
        let exact: Vec<[f64; 3]> = polyp.mesh().vertices().iter().map(|v| [v.x, v.y, v.z]).collect();
        assert_eq!(parsed.vertices, exact);
        assert_eq!(parsed.normals.len(), parsed.vertices.len());
        assert_eq!(parsed.to_mesh().unwrap().triangle_count(), 168);
    }

    #[test]
    fn accepts_plain_and_textured_face_syntax() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1/1/1 2/2/2 4/4/4\n";
        let parsed = parse_obj(text).unwrap();
        assert_eq!(parsed.faces, vec![[0, 1, 2], [0, 1, 3]]);
    }

    #[test]
    fn rejects_broken_files() {
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n").is_err());
        assert!(parse_obj("f 0 1 2\n").is_err());
    }
}
