//! Procedural colon and polyp geometry.

mod colon;
mod polyp;

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use colon::{bend_segments, displace_vertices, make_colon, make_cone_tube, Centerline, Colon, ColonParams, SEGMENT_COUNT};
pub use polyp::{make_polyp, place_polyp, Polyp, PolypParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("triangle {triangle} is invalid: {reason}")]
    InvalidTriangle { triangle: usize, reason: String },
    #[error("polyp placement failed: {0}")]
    Placement(String),
}

pub(crate) fn param_error(field: &'static str, reason: impl Into<String>) -> MeshError {
    MeshError::InvalidParam {
        field,
        reason: reason.into(),
    }
}

/// Where a polyp sits inside the colon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementMode {
    /// Sunk into the colon wall.
    Wall,
    /// Floating on the centerline.
    Lumen,
}

impl std::fmt::Display for PlacementMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlacementMode::Wall => f.write_str("wall"),
            PlacementMode::Lumen => f.write_str("lumen"),
        }
    }
}

/// Indexed triangle mesh with per-vertex unit normals.
///
/// Topology is fixed at construction; operations that move vertices build a
/// new mesh and recompute normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vector3<f64>>,
}

impl Mesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(MeshError::InvalidTriangle {
                    triangle: t,
                    reason: format!("index out of range for {n} vertices"),
                });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::InvalidTriangle {
                    triangle: t,
                    reason: "repeated vertex index".into(),
                });
            }
        }
        Ok(Self::with_topology(vertices, triangles))
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            normals: Vec::new(),
        }
    }

    // Caller guarantees the triangle list is valid for `vertices`.
    pub(crate) fn with_topology(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Self {
        let normals = vertex_normals(&vertices, &triangles);
        Self {
            vertices,
            triangles,
            normals,
        }
    }

    /// Same topology, new positions.
    pub(crate) fn moved(&self, vertices: Vec<Point3<f64>>) -> Self {
        debug_assert_eq!(vertices.len(), self.vertices.len());
        Self::with_topology(vertices, self.triangles.clone())
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            triangles: self.triangles.clone(),
            normals: self.normals.clone(),
        }
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_positions(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Number of triangles incident to each undirected edge.
    pub fn edge_incidence(&self) -> HashMap<(u32, u32), usize> {
        let mut edges = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// True when every edge borders exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.edge_incidence().values().all(|&c| c == 2)
    }
}

/// Area-weighted vertex normals. Vertices with no usable incident area get +Z.
fn vertex_normals(vertices: &[Point3<f64>], triangles: &[[u32; 3]]) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); vertices.len()];
    for tri in triangles {
        let [a, b, c] = tri.map(|i| vertices[i as usize]);
        let face = (b - a).cross(&(c - a));
        for &i in tri {
            acc[i as usize] += face;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 1e-300 && len.is_finite() {
                n / len
            } else {
                Vector3::z()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> Mesh {
        Mesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = Mesh::new(vec![Point3::origin(); 3], vec![[0, 1, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::InvalidTriangle { triangle: 0, .. }));
    }

    #[test]
    fn rejects_repeated_index() {
        let err = Mesh::new(vec![Point3::origin(); 3], vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::InvalidTriangle { .. }));
    }

    #[test]
    fn normals_are_unit() {
        let mesh = tetrahedron();
        for n in mesh.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_vertex_gets_fallback_normal() {
        let mut verts = tetrahedron().vertices().to_vec();
        verts.push(Point3::new(5.0, 5.0, 5.0));
        let mesh = Mesh::new(verts, tetrahedron().triangles().to_vec()).unwrap();
        assert_eq!(mesh.normals()[4], Vector3::z());
    }

    #[test]
    fn tetrahedron_is_watertight_and_a_single_triangle_is_not() {
        assert!(tetrahedron().is_watertight());
        let single = Mesh::new(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)], vec![[0, 1, 2]]).unwrap();
        assert!(!single.is_watertight());
    }

    #[test]
    fn translation_keeps_topology_and_normals() {
        let mesh = tetrahedron();
        let moved = mesh.translated(Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(moved.triangles(), mesh.triangles());
        assert_eq!(moved.normals(), mesh.normals());
        assert_eq!(moved.vertices()[0], Point3::new(1.0, 2.0, 3.0));
    }
}
