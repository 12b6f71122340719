use nalgebra::{Point3, Vector2};
use rand_distr::{Distribution, Normal};

use super::{param_error, Mesh, MeshError};
use crate::rng::SeededRng;

/// The colon axis is split into this many bendable segments.
pub const SEGMENT_COUNT: usize = 7;

/// Shape of a colon tube. Lengths are in scene units (base radius 1.0 by default).
#[derive(Debug, Clone, PartialEq)]
pub struct ColonParams {
    pub radial_segments: usize,
    pub rings: usize,
    pub base_radius: f64,
    pub tip_radius: f64,
    pub length: f64,
    /// Standard deviation of the radial vertex jitter.
    pub displacement_sigma: f64,
    /// Lateral (x, y) offset of each segment's control point.
    pub bend_offsets: Vec<Vector2<f64>>,
}

impl Default for ColonParams {
    fn default() -> Self {
        Self {
            radial_segments: 30,
            rings: 41,
            base_radius: 1.0,
            tip_radius: 0.8,
            length: 6.0,
            displacement_sigma: 0.05,
            bend_offsets: vec![Vector2::zeros(); SEGMENT_COUNT],
        }
    }
}

impl ColonParams {
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.radial_segments < 3 {
            return Err(param_error("radial_segments", format!("must be at least 3, got {}", self.radial_segments)));
        }
        if self.rings < 1 {
            return Err(param_error("rings", "must be at least 1"));
        }
        positive("base_radius", self.base_radius)?;
        positive("tip_radius", self.tip_radius)?;
        positive("length", self.length)?;
        if !(self.displacement_sigma >= 0.0 && self.displacement_sigma.is_finite()) {
            return Err(param_error("displacement_sigma", format!("must be finite and >= 0, got {}", self.displacement_sigma)));
        }
        check_offsets(&self.bend_offsets)?;
        if (self.rings + 1) * self.radial_segments > u32::MAX as usize {
            return Err(param_error("rings", "vertex count overflows 32-bit indices"));
        }
        Ok(())
    }

    pub fn triangle_count(&self) -> usize {
        2 * self.radial_segments * self.rings
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), MeshError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(param_error(field, format!("must be finite and > 0, got {value}")))
    }
}

fn check_offsets(offsets: &[Vector2<f64>]) -> Result<(), MeshError> {
    if offsets.len() != SEGMENT_COUNT {
        return Err(param_error(
            "bend_offsets",
            format!("expected {SEGMENT_COUNT} offsets, got {}", offsets.len()),
        ));
    }
    if offsets.iter().any(|o| !o.x.is_finite() || !o.y.is_finite()) {
        return Err(param_error("bend_offsets", "offsets must be finite"));
    }
    Ok(())
}

/// Piecewise-linear tube axis running along +z from `z = 0` to `z = length`.
///
/// Knots sit at both tube ends (always on the z axis) and at the midpoint of
/// each of the seven segments, where the segment's lateral offset applies.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    length: f64,
    offsets: Vec<Vector2<f64>>,
}

impl Centerline {
    pub fn straight(length: f64) -> Self {
        Self {
            length,
            offsets: vec![Vector2::zeros(); SEGMENT_COUNT],
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn offsets(&self) -> &[Vector2<f64>] {
        &self.offsets
    }

    fn knots(&self) -> impl Iterator<Item = (f64, Vector2<f64>)> + '_ {
        let seg = self.length / SEGMENT_COUNT as f64;
        std::iter::once((0.0, Vector2::zeros()))
            .chain(self.offsets.iter().enumerate().map(move |(k, o)| ((k as f64 + 0.5) * seg, *o)))
            .chain(std::iter::once((self.length, Vector2::zeros())))
    }

    pub fn control_points(&self) -> Vec<Point3<f64>> {
        self.knots().map(|(z, o)| Point3::new(o.x, o.y, z)).collect()
    }

    /// Lateral axis offset at height `z`, clamped to the tube's extent.
    pub fn lateral_at(&self, z: f64) -> Vector2<f64> {
        let z = z.clamp(0.0, self.length);
        let knots: Vec<_> = self.knots().collect();
        for pair in knots.windows(2) {
            let (z0, o0) = pair[0];
            let (z1, o1) = pair[1];
            if z <= z1 {
                let s = if z1 > z0 { (z - z0) / (z1 - z0) } else { 0.0 };
                return o0 + (o1 - o0) * s;
            }
        }
        knots[knots.len() - 1].1
    }

    pub fn point_at(&self, z: f64) -> Point3<f64> {
        let o = self.lateral_at(z);
        Point3::new(o.x, o.y, z.clamp(0.0, self.length))
    }

    fn shifted(&self, extra: &[Vector2<f64>]) -> Self {
        Self {
            length: self.length,
            offsets: self.offsets.iter().zip(extra).map(|(a, b)| a + b).collect(),
        }
    }
}

/// A colon tube together with the axis it was built around.
#[derive(Debug, Clone, PartialEq)]
pub struct Colon {
    mesh: Mesh,
    centerline: Centerline,
    radial_segments: usize,
    rings: usize,
    base_radius: f64,
    tip_radius: f64,
}

impl Colon {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn centerline(&self) -> &Centerline {
        &self.centerline
    }

    pub fn radial_segments(&self) -> usize {
        self.radial_segments
    }

    pub fn rings(&self) -> usize {
        self.rings
    }

    pub fn length(&self) -> f64 {
        self.centerline.length
    }

    /// Undisplaced tube radius at height `z`.
    pub fn radius_at(&self, z: f64) -> f64 {
        let s = (z / self.length()).clamp(0.0, 1.0);
        self.base_radius + (self.tip_radius - self.base_radius) * s
    }

    /// Vertex index of `segment` on vertex circle `ring` (`0..=rings`).
    pub fn ring_vertex(&self, ring: usize, segment: usize) -> usize {
        ring * self.radial_segments + segment % self.radial_segments
    }
}

/// Open tapered tube along +z: `rings + 1` vertex circles, `2 * segments * rings` triangles.
pub fn make_cone_tube(params: &ColonParams) -> Result<Colon, MeshError> {
    params.validate()?;
    let segs = params.radial_segments;
    let rings = params.rings;
    let mut vertices = Vec::with_capacity((rings + 1) * segs);
    for i in 0..=rings {
        let s = i as f64 / rings as f64;
        let z = params.length * s;
        let r = params.base_radius + (params.tip_radius - params.base_radius) * s;
        for j in 0..segs {
            let theta = std::f64::consts::TAU * j as f64 / segs as f64;
            vertices.push(Point3::new(r * theta.cos(), r * theta.sin(), z));
        }
    }
    let mut triangles = Vec::with_capacity(params.triangle_count());
    for i in 0..rings {
        for j in 0..segs {
            let a = (i * segs + j) as u32;
            let b = (i * segs + (j + 1) % segs) as u32;
            let c = ((i + 1) * segs + j) as u32;
            let d = ((i + 1) * segs + (j + 1) % segs) as u32;
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    Ok(Colon {
        mesh: Mesh::with_topology(vertices, triangles),
        centerline: Centerline::straight(params.length),
        radial_segments: segs,
        rings,
        base_radius: params.base_radius,
        tip_radius: params.tip_radius,
    })
}

/// Moves every vertex along its outward radial direction by an independent
/// `Normal(0, sigma^2)` draw. Axial coordinates are untouched.
pub fn displace_vertices(colon: &Colon, sigma: f64, rng: &mut SeededRng) -> Result<Colon, MeshError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(param_error("displacement_sigma", format!("must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(colon.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let vertices = colon
        .mesh
        .vertices()
        .iter()
        .map(|p| {
            let offset = normal.sample(rng);
            let radial = Vector2::new(p.x, p.y) - colon.centerline.lateral_at(p.z);
            let len = radial.norm();
            if len > 0.0 {
                let dir = radial / len;
                Point3::new(p.x + dir.x * offset, p.y + dir.y * offset, p.z)
            } else {
                *p
            }
        })
        .collect();
    Ok(Colon {
        mesh: colon.mesh.moved(vertices),
        ..colon.clone()
    })
}

/// Shifts the tube laterally so its axis follows the bent centerline.
///
/// Each vertex moves by the centerline's lateral offset at its own height, so
/// the deformation is continuous across segment boundaries and both tube ends
/// stay put.
pub fn bend_segments(colon: &Colon, offsets: &[Vector2<f64>]) -> Result<Colon, MeshError> {
    check_offsets(offsets)?;
    if offsets.iter().all(|o| o.x == 0.0 && o.y == 0.0) {
        return Ok(colon.clone());
    }
    let delta = Centerline {
        length: colon.length(),
        offsets: offsets.to_vec(),
    };
    let vertices = colon
        .mesh
        .vertices()
        .iter()
        .map(|p| {
            let o = delta.lateral_at(p.z);
            Point3::new(p.x + o.x, p.y + o.y, p.z)
        })
        .collect();
    Ok(Colon {
        mesh: colon.mesh.moved(vertices),
        centerline: colon.centerline.shifted(offsets),
        ..colon.clone()
    })
}

/// Tube, then radial jitter, then bending.
pub fn make_colon(params: &ColonParams, rng: &mut SeededRng) -> Result<Colon, MeshError> {
    let tube = make_cone_tube(params)?;
    let displaced = displace_vertices(&tube, params.displacement_sigma, rng)?;
    bend_segments(&displaced, &params.bend_offsets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(segments: usize, rings: usize) -> ColonParams {
        ColonParams {
            radial_segments: segments,
            rings,
            ..ColonParams::default()
        }
    }

    #[test]
    fn default_grid_counts() {
        let colon = make_cone_tube(&params(30, 41)).unwrap();
        assert_eq!(colon.mesh().vertex_count(), 1260);
        assert_eq!(colon.mesh().triangle_count(), 2460);
    }

    #[test]
    fn three_segment_grid_hits_2454_faces() {
        let colon = make_cone_tube(&params(3, 409)).unwrap();
        assert_eq!(colon.mesh().triangle_count(), 2454);
    }

    #[test]
    fn zero_taper_is_a_cylinder() {
        let p = ColonParams {
            base_radius: 0.7,
            tip_radius: 0.7,
            ..params(12, 9)
        };
        let colon = make_cone_tube(&p).unwrap();
        for v in colon.mesh().vertices() {
            assert!((v.x.hypot(v.y) - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_interpolates_linearly() {
        let p = ColonParams {
            base_radius: 1.0,
            tip_radius: 0.5,
            length: 4.0,
            ..params(8, 4)
        };
        let colon = make_cone_tube(&p).unwrap();
        for ring in 0..=4 {
            let v = colon.mesh().vertices()[colon.ring_vertex(ring, 3)];
            let expected = 1.0 - 0.5 * ring as f64 / 4.0;
            assert!((v.x.hypot(v.y) - expected).abs() < 1e-12);
            assert!((v.z - ring as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_params_name_the_field() {
        let cases: Vec<(ColonParams, &str)> = vec![
            (params(2, 5), "radial_segments"),
            (params(8, 0), "rings"),
            (ColonParams { base_radius: 0.0, ..params(8, 4) }, "base_radius"),
            (ColonParams { tip_radius: -1.0, ..params(8, 4) }, "tip_radius"),
            (ColonParams { length: f64::NAN, ..params(8, 4) }, "length"),
            (ColonParams { displacement_sigma: -0.1, ..params(8, 4) }, "displacement_sigma"),
            (ColonParams { bend_offsets: vec![Vector2::zeros(); 6], ..params(8, 4) }, "bend_offsets"),
        ];
        for (p, field) in cases {
            match make_cone_tube(&p) {
                Err(MeshError::InvalidParam { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn zero_sigma_leaves_vertices_alone() {
        let tube = make_cone_tube(&params(16, 10)).unwrap();
        let out = displace_vertices(&tube, 0.0, &mut SeededRng::new(1, 0, "d")).unwrap();
        assert_eq!(out.mesh().vertices(), tube.mesh().vertices());
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let tube = make_cone_tube(&params(16, 10)).unwrap();
        assert!(displace_vertices(&tube, -1e-3, &mut SeededRng::new(1, 0, "d")).is_err());
    }

    #[test]
    fn displacement_is_radial_and_deterministic() {
        let tube = make_cone_tube(&params(16, 10)).unwrap();
        let a = displace_vertices(&tube, 0.1, &mut SeededRng::new(5, 2, "d")).unwrap();
        let b = displace_vertices(&tube, 0.1, &mut SeededRng::new(5, 2, "d")).unwrap();
        assert_eq!(a, b);
        for (before, after) in tube.mesh().vertices().iter().zip(a.mesh().vertices()) {
            assert_eq!(before.z, after.z);
            let cross = before.x * after.y - before.y * after.x;
            assert!(cross.abs() < 1e-12, "offset is not radial");
        }
        assert_eq!(a.mesh().triangles(), tube.mesh().triangles());
    }

    #[test]
    fn wrong_offset_count_is_rejected() {
        let tube = make_cone_tube(&params(8, 7)).unwrap();
        let err = bend_segments(&tube, &[Vector2::zeros(); 8]).unwrap_err();
        assert!(matches!(err, MeshError::InvalidParam { field: "bend_offsets", .. }));
    }

    #[test]
    fn zero_bend_is_identity() {
        let tube = make_cone_tube(&params(8, 7)).unwrap();
        let bent = bend_segments(&tube, &[Vector2::zeros(); SEGMENT_COUNT]).unwrap();
        assert_eq!(bent, tube);
    }

    #[test]
    fn single_offset_moves_only_its_control_point() {
        let tube = make_cone_tube(&ColonParams { length: 7.0, ..params(8, 14) }).unwrap();
        let d = Vector2::new(0.3, -0.2);
        for k in 0..SEGMENT_COUNT {
            let mut offsets = vec![Vector2::zeros(); SEGMENT_COUNT];
            offsets[k] = d;
            let bent = bend_segments(&tube, &offsets).unwrap();
            let line = bent.centerline();
            let mid = (k as f64 + 0.5) * 1.0;
            assert!((line.lateral_at(mid) - d).norm() < 1e-12);
            assert_eq!(line.point_at(0.0), Point3::new(0.0, 0.0, 0.0));
            assert_eq!(line.point_at(7.0), Point3::new(0.0, 0.0, 7.0));
            for (j, &(z, _)) in line.knots().collect::<Vec<_>>().iter().enumerate() {
                if j != k + 1 {
                    assert!(line.lateral_at(z).norm() < 1e-12);
                }
            }
            // ring 1 sits at z = 0.5, the first control point
            let v0 = tube.mesh().vertices()[tube.ring_vertex(2 * k + 1, 0)];
            let v1 = bent.mesh().vertices()[bent.ring_vertex(2 * k + 1, 0)];
            assert!(((v1 - v0).xy() - d).norm() < 1e-12);
        }
    }

    #[test]
    fn bending_is_continuous_and_preserves_counts() {
        let tube = make_cone_tube(&params(30, 41)).unwrap();
        let offsets: Vec<_> = (0..SEGMENT_COUNT).map(|k| Vector2::new(0.1 * k as f64, -0.05 * k as f64)).collect();
        let bent = bend_segments(&tube, &offsets).unwrap();
        assert_eq!(bent.mesh().vertex_count(), tube.mesh().vertex_count());
        assert_eq!(bent.mesh().triangle_count(), tube.mesh().triangle_count());
        let line = bent.centerline();
        let step = 1e-7;
        let mut z = 0.0;
        while z < line.length() {
            assert!((line.lateral_at(z + step) - line.lateral_at(z)).norm() < 1e-5);
            z += 0.01;
        }
        for n in bent.mesh().normals() {
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
    }
}
