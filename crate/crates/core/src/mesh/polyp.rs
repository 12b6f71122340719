use nalgebra::{Point3, Vector2, Vector3};
use rand::RngCore;

use super::{param_error, Colon, Mesh, MeshError, PlacementMode};
use crate::rng::SeededRng;

/// Fraction of the polyp radius by which a wall polyp is pushed into the lumen
/// from the wall surface.
const WALL_SINK_FRACTION: f64 = 0.5;
/// Lumen polyps are centered within this axial window of the tube.
const LUMEN_WINDOW: (f64, f64) = (0.2, 0.8);

#[derive(Debug, Clone, PartialEq)]
pub struct PolypParams {
    pub radius: f64,
    pub longitude_bands: usize,
    /// Vertex parallels between the two pole vertices. The sphere has
    /// `2 * longitude_bands * latitude_rings` triangles.
    pub latitude_rings: usize,
    /// Radial distortion as a fraction of `radius`.
    pub distortion_amplitude: f64,
    pub distortion_frequency: f64,
}

impl Default for PolypParams {
    fn default() -> Self {
        Self {
            radius: 0.5,
            longitude_bands: 128,
            latitude_rings: 64,
            distortion_amplitude: 0.25,
            distortion_frequency: 2.0,
        }
    }
}

impl PolypParams {
    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(param_error("radius", format!("must be finite and > 0, got {}", self.radius)));
        }
        if self.longitude_bands < 3 {
            return Err(param_error("longitude_bands", "must be at least 3"));
        }
        if self.latitude_rings < 1 {
            return Err(param_error("latitude_rings", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.distortion_amplitude) {
            return Err(param_error(
                "distortion_amplitude",
                format!("must be in [0, 1), got {}", self.distortion_amplitude),
            ));
        }
        if !(self.distortion_frequency > 0.0 && self.distortion_frequency.is_finite()) {
            return Err(param_error("distortion_frequency", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn triangle_count(&self) -> usize {
        2 * self.longitude_bands * self.latitude_rings
    }
}

/// A polyp mesh and where its center sits.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyp {
    mesh: Mesh,
    center: Point3<f64>,
    radius: f64,
    bounding_radius: f64,
}

impl Polyp {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn center(&self) -> Point3<f64> {
        self.center
    }

    /// Nominal (undistorted) radius.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest vertex distance from the center.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn moved_to(&self, center: Point3<f64>) -> Polyp {
        Polyp {
            mesh: self.mesh.translated(center - self.center),
            center,
            ..self.clone()
        }
    }
}

/// Distorted UV sphere centered at the origin.
///
/// Poles are single vertices closed with triangle fans, so the mesh is
/// watertight with `2 * longitude_bands * latitude_rings` triangles.
pub fn make_polyp(params: &PolypParams, rng: &mut SeededRng) -> Result<Polyp, MeshError> {
    params.validate()?;
    let noise = ValueNoise::new(rng.next_u64());
    let lon = params.longitude_bands;
    let lat = params.latitude_rings;
    let displace = |dir: Vector3<f64>| -> Point3<f64> {
        let n = noise.sample(dir * params.distortion_frequency);
        Point3::from(dir * params.radius * (1.0 + params.distortion_amplitude * n))
    };

    let mut vertices = Vec::with_capacity(lon * lat + 2);
    vertices.push(displace(Vector3::z()));
    for k in 1..=lat {
        let polar = std::f64::consts::PI * k as f64 / (lat + 1) as f64;
        let (sp, cp) = polar.sin_cos();
        for j in 0..lon {
            let azimuth = std::f64::consts::TAU * j as f64 / lon as f64;
            let (sa, ca) = azimuth.sin_cos();
            vertices.push(displace(Vector3::new(sp * ca, sp * sa, cp)));
        }
    }
    vertices.push(displace(-Vector3::z()));

    let north = 0u32;
    let south = (lon * lat + 1) as u32;
    let ring = |k: usize, j: usize| (1 + (k - 1) * lon + j % lon) as u32;
    let mut triangles = Vec::with_capacity(params.triangle_count());
    for j in 0..lon {
        triangles.push([north, ring(1, j), ring(1, j + 1)]);
    }
    for k in 1..lat {
        for j in 0..lon {
            let (a, b) = (ring(k, j), ring(k, j + 1));
            let (c, d) = (ring(k + 1, j), ring(k + 1, j + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    for j in 0..lon {
        triangles.push([south, ring(lat, j + 1), ring(lat, j)]);
    }

    let bounding_radius = vertices.iter().map(|v| v.coords.norm()).fold(0.0, f64::max);
    Ok(Polyp {
        mesh: Mesh::with_topology(vertices, triangles),
        center: Point3::origin(),
        radius: params.radius,
        bounding_radius,
    })
}

/// Positions a polyp inside the colon.
///
/// `Wall` picks a seeded wall vertex in the middle of the tube and pushes the
/// center half a radius toward the axis, so the polyp intersects the wall.
/// `Lumen` centers it on the axis at a seeded depth in the middle 60% of the
/// tube, and fails if it would not fit.
pub fn place_polyp(colon: &Colon, polyp: &Polyp, mode: PlacementMode, rng: &mut SeededRng) -> Result<Polyp, MeshError> {
    let length = colon.length();
    let center = match mode {
        PlacementMode::Lumen => {
            let z = rng.uniform(LUMEN_WINDOW.0, LUMEN_WINDOW.1) * length;
            let local = colon.radius_at(z);
            if polyp.bounding_radius() > local {
                return Err(MeshError::Placement(format!(
                    "polyp diameter {:.4} exceeds tube diameter {:.4} at depth {z:.4}",
                    2.0 * polyp.bounding_radius(),
                    2.0 * local
                )));
            }
            colon.centerline().point_at(z)
        }
        PlacementMode::Wall => {
            let rings = colon.rings();
            let lo = ((rings as f64 * LUMEN_WINDOW.0).ceil() as usize).min(rings);
            let hi = ((rings as f64 * LUMEN_WINDOW.1).floor() as usize).max(lo);
            let ring = rng.index_inclusive(lo, hi);
            let segment = rng.index_inclusive(0, colon.radial_segments() - 1);
            let surface = colon.mesh().vertices()[colon.ring_vertex(ring, segment)];
            let inward = colon.centerline().lateral_at(surface.z) - Vector2::new(surface.x, surface.y);
            let inward = if inward.norm() > 0.0 { inward.normalize() } else { Vector2::zeros() };
            let sink = WALL_SINK_FRACTION * polyp.radius();
            Point3::new(surface.x + inward.x * sink, surface.y + inward.y * sink, surface.z)
        }
    };
    Ok(polyp.moved_to(center))
}

/// Smooth 3D value noise with values in `[-1, 1]`.
struct ValueNoise {
    seed: u64,
}

impl ValueNoise {
    fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn lattice(&self, x: i64, y: i64, z: i64) -> f64 {
        let mut h = self.seed ^ 0x9E37_79B9_7F4A_7C15;
        for c in [x, y, z] {
            h = splitmix(h ^ c as u64);
        }
        (h >> 11) as f64 / ((1u64 << 53) - 1) as f64 * 2.0 - 1.0
    }

    fn sample(&self, p: Vector3<f64>) -> f64 {
        let base = p.map(f64::floor);
        let frac = p - base;
        let w = frac.map(|t| t * t * (3.0 - 2.0 * t));
        let (ix, iy, iz) = (base.x as i64, base.y as i64, base.z as i64);
        let mut acc = 0.0;
        for corner in 0..8u8 {
            let (dx, dy, dz) = ((corner & 1) as i64, ((corner >> 1) & 1) as i64, ((corner >> 2) & 1) as i64);
            let weight = (if dx == 1 { w.x } else { 1.0 - w.x })
                * (if dy == 1 { w.y } else { 1.0 - w.y })
                * (if dz == 1 { w.z } else { 1.0 - w.z });
            acc += weight * self.lattice(ix + dx, iy + dy, iz + dz);
        }
        acc.clamp(-1.0, 1.0)
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
