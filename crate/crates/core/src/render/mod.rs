//! Primary-ray renderer producing color, polyp mask and depth from one ray set.

mod bvh;
mod shading;

use image::{Rgb, RgbImage};
use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

pub use bvh::{intersect_triangle, Bvh, Hit, Ray};
pub use shading::{hsv_to_rgb, rgb_to_hsv, to_u8, LightingRig, MaterialParams, PointLight};

use crate::mask::Mask;
use crate::mesh::Mesh;

/// Resolution at which the polyp-pixel threshold is specified.
pub const REFERENCE_RESOLUTION: u32 = 500;
pub const DEFAULT_MIN_POLYP_PIXELS: usize = 20_000;

/// Pinhole camera with a square image.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub position: Point3<f64>,
    pub look_at: Point3<f64>,
    pub up: Vector3<f64>,
    pub vertical_fov_deg: f64,
    pub near: f64,
    pub far: f64,
    pub resolution: u32,
}

impl Camera {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(format!("need 0 < near < far, got near={} far={}", self.near, self.far));
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return Err(format!("fov must be in (0, 180), got {}", self.vertical_fov_deg));
        }
        if self.resolution == 0 {
            return Err("resolution must be positive".into());
        }
        let forward = self.look_at - self.position;
        if forward.norm() == 0.0 || forward.cross(&self.up).norm() == 0.0 {
            return Err("look_at and up must define a camera frame".into());
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal_length(&self) -> f64 {
        0.5 * self.resolution as f64 / (0.5 * self.vertical_fov_deg.to_radians()).tan()
    }

    /// `(forward, right, up)`, orthonormal.
    pub fn basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let forward = (self.look_at - self.position).normalize();
        let right = forward.cross(&self.up).normalize();
        let up = right.cross(&forward);
        (forward, right, up)
    }

    /// Ray through the center of pixel `(x, y)`. The direction has unit
    /// forward component, so the hit parameter `t` is camera-space depth.
    pub fn primary_ray(&self, x: u32, y: u32) -> Ray {
        let (forward, right, up) = self.basis();
        self.ray_with_basis(x, y, forward, right, up)
    }

    fn ray_with_basis(&self, x: u32, y: u32, forward: Vector3<f64>, right: Vector3<f64>, up: Vector3<f64>) -> Ray {
        let f = self.focal_length();
        let half = 0.5 * self.resolution as f64;
        let dx = (x as f64 + 0.5 - half) / f;
        let dy = (y as f64 + 0.5 - half) / f;
        Ray::new(self.position, forward + right * dx - up * dy)
    }

    /// Depth of a world point along the viewing axis.
    pub fn depth_of(&self, point: Point3<f64>) -> f64 {
        (point - self.position).dot(&self.basis().0)
    }
}

/// Triangles ready for ray casting: background (colon) first, then polyp.
#[derive(Debug, Clone)]
pub struct Geometry {
    triangles: Vec<[Point3<f64>; 3]>,
    normals: Vec<[Vector3<f64>; 3]>,
    polyp_start: usize,
    bvh: Bvh,
}

impl Geometry {
    pub fn new(background: &Mesh, polyp: Option<&Mesh>) -> Self {
        let mut triangles = Vec::new();
        let mut normals = Vec::new();
        let mut push = |mesh: &Mesh| {
            for tri in mesh.triangles() {
                triangles.push(tri.map(|i| mesh.vertices()[i as usize]));
                normals.push(tri.map(|i| mesh.normals()[i as usize]));
            }
        };
        push(background);
        let polyp_start = background.triangle_count();
        if let Some(p) = polyp {
            push(p);
        }
        let bvh = Bvh::build(&triangles);
        Self {
            triangles,
            normals,
            polyp_start,
            bvh,
        }
    }

    pub fn triangles(&self) -> &[[Point3<f64>; 3]] {
        &self.triangles
    }

    pub fn is_polyp(&self, triangle: u32) -> bool {
        triangle as usize >= self.polyp_start
    }

    pub fn nearest(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<Hit> {
        self.bvh.nearest(&self.triangles, ray, t_min, t_max)
    }

    /// Interpolated vertex normal at a hit, flipped to face the ray origin.
    pub fn shading_normal(&self, hit: &Hit, ray: &Ray) -> Vector3<f64> {
        let [n0, n1, n2] = self.normals[hit.triangle as usize];
        let mut n = n0 * (1.0 - hit.u - hit.v) + n1 * hit.u + n2 * hit.v;
        if n.norm_squared() < 1e-24 {
            let [a, b, c] = self.triangles[hit.triangle as usize];
            n = (b - a).cross(&(c - a));
        }
        let n = n.normalize();
        if n.dot(&ray.dir) > 0.0 {
            -n
        } else {
            n
        }
    }
}

/// Per-pixel camera-space depth. Pixels with no hit hold `far`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    near: f64,
    far: f64,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, near: f64, far: f64, values: Vec<f64>) -> Option<Self> {
        (values.len() == width as usize * height as usize).then_some(Self {
            width,
            height,
            near,
            far,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Color, mask and depth rendered from the same primary rays.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    color: RgbImage,
    mask: Mask,
    depth: DepthMap,
    polyp_pixel_count: usize,
}

impl RenderOutput {
    pub fn from_parts(color: RgbImage, mask: Mask, depth: DepthMap) -> Result<Self, String> {
        let dims = color.dimensions();
        if mask.dimensions() != dims || (depth.width, depth.height) != dims {
            return Err(format!(
                "buffer sizes differ: color {:?}, mask {:?}, depth {:?}",
                dims,
                mask.dimensions(),
                (depth.width, depth.height)
            ));
        }
        let polyp_pixel_count = mask.count();
        Ok(Self {
            color,
            mask,
            depth,
            polyp_pixel_count,
        })
    }

    pub fn color(&self) -> &RgbImage {
        &self.color
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn depth(&self) -> &DepthMap {
        &self.depth
    }

    pub fn polyp_pixel_count(&self) -> usize {
        self.polyp_pixel_count
    }

    pub fn resolution(&self) -> u32 {
        self.color.width()
    }

    pub fn into_parts(self) -> (RgbImage, Mask, DepthMap) {
        (self.color, self.mask, self.depth)
    }
}

/// Albedo and lights for one render.
#[derive(Debug, Clone, PartialEq)]
pub struct Shading {
    pub albedo: [f64; 3],
    pub rig: LightingRig,
}

/// Nearest hit for every pixel in row-major order.
pub fn trace(geometry: &Geometry, camera: &Camera) -> Vec<Option<Hit>> {
    let res = camera.resolution as usize;
    let (forward, right, up) = camera.basis();
    let mut hits = vec![None; res * res];
    hits.par_chunks_mut(res).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let ray = camera.ray_with_basis(x as u32, y as u32, forward, right, up);
            *slot = geometry.nearest(&ray, camera.near, camera.far);
        }
    });
    hits
}

#[derive(Clone, Copy)]
struct Pixel {
    rgb: [u8; 3],
    polyp: bool,
    depth: f64,
}

/// Renders color, mask and depth in one pass over the pixels.
///
/// Rows are independent, so the result does not depend on thread count.
pub fn render(geometry: &Geometry, camera: &Camera, shading: &Shading) -> RenderOutput {
    let res = camera.resolution as usize;
    let (forward, right, up) = camera.basis();
    let miss = Pixel {
        rgb: [0; 3],
        polyp: false,
        depth: camera.far,
    };
    let mut pixels = vec![miss; res * res];
    pixels.par_chunks_mut(res).enumerate().for_each(|(y, row)| {
        for (x, px) in row.iter_mut().enumerate() {
            let ray = camera.ray_with_basis(x as u32, y as u32, forward, right, up);
            if let Some(hit) = geometry.nearest(&ray, camera.near, camera.far) {
                let point = ray.at(hit.t);
                let normal = geometry.shading_normal(&hit, &ray);
                let to_eye = -ray.dir.normalize();
                let c = shading.rig.shade(shading.albedo, point, normal, to_eye);
                *px = Pixel {
                    rgb: c.map(to_u8),
                    polyp: geometry.is_polyp(hit.triangle),
                    depth: hit.t,
                };
            }
        }
    });

    let side = camera.resolution;
    let color = RgbImage::from_fn(side, side, |x, y| Rgb(pixels[y as usize * res + x as usize].rgb));
    let mask = Mask::from_bits(side, side, pixels.iter().map(|p| p.polyp).collect()).expect("square buffer");
    let depth = DepthMap::new(side, side, camera.near, camera.far, pixels.iter().map(|p| p.depth).collect())
        .expect("square buffer");
    RenderOutput::from_parts(color, mask, depth).expect("buffers share the camera resolution")
}

/// Upper bound on the polyp's pixel footprint: pixels whose ray meets its
/// bounding sphere within the clip range.
pub fn bounding_sphere_pixels(camera: &Camera, center: Point3<f64>, radius: f64) -> usize {
    let (forward, right, up) = camera.basis();
    let res = camera.resolution;
    // margin absorbs rounding in the triangle test
    let r2 = (radius * (1.0 + 1e-6) + 1e-9).powi(2);
    (0..res)
        .into_par_iter()
        .map(|y| {
            (0..res)
                .filter(|&x| {
                    let ray = camera.ray_with_basis(x, y, forward, right, up);
                    let oc = ray.origin - center;
                    let a = ray.dir.norm_squared();
                    let b = oc.dot(&ray.dir);
                    let c = oc.norm_squared() - r2;
                    let disc = b * b - a * c;
                    if disc < 0.0 {
                        return false;
                    }
                    let s = disc.sqrt();
                    let (t0, t1) = ((-b - s) / a, (-b + s) / a);
                    t1 >= camera.near && t0 <= camera.far
                })
                .count()
        })
        .sum()
}

/// Keeps a sample only if the polyp covers at least `min_pixels` pixels.
pub fn accept_sample(output: &RenderOutput, min_pixels: usize) -> bool {
    output.polyp_pixel_count() >= min_pixels
}

/// Threshold specified at 500x500 rescaled to `resolution`, rounded up.
pub fn scaled_min_pixels(min_at_reference: usize, resolution: u32) -> usize {
    let reference = (REFERENCE_RESOLUTION as u128).pow(2);
    let scaled = (min_at_reference as u128 * (resolution as u128).pow(2)).div_ceil(reference);
    scaled as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera(resolution: u32) -> Camera {
        Camera {
            position: Point3::origin(),
            look_at: Point3::new(0.0, 0.0, 1.0),
            up: Vector3::y(),
            vertical_fov_deg: 60.0,
            near: 0.01,
            far: 20.0,
            resolution,
        }
    }

    fn quad(z: f64, half: f64) -> Mesh {
        Mesh::new(
            vec![
                Point3::new(-half, -half, z),
                Point3::new(half, -half, z),
                Point3::new(half, half, z),
                Point3::new(-half, half, z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    fn output_with_count(n: usize) -> RenderOutput {
        let side = 500u32;
        let mut k = 0;
        let mask = Mask::from_fn(side, side, |_, _| {
            k += 1;
            k <= n
        });
        let depth = DepthMap::new(side, side, 0.1, 10.0, vec![10.0; 250_000]).unwrap();
        RenderOutput::from_parts(RgbImage::new(side, side), mask, depth).unwrap()
    }

    #[test]
    fn threshold_boundary() {
        assert!(!accept_sample(&output_with_count(19_999), DEFAULT_MIN_POLYP_PIXELS));
        assert!(accept_sample(&output_with_count(20_000), DEFAULT_MIN_POLYP_PIXELS));
        assert!(!accept_sample(&output_with_count(0), DEFAULT_MIN_POLYP_PIXELS));
    }

    #[test]
    fn threshold_scaling() {
        assert_eq!(scaled_min_pixels(20_000, 500), 20_000);
        assert_eq!(scaled_min_pixels(20_000, 250), 5_000);
        assert_eq!(scaled_min_pixels(20_000, 100), 800);
        assert_eq!(scaled_min_pixels(1, 10), 1);
    }

    #[test]
    fn empty_scene_is_black_far_and_unmasked() {
        let cam = camera(32);
        let geometry = Geometry::new(&Mesh::empty(), None);
        let out = render(&geometry, &cam, &Shading { albedo: [1.0; 3], rig: LightingRig::ambient_only(1.0) });
        assert!(out.depth().values().iter().all(|&d| d == cam.far));
        assert!(out.color().pixels().all(|p| p.0 == [0, 0, 0]));
        assert_eq!(out.polyp_pixel_count(), 0);
    }

    #[test]
    fn frontal_quad_has_constant_depth() {
        let cam = camera(40);
        let geometry = Geometry::new(&quad(3.25, 100.0), None);
        let out = render(&geometry, &cam, &Shading { albedo: [0.5; 3], rig: LightingRig::ambient_only(1.0) });
        for &d in out.depth().values() {
            assert!((d - 3.25).abs() < 1e-4);
        }
    }

    #[test]
    fn polyp_triangles_drive_the_mask() {
        let cam = camera(40);
        let geometry = Geometry::new(&quad(5.0, 100.0), Some(&quad(2.0, 0.5)));
        let out = render(&geometry, &cam, &Shading { albedo: [0.5; 3], rig: LightingRig::ambient_only(1.0) });
        assert!(out.polyp_pixel_count() > 0);
        for y in 0..40 {
            for x in 0..40 {
                let d = out.depth().get(x, y);
                assert_eq!(out.mask().get(x, y), (d - 2.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trace_agrees_with_render() {
        let cam = camera(24);
        let geometry = Geometry::new(&quad(5.0, 1.0), Some(&quad(2.0, 0.3)));
        let hits = trace(&geometry, &cam);
        let out = render(&geometry, &cam, &Shading { albedo: [0.5; 3], rig: LightingRig::ambient_only(1.0) });
        for (i, hit) in hits.iter().enumerate() {
            let depth = out.depth().values()[i];
            match hit {
                Some(h) => {
                    assert_eq!(h.t, depth);
                    assert_eq!(geometry.is_polyp(h.triangle), out.mask().bits()[i]);
                }
                None => assert_eq!(depth, cam.far),
            }
        }
    }

    #[test]
    fn depth_of_matches_ray_parameter() {
        let cam = Camera {
            position: Point3::new(1.0, 2.0, 3.0),
            look_at: Point3::new(2.0, 2.5, 5.0),
            ..camera(16)
        };
        let ray = cam.primary_ray(3, 12);
        let p = ray.at(2.75);
        assert!((cam.depth_of(p) - 2.75).abs() < 1e-12);
    }

    #[test]
    fn bounding_sphere_bound_covers_sphere_disc() {
        let cam = camera(100);
        let n = bounding_sphere_pixels(&cam, Point3::new(0.0, 0.0, 4.0), 0.5);
        let f = cam.focal_length();
        let disc = std::f64::consts::PI * (0.5 * f / 4.0f64).powi(2);
        assert!(n as f64 >= disc * 0.95 && (n as f64) < disc * 1.1, "{n} vs {disc}");
        assert_eq!(bounding_sphere_pixels(&cam, Point3::new(0.0, 0.0, -4.0), 0.5), 0);
    }

    #[test]
    fn camera_validation() {
        assert!(camera(10).validate().is_ok());
        assert!(Camera { near: 0.0, ..camera(10) }.validate().is_err());
        assert!(Camera { far: 0.001, ..camera(10) }.validate().is_err());
        assert!(Camera { vertical_fov_deg: 180.0, ..camera(10) }.validate().is_err());
        assert!(Camera { resolution: 0, ..camera(10) }.validate().is_err());
        assert!(Camera { up: Vector3::z(), ..camera(10) }.validate().is_err());
    }
}
