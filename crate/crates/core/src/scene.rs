//! Per-sample scene assembly: geometry, material, lights and camera.

use image::RgbImage;
use nalgebra::{Vector2, Vector3};
use rand::Rng;

use crate::config::{ColonConfig, GenerationConfig};
use crate::mask::Mask;
use crate::mesh::{make_colon, make_polyp, place_polyp, Colon, ColonParams, MeshError, PlacementMode, Polyp, SEGMENT_COUNT};
use crate::render::{self, Camera, DepthMap, Geometry, LightingRig, PointLight, RenderOutput, Shading};
use crate::rng::SeededRng;

/// One fully specified render job.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSample {
    pub colon: Colon,
    pub polyp: Polyp,
    pub placement: PlacementMode,
    /// Jittered tissue color.
    pub albedo: [f64; 3],
    pub rig: LightingRig,
    pub camera: Camera,
    pub index: u64,
    pub seed: u64,
    pub attempt: u32,
}

impl SceneSample {
    pub fn geometry(&self) -> Geometry {
        Geometry::new(self.colon.mesh(), Some(self.polyp.mesh()))
    }

    pub fn shading(&self) -> Shading {
        Shading {
            albedo: self.albedo,
            rig: self.rig.clone(),
        }
    }

    pub fn render(&self) -> RenderOutput {
        render::render(&self.geometry(), &self.camera, &self.shading())
    }

    /// Polyp pixel count can not exceed this; lets hopeless attempts skip the full render.
    pub fn polyp_pixel_bound(&self) -> usize {
        render::bounding_sphere_pixels(&self.camera, self.polyp.center(), self.polyp.bounding_radius())
    }
}

pub fn render_color(scene: &SceneSample) -> RgbImage {
    scene.render().into_parts().0
}

pub fn render_mask(scene: &SceneSample) -> Mask {
    scene.render().into_parts().1
}

pub fn render_depth(scene: &SceneSample) -> DepthMap {
    scene.render().into_parts().2
}

pub(crate) fn colon_params(config: &ColonConfig, bend_offsets: Vec<Vector2<f64>>) -> ColonParams {
    ColonParams {
        radial_segments: config.radial_segments,
        rings: config.rings,
        base_radius: config.base_radius,
        tip_radius: config.tip_radius,
        length: config.length,
        displacement_sigma: config.displacement_sigma * config.base_radius,
        bend_offsets,
    }
}

/// Builds the scene for `(config.seed, index, attempt)`.
///
/// Each random decision uses its own keyed stream, so changing one part of
/// the config does not reshuffle the others.
pub fn build_scene(config: &GenerationConfig, index: u64, attempt: u32) -> Result<SceneSample, MeshError> {
    let seed = config.seed;
    let stream = |purpose: &str| SeededRng::new(seed, index, &format!("{purpose}#{attempt}"));

    let mut bend_rng = stream("bend");
    let m = config.colon.bend_magnitude * config.colon.base_radius;
    let offsets = (0..SEGMENT_COUNT)
        .map(|_| Vector2::new(bend_rng.symmetric(m), bend_rng.symmetric(m)))
        .collect();
    let colon = make_colon(&colon_params(&config.colon, offsets), &mut stream("colon"))?;

    let mut shape_rng = stream("polyp");
    let p = &config.polyp;
    let radius = shape_rng.uniform(p.radius_min, p.radius_max) * config.colon.base_radius;
    let polyp = make_polyp(&p.params(radius), &mut shape_rng)?;
    let mut place_rng = stream("placement");
    let placement = if place_rng.random_bool(p.wall_probability) {
        PlacementMode::Wall
    } else {
        PlacementMode::Lumen
    };
    let polyp = place_polyp(&colon, &polyp, placement, &mut place_rng)?;

    let albedo = config.material.jitter(&mut stream("material"));
    let camera = camera_for(config, &colon);
    let rig = lighting_rig(config, &colon, &camera, &mut stream("lights"));

    Ok(SceneSample {
        colon,
        polyp,
        placement,
        albedo,
        rig,
        camera,
        index,
        seed,
        attempt,
    })
}

/// Camera at the tube opening looking down the axis.
fn camera_for(config: &GenerationConfig, colon: &Colon) -> Camera {
    let start = colon.centerline().point_at(0.0);
    Camera {
        position: start,
        look_at: start + Vector3::z(),
        up: Vector3::y(),
        vertical_fov_deg: config.camera.vertical_fov_deg,
        near: config.camera.near,
        far: config.camera.far,
        resolution: config.resolution,
    }
}

/// Glare lights flank the camera; negative lights form a triangle around the
/// centerline near the far end.
fn lighting_rig(config: &GenerationConfig, colon: &Colon, camera: &Camera, rng: &mut SeededRng) -> LightingRig {
    let l = &config.lighting;
    let (_, right, up) = camera.basis();
    let lateral = l.glare_lateral * config.colon.base_radius;
    let glare = [-1.0, 1.0].map(|side| {
        let jitter = Vector3::new(rng.symmetric(l.glare_jitter), rng.symmetric(l.glare_jitter), rng.symmetric(l.glare_jitter));
        PointLight {
            position: camera.position + right * (side * lateral) + jitter,
            intensity: l.glare_intensity,
        }
    });
    let center = colon.centerline().point_at(l.negative_depth_fraction * colon.length());
    let spread = l.negative_spread * config.colon.base_radius;
    let negative = [90.0f64, 210.0, 330.0].map(|deg| {
        let a = deg.to_radians();
        PointLight {
            position: center + right * (spread * a.cos()) + up * (spread * a.sin()),
            intensity: l.negative_intensity,
        }
    });
    LightingRig {
        ambient: l.ambient,
        glare,
        negative,
        specular_strength: l.specular_strength,
        shininess: l.shininess,
        min_distance: l.min_distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> GenerationConfig {
        GenerationConfig {
            resolution: 64,
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn same_key_same_scene() {
        let c = small_config();
        assert_eq!(build_scene(&c, 3, 0).unwrap(), build_scene(&c, 3, 0).unwrap());
        assert_ne!(build_scene(&c, 3, 0).unwrap(), build_scene(&c, 3, 1).unwrap());
    }

    #[test]
    fn zero_jitter_gives_base_color() {
        let mut c = small_config();
        c.material.hue_jitter_deg = 0.0;
        c.material.saturation_jitter = 0.0;
        c.material.value_jitter = 0.0;
        for i in 0..5 {
            if let Ok(scene) = build_scene(&c, i, 0) {
                assert_eq!(scene.albedo, [0.80, 0.13, 0.18]);
            }
        }
    }

    #[test]
    fn rig_has_one_two_three_lights() {
        let c = small_config();
        for i in 0..10 {
            if let Ok(scene) = build_scene(&c, i, 0) {
                assert_eq!(scene.rig.light_counts(), (1, 2, 3));
                assert!(scene.rig.validate().is_ok());
                for light in &scene.rig.negative {
                    assert!((light.position.z - 0.95 * scene.colon.length()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn default_scene_face_counts() {
        let scene = (0..20).find_map(|i| build_scene(&small_config(), i, 0).ok()).unwrap();
        assert_eq!(scene.colon.mesh().triangle_count(), 2460);
        assert_eq!(scene.polyp.mesh().triangle_count(), 16384);
    }

    #[test]
    fn bound_dominates_mask() {
        let c = small_config();
        for i in 0..6 {
            if let Ok(scene) = build_scene(&c, i, 0) {
                assert!(scene.render().polyp_pixel_count() <= scene.polyp_pixel_bound());
            }
        }
    }
}
