//! Surface material and the six-light rig.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

/// Tissue color and the per-sample jitter applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    pub base_color: [f64; 3],
    /// Half-width of the uniform hue shift, in degrees.
    pub hue_jitter_deg: f64,
    /// Half-width of the additive saturation shift.
    pub saturation_jitter: f64,
    /// Half-width of the additive value shift.
    pub value_jitter: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            base_color: [0.80, 0.13, 0.18],
            hue_jitter_deg: 20.0,
            saturation_jitter: 0.10,
            value_jitter: 0.10,
        }
    }
}

impl MaterialParams {
    /// Shifts the base color in HSV space; the result is clamped to `[0, 1]`.
    pub fn jitter(&self, rng: &mut SeededRng) -> [f64; 3] {
        let dh = rng.symmetric(self.hue_jitter_deg);
        let ds = rng.symmetric(self.saturation_jitter);
        let dv = rng.symmetric(self.value_jitter);
        let base = self.base_color.map(|c| c.clamp(0.0, 1.0));
        if dh == 0.0 && ds == 0.0 && dv == 0.0 {
            return base;
        }
        let [h, s, v] = rgb_to_hsv(base);
        hsv_to_rgb([(h + dh).rem_euclid(360.0), (s + ds).clamp(0.0, 1.0), (v + dv).clamp(0.0, 1.0)])
            .map(|c| c.clamp(0.0, 1.0))
    }
}

/// `[h (degrees), s, v]`
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    [h, s, max]
}

pub fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// White point light. Negative intensity removes light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLight {
    pub position: Point3<f64>,
    pub intensity: f64,
}

/// One white ambient term, two glare lights, three negative lights.
#[derive(Debug, Clone, PartialEq)]
pub struct LightingRig {
    pub ambient: f64,
    pub glare: [PointLight; 2],
    pub negative: [PointLight; 3],
    /// Blinn-Phong weight for the glare highlights.
    pub specular_strength: f64,
    pub shininess: f64,
    /// Inverse-square falloff is clamped below this distance.
    pub min_distance: f64,
}

impl LightingRig {
    /// `(ambient, glare, negative)` light counts.
    pub fn light_counts(&self) -> (usize, usize, usize) {
        (1, self.glare.len(), self.negative.len())
    }

    pub fn ambient_only(ambient: f64) -> Self {
        let off = PointLight {
            position: Point3::origin(),
            intensity: 0.0,
        };
        Self {
            ambient,
            glare: [off; 2],
            negative: [off; 3],
            specular_strength: 0.0,
            shininess: 1.0,
            min_distance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.ambient >= 0.0 && self.ambient.is_finite()) {
            return Err(format!("ambient intensity must be >= 0, got {}", self.ambient));
        }
        if self.glare.iter().any(|l| !(l.intensity > 0.0 && l.intensity.is_finite())) {
            return Err("glare lights need positive intensity".into());
        }
        if self.negative.iter().any(|l| !(l.intensity < 0.0 && l.intensity.is_finite())) {
            return Err("negative lights need negative intensity".into());
        }
        if !(self.min_distance > 0.0 && self.min_distance.is_finite()) {
            return Err("min_distance must be > 0".into());
        }
        Ok(())
    }

    /// Linear color at a surface point before 8-bit quantization.
    ///
    /// `normal` must already face the viewer; `to_eye` is the unit vector from
    /// the point toward the camera.
    pub fn shade(&self, albedo: [f64; 3], point: Point3<f64>, normal: Vector3<f64>, to_eye: Vector3<f64>) -> [f64; 3] {
        let min_d2 = self.min_distance * self.min_distance;
        let mut diffuse = self.ambient;
        let mut specular = 0.0;
        for (light, is_glare) in self
            .glare
            .iter()
            .map(|l| (l, true))
            .chain(self.negative.iter().map(|l| (l, false)))
        {
            if light.intensity == 0.0 {
                continue;
            }
            let to_light = light.position - point;
            let d2 = to_light.norm_squared();
            if d2 == 0.0 {
                continue;
            }
            let l = to_light / d2.sqrt();
            let lambert = normal.dot(&l);
            if lambert <= 0.0 {
                continue;
            }
            let falloff = light.intensity / d2.max(min_d2);
            diffuse += falloff * lambert;
            if is_glare && self.specular_strength > 0.0 {
                let half = (l + to_eye).normalize();
                let ndh = normal.dot(&half).max(0.0);
                specular += falloff * self.specular_strength * ndh.powf(self.shininess);
            }
        }
        albedo.map(|a| (a * diffuse + specular).clamp(0.0, 1.0))
    }
}

pub fn to_u8(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsv_round_trip() {
        for rgb in [[0.8, 0.13, 0.18], [0.1, 0.9, 0.3], [0.2, 0.2, 0.9], [0.5, 0.5, 0.5], [0.0, 0.0, 0.0]] {
            let back = hsv_to_rgb(rgb_to_hsv(rgb));
            for k in 0..3 {
                assert!((back[k] - rgb[k]).abs() < 1e-12, "{rgb:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn zero_jitter_keeps_base_color() {
        let material = MaterialParams {
            hue_jitter_deg: 0.0,
            saturation_jitter: 0.0,
            value_jitter: 0.0,
            ..MaterialParams::default()
        };
        let mut rng = SeededRng::new(1, 2, "material");
        assert_eq!(material.jitter(&mut rng), [0.80, 0.13, 0.18]);
    }

    #[test]
    fn jitter_stays_in_range_and_near_base_hue() {
        let material = MaterialParams::default();
        let base_hue = rgb_to_hsv(material.base_color)[0];
        for i in 0..500 {
            let c = material.jitter(&mut SeededRng::new(3, i, "material"));
            assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
            let h = rgb_to_hsv(c)[0];
            let diff = ((h - base_hue + 180.0).rem_euclid(360.0) - 180.0).abs();
            assert!(diff <= 20.0 + 1e-9, "hue moved {diff} degrees");
        }
    }

    #[test]
    fn ambient_only_scales_albedo() {
        let rig = LightingRig::ambient_only(1.0);
        let c = rig.shade([0.8, 0.13, 0.18], Point3::origin(), Vector3::z(), Vector3::z());
        assert_eq!(c.map(to_u8), [204, 33, 46]);
    }

    #[test]
    fn negative_light_clamps_at_black() {
        let mut rig = LightingRig::ambient_only(0.2);
        rig.negative[0] = PointLight {
            position: Point3::new(0.0, 0.0, 1.0),
            intensity: -5.0,
        };
        let c = rig.shade([0.8, 0.5, 0.5], Point3::origin(), Vector3::z(), Vector3::z());
        assert_eq!(c, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn light_behind_surface_does_nothing() {
        let mut rig = LightingRig::ambient_only(0.5);
        rig.glare[0] = PointLight {
            position: Point3::new(0.0, 0.0, -1.0),
            intensity: 3.0,
        };
        rig.specular_strength = 1.0;
        let c = rig.shade([1.0, 1.0, 1.0], Point3::origin(), Vector3::z(), Vector3::z());
        assert_eq!(c, [0.5, 0.5, 0.5]);
    }

    #[test]
    fn validation_enforces_light_signs() {
        let mut rig = LightingRig::ambient_only(0.3);
        assert!(rig.validate().is_err());
        for l in rig.glare.iter_mut() {
            l.intensity = 1.0;
        }
        for l in rig.negative.iter_mut() {
            l.intensity = -1.0;
        }
        assert!(rig.validate().is_ok());
        assert_eq!(rig.light_counts(), (1, 2, 3));
    }
}
