//! Procedurally generated colonoscopy scenes with pixel-exact polyp masks and
//! depth maps, plus Dice/IoU evaluation of predicted masks.
//!
//! The pipeline is: [`scene::build_scene`] (colon tube, polyp, material,
//! lights, camera) → [`render::render`] (color, mask, depth from one ray set)
//! → [`render::accept_sample`] → [`export::write_sample`]. Everything is a pure
//! function of the configuration and the seed.

pub mod config;
pub mod export;
pub mod mask;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod rng;
pub mod scene;

pub use config::GenerationConfig;
pub use mask::Mask;
pub use mesh::{Mesh, PlacementMode};
pub use rng::SeededRng;
