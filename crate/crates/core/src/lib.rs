//! Physically based light transport with reinforcement-learned importance
//! sampling.
//!
//! * [`geometry`]: scenes, ray casting, BSDFs.
//! * [`qmc`]: Halton sample streams.
//! * [`nn`]: tiny dense networks with backpropagation.
//! * [`guiding`]: tabular Q-learning path guiding and residual-trained Q networks.
//! * [`nee`]: learned light selection for next event estimation.
//! * [`baking`]: radiance baked into a voxel grid of tiny networks.
//! * [`render`]: integrators, images, metrics and built-in scenes.

pub mod baking;
pub mod error;
pub mod geometry;
pub mod guiding;
pub mod math;
pub mod nee;
pub mod nn;
pub mod qmc;
pub mod render;

pub use error::{Error, Result};
pub use math::{Rgb, Vec3};
