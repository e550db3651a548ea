//! Radiance baked into a grid of per-voxel tiny networks, and an offline
//! light-selection network trained from per-light contributions.

mod bake;
mod grid;
mod visibility;

pub use bake::{
    eval_baked, eval_baked_radiance, generate_training_data, render_baked, train_voxel_networks, BakeConfig, BakedValue,
    TrainSettings, VoxelReport,
};
pub use grid::{decode_radiance, encode_radiance, BakeSample, VoxelNetGrid, RADIANCE_OFFSET, VOXEL_NET_SIZES};
pub use visibility::{train_visibility_net, visibility_training_data, VisibilityConfig, VisibilityReport};
