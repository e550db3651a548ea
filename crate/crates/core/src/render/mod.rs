//! Integrators, built-in scenes, image buffers, metrics and image files.

mod config;
mod image;
pub mod imageio;
pub mod metrics;
mod pt;
pub mod scenes;

use rayon::prelude::*;

pub use config::{ExperimentConfig, Integrator, LearnerSettings};
pub use image::{ImageBuffer, PixelStats};
pub use imageio::{read_pfm, write_image, ImageFormat};
pub use metrics::{difference_image, false_color_light_index, rmse};
pub use pt::{path_trace_guided, path_trace_reference, radiance_from, render_direct_reference, GuidedStats, PtSettings};
pub use scenes::{builtin_by_name, scenes_builtin, SceneId};

use crate::math::mix64;
use crate::qmc::SampleStream;

/// Default tile edge in pixels.
pub const DEFAULT_TILE: usize = 16;

/// Cranley-Patterson key of a pixel's sample sequence.
pub fn pixel_key(seed: u64, pixel: usize) -> u64 {
    mix64(mix64(seed ^ 0x243f_6a88_85a3_08d3) ^ pixel as u64)
}

/// Sample stream of sample `s` out of `spp` at `pixel`: the pixel's samples
/// occupy consecutive Halton indices.
pub fn pixel_stream(seed: u64, pixel: usize, spp: usize, s: usize) -> SampleStream {
    SampleStream::with_key((pixel * spp + s) as u64, pixel_key(seed, pixel))
}

/// Film coordinates of a sample inside pixel `pixel`.
#[inline]
pub fn film_position(pixel: usize, width: usize, height: usize, u: [f64; 2]) -> [f64; 2] {
    let (x, y) = (pixel % width, pixel / width);
    [(x as f64 + u[0]) / width as f64, (y as f64 + u[1]) / height as f64]
}

/// Evaluates `f` for every pixel, tile by tile in parallel, and returns the
/// results in pixel order. The result does not depend on the tile size or
/// on the number of worker threads.
pub fn map_pixels_tiled<T, F>(width: usize, height: usize, tile: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let tile = tile.max(1);
    let tx = width.div_ceil(tile);
    let ty = height.div_ceil(tile);
    let tiles: Vec<Vec<(usize, T)>> = (0..tx * ty)
        .into_par_iter()
        .map(|t| {
            let (x0, y0) = ((t % tx) * tile, (t / tx) * tile);
            let mut out = Vec::with_capacity(tile * tile);
            for y in y0..(y0 + tile).min(height) {
                for x in x0..(x0 + tile).min(width) {
                    let p = y * width + x;
                    out.push((p, f(p)));
                }
            }
            out
        })
        .collect();
    let mut slots: Vec<Option<T>> = (0..width * height).map(|_| None).collect();
    for (p, v) in tiles.into_iter().flatten() {
        slots[p] = Some(v);
    }
    slots.into_iter().map(|v| v.expect("every pixel is covered by a tile")).collect()
}

/// Renders by accumulating per-pixel statistics from `f`.
pub fn render_tiled<F>(width: usize, height: usize, tile: usize, f: F) -> crate::Result<ImageBuffer>
where
    F: Fn(usize) -> PixelStats + Sync,
{
    let mut img = ImageBuffer::new(width, height)?;
    for (p, s) in map_pixels_tiled(width, height, tile, f).iter().enumerate() {
        img.add_stats(p, s);
    }
    Ok(img)
}
