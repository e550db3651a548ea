use super::ImageBuffer;
use crate::error::Result;
use crate::math::Rgb;

/// Regularizer of the relative error denominator.
pub const RELATIVE_EPSILON: f64 = 1e-4;

/// Root mean squared error over all pixels and channels. In relative mode each
/// squared difference is divided by `reference² + 1e-4`.
pub fn rmse(image: &ImageBuffer, reference: &ImageBuffer, relative: bool) -> Result<f64> {
    image.check_same(reference)?;
    let mut acc = 0.0;
    for i in 0..image.pixel_count() {
        let a = image.pixel(i);
        let b = reference.pixel(i);
        for c in 0..3 {
            let d = a[c] - b[c];
            let denom = if relative { b[c] * b[c] + RELATIVE_EPSILON } else { 1.0 };
            acc += d * d / denom;
        }
    }
    Ok((acc / (3 * image.pixel_count()) as f64).sqrt())
}

/// `gain · (a − b)²` per channel, clamped to [0, 1] for display.
pub fn difference_image(a: &ImageBuffer, b: &ImageBuffer, gain: f64) -> Result<ImageBuffer> {
    a.check_same(b)?;
    let pixels = (0..a.pixel_count())
        .map(|i| {
            let d = a.pixel(i) - b.pixel(i);
            (d * d * gain).max(Rgb::ZERO).min(Rgb::ONE)
        })
        .collect();
    ImageBuffer::from_pixels(a.width(), a.height(), pixels)
}

/// Mean over pixels and channels.
pub fn mean_value(image: &ImageBuffer) -> f64 {
    let s: f64 = image.pixels().iter().map(|p| p.x + p.y + p.z).sum();
    s / (3 * image.pixel_count()) as f64
}

/// Fixed palette for up to 16 light indices; entries are pairwise more than
/// 0.2 apart in RGB.
pub const PALETTE: [[f64; 3]; 16] = [
    [0.90, 0.10, 0.10],
    [0.10, 0.75, 0.15],
    [0.15, 0.25, 0.95],
    [0.95, 0.85, 0.10],
    [0.85, 0.15, 0.85],
    [0.10, 0.85, 0.85],
    [0.98, 0.55, 0.05],
    [0.55, 0.30, 0.10],
    [0.60, 0.60, 0.60],
    [0.45, 0.05, 0.45],
    [0.05, 0.40, 0.40],
    [0.60, 0.95, 0.50],
    [0.98, 0.70, 0.80],
    [0.30, 0.30, 0.05],
    [0.15, 0.05, 0.45],
    [0.98, 0.98, 0.98],
];

/// Maps per-pixel chosen light indices to palette colors; `None` (no
/// selection made at that pixel) is black.
pub fn false_color_light_index(width: usize, height: usize, indices: &[Option<usize>]) -> Result<ImageBuffer> {
    let pixels = indices
        .iter()
        .map(|i| match i {
            Some(i) => Rgb::from(PALETTE[i % PALETTE.len()]),
            None => Rgb::ZERO,
        })
        .collect();
    ImageBuffer::from_pixels(width, height, pixels)
}
