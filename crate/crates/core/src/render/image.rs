use crate::error::{Error, Result};
use crate::math::Rgb;

/// Samples accumulated for a single pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PixelStats {
    pub sum: Rgb,
    pub sum_sq: Rgb,
    pub count: u64,
}

impl PixelStats {
    #[inline]
    pub fn add(&mut self, v: Rgb) {
        self.sum += v;
        self.sum_sq += v * v;
        self.count += 1;
    }
}

/// Per-pixel RGB accumulator with sample counts and second moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    sum: Vec<Rgb>,
    sum_sq: Vec<Rgb>,
    count: Vec<u64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Result<ImageBuffer> {
        if width == 0 || height == 0 {
            return Err(Error::contract(format!("image dimensions {width}x{height} must be positive")));
        }
        let n = width * height;
        Ok(ImageBuffer {
            width,
            height,
            sum: vec![Rgb::ZERO; n],
            sum_sq: vec![Rgb::ZERO; n],
            count: vec![0; n],
        })
    }

    /// Image with one sample of the given value per pixel.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<ImageBuffer> {
        let mut img = ImageBuffer::new(width, height)?;
        if pixels.len() != width * height {
            return Err(Error::contract("pixel count does not match dimensions"));
        }
        for (i, p) in pixels.into_iter().enumerate() {
            img.add_sample(i, p);
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn add_sample(&mut self, pixel: usize, v: Rgb) {
        self.sum[pixel] += v;
        self.sum_sq[pixel] += v * v;
        self.count[pixel] += 1;
    }

    /// Adds another buffer's accumulators pixel by pixel.
    pub fn merge(&mut self, other: &ImageBuffer) -> Result<()> {
        self.check_same(other)?;
        for i in 0..self.pixel_count() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            self.count[i] += other.count[i];
        }
        Ok(())
    }

    pub fn count(&self, pixel: usize) -> u64 {
        self.count[pixel]
    }

    /// Estimate at a pixel (mean of its samples, zero if it has none).
    pub fn pixel(&self, pixel: usize) -> Rgb {
        match self.count[pixel] {
            0 => Rgb::ZERO,
            n => self.sum[pixel] / n as f64,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixel(y * self.width + x)
    }

    pub fn pixels(&self) -> Vec<Rgb> {
        (0..self.pixel_count()).map(|i| self.pixel(i)).collect()
    }

    /// Variance of the pixel mean, per channel.
    pub fn mean_variance(&self, pixel: usize) -> Rgb {
        let n = self.count[pixel];
        if n < 2 {
            return Rgb::ZERO;
        }
        let nf = n as f64;
        let mean = self.sum[pixel] / nf;
        let var = (self.sum_sq[pixel] / nf - mean * mean) * (nf / (nf - 1.0));
        var.max(Rgb::ZERO) / nf
    }

    pub fn is_finite(&self) -> bool {
        self.sum.iter().all(|v| v.is_finite())
    }

    /// Adds a block of accumulated samples to one pixel.
    pub fn add_stats(&mut self, pixel: usize, stats: &PixelStats) {
        self.sum[pixel] += stats.sum;
        self.sum_sq[pixel] += stats.sum_sq;
        self.count[pixel] += stats.count;
    }

    pub(crate) fn check_same(&self, other: &ImageBuffer) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::contract(format!(
                "image dimensions differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}
