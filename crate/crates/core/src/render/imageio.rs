//! PPM (8-bit sRGB) and PFM (32-bit linear float) files.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::ImageBuffer;
use crate::error::{Error, Result};
use crate::math::Rgb;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Pfm,
}

impl FromStr for ImageFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppm" => Ok(ImageFormat::Ppm),
            "pfm" => Ok(ImageFormat::Pfm),
            other => Err(Error::usage(format!("unknown image format '{other}' (ppm, pfm)"))),
        }
    }
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<ImageFormat> {
        path.extension()?.to_str()?.parse().ok()
    }
}

/// sRGB opto-electronic transfer function.
pub fn srgb_encode(linear: f64) -> f64 {
    let c = linear.clamp(0.0, 1.0);
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_decode(encoded: f64) -> f64 {
    let c = encoded.clamp(0.0, 1.0);
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn to_byte(linear: f64) -> u8 {
    (srgb_encode(linear) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode_ppm(image: &ImageBuffer) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    for p in image.pixels() {
        out.extend([to_byte(p.x), to_byte(p.y), to_byte(p.z)]);
    }
    out
}

/// PFM with a negative scale (little-endian), rows stored bottom to top.
pub fn encode_pfm(image: &ImageBuffer) -> Vec<u8> {
    let (w, h) = (image.width(), image.height());
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    for y in (0..h).rev() {
        for x in 0..w {
            let p = image.get(x, y);
            for c in [p.x, p.y, p.z] {
                out.extend((c as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn write_image(image: &ImageBuffer, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = match format {
        ImageFormat::Ppm => encode_ppm(image),
        ImageFormat::Pfm => encode_pfm(image),
    };
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<ImageBuffer> {
    let bad = |m: &str| Error::usage(format!("malformed PFM: {m}"));
    // header: three whitespace-terminated tokens
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    pos += 1; // single whitespace byte after the scale
    if tokens[0] != "PF" {
        return Err(bad("only color (PF) files are supported"));
    }
    let w: usize = tokens[1].parse().map_err(|_| bad("width"))?;
    let h: usize = tokens[2].parse().map_err(|_| bad("height"))?;
    let scale: f64 = tokens[3].parse().map_err(|_| bad("scale"))?;
    let little = scale < 0.0;
    let data = &bytes[pos.min(bytes.len())..];
    if data.len() < w * h * 12 {
        return Err(bad("truncated pixel data"));
    }
    let mut pixels = vec![Rgb::ZERO; w * h];
    let mut k = 0;
    let mut read = || {
        let b: [u8; 4] = data[k..k + 4].try_into().unwrap();
        k += 4;
        (if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }) as f64
    };
    for y in (0..h).rev() {
        for x in 0..w {
            let r = read();
            let g = read();
            let b = read();
            pixels[y * w + x] = Rgb::new(r, g, b);
        }
    }
    ImageBuffer::from_pixels(w, h, pixels)
}

pub fn read_pfm(path: &Path) -> Result<ImageBuffer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}
