use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::math::{Rgb, Vec3};
use crate::nn::{Activation, TinyMlp};

/// Layer sizes of every voxel network: position, normal and direction in,
/// RGB out.
pub const VOXEL_NET_SIZES: [usize; 3] = [9, 9, 3];

/// Offset of the log encoding of baked radiance; errors in the encoded
/// space approximate errors relative to `radiance + RADIANCE_OFFSET`.
pub const RADIANCE_OFFSET: f64 = 1e-2;

/// Network target for a radiance value: `ln(L + RADIANCE_OFFSET)` per channel.
pub fn encode_radiance(l: Rgb) -> [f64; 3] {
    l.max(Rgb::ZERO).to_array().map(|c| (c + RADIANCE_OFFSET).ln())
}

/// Inverse of [`encode_radiance`], clamped at zero.
pub fn decode_radiance(y: &[f64]) -> Rgb {
    let d = |c: f64| (c.exp() - RADIANCE_OFFSET).max(0.0);
    Rgb::new(d(y[0]), d(y[1]), d(y[2]))
}
const MAGIC: &[u8; 8] = b"LRBAKE01";

/// Training sample for the baked field: scattered radiance leaving
/// `position` toward `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BakeSample {
    pub position: Vec3,
    pub normal: Vec3,
    /// Query direction, pointing away from the surface toward the viewer.
    pub direction: Vec3,
    pub radiance: Rgb,
}

/// Uniform voxel grid over the scene bounds with one tiny network per voxel.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelNetGrid {
    resolution: usize,
    bounds: Aabb,
    nets: Vec<TinyMlp>,
    trained: Vec<bool>,
    samples: Vec<Vec<BakeSample>>,
}

impl VoxelNetGrid {
    pub fn new(bounds: Aabb, resolution: usize, seed: u64) -> Result<VoxelNetGrid> {
        if resolution == 0 {
            return Err(Error::contract("grid resolution must be positive"));
        }
        let n = resolution.pow(3);
        let nets = (0..n)
            .map(|v| TinyMlp::new(&VOXEL_NET_SIZES, Activation::Relu, Activation::Identity, seed.wrapping_add(v as u64)))
            .collect::<Result<_>>()?;
        Ok(VoxelNetGrid {
            resolution,
            bounds,
            nets,
            trained: vec![false; n],
            samples: vec![Vec::new(); n],
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn voxel_count(&self) -> usize {
        self.nets.len()
    }

    pub fn nets(&self) -> &[TinyMlp] {
        &self.nets
    }

    pub fn net(&self, voxel: usize) -> &TinyMlp {
        &self.nets[voxel]
    }

    pub(crate) fn net_mut(&mut self, voxel: usize) -> &mut TinyMlp {
        &mut self.nets[voxel]
    }

    pub fn is_trained(&self, voxel: usize) -> bool {
        self.trained[voxel]
    }

    pub(crate) fn set_trained(&mut self, voxel: usize, t: bool) {
        self.trained[voxel] = t;
    }

    pub fn samples(&self, voxel: usize) -> &[BakeSample] {
        &self.samples[voxel]
    }

    /// Integer coordinates of the voxel holding `p`; points outside the
    /// bounds are clamped onto the grid, and the max face belongs to the
    /// last voxel.
    pub fn voxel_coords(&self, p: Vec3) -> [usize; 3] {
        let e = self.bounds.extent();
        let r = self.resolution;
        let mut out = [0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let t = if e[k] > 0.0 { (p[k] - self.bounds.min[k]) / e[k] } else { 0.0 };
            *o = ((t * r as f64).floor().max(0.0) as usize).min(r - 1);
        }
        out
    }

    pub fn voxel_index(&self, p: Vec3) -> usize {
        let [x, y, z] = self.voxel_coords(p);
        (z * self.resolution + y) * self.resolution + x
    }

    pub fn coords_of(&self, voxel: usize) -> [usize; 3] {
        let r = self.resolution;
        [voxel % r, (voxel / r) % r, voxel / (r * r)]
    }

    pub fn voxel_bounds(&self, voxel: usize) -> Aabb {
        let c = self.coords_of(voxel);
        let size = self.bounds.extent() / self.resolution as f64;
        let min = self.bounds.min + Vec3::new(c[0] as f64 * size.x, c[1] as f64 * size.y, c[2] as f64 * size.z);
        Aabb { min, max: min + size }
    }

    /// Position relative to the voxel, in [0,1]³ for points inside it.
    pub fn local_position(&self, voxel: usize, p: Vec3) -> Vec3 {
        self.voxel_bounds(voxel).normalize(p)
    }

    /// Network input: voxel-local position mapped to [-1,1]³, normal and
    /// direction.
    pub fn encode(&self, voxel: usize, p: Vec3, n: Vec3, dir: Vec3) -> [f64; 9] {
        let l = self.local_position(voxel, p) * 2.0 - Vec3::ONE;
        [l.x, l.y, l.z, n.x, n.y, n.z, dir.x, dir.y, dir.z]
    }

    /// Replaces the training data, assigning each sample to its voxel.
    pub fn assign(&mut self, samples: &[BakeSample]) {
        for v in &mut self.samples {
            v.clear();
        }
        for s in samples {
            let v = self.voxel_index(s.position);
            self.samples[v].push(*s);
        }
    }

    /// Nearest trained voxel by center distance (lowest index on ties).
    pub fn nearest_trained(&self, voxel: usize) -> Option<usize> {
        if self.trained[voxel] {
            return Some(voxel);
        }
        let c = self.coords_of(voxel);
        (0..self.voxel_count())
            .filter(|&v| self.trained[v])
            .min_by_key(|&v| {
                let o = self.coords_of(v);
                (0..3).map(|k| (o[k] as i64 - c[k] as i64).pow(2)).sum::<i64>()
            })
    }

    /// Header (magic, resolution, bounds, trained flags) followed by each
    /// voxel's network blob.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.resolution as u64).to_le_bytes());
        for v in [self.bounds.min, self.bounds.max] {
            for k in 0..3 {
                out.extend_from_slice(&v[k].to_le_bytes());
            }
        }
        out.extend(self.trained.iter().map(|&t| u8::from(t)));
        for n in &self.nets {
            out.extend(n.to_bytes());
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<VoxelNetGrid> {
        let bad = |m: &str| Error::contract(format!("malformed baked grid: {m}"));
        let mut magic = [0u8; 8];
        bytes.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("wrong magic"));
        }
        let mut u = [0u8; 8];
        bytes.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
        let resolution = u64::from_le_bytes(u) as usize;
        if resolution == 0 || resolution > 256 {
            return Err(bad("implausible resolution"));
        }
        let mut f = [0.0; 6];
        for x in &mut f {
            bytes.read_exact(&mut u).map_err(|_| bad("truncated bounds"))?;
            *x = f64::from_le_bytes(u);
        }
        let bounds = Aabb {
            min: Vec3::new(f[0], f[1], f[2]),
            max: Vec3::new(f[3], f[4], f[5]),
        };
        let n = resolution.pow(3);
        let mut flags = vec![0u8; n];
        bytes.read_exact(&mut flags).map_err(|_| bad("truncated flags"))?;
        let acts = [Activation::Relu, Activation::Identity];
        let mut nets = Vec::with_capacity(n);
        for _ in 0..n {
            let net = TinyMlp::read_binary(&mut bytes, &acts)?;
            if net.sizes() != VOXEL_NET_SIZES {
                return Err(bad("voxel network has the wrong shape"));
            }
            nets.push(net);
        }
        Ok(VoxelNetGrid {
            resolution,
            bounds,
            nets,
            trained: flags.into_iter().map(|b| b != 0).collect(),
            samples: vec![Vec::new(); n],
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<VoxelNetGrid> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        VoxelNetGrid::from_bytes(&bytes)
    }
}
