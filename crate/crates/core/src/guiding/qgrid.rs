use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, ShadingPoint};
use crate::math::{equal_area_sphere_to_square, equal_area_square_to_sphere, Vec3};

pub const DEFAULT_GRID_RESOLUTION: usize = 16;
pub const DEFAULT_DIRECTION_RESOLUTION: usize = 8;

/// Learning rate of a Q update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Fixed(f64),
    /// `1/(1 + visits)`: the bin holds the running mean of its targets.
    VisitCount,
}

/// One Monte Carlo sample of the scattering integral at the hit point:
/// luminance of `f·cos/pdf` and the value `Q(y, ωi)` it looks up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterSample {
    pub weight: f64,
    pub q: f64,
}

/// `lum(Le) + mean_k weight_k·q_k`.
pub fn bracket(emitted: f64, samples: &[ScatterSample]) -> f64 {
    let integral = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.weight * s.q).sum::<f64>() / samples.len() as f64
    };
    emitted + integral
}

/// Incident radiance luminance over a uniform grid of cells, each holding
/// an equal-area octahedral grid of direction bins over the full sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    bounds: Aabb,
    resolution: usize,
    dir_resolution: usize,
    q: Vec<f64>,
    visits: Vec<u32>,
}

impl QGrid {
    pub fn new(bounds: Aabb, resolution: usize, dir_resolution: usize) -> Result<QGrid> {
        if resolution == 0 || dir_resolution == 0 {
            return Err(Error::contract("grid resolutions must be positive"));
        }
        let n = resolution.pow(3) * dir_resolution * dir_resolution;
        Ok(QGrid {
            bounds,
            resolution,
            dir_resolution,
            q: vec![0.0; n],
            visits: vec![0; n],
        })
    }

    pub fn with_defaults(bounds: Aabb) -> QGrid {
        QGrid::new(bounds, DEFAULT_GRID_RESOLUTION, DEFAULT_DIRECTION_RESOLUTION).expect("defaults are positive")
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dir_resolution(&self) -> usize {
        self.dir_resolution
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.pow(3)
    }

    pub fn bins_per_cell(&self) -> usize {
        self.dir_resolution * self.dir_resolution
    }

    /// Solid angle of every direction bin.
    pub fn bin_solid_angle(&self) -> f64 {
        4.0 * PI / self.bins_per_cell() as f64
    }

    /// Cell containing `p`, or `None` outside the (slightly padded) bounds.
    pub fn cell_of(&self, p: Vec3) -> Option<usize> {
        let e = self.bounds.extent();
        let pad = 1e-6 * e.max_component().max(1e-12);
        let inside = (0..3).all(|k| p[k] >= self.bounds.min[k] - pad && p[k] <= self.bounds.max[k] + pad);
        if !inside {
            return None;
        }
        let n = self.bounds.normalize(p);
        let r = self.resolution;
        let c = |v: f64| ((v.max(0.0) * r as f64) as usize).min(r - 1);
        Some((c(n.z) * r + c(n.y)) * r + c(n.x))
    }

    pub fn bin_of(&self, dir: Vec3) -> usize {
        let uv = equal_area_sphere_to_square(dir);
        let n = self.dir_resolution;
        let i = ((uv[0] * n as f64) as usize).min(n - 1);
        let j = ((uv[1] * n as f64) as usize).min(n - 1);
        j * n + i
    }

    /// Direction through the center of a bin.
    pub fn bin_direction(&self, bin: usize) -> Vec3 {
        let n = self.dir_resolution as f64;
        let (i, j) = ((bin % self.dir_resolution) as f64, (bin / self.dir_resolution) as f64);
        equal_area_square_to_sphere([(i + 0.5) / n, (j + 0.5) / n])
    }

    pub fn value(&self, cell: usize, bin: usize) -> f64 {
        self.q[cell * self.bins_per_cell() + bin]
    }

    pub fn visits(&self, cell: usize, bin: usize) -> u32 {
        self.visits[cell * self.bins_per_cell() + bin]
    }

    pub fn cell_values(&self, cell: usize) -> &[f64] {
        let b = self.bins_per_cell();
        &self.q[cell * b..(cell + 1) * b]
    }

    /// `Q(x, ω)`, zero outside the grid.
    pub fn lookup(&self, x: Vec3, dir: Vec3) -> f64 {
        match self.cell_of(x) {
            Some(c) => self.value(c, self.bin_of(dir)),
            None => 0.0,
        }
    }

    pub fn set_value(&mut self, cell: usize, bin: usize, q: f64) -> Result<()> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::contract(format!("Q value {q} must be finite and >= 0")));
        }
        let k = cell * self.bins_per_cell() + bin;
        self.q[k] = q;
        Ok(())
    }

    /// `Q' = (1 − α)·Q + α·target` on one bin; returns the new value.
    pub fn update_bin(&mut self, cell: usize, bin: usize, target: f64, alpha: Alpha) -> f64 {
        let k = cell * self.bins_per_cell() + bin;
        let a = match alpha {
            Alpha::Fixed(a) => a.clamp(0.0, 1.0),
            Alpha::VisitCount => 1.0 / (1.0 + self.visits[k] as f64),
        };
        let t = if target.is_finite() { target.max(0.0) } else { self.q[k] };
        self.q[k] = (1.0 - a) * self.q[k] + a * t;
        self.visits[k] = self.visits[k].saturating_add(1);
        self.q[k]
    }

    /// Combined update of `Q(x, ω)` from the hit `y = h(x, ω)` (or a miss)
    /// and scattering samples drawn at `y`. Returns the new value, or `None`
    /// when `x` lies outside the grid.
    pub fn q_update(
        &mut self,
        x: Vec3,
        omega: Vec3,
        y: Option<&ShadingPoint>,
        samples: &[ScatterSample],
        alpha: Alpha,
    ) -> Option<f64> {
        let cell = self.cell_of(x)?;
        let target = match y {
            Some(y) => bracket(y.emitted().luminance(), samples),
            None => 0.0,
        };
        Some(self.update_bin(cell, self.bin_of(omega), target, alpha))
    }

    /// Text dump, one visited bin per line: `cell bin q visits`.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# cell bin q visits")?;
        let b = self.bins_per_cell();
        for (k, (&q, &v)) in self.q.iter().zip(&self.visits).enumerate() {
            if v > 0 {
                writeln!(w, "{} {} {:e} {}", k / b, k % b, q, v)?;
            }
        }
        Ok(())
    }
}
