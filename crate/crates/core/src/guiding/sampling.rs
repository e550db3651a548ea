use std::f64::consts::PI;

use super::qgrid::QGrid;
use crate::geometry::ShadingPoint;
use crate::math::{
    cosine_hemisphere, cosine_hemisphere_pdf, equal_area_hemisphere_to_square, equal_area_square_to_hemisphere, Onb,
    Vec3,
};
use crate::nee::cdf::{sample_cdf_remap, Cdf};

/// Default weight of the cosine component in the guided mixture.
pub const DEFAULT_COSINE_MIX: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuidedSample {
    pub direction: Vec3,
    pub pdf: f64,
    /// The cell held no mass and the sample is purely cosine distributed.
    pub fallback: bool,
}

/// Mixture of a piecewise-constant density over equal-area bins of the
/// local hemisphere (mass ∝ Q) and cosine-weighted sampling.
#[derive(Clone, Debug)]
pub struct GuidedDistribution {
    frame: Onb,
    n: usize,
    bins: Option<Cdf>,
    mix: f64,
}

impl GuidedDistribution {
    /// Resamples the world-space Q bins of the cell containing `sp` onto the
    /// local hemisphere grid by looking up Q at each local bin center.
    pub fn new(grid: &QGrid, sp: &ShadingPoint, mix: f64) -> GuidedDistribution {
        let frame = Onb::from_normal(sp.normal);
        let n = grid.dir_resolution();
        let values = match grid.cell_of(sp.position) {
            Some(cell) => (0..n * n)
                .map(|b| {
                    let local = local_bin_center(n, b);
                    grid.value(cell, grid.bin_of(frame.to_world(local)))
                })
                .collect(),
            None => vec![0.0; n * n],
        };
        GuidedDistribution::from_bin_values(frame, n, &values, mix)
    }

    /// Distribution over `n×n` local bins with masses ∝ `values`.
    pub fn from_bin_values(frame: Onb, n: usize, values: &[f64], mix: f64) -> GuidedDistribution {
        assert_eq!(values.len(), n * n, "one value per local bin");
        let total: f64 = values.iter().sum();
        let bins = if total > 0.0 && total.is_finite() {
            Cdf::proportional(values).ok()
        } else {
            None
        };
        GuidedDistribution {
            frame,
            n,
            bins,
            mix: mix.clamp(0.0, 1.0),
        }
    }

    pub fn is_fallback(&self) -> bool {
        self.bins.is_none() || self.mix >= 1.0
    }

    /// Q-component bin probabilities, row-major over the local square.
    pub fn bin_probabilities(&self) -> Option<&[f64]> {
        self.bins.as_ref().map(|c| c.pmf())
    }

    /// Mixture probability of landing in each local bin.
    pub fn bin_masses(&self) -> Vec<f64> {
        let n = self.n;
        let cos = cosine_bin_masses(n);
        match &self.bins {
            Some(c) if self.mix < 1.0 => c
                .pmf()
                .iter()
                .zip(&cos)
                .map(|(p, c)| (1.0 - self.mix) * p + self.mix * c)
                .collect(),
            _ => cos,
        }
    }

    pub fn local_bin(&self, local: Vec3) -> usize {
        let uv = equal_area_hemisphere_to_square(local);
        let n = self.n;
        let i = ((uv[0] * n as f64) as usize).min(n - 1);
        let j = ((uv[1] * n as f64) as usize).min(n - 1);
        j * n + i
    }

    pub fn frame(&self) -> &Onb {
        &self.frame
    }

    /// Solid-angle density of `sample` at world direction `wi`.
    pub fn pdf(&self, wi: Vec3) -> f64 {
        let local = self.frame.to_local(wi);
        if local.z <= 0.0 {
            return 0.0;
        }
        let cos = cosine_hemisphere_pdf(local.z);
        match &self.bins {
            Some(c) if self.mix < 1.0 => {
                let p_bin = c.probability(self.local_bin(local));
                let guided = p_bin * (self.n * self.n) as f64 / (2.0 * PI);
                (1.0 - self.mix) * guided + self.mix * cos
            }
            _ => cos,
        }
    }

    /// Draws a direction with two random numbers; the first one also picks
    /// the mixture component.
    pub fn sample(&self, u: [f64; 2]) -> GuidedSample {
        let bins = match &self.bins {
            Some(c) if self.mix < 1.0 => c,
            _ => {
                let d = self.frame.to_world(cosine_hemisphere(u));
                return GuidedSample {
                    direction: d,
                    pdf: self.pdf(d),
                    fallback: true,
                };
            }
        };
        let local = if u[0] < self.mix {
            cosine_hemisphere([u[0] / self.mix, u[1]])
        } else {
            let v = ((u[0] - self.mix) / (1.0 - self.mix)).min(crate::math::ONE_MINUS_EPSILON);
            let (b, _, r) = sample_cdf_remap(bins, v);
            let n = self.n as f64;
            let (i, j) = ((b % self.n) as f64, (b / self.n) as f64);
            equal_area_square_to_hemisphere([(i + r) / n, (j + u[1]) / n])
        };
        let d = self.frame.to_world(local);
        GuidedSample {
            direction: d,
            pdf: self.pdf(d),
            fallback: false,
        }
    }
}

fn local_bin_center(n: usize, b: usize) -> Vec3 {
    let nf = n as f64;
    equal_area_square_to_hemisphere([((b % n) as f64 + 0.5) / nf, ((b / n) as f64 + 0.5) / nf])
}

/// Probability that a cosine-distributed direction falls in each local bin,
/// by midpoint quadrature on the square (the map is area preserving, so the
/// solid-angle density is uniform in the square).
pub fn cosine_bin_masses(n: usize) -> Vec<f64> {
    let sub = 32;
    let m = (n * sub) as f64;
    let mut out = vec![0.0; n * n];
    for j in 0..n * sub {
        for i in 0..n * sub {
            let d = equal_area_square_to_hemisphere([(i as f64 + 0.5) / m, (j as f64 + 0.5) / m]);
            out[(j / sub) * n + i / sub] += d.z;
        }
    }
    let total: f64 = out.iter().sum();
    out.iter().map(|v| v / total).collect()
}

/// Samples a scattering direction at `sp` from the mixture of Q-proportional
/// and cosine sampling; `mix` is the cosine weight.
pub fn guided_scatter_direction(grid: &QGrid, sp: &ShadingPoint, u: [f64; 2], mix: f64) -> GuidedSample {
    GuidedDistribution::new(grid, sp, mix).sample(u)
}
