use super::cdf::{build_cdf, Cdf};
use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::math::Vec3;

/// Tabular per-light values over discretized shading states: a uniform
/// position grid, the normal's octant and the incoming direction's octant.
#[derive(Clone, Debug, PartialEq)]
pub struct TdTable {
    bounds: Aabb,
    resolution: usize,
    lights: usize,
    q: Vec<f64>,
    visits: Vec<u32>,
}

fn octant(v: Vec3) -> usize {
    usize::from(v.x >= 0.0) | usize::from(v.y >= 0.0) << 1 | usize::from(v.z >= 0.0) << 2
}

impl TdTable {
    pub fn new(bounds: Aabb, resolution: usize, lights: usize) -> Result<TdTable> {
        if resolution == 0 || lights == 0 {
            return Err(Error::contract("table needs a positive resolution and light count"));
        }
        let n = resolution.pow(3) * 64 * lights;
        Ok(TdTable {
            bounds,
            resolution,
            lights,
            q: vec![0.0; n],
            visits: vec![0; n],
        })
    }

    pub fn light_count(&self) -> usize {
        self.lights
    }

    pub fn state_count(&self) -> usize {
        self.resolution.pow(3) * 64
    }

    /// State index of a shading point seen along `incoming`.
    pub fn state(&self, position: Vec3, normal: Vec3, incoming: Vec3) -> usize {
        let p = self.bounds.normalize(position);
        let r = self.resolution;
        let c = |v: f64| ((v * r as f64) as usize).min(r - 1);
        let cell = (c(p.z) * r + c(p.y)) * r + c(p.x);
        (cell * 8 + octant(normal)) * 8 + octant(incoming)
    }

    pub fn q(&self, state: usize, light: usize) -> f64 {
        self.q[state * self.lights + light]
    }

    pub fn visits(&self, state: usize, light: usize) -> u32 {
        self.visits[state * self.lights + light]
    }

    /// `Q' = (1 − α)·Q + α·c`.
    pub fn td_update(&mut self, state: usize, light: usize, c: f64, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::contract(format!("alpha {alpha} outside [0,1]")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::contract(format!("contribution {c} must be finite and >= 0")));
        }
        if state >= self.state_count() || light >= self.lights {
            return Err(Error::contract("state or light index out of range"));
        }
        let k = state * self.lights + light;
        self.q[k] = (1.0 - alpha) * self.q[k] + alpha * c;
        self.visits[k] = self.visits[k].saturating_add(1);
        Ok(self.q[k])
    }

    /// Update with `α = 1/(visits + 1)`, keeping the exact running average.
    pub fn observe(&mut self, state: usize, light: usize, c: f64) -> Result<f64> {
        let n = self.visits.get(state * self.lights + light).copied().unwrap_or(0);
        self.td_update(state, light, c, 1.0 / (n as f64 + 1.0))
    }

    /// Values of a state, with unvisited lights given the largest visited
    /// value of that state so they keep being tried.
    pub fn values(&self, state: usize) -> Vec<f64> {
        let range = state * self.lights..(state + 1) * self.lights;
        let q = &self.q[range.clone()];
        let v = &self.visits[range];
        let optimistic = q
            .iter()
            .zip(v)
            .filter(|(_, &n)| n > 0)
            .map(|(q, _)| *q)
            .fold(0.0, f64::max);
        q.iter()
            .zip(v)
            .map(|(&q, &n)| if n > 0 { q } else { optimistic })
            .collect()
    }

    /// Floored proportional selection distribution for a state.
    pub fn distribution(&self, state: usize) -> Cdf {
        build_cdf(&self.values(state)).expect("table values are valid weights")
    }
}
