use super::cdf::{build_cdf, Cdf};
use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::math::{Rgb, Vec3};
use crate::nn::{train_minibatch, Activation, LearningRate, Loss, MiniBatch, Sample, Target, TinyMlp};

/// One light-selection outcome kept for retraining.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRecord {
    pub position: Vec3,
    pub normal: Vec3,
    /// Direction from the camera toward the hit.
    pub direction: Vec3,
    pub light: usize,
    /// Probability with which `light` was selected.
    pub probability: f64,
    /// Contribution before division by `probability`.
    pub contribution: Rgb,
}

impl SampleRecord {
    /// Importance weight `lum(c)/p_l`.
    pub fn weight(&self) -> f64 {
        self.contribution.luminance().max(0.0) / self.probability
    }
}

/// Network input: position normalized to [0,1]³ by `bounds`, then the raw
/// normal and direction.
pub fn encode_state(bounds: &Aabb, position: Vec3, normal: Vec3, direction: Vec3) -> [f64; 9] {
    let p = bounds.normalize(position);
    [p.x, p.y, p.z, normal.x, normal.y, normal.z, direction.x, direction.y, direction.z]
}

/// Softmax network mapping a shading state to light-selection probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct LightSelectionNet {
    net: TinyMlp,
    bounds: Aabb,
}

impl LightSelectionNet {
    pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

    pub fn new(bounds: Aabb, lights: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if lights == 0 {
            return Err(Error::contract("light selection needs at least one light"));
        }
        let mut sizes = vec![9];
        sizes.extend_from_slice(hidden);
        sizes.push(lights);
        Ok(LightSelectionNet {
            net: TinyMlp::new(&sizes, Activation::Relu, Activation::Softmax, seed)?,
            bounds,
        })
    }

    pub fn from_net(net: TinyMlp, bounds: Aabb) -> Result<Self> {
        if net.input_dim() != 9 || net.output_activation() != Activation::Softmax {
            return Err(Error::contract("light selection net must map 9 inputs to a softmax"));
        }
        Ok(LightSelectionNet { net, bounds })
    }

    pub fn net(&self) -> &TinyMlp {
        &self.net
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn light_count(&self) -> usize {
        self.net.output_dim()
    }

    pub fn encode(&self, position: Vec3, normal: Vec3, direction: Vec3) -> [f64; 9] {
        encode_state(&self.bounds, position, normal, direction)
    }

    /// Raw softmax output.
    pub fn probabilities(&self, position: Vec3, normal: Vec3, direction: Vec3) -> Vec<f64> {
        self.net
            .predict(&self.encode(position, normal, direction))
            .expect("input arity is fixed")
    }

    /// Floored selection distribution used for sampling.
    pub fn distribution(&self, position: Vec3, normal: Vec3, direction: Vec3) -> Cdf {
        build_cdf(&self.probabilities(position, normal, direction)).expect("softmax output is a valid weight vector")
    }

    /// Weighted NLL training on `records` in consecutive minibatches,
    /// `epochs` passes. Weights are divided by their mean so the step size
    /// does not depend on the scene's brightness. Returns the mean loss of
    /// the last pass.
    pub fn retrain(&mut self, records: &[SampleRecord], batch_size: usize, rate: f64, epochs: usize) -> Result<f64> {
        let batch_size = batch_size.max(1);
        let samples: Vec<Sample> = records
            .iter()
            .filter(|r| r.probability > 0.0 && r.light < self.light_count())
            .map(|r| {
                Sample::weighted(
                    self.encode(r.position, r.normal, r.direction).to_vec(),
                    Target::Class(r.light),
                    r.weight(),
                )
            })
            .collect();
        let mean_w = samples.iter().map(|s| s.weight).sum::<f64>() / samples.len().max(1) as f64;
        if !(mean_w > 0.0) {
            return Ok(0.0);
        }
        if !mean_w.is_finite() {
            return Err(Error::training("nonfinite selection weights"));
        }
        let samples: Vec<Sample> = samples
            .into_iter()
            .map(|mut s| {
                s.weight /= mean_w;
                s
            })
            .collect();
        let mut last = 0.0;
        for _ in 0..epochs.max(1) {
            let mut total = 0.0;
            let mut batches = 0;
            for chunk in samples.chunks(batch_size) {
                total += train_minibatch(&mut self.net, &MiniBatch::new(chunk.to_vec()), Loss::WeightedNll, rate)?;
                batches += 1;
            }
            last = total / batches as f64;
        }
        Ok(last)
    }

    /// Cross-entropy training against per-state target distributions.
    pub fn fit_distributions(
        &mut self,
        states: &[([f64; 9], Vec<f64>)],
        batch_size: usize,
        rate: LearningRate,
        epochs: usize,
    ) -> Result<Vec<f64>> {
        let samples: Vec<Sample> = states
            .iter()
            .map(|(x, q)| Sample::new(x.to_vec(), Target::Distribution(q.clone())))
            .collect();
        let mut trace = Vec::with_capacity(epochs);
        for e in 0..epochs {
            let r = rate.at(e as u64, epochs as u64);
            let mut total = 0.0;
            let mut batches = 0;
            for chunk in samples.chunks(batch_size.max(1)) {
                total += train_minibatch(&mut self.net, &MiniBatch::new(chunk.to_vec()), Loss::WeightedNll, r)?;
                batches += 1;
            }
            trace.push(total / batches.max(1) as f64);
        }
        Ok(trace)
    }
}
