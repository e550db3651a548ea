use super::mlp::{Activation, Gradients, TinyMlp};
use crate::error::{Error, Result};

/// What a sample is trained toward.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Regression target, one value per output.
    Values(Vec<f64>),
    /// Index of the chosen class of a softmax output.
    Class(usize),
    /// Soft class distribution (cross-entropy against it).
    Distribution(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Target,
    pub weight: f64,
}

impl Sample {
    pub fn new(input: Vec<f64>, target: Target) -> Sample {
        Sample {
            input,
            target,
            weight: 1.0,
        }
    }

    pub fn weighted(input: Vec<f64>, target: Target, weight: f64) -> Sample {
        Sample { input, target, weight }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MiniBatch {
    pub samples: Vec<Sample>,
}

impl MiniBatch {
    pub fn new(samples: Vec<Sample>) -> MiniBatch {
        MiniBatch { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    /// `w · Σ_k (y_k − t_k)²`
    SquaredError,
    /// `−w · log p[class]`, or `−w · Σ_k q_k log p_k` for a soft target.
    WeightedNll,
}

/// Step-decayed learning rate: the base rate halves after every quarter of
/// the training budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRate {
    pub base: f64,
    pub decay: f64,
    pub intervals: u32,
}

impl Default for LearningRate {
    fn default() -> Self {
        LearningRate {
            base: 1e-2,
            decay: 0.5,
            intervals: 4,
        }
    }
}

impl LearningRate {
    pub fn constant(rate: f64) -> Self {
        LearningRate {
            base: rate,
            decay: 1.0,
            intervals: 1,
        }
    }

    pub fn with_base(rate: f64) -> Self {
        LearningRate {
            base: rate,
            ..Self::default()
        }
    }

    /// Rate after `done` of `total` budget units.
    pub fn at(&self, done: u64, total: u64) -> f64 {
        if total == 0 {
            return self.base;
        }
        let k = ((done as f64 / total as f64) * self.intervals as f64).floor() as i32;
        self.base * self.decay.powi(k.clamp(0, self.intervals as i32 - 1))
    }
}

/// Loss of one sample and its gradient. The gradient is with respect to the
/// logits when `logits` is true (fused softmax + log-likelihood), otherwise
/// with respect to the network output.
pub(crate) fn sample_loss(out: &[f64], s: &Sample, loss: Loss, softmax_out: bool) -> Result<(f64, Vec<f64>, bool)> {
    let w = s.weight;
    match (loss, &s.target) {
        (Loss::SquaredError, Target::Values(t)) => {
            if t.len() != out.len() {
                return Err(Error::contract("regression target arity mismatch"));
            }
            let l = w * out.iter().zip(t).map(|(y, t)| (y - t) * (y - t)).sum::<f64>();
            let g = out.iter().zip(t).map(|(y, t)| 2.0 * w * (y - t)).collect();
            Ok((l, g, false))
        }
        (Loss::WeightedNll, Target::Class(c)) => {
            let c = *c;
            if c >= out.len() {
                return Err(Error::contract(format!("class {c} out of range")));
            }
            let l = -w * out[c].max(f64::MIN_POSITIVE).ln();
            if softmax_out {
                let g = out
                    .iter()
                    .enumerate()
                    .map(|(k, p)| w * (p - if k == c { 1.0 } else { 0.0 }))
                    .collect();
                Ok((l, g, true))
            } else {
                let mut g = vec![0.0; out.len()];
                g[c] = -w / out[c].max(f64::MIN_POSITIVE);
                Ok((l, g, false))
            }
        }
        (Loss::WeightedNll, Target::Distribution(q)) => {
            if q.len() != out.len() {
                return Err(Error::contract("target distribution arity mismatch"));
            }
            let l = -w * out.iter().zip(q).map(|(p, q)| if *q > 0.0 { q * p.max(f64::MIN_POSITIVE).ln() } else { 0.0 }).sum::<f64>();
            if softmax_out {
                let mass: f64 = q.iter().sum();
                let g = out.iter().zip(q).map(|(p, q)| w * (p * mass - q)).collect();
                Ok((l, g, true))
            } else {
                let g = out.iter().zip(q).map(|(p, q)| -w * q / p.max(f64::MIN_POSITIVE)).collect();
                Ok((l, g, false))
            }
        }
        _ => Err(Error::contract(format!("target kind does not fit loss {loss:?}"))),
    }
}

/// Mean loss and mean gradient over a batch, without updating the network.
pub(crate) fn batch_gradient(net: &TinyMlp, batch: &MiniBatch, loss: Loss) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::contract("empty minibatch"));
    }
    let softmax_out = net.output_activation() == Activation::Softmax;
    let mut acc = net.zero_gradients();
    let mut total = 0.0;
    for s in &batch.samples {
        if !(s.weight >= 0.0 && s.weight.is_finite()) {
            return Err(Error::contract(format!("sample weight {} must be finite and >= 0", s.weight)));
        }
        let cache = net.forward(&s.input)?;
        let (l, g, logits) = sample_loss(cache.output(), s, loss, softmax_out)?;
        total += l;
        let grads = if logits {
            net.backward_logits(&cache, &g)?
        } else {
            net.backward(&cache, &g)?
        };
        acc.add_scaled(&grads, 1.0);
    }
    let n = batch.len() as f64;
    acc.scale(1.0 / n);
    Ok((total / n, acc))
}

/// One accumulated-gradient SGD step; returns the mean loss before the step.
pub fn train_minibatch(net: &mut TinyMlp, batch: &MiniBatch, loss: Loss, rate: f64) -> Result<f64> {
    let (mean, grads) = batch_gradient(net, batch, loss)?;
    if !mean.is_finite() {
        return Err(Error::training(format!("nonfinite minibatch loss {mean}")));
    }
    net.sgd_step(&grads, rate)?;
    Ok(mean)
}
