use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let mut out = scores.to_vec();
    softmax_in_place(&mut out);
    out
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.biases[o];
            out.push(z);
        }
        match self.activation {
            Activation::Relu => out.iter_mut().for_each(|z| *z = z.max(0.0)),
            Activation::Identity => {}
            Activation::Softmax => softmax_in_place(out),
        }
    }
}

/// Fully connected network.
///
/// Every parameter update bumps an internal version so that a cache recorded
/// before the update cannot be fed to [`TinyMlp::backward`] afterwards.
#[derive(Clone, Debug)]
pub struct TinyMlp {
    layers: Vec<Layer>,
    id: u64,
    version: u64,
}

impl PartialEq for TinyMlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Activations of every layer from one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    net_id: u64,
    net_version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds the input at least")
    }

    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }
}

/// Parameter gradients, shaped like the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|g| g.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|&g| g == 0.0)
    }

    /// `self += s · other`
    pub fn add_scaled(&mut self, other: &Gradients, s: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flatten()
            .for_each(|x| *x *= s);
    }

    /// Flattened in layer order, weights before biases (the serialization order).
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b))
            .copied()
            .collect()
    }
}

impl TinyMlp {
    /// Xavier-uniform weights from a seeded generator, zero biases.
    /// `sizes` lists the arity of every layer including the input.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<TinyMlp> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::contract(format!("invalid layer sizes {sizes:?}")));
        }
        if hidden == Activation::Softmax {
            return Err(Error::contract("softmax is only allowed on the output layer"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect(),
                    biases: vec![0.0; fan_out],
                    activation: if l + 1 == n { output } else { hidden },
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<TinyMlp> {
        if layers.is_empty() {
            return Err(Error::contract("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::contract(format!("layer {i} parameter shapes are inconsistent")));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::contract(format!("layer {i} input arity does not chain")));
            }
            if l.activation == Activation::Softmax && i + 1 != layers.len() {
                return Err(Error::contract("softmax is only allowed on the output layer"));
            }
            if !l.weights.iter().chain(&l.biases).all(|x| x.is_finite()) {
                return Err(Error::contract(format!("layer {i} has nonfinite parameters")));
            }
        }
        Ok(TinyMlp {
            layers,
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().unwrap().activation
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .copied()
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::contract("parameter vector has the wrong length"));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(|p| *p = *it.next().unwrap());
        }
        self.version += 1;
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::contract(format!(
                "input arity {} does not match network input {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for l in &self.layers {
            let mut out = Vec::with_capacity(l.outputs);
            l.apply(activations.last().unwrap(), &mut out);
            activations.push(out);
        }
        Ok(ForwardCache {
            activations,
            net_id: self.id,
            net_version: self.version,
        })
    }

    /// Forward pass without keeping intermediate activations.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for l in &self.layers {
            l.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.net_id != self.id || cache.net_version != self.version {
            return Err(Error::contract("forward cache is stale or belongs to another network"));
        }
        Ok(())
    }

    /// Backpropagate a loss gradient taken with respect to the network output.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> Result<Gradients> {
        self.check_cache(cache)?;
        if d_output.len() != self.output_dim() {
            return Err(Error::contract("output gradient arity mismatch"));
        }
        let last = self.layers.len() - 1;
        let out = cache.output();
        let dz: Vec<f64> = match self.layers[last].activation {
            Activation::Identity => d_output.to_vec(),
            Activation::Relu => out.iter().zip(d_output).map(|(&a, &g)| if a > 0.0 { g } else { 0.0 }).collect(),
            Activation::Softmax => {
                let dot: f64 = out.iter().zip(d_output).map(|(p, g)| p * g).sum();
                out.iter().zip(d_output).map(|(p, g)| p * (g - dot)).collect()
            }
        };
        Ok(self.backward_from_preactivation(cache, dz))
    }

    /// Backpropagate a gradient taken with respect to the output layer's
    /// pre-activation (logits). Used for fused softmax + log-likelihood.
    pub fn backward_logits(&self, cache: &ForwardCache, d_logits: &[f64]) -> Result<Gradients> {
        self.check_cache(cache)?;
        if d_logits.len() != self.output_dim() {
            return Err(Error::contract("logit gradient arity mismatch"));
        }
        Ok(self.backward_from_preactivation(cache, d_logits.to_vec()))
    }

    fn backward_from_preactivation(&self, cache: &ForwardCache, mut dz: Vec<f64>) -> Gradients {
        let mut grads = self.zero_gradients();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let a_in = &cache.activations[l];
            let gw = &mut grads.weights[l];
            for o in 0..layer.outputs {
                let g = dz[o];
                if g != 0.0 {
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(a_in).for_each(|(w, &x)| *w = g * x);
                }
            }
            grads.biases[l].copy_from_slice(&dz);
            if l == 0 {
                break;
            }
            // dL/da_in, then through the previous layer's activation
            let mut da = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let g = dz[o];
                if g != 0.0 {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    da.iter_mut().zip(row).for_each(|(d, &w)| *d += g * w);
                }
            }
            let prev = &self.layers[l - 1];
            debug_assert_ne!(prev.activation, Activation::Softmax);
            if prev.activation == Activation::Relu {
                da.iter_mut().zip(a_in).for_each(|(d, &a)| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            dz = da;
        }
        grads
    }

    /// `θ ← θ − rate · g`. Rejected (and the network left untouched) for a
    /// nonpositive rate or nonfinite gradients.
    pub fn sgd_step(&mut self, grads: &Gradients, rate: f64) -> Result<()> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::contract(format!("learning rate must be positive, got {rate}")));
        }
        if grads.weights.len() != self.layers.len() {
            return Err(Error::contract("gradient shape mismatch"));
        }
        if !grads.is_finite() {
            return Err(Error::training("nonfinite gradient, step rejected"));
        }
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer.weights.iter_mut().zip(&grads.weights[l]).for_each(|(w, g)| *w -= rate * g);
            layer.biases.iter_mut().zip(&grads.biases[l]).for_each(|(b, g)| *b -= rate * g);
        }
        self.version += 1;
        Ok(())
    }
}
