//! Render-and-train loop for the light-selection network: every sample
//! picks a pixel, selects a light with the current network, accumulates its
//! contribution and is kept as a training record; after each iteration the
//! network is retrained on the collected records.

use rayon::prelude::*;

use super::cdf::sample_cdf;
use super::estimator::sample_light_contribution;
use super::net::{LightSelectionNet, SampleRecord};
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::math::{mix64, Rgb};
use crate::nn::LearningRate;
use crate::qmc::SampleStream;
use crate::render::ImageBuffer;

#[derive(Clone, Debug, PartialEq)]
pub struct OnlineConfig {
    pub width: usize,
    pub height: usize,
    /// Outer iterations N.
    pub iterations: usize,
    /// Minibatches M per iteration.
    pub batches: usize,
    pub batch_size: usize,
    pub rate: LearningRate,
    /// Passes over the records at each retraining.
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl OnlineConfig {
    pub const DEFAULT_RATE: f64 = 0.05;
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            width: 128,
            height: 128,
            iterations: 16,
            batches: 64,
            batch_size: 64,
            rate: LearningRate::with_base(Self::DEFAULT_RATE),
            epochs: 10,
            hidden: LightSelectionNet::DEFAULT_HIDDEN.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub records: usize,
    pub rate: f64,
    /// Mean weighted NLL over the retraining pass.
    pub mean_loss: f64,
}

#[derive(Clone, Debug)]
pub struct OnlineResult {
    pub image: ImageBuffer,
    pub net: LightSelectionNet,
    pub trace: Vec<IterationMetrics>,
    /// Last light chosen at each pixel during the loop.
    pub light_index: Vec<Option<usize>>,
}

struct Outcome {
    pixel: usize,
    value: Rgb,
    light: Option<usize>,
    record: Option<SampleRecord>,
}

fn one_sample(scene: &Scene, net: &LightSelectionNet, w: usize, h: usize, index: u64, key: u64) -> Result<Outcome> {
    let mut s = SampleStream::with_key(index, key);
    let film = s.sample_2d();
    let px = ((film[0] * w as f64) as usize).min(w - 1);
    let py = ((film[1] * h as f64) as usize).min(h - 1);
    let pixel = py * w + px;
    let ray = scene.camera.generate_ray(film, w as f64 / h as f64);
    let mut out = Outcome {
        pixel,
        value: Rgb::ZERO,
        light: None,
        record: None,
    };
    let Some(sp) = scene.intersect(&ray) else {
        return Ok(out);
    };
    out.value = sp.emitted();
    if sp.material.is_black() || scene.light_count() == 0 {
        return Ok(out);
    }
    let cdf = net.distribution(sp.position, sp.normal, ray.direction);
    let (light, p) = sample_cdf(&cdf, s.sample());
    let c = sample_light_contribution(scene, &sp, light, s.sample_2d())?;
    out.value += c / p;
    out.light = Some(light);
    out.record = Some(SampleRecord {
        position: sp.position,
        normal: sp.normal,
        direction: ray.direction,
        light,
        probability: p,
        contribution: c,
    });
    Ok(out)
}

/// Runs `cfg.iterations` rounds of `cfg.batches × cfg.batch_size` samples.
/// Sample `k` of batch `j` in iteration `i` uses global Halton index
/// `(i·M + j)·B + k`. The network is frozen while an iteration renders.
pub fn render_with_online_learning(scene: &Scene, cfg: &OnlineConfig, net: Option<LightSelectionNet>) -> Result<OnlineResult> {
    if scene.light_count() == 0 {
        return Err(Error::contract("online light selection needs at least one light"));
    }
    let mut net = match net {
        Some(n) => n,
        None => LightSelectionNet::new(scene.bounds(), scene.light_count(), &cfg.hidden, cfg.seed)?,
    };
    if net.light_count() != scene.light_count() {
        return Err(Error::contract(format!(
            "network has {} outputs but the scene has {} lights",
            net.light_count(),
            scene.light_count()
        )));
    }
    let (w, h) = (cfg.width, cfg.height);
    let mut image = ImageBuffer::new(w, h)?;
    let mut light_index = vec![None; w * h];
    let per_iter = (cfg.batches * cfg.batch_size) as u64;
    let key = mix64(cfg.seed ^ 0x6a09_e667_f3bc_c909);
    let mut trace = Vec::with_capacity(cfg.iterations);
    for i in 0..cfg.iterations {
        let base = i as u64 * per_iter;
        let frozen = &net;
        let outcomes: Vec<Outcome> = (0..per_iter)
            .into_par_iter()
            .map(|k| one_sample(scene, frozen, w, h, base + k, key))
            .collect::<Result<_>>()?;
        let mut records = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            image.add_sample(o.pixel, o.value);
            if o.light.is_some() {
                light_index[o.pixel] = o.light;
            }
            records.extend(o.record);
        }
        let rate = cfg.rate.at(i as u64, cfg.iterations as u64);
        let mean_loss = net
            .retrain(&records, cfg.batch_size, rate, cfg.epochs)
            .map_err(|e| match e {
                Error::Training(m) => Error::training(format!("iteration {i}: {m}")),
                other => other,
            })?;
        trace.push(IterationMetrics {
            iteration: i,
            records: records.len(),
            rate,
            mean_loss,
        });
    }
    Ok(OnlineResult {
        image,
        net,
        trace,
        light_index,
    })
}

/// Light chosen by `net` for each pixel's center ray, drawing the selection
/// number from a per-pixel hash. Pixels that miss or hit black surfaces
/// give `None`.
pub fn selection_index_image(scene: &Scene, net: &LightSelectionNet, width: usize, height: usize, seed: u64) -> Vec<Option<usize>> {
    (0..width * height)
        .into_par_iter()
        .map(|pixel| {
            let (x, y) = (pixel % width, pixel / width);
            let film = [(x as f64 + 0.5) / width as f64, (y as f64 + 0.5) / height as f64];
            let ray = scene.camera.generate_ray(film, width as f64 / height as f64);
            let sp = scene.intersect(&ray)?;
            if sp.material.is_black() {
                return None;
            }
            let u = crate::math::hash_to_unit(mix64(seed ^ mix64(pixel as u64)));
            Some(sample_cdf(&net.distribution(sp.position, sp.normal, ray.direction), u).0)
        })
        .collect()
}
