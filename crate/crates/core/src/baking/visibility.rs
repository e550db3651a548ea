use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::math::mix64;
use crate::nee::{encode_state, sample_light_contribution, LightSelectionNet};
use crate::nn::LearningRate;
use crate::qmc::SampleStream;

#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityConfig {
    /// Camera-ray states to generate.
    pub states: usize,
    /// Light samples averaged per light and state.
    pub light_samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub rate: LearningRate,
    pub hidden: Vec<usize>,
    pub aspect: f64,
    pub seed: u64,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        VisibilityConfig {
            states: 4096,
            light_samples: 4,
            epochs: 100,
            batch_size: 64,
            rate: LearningRate::with_base(0.05),
            hidden: LightSelectionNet::DEFAULT_HIDDEN.to_vec(),
            aspect: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VisibilityReport {
    pub states_used: usize,
    pub loss_trace: Vec<f64>,
}

/// Per-light contribution luminance at primary hits, normalized to a
/// distribution. States whose lights all contribute nothing are dropped.
pub fn visibility_training_data(scene: &Scene, cfg: &VisibilityConfig) -> Vec<([f64; 9], Vec<f64>)> {
    let key = mix64(cfg.seed ^ 0x7f4a_7c15_9e37_79b9);
    let lights = scene.light_count();
    (0..cfg.states)
        .into_par_iter()
        .filter_map(|i| {
            let mut s = SampleStream::with_key(i as u64, key);
            let ray = scene.camera.generate_ray(s.sample_2d(), cfg.aspect);
            let sp = scene.intersect(&ray)?;
            if sp.material.is_black() {
                return None;
            }
            let mut q = vec![0.0; lights];
            for _ in 0..cfg.light_samples.max(1) {
                for (l, ql) in q.iter_mut().enumerate() {
                    let c = sample_light_contribution(scene, &sp, l, s.sample_2d()).ok()?;
                    *ql += c.luminance();
                }
            }
            let total: f64 = q.iter().sum();
            if !(total > 0.0) {
                return None;
            }
            let q = q.iter().map(|v| v / total).collect();
            Some((encode_state(&scene.bounds(), sp.position, sp.normal, ray.direction), q))
        })
        .collect()
}

/// Offline light-selection network trained with cross-entropy against the
/// normalized per-light contributions of camera-visible states.
pub fn train_visibility_net(scene: &Scene, cfg: &VisibilityConfig) -> Result<(LightSelectionNet, VisibilityReport)> {
    if scene.light_count() == 0 {
        return Err(Error::contract("visibility training needs at least one light"));
    }
    let data = visibility_training_data(scene, cfg);
    let mut net = LightSelectionNet::new(scene.bounds(), scene.light_count(), &cfg.hidden, cfg.seed)?;
    let loss_trace = if data.is_empty() {
        Vec::new()
    } else {
        net.fit_distributions(&data, cfg.batch_size, cfg.rate, cfg.epochs)?
    };
    Ok((
        net,
        VisibilityReport {
            states_used: data.len(),
            loss_trace,
        },
    ))
}
