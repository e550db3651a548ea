use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grid::{decode_radiance, encode_radiance, BakeSample, VoxelNetGrid};
use crate::error::{Error, Result};
use crate::geometry::{Ray, Scene};
use crate::math::{equal_area_square_to_hemisphere, mix64, Onb, Rgb, Vec3};
use crate::nn::{train_minibatch, LearningRate, Loss, MiniBatch, Sample, Target};
use crate::qmc::SampleStream;
use crate::render::{film_position, pixel_stream, radiance_from, render_tiled, ImageBuffer, PixelStats, PtSettings};

#[derive(Clone, Debug, PartialEq)]
pub struct BakeConfig {
    pub points: usize,
    pub rays: usize,
    /// Path length of the radiance estimate, the query segment included.
    pub max_path_length: usize,
    pub seed: u64,
}

impl Default for BakeConfig {
    fn default() -> Self {
        BakeConfig {
            points: 10_000,
            rays: 512,
            max_path_length: 6,
            seed: 0,
        }
    }
}

/// Area-uniform points on scattering surfaces, each with one query direction
/// drawn uniformly over the front hemisphere and the scattered radiance
/// toward it (emission excluded) estimated from `rays` paths. Surfaces with
/// zero albedo scatter nothing and are not sampled. A candidate whose query
/// ray meets the back of a surface (the floor inside a box, the ceiling
/// behind a lamp) can never be observed and is rejected.
pub fn generate_training_data(scene: &Scene, cfg: &BakeConfig) -> Result<Vec<BakeSample>> {
    if cfg.points == 0 || cfg.rays == 0 {
        return Err(Error::contract("point and ray counts must be positive"));
    }
    let key = mix64(cfg.seed ^ 0x1f83_d9ab_fb41_bd6b);
    let mut points = Vec::with_capacity(cfg.points);
    let mut i = 0u64;
    while points.len() < cfg.points {
        if i >= 1000 * cfg.points as u64 {
            return Err(Error::contract("scene has no scattering surface to bake"));
        }
        let mut s = SampleStream::with_key(i, key);
        let surf = scene.sample_surface(s.sample(), s.sample_2d());
        if !scene.material_of(surf.primitive).is_black() {
            let local = equal_area_square_to_hemisphere(s.sample_2d());
            let dir = Onb::from_normal(surf.normal).to_world(local).normalized();
            let observable = scene
                .intersect(&Ray::spawn(surf.position, surf.normal, dir))
                .is_none_or(|hit| hit.front_face);
            if observable {
                points.push((i, surf, dir));
            }
        }
        i += 1;
    }
    let samples = points
        .into_par_iter()
        .map(|(i, surf, dir)| {
            let sp = scene.shading_point_at(&surf, dir);
            let mut sum = Rgb::ZERO;
            for r in 0..cfg.rays as u64 {
                let mut ps = SampleStream::with_key(i * cfg.rays as u64 + r, key ^ 0x5bd1_e995);
                sum += radiance_from(scene, &sp, cfg.max_path_length, &mut ps);
            }
            BakeSample {
                position: surf.position,
                normal: sp.normal,
                direction: dir,
                radiance: (sum / cfg.rays as f64 - sp.emitted()).max(Rgb::ZERO),
            }
        })
        .collect();
    Ok(samples)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub rate: LearningRate,
    /// Fraction of each voxel's samples held out from training.
    pub holdout: f64,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            epochs: 500,
            batch_size: 64,
            rate: LearningRate::default(),
            holdout: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VoxelReport {
    pub voxel: usize,
    pub trained: bool,
    pub train_samples: usize,
    pub holdout_samples: usize,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
    /// Mean squared error of the log-encoded targets on the training and
    /// held-out sets after training.
    pub train_mse: f64,
    pub holdout_mse: f64,
}

fn to_sample(grid: &VoxelNetGrid, v: usize, s: &BakeSample) -> Sample {
    Sample::new(
        grid.encode(v, s.position, s.normal, s.direction).to_vec(),
        Target::Values(encode_radiance(s.radiance).to_vec()),
    )
}

/// Trains every voxel's network with squared error on its log-encoded
/// samples. Voxels
/// without samples are flagged untrained.
pub fn train_voxel_networks(grid: &mut VoxelNetGrid, cfg: &TrainSettings) -> Result<Vec<VoxelReport>> {
    let n = grid.voxel_count();
    let snapshot = &*grid;
    let results: Vec<Result<(crate::nn::TinyMlp, VoxelReport)>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut data: Vec<Sample> = snapshot.samples(v).iter().map(|s| to_sample(snapshot, v, s)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed ^ v as u64));
            data.shuffle(&mut rng);
            let hold = if data.len() >= 10 { (data.len() as f64 * cfg.holdout).round() as usize } else { 0 };
            let (holdout, mut train) = {
                let t = data.split_off(hold);
                (data, t)
            };
            let mut net = snapshot.net(v).clone();
            let mut report = VoxelReport {
                voxel: v,
                train_samples: train.len(),
                holdout_samples: holdout.len(),
                ..Default::default()
            };
            if train.is_empty() {
                return Ok((net, report));
            }
            for e in 0..cfg.epochs {
                let rate = cfg.rate.at(e as u64, cfg.epochs as u64);
                train.shuffle(&mut rng);
                let mut total = 0.0;
                let mut batches = 0;
                for chunk in train.chunks(cfg.batch_size.max(1)) {
                    let loss = train_minibatch(&mut net, &MiniBatch::new(chunk.to_vec()), Loss::SquaredError, rate)
                        .map_err(|err| match err {
                            Error::Training(m) => Error::training(format!("voxel {v}, epoch {e}: {m}")),
                            other => other,
                        })?;
                    total += loss;
                    batches += 1;
                }
                report.loss_trace.push(total / batches as f64);
            }
            report.trained = true;
            report.train_mse = mse(&net, &train)?;
            report.holdout_mse = if holdout.is_empty() { f64::NAN } else { mse(&net, &holdout)? };
            Ok((net, report))
        })
        .collect();
    let mut reports = Vec::with_capacity(n);
    for (v, r) in results.into_iter().enumerate() {
        let (net, report) = r?;
        *grid.net_mut(v) = net;
        grid.set_trained(v, report.trained);
        reports.push(report);
    }
    Ok(reports)
}

fn mse(net: &crate::nn::TinyMlp, data: &[Sample]) -> Result<f64> {
    let mut total = 0.0;
    for s in data {
        let y = net.predict(&s.input)?;
        if let Target::Values(t) = &s.target {
            total += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / t.len() as f64;
        }
    }
    Ok(total / data.len().max(1) as f64)
}

/// Baked radiance plus the voxel whose network answered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BakedValue {
    pub radiance: Rgb,
    pub voxel: Option<usize>,
    /// An untrained voxel was replaced by its nearest trained neighbor.
    pub fallback: bool,
}

pub fn eval_baked(grid: &VoxelNetGrid, x: Vec3, n: Vec3, omega: Vec3) -> BakedValue {
    let v = grid.voxel_index(x);
    let Some(used) = grid.nearest_trained(v) else {
        return BakedValue {
            radiance: Rgb::ZERO,
            voxel: None,
            fallback: true,
        };
    };
    let out = grid
        .net(used)
        .predict(&grid.encode(used, x, n, omega))
        .expect("voxel nets have nine inputs");
    BakedValue {
        radiance: decode_radiance(&out),
        voxel: Some(used),
        fallback: used != v,
    }
}

/// Radiance at `x` with normal `n` toward direction `omega`, clamped ≥ 0.
pub fn eval_baked_radiance(grid: &VoxelNetGrid, x: Vec3, n: Vec3, omega: Vec3) -> Rgb {
    eval_baked(grid, x, n, omega).radiance
}

/// Primary rays only, each hit shaded by its emission plus, on scattering
/// surfaces, the baked radiance toward the camera.
pub fn render_baked(scene: &Scene, grid: &VoxelNetGrid, cfg: &PtSettings) -> Result<ImageBuffer> {
    cfg.validate()?;
    render_tiled(cfg.width, cfg.height, cfg.tile, |pixel| {
        let mut st = PixelStats::default();
        for k in 0..cfg.spp {
            let mut s = pixel_stream(cfg.seed, pixel, cfg.spp, k);
            let film = film_position(pixel, cfg.width, cfg.height, s.sample_2d());
            let ray = scene.camera.generate_ray(film, cfg.aspect());
            let v = match scene.intersect(&ray) {
                Some(sp) if sp.material.is_black() => sp.emitted(),
                Some(sp) => sp.emitted() + eval_baked_radiance(grid, sp.position, sp.normal, sp.wo),
                None => Rgb::ZERO,
            };
            st.add(v);
        }
        st
    })
}
