//! Neural Q: a network trained online on the residual between its value at
//! a path vertex and the bootstrapped one-sample estimate at the next hit.

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Scene, ShadingPoint};
use crate::math::{cosine_hemisphere, mix64, Onb, Vec3};
use crate::nee::net::encode_state;
use crate::nn::{train_minibatch, Activation, LearningRate, Loss, MiniBatch, Sample, Target, TinyMlp};
use crate::qmc::SampleStream;

/// Network estimate of incident radiance luminance `Q̂(x, n, ω)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    net: TinyMlp,
    bounds: Aabb,
}

impl QNetwork {
    pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

    pub fn new(bounds: Aabb, hidden: &[usize], seed: u64) -> Result<QNetwork> {
        let mut sizes = vec![9];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(QNetwork {
            net: TinyMlp::new(&sizes, Activation::Relu, Activation::Identity, seed)?,
            bounds,
        })
    }

    pub fn from_net(net: TinyMlp, bounds: Aabb) -> Result<QNetwork> {
        if net.input_dim() != 9 || net.output_dim() != 1 {
            return Err(Error::contract("Q network must map 9 inputs to one output"));
        }
        Ok(QNetwork { net, bounds })
    }

    pub fn net(&self) -> &TinyMlp {
        &self.net
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn encode(&self, x: Vec3, n: Vec3, omega: Vec3) -> [f64; 9] {
        encode_state(&self.bounds, x, n, omega)
    }

    /// Raw network output.
    pub fn raw(&self, x: Vec3, n: Vec3, omega: Vec3) -> f64 {
        self.net.predict(&self.encode(x, n, omega)).expect("input arity is fixed")[0]
    }

    /// Output clamped to ≥ 0.
    pub fn eval(&self, x: Vec3, n: Vec3, omega: Vec3) -> f64 {
        self.raw(x, n, omega).max(0.0)
    }
}

/// A path vertex `x` with its normal and the direction `ω` leaving it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QState {
    pub position: Vec3,
    pub normal: Vec3,
    pub direction: Vec3,
}

/// Bootstrapped target `lum(Le(y,−ω)) + lum(f·cos/pdf)·Q̂_frozen(y, ωi)`
/// and residual `ΔQ = Q̂(x, ω) − target`. `scatter` is `(ωi, lum(f·cos/pdf))`;
/// `y = None` is a miss.
pub fn residual_target(
    net: &QNetwork,
    frozen: &QNetwork,
    x: &QState,
    y: Option<&ShadingPoint>,
    scatter: Option<(Vec3, f64)>,
) -> (f64, f64) {
    let target = match y {
        None => 0.0,
        Some(y) => {
            let le = y.emitted().luminance();
            let next = match scatter {
                Some((wi, w)) if w > 0.0 => w * frozen.eval(y.position, y.normal, wi),
                _ => 0.0,
            };
            le + next
        }
    };
    let current = net.eval(x.position, x.normal, x.direction);
    (target, current - target)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QTrainConfig {
    /// Number of paths; each is used exactly once.
    pub paths: usize,
    /// Vertices per path (segments traced from the start point).
    pub max_vertices: usize,
    pub batch_size: usize,
    /// Batches between refreshes of the frozen target network.
    pub target_refresh: usize,
    pub rate: LearningRate,
    pub seed: u64,
    /// Paths per entry of the loss trace.
    pub trace_interval: usize,
}

impl Default for QTrainConfig {
    fn default() -> Self {
        QTrainConfig {
            paths: 100_000,
            max_vertices: 6,
            batch_size: 64,
            target_refresh: 64,
            rate: LearningRate::default(),
            seed: 0,
            trace_interval: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QTrainReport {
    /// Mean squared ΔQ per `trace_interval` paths.
    pub loss_trace: Vec<f64>,
    /// Mean squared ΔQ of every minibatch, before its step.
    pub batch_losses: Vec<f64>,
    pub vertices: usize,
}

struct Pending {
    state: QState,
    target: f64,
}

/// Online residual training: paths start at area-uniform surface points
/// with cosine-distributed directions, driven by the Halton sequence; every
/// vertex contributes one squared-ΔQ sample and minibatches are stepped as
/// soon as they fill.
pub fn train_q_network_online(net: &mut QNetwork, scene: &Scene, cfg: &QTrainConfig) -> Result<QTrainReport> {
    if cfg.paths == 0 {
        return Err(Error::contract("training budget must be positive"));
    }
    let key = mix64(cfg.seed ^ 0xb7e1_5162_8aed_2a6b);
    let mut frozen = net.clone();
    let mut pending: Vec<Pending> = Vec::with_capacity(cfg.batch_size);
    let mut report = QTrainReport {
        loss_trace: Vec::new(),
        batch_losses: Vec::new(),
        vertices: 0,
    };
    let mut interval_loss = 0.0;
    let mut interval_count = 0usize;
    let mut batches = 0usize;
    let total_batches_estimate = (cfg.paths * cfg.max_vertices).div_ceil(cfg.batch_size.max(1)) as u64;

    for path in 0..cfg.paths {
        let mut s = SampleStream::with_key(path as u64, key);
        let start = scene.sample_surface(s.sample(), s.sample_2d());
        let local = cosine_hemisphere(s.sample_2d());
        let n0 = start.normal;
        let mut x = QState {
            position: start.position,
            normal: n0,
            direction: Onb::from_normal(n0).to_world(local),
        };
        for _ in 0..cfg.max_vertices {
            let ray = crate::geometry::Ray::spawn(x.position, x.normal, x.direction);
            let y = scene.intersect(&ray);
            let scatter = y.as_ref().and_then(|y| {
                y.material
                    .sample(y.normal, y.wo, s.sample_2d())
                    .map(|b| (b.wi, b.weight.luminance()))
            });
            let (target, _) = residual_target(net, &frozen, &x, y.as_ref(), scatter);
            if !target.is_finite() {
                return Err(Error::training(format!("nonfinite residual target on path {path}")));
            }
            pending.push(Pending { state: x, target });
            report.vertices += 1;
            if pending.len() == cfg.batch_size {
                let rate = cfg.rate.at(batches as u64, total_batches_estimate);
                let loss = step(net, &pending, rate).map_err(|e| relabel(e, path))?;
                pending.clear();
                batches += 1;
                report.batch_losses.push(loss);
                interval_loss += loss;
                interval_count += 1;
                if batches % cfg.target_refresh.max(1) == 0 {
                    frozen = net.clone();
                }
            }
            let (Some(y), Some((wi, w))) = (y, scatter) else {
                break;
            };
            if w <= 0.0 {
                break;
            }
            x = QState {
                position: y.position,
                normal: y.normal,
                direction: wi,
            };
        }
        if (path + 1) % cfg.trace_interval.max(1) == 0 {
            report
                .loss_trace
                .push(if interval_count > 0 { interval_loss / interval_count as f64 } else { 0.0 });
            interval_loss = 0.0;
            interval_count = 0;
        }
    }
    if !pending.is_empty() {
        let rate = cfg.rate.at(batches as u64, total_batches_estimate);
        let loss = step(net, &pending, rate).map_err(|e| relabel(e, cfg.paths - 1))?;
        report.batch_losses.push(loss);
    }
    Ok(report)
}

fn relabel(e: Error, path: usize) -> Error {
    match e {
        Error::Training(m) => Error::training(format!("path {path}: {m}")),
        other => other,
    }
}

fn step(net: &mut QNetwork, pending: &[Pending], rate: f64) -> Result<f64> {
    let batch = MiniBatch::new(
        pending
            .iter()
            .map(|p| {
                Sample::new(
                    net.encode(p.state.position, p.state.normal, p.state.direction).to_vec(),
                    Target::Values(vec![p.target]),
                )
            })
            .collect(),
    );
    let loss = train_minibatch(&mut net.net, &batch, Loss::SquaredError, rate)?;
    if !loss.is_finite() {
        return Err(Error::training(format!("nonfinite loss {loss}")));
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;
    use crate::render::scenes::furnace;

    fn constant_net(bounds: Aabb, c: f64) -> QNetwork {
        let net = TinyMlp::from_layers(vec![Layer {
            inputs: 9,
            outputs: 1,
            weights: vec![0.0; 9],
            biases: vec![c],
            activation: Activation::Identity,
        }])
        .unwrap();
        QNetwork::from_net(net, bounds).unwrap()
    }

    #[test]
    fn furnace_fixed_point_has_zero_residual() {
        let s = furnace(0.5, 1.0);
        let q = constant_net(s.bounds(), 2.0);
        let x = QState {
            position: Vec3::splat(0.5),
            normal: Vec3::Y,
            direction: Vec3::Y,
        };
        let y = s.intersect(&crate::geometry::Ray::new(x.position, x.direction)).unwrap();
        let b = y.material.sample(y.normal, y.wo, [0.3, 0.8]).unwrap();
        let (t, dq) = residual_target(&q, &q, &x, Some(&y), Some((b.wi, b.weight.luminance())));
        assert!((t - 2.0).abs() < 1e-12);
        assert!(dq.abs() < 1e-12);
    }

    #[test]
    fn black_absorber_zero_net() {
        let s = furnace(0.0, 0.0);
        let q = constant_net(s.bounds(), 0.0);
        let x = QState {
            position: Vec3::splat(0.5),
            normal: Vec3::Y,
            direction: Vec3::X,
        };
        let y = s.intersect(&crate::geometry::Ray::new(x.position, x.direction)).unwrap();
        assert_eq!(residual_target(&q, &q, &x, Some(&y), None), (0.0, 0.0));
    }
}
