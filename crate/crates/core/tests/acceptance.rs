//! End-to-end acceptance checks. Each test prints one PASS/FAIL line, written
//! straight to stdout so it shows up even when the harness captures output.

use std::io::Write;
use std::sync::OnceLock;

use lightrl_core::baking::{generate_training_data, render_baked, train_voxel_networks, BakeConfig, TrainSettings, VoxelNetGrid};
use lightrl_core::geometry::{Material, Ray, Scene, SceneBuilder};
use lightrl_core::guiding::{
    guided_scatter_direction, train_q_network_online, Alpha, GuidedDistribution, QGrid,
    QNetwork, QTrainConfig, ScatterSample, DEFAULT_COSINE_MIX,
};
use lightrl_core::math::{cosine_hemisphere, Onb};
use lightrl_core::nee::select::softmax_temperature_probabilities;
use lightrl_core::nee::{
    build_cdf, render_direct, render_with_online_learning, sample_cdf, selection_index_image, LightSelectionNet, OnlineConfig,
    Selector,
};
use lightrl_core::nn::{Activation, TinyMlp};
use lightrl_core::qmc::SampleStream;
use lightrl_core::render::imageio::encode_pfm;
use lightrl_core::render::metrics::PALETTE;
use lightrl_core::render::scenes::{bandit2, cornell_box, furnace, split_room, split_room_index, split_room_lights};
use lightrl_core::render::{
    builtin_by_name, false_color_light_index, path_trace_guided, path_trace_reference, render_direct_reference, rmse,
    ExperimentConfig, Integrator, PtSettings,
};
use lightrl_core::{Rgb, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn report(criterion: usize, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {criterion:>2} {verdict}: {title}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {criterion} ({title}) failed: {detail}");
}

#[test]
fn criterion_01_furnace_closed_form() {
    let cfg = PtSettings {
        width: 64,
        height: 64,
        spp: 4096,
        max_path_length: 16,
        seed: 1,
        ..PtSettings::default()
    };
    let img = path_trace_reference(&furnace(0.5, 1.0), &cfg).unwrap();
    let worst = img
        .pixels()
        .iter()
        .flat_map(|p| [p.x, p.y, p.z])
        .map(|v| (v - 2.0).abs() / 2.0)
        .fold(0.0, f64::max);
    report(1, "furnace closed form", worst < 0.01, &format!("worst relative pixel deviation {:.4}%", worst * 100.0));
}

/// Worst relative disagreement between backpropagated and central-difference
/// gradients of `loss` over 100 random parameters.
fn gradient_check(net: &TinyMlp, x: &[f64], seed: u64, loss: &dyn Fn(&[f64]) -> f64, grads: Vec<f64>) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p0 = net.parameters();
    let mut probe = net.clone();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let i = rng.gen_range(0..p0.len());
        let mut p = p0.clone();
        p[i] = p0[i] + h;
        probe.set_parameters(&p).unwrap();
        let up = loss(&probe.predict(x).unwrap());
        p[i] = p0[i] - h;
        probe.set_parameters(&p).unwrap();
        let down = loss(&probe.predict(x).unwrap());
        let fd = (up - down) / (2.0 * h);
        let scale = grads[i].abs().max(fd.abs());
        if scale > 1e-10 {
            worst = worst.max((grads[i] - fd).abs() / scale);
        }
    }
    worst
}

#[test]
fn criterion_02_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut worst: f64 = 0.0;

    let small = TinyMlp::new(&[9, 9, 3], Activation::Relu, Activation::Identity, 3).unwrap();
    let target: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sq = |y: &[f64]| y.iter().zip(&target).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum::<f64>();
    let cache = small.forward(&x).unwrap();
    let d: Vec<f64> = cache.output().iter().zip(&target).map(|(a, b)| a - b).collect();
    let g = small.backward(&cache, &d).unwrap().flatten();
    worst = worst.max(gradient_check(&small, &x, 4, &sq, g));

    let big = TinyMlp::new(&[9, 64, 64, 8], Activation::Relu, Activation::Softmax, 5).unwrap();
    let class = 3;
    let nll = |y: &[f64]| -y[class].ln();
    let cache = big.forward(&x).unwrap();
    let mut d_logits = cache.output().to_vec();
    d_logits[class] -= 1.0;
    let g = big.backward_logits(&cache, &d_logits).unwrap().flatten();
    worst = worst.max(gradient_check(&big, &x, 6, &nll, g));

    let w: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let linear = |y: &[f64]| y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let g = big.backward(&cache, &w).unwrap().flatten();
    worst = worst.max(gradient_check(&big, &x, 7, &linear, g));

    report(2, "gradient correctness", worst < 1e-4, &format!("worst relative error {worst:.2e}"));
}

#[test]
fn criterion_03_residual_q_training() {
    let scene = furnace(0.5, 1.0);
    let mut q = QNetwork::new(scene.bounds(), &QNetwork::DEFAULT_HIDDEN, 0).unwrap();
    let r = train_q_network_online(&mut q, &scene, &QTrainConfig::default()).unwrap();
    let mut err = 0.0;
    for i in 0..1000u64 {
        let mut s = SampleStream::with_key(i, 0x51ab);
        let surf = scene.sample_surface(s.sample(), s.sample_2d());
        let d = Onb::from_normal(surf.normal).to_world(cosine_hemisphere(s.sample_2d()));
        err += (q.eval(surf.position, surf.normal, d) - 2.0).abs();
    }
    let mean_err = err / 1000.0;
    let windows: Vec<f64> = r.batch_losses.chunks(10).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let increases = windows.windows(2).filter(|w| w[1] > w[0]).count();
    let pass = mean_err < 0.1 && increases == 0;
    report(
        3,
        "residual Q training",
        pass,
        &format!(
            "mean |Q-2| {mean_err:.4}; {increases} of {} consecutive 10-batch windows increase",
            windows.len().saturating_sub(1)
        ),
    );
}

#[test]
fn criterion_04_proportional_selection() {
    let scene = bandit2(1.0, 3.0);
    let cfg = OnlineConfig {
        width: 16,
        height: 16,
        iterations: 16,
        ..OnlineConfig::default()
    };
    let r = render_with_online_learning(&scene, &cfg, None).unwrap();
    let ray = scene.camera.generate_ray([0.5, 0.5], 1.0);
    let sp = scene.intersect(&ray).unwrap();
    let p = r.net.probabilities(sp.position, sp.normal, ray.direction);
    let pass = (p[0] - 0.25).abs() <= 0.03 && (p[1] - 0.75).abs() <= 0.03;
    report(4, "proportional selection optimum", pass, &format!("probabilities ({:.4}, {:.4})", p[0], p[1]));
}

const SPLIT_SIZE: usize = 128;

fn split_room_net() -> &'static (Scene, LightSelectionNet) {
    static NET: OnceLock<(Scene, LightSelectionNet)> = OnceLock::new();
    NET.get_or_init(|| {
        let scene = split_room();
        let cfg = OnlineConfig {
            width: SPLIT_SIZE,
            height: SPLIT_SIZE,
            iterations: 16,
            ..OnlineConfig::default()
        };
        let net = render_with_online_learning(&scene, &cfg, None).unwrap().net;
        (scene, net)
    })
}

fn palette_index(c: Rgb) -> Option<usize> {
    PALETTE.iter().position(|p| Rgb::from(*p) == c)
}

#[test]
fn criterion_05_split_room_selection() {
    let (scene, net) = split_room_net();
    let n = SPLIT_SIZE;
    let indices = selection_index_image(scene, net, n, n, 7);
    let colors = false_color_light_index(n, n, &indices).unwrap();
    let mut own = [0usize; 4];
    let mut own_color = [0usize; 4];
    let mut total = [0usize; 4];
    let mut per_light = [[0usize; 8]; 4];
    for (pixel, chosen) in indices.iter().enumerate() {
        let Some(light) = chosen else { continue };
        let film = [((pixel % n) as f64 + 0.5) / n as f64, ((pixel / n) as f64 + 0.5) / n as f64];
        let sp = scene.intersect(&scene.camera.generate_ray(film, 1.0)).unwrap();
        let room = split_room_index(sp.position);
        let mine = split_room_lights(room);
        total[room] += 1;
        own[room] += usize::from(mine.contains(light));
        per_light[room][*light] += 1;
        let shown = palette_index(colors.pixel(pixel)).unwrap();
        own_color[room] += usize::from(mine.iter().any(|&l| PALETTE[l] == PALETTE[shown]));
    }
    let frac = |a: &[usize; 4]| -> Vec<f64> { (0..4).map(|r| a[r] as f64 / total[r].max(1) as f64).collect() };
    let selections = frac(&own);
    let coverage = frac(&own_color);
    let dominant: Vec<f64> = (0..4)
        .map(|r| *per_light[r].iter().max().unwrap() as f64 / total[r].max(1) as f64)
        .collect();
    let pass = total.iter().all(|&t| t > 0) && selections.iter().chain(&coverage).all(|&f| f >= 0.9);
    report(
        5,
        "split-room selection",
        pass,
        &format!(
            "own-light selections per room {selections:.3?}; own-color coverage {coverage:.3?}; single dominant entry {dominant:.3?}"
        ),
    );
}

#[test]
fn criterion_06_split_room_error_ordering() {
    let (scene, net) = split_room_net();
    let size = SPLIT_SIZE;
    let cfg = |spp, seed| PtSettings {
        width: size,
        height: size,
        spp,
        seed,
        ..PtSettings::default()
    };
    let reference = render_direct_reference(scene, &cfg(256, 5)).unwrap();
    let mut uniform = Vec::new();
    let mut learned = Vec::new();
    for spp in [1, 2, 4, 8, 16, 32] {
        let u = render_direct(scene, &cfg(spp, 11), &Selector::Uniform).unwrap();
        let l = render_direct(scene, &cfg(spp, 11), &Selector::Net(net)).unwrap();
        uniform.push(rmse(&u, &reference, true).unwrap());
        learned.push(rmse(&l, &reference, true).unwrap());
    }
    let ordered = learned.iter().zip(&uniform).all(|(l, u)| l <= u);
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let pass = ordered && decreasing(&uniform) && decreasing(&learned);
    report(
        6,
        "split-room error ordering",
        pass,
        &format!("uniform {uniform:.4?}; learned {learned:.4?}"),
    );
}

/// Relative RMSE of the baked Cornell box at 4 spp against a 512-spp,
/// length-6 reference.
fn baked_cornell_error(glossy: bool) -> f64 {
    let scene = cornell_box(glossy);
    let size = 64;
    let reference = path_trace_reference(
        &scene,
        &PtSettings {
            width: size,
            height: size,
            spp: 512,
            max_path_length: 6,
            seed: 3,
            ..PtSettings::default()
        },
    )
    .unwrap();
    let data = generate_training_data(&scene, &BakeConfig { seed: 1, ..BakeConfig::default() }).unwrap();
    let mut grid = VoxelNetGrid::new(scene.bounds(), 3, 1).unwrap();
    grid.assign(&data);
    train_voxel_networks(
        &mut grid,
        &TrainSettings {
            epochs: 10_000,
            rate: lightrl_core::nn::LearningRate::with_base(0.03),
            seed: 1,
            ..TrainSettings::default()
        },
    )
    .unwrap();
    let img = render_baked(
        &scene,
        &grid,
        &PtSettings {
            width: size,
            height: size,
            spp: 4,
            seed: 9,
            ..PtSettings::default()
        },
    )
    .unwrap();
    rmse(&img, &reference, true).unwrap()
}

#[test]
fn criterion_07_baking_protocol() {
    let diffuse = baked_cornell_error(false);
    let glossy = baked_cornell_error(true);
    report(
        7,
        "baking protocol",
        diffuse < 0.1 && glossy < 0.15,
        &format!("relative RMSE diffuse {diffuse:.4} (< 0.1), glossy {glossy:.4} (< 0.15)"),
    );
}

#[test]
fn criterion_08_fixed_point() {
    let (ea, eb, k) = (1.5, 0.25, 0.6);
    let mut b = SceneBuilder::new();
    let ma = b.material(Material::diffuse(Rgb::splat(0.5)).with_emission(Rgb::splat(ea)));
    let mb = b.material(Material::diffuse(Rgb::splat(0.5)).with_emission(Rgb::splat(eb)));
    b.quad(Vec3::ZERO, Vec3::X, Vec3::Y, ma);
    b.quad(Vec3::new(0.0, 0.0, 1.0), Vec3::Y, Vec3::X, mb);
    let scene = b.build().unwrap();
    let mut grid = QGrid::new(scene.bounds(), 4, 8).unwrap();
    let (xa, xb) = (Vec3::new(0.5, 0.5, 0.9), Vec3::new(0.5, 0.5, 0.1));
    let (wa, wb) = (-Vec3::Z, Vec3::Z);
    let ya = scene.intersect(&Ray::new(xa, wa)).unwrap();
    let yb = scene.intersect(&Ray::new(xb, wb)).unwrap();
    for _ in 0..200 {
        let qb = grid.lookup(xb, wb);
        grid.q_update(xa, wa, Some(&ya), &[ScatterSample { weight: k, q: qb }], Alpha::Fixed(0.5)).unwrap();
        let qa = grid.lookup(xa, wa);
        grid.q_update(xb, wb, Some(&yb), &[ScatterSample { weight: k, q: qa }], Alpha::Fixed(0.5)).unwrap();
    }
    let det = 1.0 - k * k;
    let (qa, qb) = ((ea + k * eb) / det, (eb + k * ea) / det);
    let err = (grid.lookup(xa, wa) - qa).abs().max((grid.lookup(xb, wb) - qb).abs());
    report(8, "fixed point of the Q update", err < 1e-6, &format!("max deviation from direct solve {err:.2e}"));
}

/// Chi-square p-value, pooling cells expected to hold fewer than five draws.
fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut o_rest, mut e_rest) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        if *e >= 5.0 {
            stat += (o - e).powi(2) / e;
            cells += 1;
        } else {
            o_rest += o;
            e_rest += e;
        }
    }
    if e_rest > 0.0 {
        stat += (o_rest - e_rest).powi(2) / e_rest;
        cells += 1;
    }
    ChiSquared::new((cells - 1) as f64).unwrap().sf(stat)
}

#[test]
fn criterion_09_sampling_statistics() {
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let qs: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..4.0)).collect();
    let cdf = build_cdf(&qs).unwrap();
    let mut counts = vec![0.0; qs.len()];
    for _ in 0..draws {
        counts[sample_cdf(&cdf, rng.gen()).0] += 1.0;
    }
    let expected: Vec<f64> = cdf.pmf().iter().map(|p| p * draws as f64).collect();
    let p_cdf = chi_square_p(&counts, &expected);

    let scene = cornell_box(false);
    let mut grid = QGrid::with_defaults(scene.bounds());
    let warm = PtSettings {
        width: 32,
        height: 32,
        spp: 8,
        seed: 1,
        ..PtSettings::default()
    };
    path_trace_guided(&scene, &warm, &mut grid, DEFAULT_COSINE_MIX).unwrap();
    let sp = scene
        .intersect(&Ray::new(Vec3::new(0.5, 0.5, -1.0), (Vec3::new(0.3, 0.0, 0.3) - Vec3::new(0.5, 0.5, -1.0)).normalized()))
        .unwrap();
    let dist = GuidedDistribution::new(&grid, &sp, DEFAULT_COSINE_MIX);
    let masses = dist.bin_masses();
    let mut counts = vec![0.0; masses.len()];
    for _ in 0..draws {
        let g = guided_scatter_direction(&grid, &sp, [rng.gen(), rng.gen()], DEFAULT_COSINE_MIX);
        counts[dist.local_bin(dist.frame().to_local(g.direction))] += 1.0;
    }
    let expected: Vec<f64> = masses.iter().map(|m| m * draws as f64).collect();
    let p_guided = chi_square_p(&counts, &expected);

    let uniform = (1..=16).all(|n| {
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-20.0..20.0)).collect();
        softmax_temperature_probabilities(&q, 1.0).unwrap().iter().all(|&p| p == 1.0 / n as f64)
    });
    report(
        9,
        "sampling statistics",
        p_cdf > 0.01 && p_guided > 0.01 && uniform && !dist.is_fallback(),
        &format!("sample_cdf p = {p_cdf:.3}, guided p = {p_guided:.3}, T = 1 exactly uniform: {uniform}"),
    );
}

fn run_pfm(cfg: &ExperimentConfig) -> Vec<u8> {
    let scene = builtin_by_name(&cfg.scene).unwrap();
    encode_pfm(&cfg.run(&scene).unwrap().image)
}

#[test]
fn criterion_10_determinism() {
    let mut failures = Vec::new();
    for integrator in Integrator::ALL {
        let mut cfg = ExperimentConfig {
            scene: "split-room".into(),
            integrator,
            width: 24,
            height: 24,
            spp: 2,
            seed: 13,
            tile: 8,
            ..ExperimentConfig::default()
        };
        cfg.learner.iterations = 2;
        cfg.learner.batches = 8;
        cfg.learner.bake_points = 400;
        cfg.learner.bake_rays = 8;
        cfg.learner.bake_epochs = 20;
        let base = run_pfm(&cfg);
        if run_pfm(&cfg) != base {
            failures.push(format!("{} repeat", integrator.name()));
        }
        let retiled = ExperimentConfig { tile: 24, ..cfg.clone() };
        if run_pfm(&retiled) != base {
            failures.push(format!("{} tile size", integrator.name()));
        }
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            if pool.install(|| run_pfm(&cfg)) != base {
                failures.push(format!("{} with {threads} threads", integrator.name()));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{} integrators bit-identical across repeats, tile sizes and thread counts", Integrator::ALL.len())
    } else {
        format!("differences: {}", failures.join(", "))
    };
    report(10, "determinism", failures.is_empty(), &detail);
}
