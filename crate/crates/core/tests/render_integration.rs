use lightrl_core::geometry::{Camera, Material, SceneBuilder};
use lightrl_core::render::imageio::{decode_pfm, encode_pfm};
use lightrl_core::render::scenes::{cornell_box, split_room};
use lightrl_core::render::{
    path_trace_guided, path_trace_reference, read_pfm, render_direct_reference, rmse, write_image, ExperimentConfig,
    ImageBuffer, ImageFormat, Integrator, PtSettings,
};
use lightrl_core::guiding::{QGrid, DEFAULT_COSINE_MIX};
use lightrl_core::{Rgb, Vec3};

fn settings(size: usize, spp: usize, seed: u64) -> PtSettings {
    PtSettings {
        width: size,
        height: size,
        spp,
        seed,
        ..PtSettings::default()
    }
}

#[test]
fn emitter_seen_against_black_is_exact() {
    let mut b = SceneBuilder::new();
    let black = b.material(Material::diffuse(Rgb::ZERO));
    let lamp = b.material(Material::emissive(Rgb::new(3.0, 2.0, 1.0)));
    b.quad(Vec3::new(-5.0, -5.0, 2.0), Vec3::Y * 10.0, Vec3::X * 10.0, black);
    b.quad(Vec3::new(-0.3, -0.3, 1.0), Vec3::Y * 0.6, Vec3::X * 0.6, lamp);
    b.camera(Camera {
        position: Vec3::ZERO,
        look_at: Vec3::Z,
        up: Vec3::Y,
        fov_degrees: 60.0,
    });
    let scene = b.build().unwrap();
    let img = path_trace_reference(&scene, &settings(32, 1, 0)).unwrap();
    let (mut lit, mut dark) = (0, 0);
    for v in img.pixels() {
        if v == Rgb::new(3.0, 2.0, 1.0) {
            lit += 1;
        } else {
            assert_eq!(v, Rgb::ZERO);
            dark += 1;
        }
    }
    assert!(lit > 0 && dark > 0);
}

#[test]
fn direct_view_never_exceeds_the_brightest_emitter() {
    let scene = cornell_box(false);
    let img = path_trace_reference(&scene, &settings(32, 16, 1)).unwrap();
    let le_max = scene.lights().iter().map(|l| l.emission.luminance()).fold(0.0, f64::max);
    for v in img.pixels() {
        let y = v.luminance();
        assert!((0.0..=le_max).contains(&y), "{y}");
    }
}

#[test]
fn doubling_spp_shrinks_error_by_root_two() {
    let scene = cornell_box(false);
    let reference = path_trace_reference(&scene, &settings(32, 512, 100)).unwrap();
    let e16 = rmse(&path_trace_reference(&scene, &settings(32, 16, 1)).unwrap(), &reference, true).unwrap();
    let e32 = rmse(&path_trace_reference(&scene, &settings(32, 32, 2)).unwrap(), &reference, true).unwrap();
    let ratio = e16 / e32;
    assert!((1.25..=1.60).contains(&ratio), "{e16} / {e32} = {ratio}");
}

#[test]
fn cornell_512_spp_is_within_two_percent_of_4096() {
    let scene = cornell_box(false);
    let a = path_trace_reference(&scene, &settings(64, 512, 1)).unwrap();
    let b = path_trace_reference(&scene, &settings(64, 4096, 2)).unwrap();
    let e = rmse(&a, &b, true).unwrap();
    assert!(e < 0.02, "relative rmse {e}");
}

/// Per-pixel z-scores of luminance between two independent estimates.
fn z_scores(a: &ImageBuffer, b: &ImageBuffer) -> Vec<f64> {
    (0..a.pixel_count())
        .map(|i| {
            let var = a.mean_variance(i).luminance() + b.mean_variance(i).luminance();
            let d = a.pixel(i).luminance() - b.pixel(i).luminance();
            if var > 0.0 {
                d / var.sqrt()
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Fails when more than 1% of pixels sit beyond 3σ (0.27% expected) or the
/// image means differ by more than 3σ.
fn assert_agree(name: &str, a: &ImageBuffer, b: &ImageBuffer) {
    let z = z_scores(a, b);
    let outliers = z.iter().filter(|v| v.abs() > 3.0).count();
    assert!(outliers * 100 <= z.len(), "{name}: {outliers} of {} pixels beyond 3σ", z.len());
    let n = a.pixel_count() as f64;
    let mean = |img: &ImageBuffer| img.pixels().iter().map(|v| v.luminance()).sum::<f64>() / n;
    let var: f64 = (0..a.pixel_count())
        .map(|i| a.mean_variance(i).luminance() + b.mean_variance(i).luminance())
        .sum::<f64>()
        / (n * n);
    let d = mean(a) - mean(b);
    assert!(d.abs() <= 3.0 * var.sqrt(), "{name}: image means differ by {d}");
}

fn config(scene: &str, integrator: Integrator, spp: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        scene: scene.into(),
        integrator,
        width: 32,
        height: 32,
        spp,
        seed,
        ..ExperimentConfig::default()
    };
    c.learner.iterations = 4;
    c
}

#[test]
fn direct_lighting_integrators_are_unbiased() {
    let scene = split_room();
    let reference = render_direct_reference(&scene, &settings(32, 256, 77)).unwrap();
    for integrator in [Integrator::NeeUniform, Integrator::NeeTabular, Integrator::NeeNet] {
        let img = config("split-room", integrator, 256, 5).run(&scene).unwrap().image;
        assert_agree(integrator.name(), &img, &reference);
    }
}

#[test]
fn guided_path_tracing_is_unbiased() {
    let scene = cornell_box(false);
    let reference = path_trace_reference(&scene, &settings(32, 1024, 77)).unwrap();
    let img = config("cornell-diffuse", Integrator::GuidedPt, 1024, 5).run(&scene).unwrap().image;
    assert_agree("guided-pt", &img, &reference);
}

#[test]
fn guided_beats_uniform_scatter_on_split_room() {
    let scene = split_room();
    let reference = path_trace_reference(&scene, &settings(32, 1024, 99)).unwrap();
    let plain = path_trace_reference(&scene, &settings(32, 16, 3)).unwrap();
    let mut grid = QGrid::with_defaults(scene.bounds());
    let (guided, _) = path_trace_guided(&scene, &settings(32, 16, 3), &mut grid, DEFAULT_COSINE_MIX).unwrap();
    let e_plain = rmse(&plain, &reference, true).unwrap();
    let e_guided = rmse(&guided, &reference, true).unwrap();
    assert!(e_guided <= e_plain, "guided {e_guided} vs uniform {e_plain}");
}

#[test]
fn fixed_configuration_gives_identical_pfm_bytes() {
    for integrator in [
        Integrator::PtReference,
        Integrator::NeeUniform,
        Integrator::NeeTabular,
        Integrator::NeeNet,
        Integrator::GuidedPt,
    ] {
        let mut c = config("split-room", integrator, 2, 9);
        c.width = 16;
        c.height = 16;
        c.learner.iterations = 2;
        let scene = split_room();
        let a = encode_pfm(&c.run(&scene).unwrap().image);
        let b = encode_pfm(&c.run(&scene).unwrap().image);
        assert!(a == b, "{} differs between runs", integrator.name());
    }
}

#[test]
fn pfm_round_trips_bit_exactly() {
    let img = path_trace_reference(&cornell_box(true), &settings(8, 4, 3)).unwrap();
    let back = decode_pfm(&encode_pfm(&img)).unwrap();
    let f32_bits = |v: Rgb| [v.x as f32, v.y as f32, v.z as f32].map(f32::to_bits);
    for (a, b) in img.pixels().into_iter().zip(back.pixels()) {
        assert_eq!(f32_bits(a), f32_bits(b));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.pfm");
    write_image(&back, &path, ImageFormat::Pfm).unwrap();
    assert_eq!(read_pfm(&path).unwrap().pixels(), back.pixels());
}
