use std::f64::consts::PI;

use lightrl_core::geometry::{Material, Ray, Scene, SceneBuilder, Shape};
use lightrl_core::math::{build_onb, uniform_sphere};
use lightrl_core::render::scenes_builtin;
use lightrl_core::render::SceneId;
use lightrl_core::{Rgb, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn overlapping_spheres(rng: &mut ChaCha8Rng) -> Scene {
    let mut b = SceneBuilder::new();
    let m = b.material(Material::diffuse(Rgb::splat(0.5)));
    for _ in 0..12 {
        let c = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        b.sphere(c, rng.gen_range(0.2..0.8), m);
    }
    b.build().unwrap()
}

#[test]
fn nearest_hit_equals_brute_force_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let scene = overlapping_spheres(&mut rng);
    let mut hits = 0;
    for _ in 0..2000 {
        let origin = uniform_sphere([rng.gen(), rng.gen()]) * 4.0;
        let target = Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let ray = Ray::new(origin, (target - origin).normalized());
        let brute = scene
            .primitives()
            .iter()
            .filter_map(|p| p.shape.intersect(&ray))
            .map(|h| h.t)
            .fold(f64::INFINITY, f64::min);
        match scene.intersect(&ray) {
            Some(sp) => {
                hits += 1;
                assert_eq!(sp.t, brute);
            }
            None => assert!(brute.is_infinite()),
        }
    }
    assert!(hits > 100);
}

/// Midpoint rule over (cos θ, φ) on a 1000×1000 grid.
fn hemispherical_albedo(m: &Material, wo: Vec3) -> f64 {
    let n = Vec3::Z;
    let k = 1000;
    let mut sum = 0.0;
    for i in 0..k {
        let mu = (i as f64 + 0.5) / k as f64;
        let s = (1.0 - mu * mu).sqrt();
        for j in 0..k {
            let phi = 2.0 * PI * (j as f64 + 0.5) / k as f64;
            let wi = Vec3::new(s * phi.cos(), s * phi.sin(), mu);
            sum += m.eval(n, wo, wi).x * mu;
        }
    }
    sum * (1.0 / k as f64) * (2.0 * PI / k as f64)
}

#[test]
fn glossy_lobe_quadrature_stays_below_albedo() {
    let albedo = 0.8;
    for exponent in [0.0, 1.0, 4.0, 12.0, 50.0] {
        let m = Material::glossy(Rgb::splat(albedo), exponent);
        for theta in [0.0f64, 0.5, 1.0, 1.4] {
            let wo = Vec3::new(theta.sin(), 0.0, theta.cos());
            let a = hemispherical_albedo(&m, wo);
            assert!(a <= albedo + 1e-3, "exponent {exponent}, θ {theta}: {a}");
            assert!(a > 0.0);
        }
    }
    let d = hemispherical_albedo(&Material::diffuse(Rgb::splat(albedo)), Vec3::Z);
    assert!((d - albedo).abs() < 1e-4, "{d}");
}

#[test]
fn frames_from_random_normals_are_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = uniform_sphere([rng.gen(), rng.gen()]);
        let [a, b, c] = build_onb(n);
        worst = worst.max(a.dot(b).abs()).max(a.dot(c).abs()).max(b.dot(c).abs());
        assert!((c - n).length() < 1e-12);
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn quad_light_samples_center_on_centroid() {
    let mut b = SceneBuilder::new();
    let light = b.material(Material::emissive(Rgb::ONE));
    b.quad(Vec3::new(1.0, -1.0, 2.0), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 3.0, 0.0), light);
    let scene = b.build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let mut mean = Vec3::ZERO;
    for _ in 0..n {
        let s = scene.sample_light_point(0, [rng.gen(), rng.gen()]).unwrap();
        assert!((s.pdf_area - 1.0 / 6.0).abs() < 1e-12);
        mean = mean + s.position * (1.0 / n as f64);
    }
    let centroid = Vec3::new(2.0, 0.5, 2.0);
    let sigma_x = 2.0 / (12.0 * n as f64).sqrt();
    let sigma_y = 3.0 / (12.0 * n as f64).sqrt();
    assert!((mean.x - centroid.x).abs() < 3.0 * sigma_x, "{mean:?}");
    assert!((mean.y - centroid.y).abs() < 3.0 * sigma_y, "{mean:?}");
    assert!((mean.z - 2.0).abs() < 1e-9);
}

#[test]
fn surface_sampling_follows_area() {
    let mut b = SceneBuilder::new();
    let m = b.material(Material::diffuse(Rgb::splat(0.5)));
    b.quad(Vec3::ZERO, Vec3::X, Vec3::Y, m);
    b.quad(Vec3::new(3.0, 0.0, 0.0), Vec3::X * 2.0, Vec3::Y * 2.0, m);
    let scene = b.build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let small = (0..n)
        .filter(|_| scene.sample_surface(rng.gen(), [rng.gen(), rng.gen()]).primitive == 0)
        .count() as f64;
    let sigma = (n as f64 * 0.2 * 0.8).sqrt();
    assert!((small - 0.2 * n as f64).abs() < 3.0 * sigma, "{small}");
}

fn cornell() -> Scene {
    scenes_builtin(SceneId::CornellGlossy)
}

proptest! {
    #[test]
    fn hits_are_consistent_and_face_the_ray(u in (0.0f64..1.0, 0.0f64..1.0), o in (0.2f64..0.8, 0.2f64..0.8, 0.2f64..0.8)) {
        let scene = cornell();
        let bounds = scene.bounds();
        let e = bounds.extent();
        let origin = bounds.min + Vec3::new(o.0 * e.x, o.1 * e.y, o.2 * e.z);
        let dir = uniform_sphere([u.0, u.1]);
        if let Some(sp) = scene.intersect(&Ray::new(origin, dir)) {
            prop_assert!(sp.normal.dot(-dir) > 0.0);
            if sp.t > 1e-3 {
                let short = Ray::with_range(origin, dir, 0.0, sp.t - 1e-4).unwrap();
                prop_assert!(scene.intersect(&short).is_none());
            }
        }
    }

    #[test]
    fn diffuse_bsdf_is_reciprocal(a in (0.0f64..1.0, 0.0f64..1.0), b in (0.0f64..1.0, 0.0f64..1.0)) {
        let m = Material::diffuse(Rgb::new(0.2, 0.5, 0.9));
        let n = Vec3::new(0.3, -0.2, 0.9).normalized();
        let wo = uniform_sphere([a.0, a.1]);
        let wi = uniform_sphere([b.0, b.1]);
        prop_assert_eq!(m.eval(n, wo, wi), m.eval(n, wi, wo));
    }

    #[test]
    fn surface_samples_lie_on_their_primitive(s in 0.0f64..1.0, u in (0.0f64..1.0, 0.0f64..1.0)) {
        let scene = cornell();
        let p = scene.sample_surface(s, [u.0, u.1]);
        let origin = p.position + p.normal * 0.5;
        let hit = scene.primitives()[p.primitive].shape.intersect(&Ray::new(origin, -p.normal));
        prop_assert!(hit.is_some());
        prop_assert!((hit.unwrap().t - 0.5).abs() < 1e-9);
    }
}

#[test]
fn shapes_report_positive_area() {
    let shapes = [
        Shape::Sphere { center: Vec3::ZERO, radius: 0.5 },
        Shape::Triangle { p0: Vec3::ZERO, p1: Vec3::X, p2: Vec3::Y },
        Shape::Quad { corner: Vec3::ZERO, edge_u: Vec3::X * 2.0, edge_v: Vec3::Z * 3.0 },
    ];
    let want = [PI, 0.5, 6.0];
    for (s, w) in shapes.iter().zip(want) {
        assert!((s.area() - w).abs() < 1e-12);
    }
}
