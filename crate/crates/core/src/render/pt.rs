use super::{film_position, pixel_stream, render_tiled, map_pixels_tiled, ImageBuffer, PixelStats, DEFAULT_TILE};
use crate::error::{Error, Result};
use crate::geometry::{MaterialKind, Scene, ShadingPoint};
use crate::guiding::{Alpha, GuidedDistribution, QGrid};
use crate::math::{Rgb, Vec3};
use crate::nee::estimator::{light_contribution, sample_light_contribution};
use crate::qmc::SampleStream;

/// Settings shared by the pixel-sampling integrators.
#[derive(Clone, Debug, PartialEq)]
pub struct PtSettings {
    pub width: usize,
    pub height: usize,
    pub spp: usize,
    /// Maximum number of path segments, counting the camera segment.
    pub max_path_length: usize,
    pub seed: u64,
    pub tile: usize,
}

impl Default for PtSettings {
    fn default() -> Self {
        PtSettings {
            width: 64,
            height: 64,
            spp: 16,
            max_path_length: 6,
            seed: 0,
            tile: DEFAULT_TILE,
        }
    }
}

impl PtSettings {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::usage("image dimensions must be positive"));
        }
        if self.spp == 0 {
            return Err(Error::usage("spp must be positive"));
        }
        if self.max_path_length == 0 {
            return Err(Error::usage("max path length must be at least 1"));
        }
        Ok(())
    }

    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }
}

/// Power heuristic weight of a strategy with density `a` against `b`.
#[inline]
fn power_heuristic(a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    if a2 + b2 > 0.0 {
        a2 / (a2 + b2)
    } else {
        0.0
    }
}

/// Solid-angle density with which uniform light selection plus uniform
/// area sampling produces the point hit at `hit`.
fn light_pdf(scene: &Scene, hit: &ShadingPoint, dir: Vec3) -> f64 {
    let Some(i) = hit.light else {
        return 0.0;
    };
    let cos_y = -hit.front_normal.dot(dir);
    if cos_y <= 0.0 {
        return 0.0;
    }
    hit.t * hit.t / (cos_y * scene.lights()[i].area * scene.light_count() as f64)
}

/// Next-event estimate at `sp` with a uniformly chosen light, MIS-weighted
/// against the scattering density `scatter_pdf`. Always uses three
/// dimensions of `s`.
fn nee_mis(scene: &Scene, sp: &ShadingPoint, s: &mut SampleStream, scatter_pdf: &dyn Fn(Vec3) -> f64) -> Rgb {
    let u_light = s.sample();
    let u_pos = s.sample_2d();
    let n = scene.light_count();
    if n == 0 || sp.material.is_black() {
        return Rgb::ZERO;
    }
    let light = ((u_light * n as f64) as usize).min(n - 1);
    let ls = scene.sample_light_point(light, u_pos).expect("light index in range");
    let c = light_contribution(scene, sp, &ls);
    if c.is_black() {
        return Rgb::ZERO;
    }
    let d = ls.position - sp.position;
    let dist2 = d.length_squared();
    let wi = d / dist2.sqrt();
    let cos_y = -ls.normal.dot(wi);
    let p_light = ls.pdf_area * dist2 / (cos_y * n as f64);
    c * (n as f64 * power_heuristic(p_light, scatter_pdf(wi)))
}

/// Guided scattering and the Q-grid updates gathered along a path.
struct Guide<'a> {
    grid: &'a QGrid,
    mix: f64,
    updates: Vec<(usize, usize, f64)>,
    fallbacks: u64,
    guided: u64,
}

impl Guide<'_> {
    fn record(&mut self, x: Vec3, omega: Vec3, target: f64) {
        if let Some(cell) = self.grid.cell_of(x) {
            self.updates.push((cell, self.grid.bin_of(omega), target));
        }
    }
}

/// Radiance arriving at the path origin from `first` along `omega0`, with
/// at most `max_len` segments counting the one that reached `first`.
/// Emission at `first` is counted in full; later emitters are reached by
/// next-event estimation and by scattering, combined with the power
/// heuristic.
fn trace(
    scene: &Scene,
    first: &ShadingPoint,
    origin: Vec3,
    max_len: usize,
    s: &mut SampleStream,
    mut guide: Option<&mut Guide>,
) -> Rgb {
    let mut sp = *first;
    let mut x_prev = origin;
    let mut omega = -sp.wo;
    let mut l = sp.emitted();
    let mut beta = Rgb::ONE;
    for depth in 1..max_len {
        let dist = match guide.as_deref_mut() {
            Some(g) if g.mix < 1.0 && sp.material.kind == MaterialKind::Diffuse && !sp.material.is_black() => {
                let d = GuidedDistribution::new(g.grid, &sp, g.mix);
                if d.is_fallback() {
                    g.fallbacks += 1;
                    None
                } else {
                    g.guided += 1;
                    Some(d)
                }
            }
            _ => None,
        };
        let scatter_pdf = |wi: Vec3| match &dist {
            Some(d) => d.pdf(wi),
            None => sp.material.pdf(sp.normal, sp.wo, wi),
        };
        l += beta * nee_mis(scene, &sp, s, &scatter_pdf);

        let u = s.sample_2d();
        let scatter = match &dist {
            Some(d) => {
                let g = d.sample(u);
                let cos = sp.normal.dot(g.direction);
                (g.pdf > 0.0 && cos > 0.0).then(|| (g.direction, sp.eval_bsdf(g.direction) * (cos / g.pdf), g.pdf))
            }
            None => sp.material.sample(sp.normal, sp.wo, u).map(|b| (b.wi, b.weight, b.pdf)),
        };
        let le = sp.emitted().luminance();
        let Some((wi, weight, pdf)) = scatter else {
            if let Some(g) = guide.as_deref_mut() {
                g.record(x_prev, omega, le);
            }
            break;
        };
        if let Some(g) = guide.as_deref_mut() {
            let q = g.grid.lookup(sp.position, wi);
            g.record(x_prev, omega, le + weight.luminance() * q);
        }
        beta = beta * weight;
        if beta.is_black() {
            break;
        }
        let Some(next) = scene.intersect(&sp.spawn_ray(wi)) else {
            if let Some(g) = guide.as_deref_mut() {
                g.record(sp.position, wi, 0.0);
            }
            break;
        };
        if next.light.is_some() && next.front_face {
            l += beta * next.emitted() * power_heuristic(pdf, light_pdf(scene, &next, wi));
        }
        if depth + 1 >= max_len {
            break;
        }
        x_prev = sp.position;
        omega = wi;
        sp = next;
    }
    l
}

fn radiance_reference(scene: &Scene, cfg: &PtSettings, pixel: usize, s: &mut SampleStream) -> Rgb {
    let film = film_position(pixel, cfg.width, cfg.height, s.sample_2d());
    let ray = scene.camera.generate_ray(film, cfg.aspect());
    match scene.intersect(&ray) {
        Some(sp) => trace(scene, &sp, ray.origin, cfg.max_path_length, s, None),
        None => Rgb::ZERO,
    }
}

/// Radiance leaving `sp` toward `sp.wo` along a path of at most
/// `max_path_length` segments, the segment arriving at `sp` included.
pub fn radiance_from(scene: &Scene, sp: &ShadingPoint, max_path_length: usize, s: &mut SampleStream) -> Rgb {
    trace(scene, sp, sp.position + sp.wo, max_path_length, s, None)
}

/// Path tracing with BSDF sampling and uniform-light next-event estimation
/// at every vertex, combined by multiple importance sampling.
pub fn path_trace_reference(scene: &Scene, cfg: &PtSettings) -> Result<ImageBuffer> {
    cfg.validate()?;
    render_tiled(cfg.width, cfg.height, cfg.tile, |pixel| {
        let mut st = PixelStats::default();
        for k in 0..cfg.spp {
            let mut s = pixel_stream(cfg.seed, pixel, cfg.spp, k);
            st.add(radiance_reference(scene, cfg, pixel, &mut s));
        }
        st
    })
}

/// Direct lighting only (emission plus all lights at the primary hit),
/// every light sampled once per pixel sample.
pub fn render_direct_reference(scene: &Scene, cfg: &PtSettings) -> Result<ImageBuffer> {
    cfg.validate()?;
    render_tiled(cfg.width, cfg.height, cfg.tile, |pixel| {
        let mut st = PixelStats::default();
        for k in 0..cfg.spp {
            let mut s = pixel_stream(cfg.seed, pixel, cfg.spp, k);
            let film = film_position(pixel, cfg.width, cfg.height, s.sample_2d());
            let ray = scene.camera.generate_ray(film, cfg.aspect());
            let mut l = Rgb::ZERO;
            if let Some(sp) = scene.intersect(&ray) {
                l = sp.emitted();
                for light in 0..scene.light_count() {
                    l += sample_light_contribution(scene, &sp, light, s.sample_2d()).expect("light index in range");
                }
            }
            st.add(l);
        }
        st
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GuidedStats {
    pub updates: u64,
    /// Guided scatter decisions that fell back to cosine sampling.
    pub fallbacks: u64,
    pub guided: u64,
}

/// Path tracing whose diffuse scattering directions follow the Q grid
/// (mixed with cosine sampling at weight `mix`), with the grid learned
/// online. Each sample pass renders against a frozen grid and the collected
/// updates are applied afterwards in pixel order, so results do not depend
/// on scheduling. With `mix ≥ 1` the sampling matches
/// [`path_trace_reference`] exactly.
pub fn path_trace_guided(scene: &Scene, cfg: &PtSettings, grid: &mut QGrid, mix: f64) -> Result<(ImageBuffer, GuidedStats)> {
    cfg.validate()?;
    let mut img = ImageBuffer::new(cfg.width, cfg.height)?;
    let mut stats = GuidedStats::default();
    for k in 0..cfg.spp {
        let frozen: &QGrid = grid;
        let paths = map_pixels_tiled(cfg.width, cfg.height, cfg.tile, |pixel| {
            let mut s = pixel_stream(cfg.seed, pixel, cfg.spp, k);
            let mut g = Guide {
                grid: frozen,
                mix,
                updates: Vec::new(),
                fallbacks: 0,
                guided: 0,
            };
            let film = film_position(pixel, cfg.width, cfg.height, s.sample_2d());
            let ray = scene.camera.generate_ray(film, cfg.aspect());
            let value = match scene.intersect(&ray) {
                Some(sp) => trace(scene, &sp, ray.origin, cfg.max_path_length, &mut s, Some(&mut g)),
                None => {
                    g.record(ray.origin, ray.direction, 0.0);
                    Rgb::ZERO
                }
            };
            (value, g.updates, g.fallbacks, g.guided)
        });
        for (pixel, (value, updates, fallbacks, guided)) in paths.into_iter().enumerate() {
            img.add_sample(pixel, value);
            stats.fallbacks += fallbacks;
            stats.guided += guided;
            for (cell, bin, target) in updates {
                grid.update_bin(cell, bin, target, Alpha::VisitCount);
                stats.updates += 1;
            }
        }
    }
    Ok((img, stats))
}
