//! Direct-lighting renderers (primary-hit emission plus one next-event
//! sample) with different light-selection policies.

use std::str::FromStr;

use super::cdf::{sample_cdf, Cdf};
use super::estimator::sample_light_contribution;
use super::net::LightSelectionNet;
use super::select::{epsilon_greedy_probabilities, softmax_temperature_probabilities};
use super::td::TdTable;
use crate::error::{Error, Result};
use crate::geometry::{Scene, ShadingPoint};
use crate::math::{Rgb, Vec3};
use crate::render::{film_position, map_pixels_tiled, pixel_stream, ImageBuffer, PtSettings};

/// Light-selection policy names accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectorName {
    Uniform,
    TabularTd,
    Net,
    EpsGreedy,
    SoftmaxT,
}

impl SelectorName {
    pub const ALL: [SelectorName; 5] = [
        SelectorName::Uniform,
        SelectorName::TabularTd,
        SelectorName::Net,
        SelectorName::EpsGreedy,
        SelectorName::SoftmaxT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorName::Uniform => "uniform",
            SelectorName::TabularTd => "tabular-td",
            SelectorName::Net => "net",
            SelectorName::EpsGreedy => "eps-greedy",
            SelectorName::SoftmaxT => "softmax-T",
        }
    }
}

impl FromStr for SelectorName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SelectorName::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown selector '{s}'")))
    }
}

impl std::fmt::Display for SelectorName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How a TD table's values become a selection distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TablePolicy {
    /// Proportional to the values, floored.
    Proportional,
    EpsilonGreedy(f64),
    SoftmaxTemperature(f64),
}

impl TablePolicy {
    fn distribution(&self, values: &[f64]) -> Result<Cdf> {
        match *self {
            TablePolicy::Proportional => super::cdf::build_cdf(values),
            TablePolicy::EpsilonGreedy(e) => Cdf::proportional(&epsilon_greedy_probabilities(values, e)?),
            TablePolicy::SoftmaxTemperature(t) => Cdf::proportional(&softmax_temperature_probabilities(values, t)?),
        }
    }

    fn validate(&self) -> Result<()> {
        self.distribution(&[1.0, 0.0]).map(|_| ())
    }
}

/// A frozen selection rule.
#[derive(Clone, Copy, Debug)]
pub enum Selector<'a> {
    Uniform,
    Table(&'a TdTable, TablePolicy),
    Net(&'a LightSelectionNet),
}

impl Selector<'_> {
    /// Selection distribution at a shading point seen along `direction`.
    pub fn distribution(&self, scene: &Scene, sp: &ShadingPoint, direction: Vec3) -> Result<Cdf> {
        match self {
            Selector::Uniform => Cdf::proportional(&vec![1.0; scene.light_count()]),
            Selector::Table(t, policy) => {
                policy.distribution(&t.values(t.state(sp.position, sp.normal, direction)))
            }
            Selector::Net(n) => Ok(n.distribution(sp.position, sp.normal, direction)),
        }
    }
}

/// One direct-lighting sample; also returns `(state, light, lum(c))` for
/// table learning.
struct DirectSample {
    value: Rgb,
    observation: Option<(usize, usize, f64)>,
}

fn direct_sample(scene: &Scene, cfg: &PtSettings, sel: &Selector, pixel: usize, k: usize) -> Result<DirectSample> {
    let mut s = pixel_stream(cfg.seed, pixel, cfg.spp, k);
    let film = film_position(pixel, cfg.width, cfg.height, s.sample_2d());
    let ray = scene.camera.generate_ray(film, cfg.aspect());
    let mut out = DirectSample {
        value: Rgb::ZERO,
        observation: None,
    };
    let Some(sp) = scene.intersect(&ray) else {
        return Ok(out);
    };
    out.value = sp.emitted();
    if sp.material.is_black() || scene.light_count() == 0 {
        return Ok(out);
    }
    let cdf = sel.distribution(scene, &sp, ray.direction)?;
    let (light, p) = sample_cdf(&cdf, s.sample());
    let c = sample_light_contribution(scene, &sp, light, s.sample_2d())?;
    if p > 0.0 {
        out.value += c / p;
    }
    if let Selector::Table(t, _) = sel {
        out.observation = Some((t.state(sp.position, sp.normal, ray.direction), light, c.luminance()));
    }
    Ok(out)
}

/// Direct lighting with a fixed selector.
pub fn render_direct(scene: &Scene, cfg: &PtSettings, sel: &Selector) -> Result<ImageBuffer> {
    cfg.validate()?;
    let rows = map_pixels_tiled(cfg.width, cfg.height, cfg.tile, |pixel| {
        (0..cfg.spp)
            .map(|k| direct_sample(scene, cfg, sel, pixel, k).map(|d| d.value))
            .collect::<Result<Vec<_>>>()
    });
    let mut img = ImageBuffer::new(cfg.width, cfg.height)?;
    for (pixel, vals) in rows.into_iter().enumerate() {
        for v in vals? {
            img.add_sample(pixel, v);
        }
    }
    Ok(img)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularPass {
    pub pass: usize,
    /// Mean squared difference between observations and table values
    /// before they were applied.
    pub mean_td_error: f64,
}

/// Direct lighting that learns a TD table while rendering: pass `k` renders
/// sample `k` of every pixel against the table as it was after pass `k−1`.
pub fn render_direct_tabular(
    scene: &Scene,
    cfg: &PtSettings,
    table: &mut TdTable,
    policy: TablePolicy,
) -> Result<(ImageBuffer, Vec<TabularPass>)> {
    cfg.validate()?;
    policy.validate()?;
    if table.light_count() != scene.light_count() {
        return Err(Error::contract("table light count does not match the scene"));
    }
    let mut img = ImageBuffer::new(cfg.width, cfg.height)?;
    let mut trace = Vec::with_capacity(cfg.spp);
    for k in 0..cfg.spp {
        let frozen: &TdTable = table;
        let sel = Selector::Table(frozen, policy);
        let samples = map_pixels_tiled(cfg.width, cfg.height, cfg.tile, |pixel| direct_sample(scene, cfg, &sel, pixel, k));
        let mut err = 0.0;
        let mut n = 0usize;
        for (pixel, d) in samples.into_iter().enumerate() {
            let d = d?;
            img.add_sample(pixel, d.value);
            if let Some((state, light, c)) = d.observation {
                let before = table.q(state, light);
                err += (c - before) * (c - before);
                n += 1;
                table.observe(state, light, c)?;
            }
        }
        trace.push(TabularPass {
            pass: k,
            mean_td_error: if n > 0 { err / n as f64 } else { 0.0 },
        });
    }
    Ok((img, trace))
}
