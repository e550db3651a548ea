use crate::error::Result;
use crate::geometry::{LightSample, Scene, ShadingPoint};
use crate::math::Rgb;

/// Light sample contribution `Le · f · G · V / pdf_area`, before division
/// by the light-selection probability.
pub fn light_contribution(scene: &Scene, sp: &ShadingPoint, ls: &LightSample) -> Rgb {
    if sp.material.is_black() || !(ls.pdf_area > 0.0) {
        return Rgb::ZERO;
    }
    let d = ls.position - sp.position;
    let dist2 = d.length_squared();
    if dist2 <= 0.0 {
        return Rgb::ZERO;
    }
    let wi = d / dist2.sqrt();
    let cos_x = sp.normal.dot(wi);
    let cos_y = -ls.normal.dot(wi);
    if cos_x <= 0.0 || cos_y <= 0.0 {
        return Rgb::ZERO;
    }
    let f = sp.eval_bsdf(wi);
    if f.is_black() || !scene.visible(sp.position, sp.normal, ls.position, ls.normal) {
        return Rgb::ZERO;
    }
    ls.emission * f * (cos_x * cos_y / (dist2 * ls.pdf_area))
}

/// One-sample direct lighting estimate through light sample `ls`, chosen
/// with probability `p_select`.
pub fn estimate_direct(scene: &Scene, sp: &ShadingPoint, ls: &LightSample, p_select: f64) -> Rgb {
    if !(p_select > 0.0) {
        return Rgb::ZERO;
    }
    light_contribution(scene, sp, ls) / p_select
}

/// Samples a point on light `light` and returns the undivided contribution.
pub fn sample_light_contribution(scene: &Scene, sp: &ShadingPoint, light: usize, u: [f64; 2]) -> Result<Rgb> {
    let ls = scene.sample_light_point(light, u)?;
    Ok(light_contribution(scene, sp, &ls))
}
