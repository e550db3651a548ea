use std::f64::consts::{FRAC_1_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{cosine_hemisphere, Onb, Rgb, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Diffuse,
    /// Normalized Phong lobe around the mirror direction.
    Glossy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub kind: MaterialKind,
    pub albedo: Rgb,
    #[serde(default)]
    pub exponent: f64,
    #[serde(default)]
    pub emission: Rgb,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BsdfSample {
    pub wi: Vec3,
    /// f · cosθ / pdf
    pub weight: Rgb,
    pub pdf: f64,
}

impl Material {
    pub fn diffuse(albedo: Rgb) -> Material {
        Material {
            kind: MaterialKind::Diffuse,
            albedo,
            exponent: 0.0,
            emission: Rgb::ZERO,
        }
    }

    pub fn glossy(albedo: Rgb, exponent: f64) -> Material {
        Material {
            kind: MaterialKind::Glossy,
            albedo,
            exponent,
            emission: Rgb::ZERO,
        }
    }

    pub fn emissive(emission: Rgb) -> Material {
        Material {
            kind: MaterialKind::Diffuse,
            albedo: Rgb::ZERO,
            exponent: 0.0,
            emission,
        }
    }

    pub fn with_emission(mut self, emission: Rgb) -> Material {
        self.emission = emission;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.albedo;
        if !(0..3).all(|i| a[i] >= 0.0 && a[i] < 1.0) {
            return Err(Error::usage(format!(
                "albedo {:?} must lie in [0, 1) per channel",
                a.to_array()
            )));
        }
        let e = self.emission;
        if !e.is_finite() || (0..3).any(|i| e[i] < 0.0) {
            return Err(Error::usage("emission must be finite and nonnegative"));
        }
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(Error::usage("glossy exponent must be finite and >= 0"));
        }
        Ok(())
    }

    #[inline]
    pub fn is_emissive(&self) -> bool {
        !self.emission.is_black()
    }

    #[inline]
    pub fn is_black(&self) -> bool {
        self.albedo.is_black()
    }

    /// BSDF value f_s(wo, wi) for a shading normal `n` facing `wo`. The cosine
    /// factor is left to the caller.
    pub fn eval(&self, n: Vec3, wo: Vec3, wi: Vec3) -> Rgb {
        let cos_i = n.dot(wi);
        if cos_i <= 0.0 || n.dot(wo) <= 0.0 {
            return Rgb::ZERO;
        }
        match self.kind {
            MaterialKind::Diffuse => self.albedo * FRAC_1_PI,
            MaterialKind::Glossy => {
                let cos_a = wo.reflect(n).dot(wi);
                if cos_a <= 0.0 {
                    return Rgb::ZERO;
                }
                let e = self.exponent;
                self.albedo * ((e + 2.0) / (2.0 * PI) * cos_a.powf(e))
            }
        }
    }

    /// Solid-angle density of [`Material::sample`].
    pub fn pdf(&self, n: Vec3, wo: Vec3, wi: Vec3) -> f64 {
        let cos_i = n.dot(wi);
        if cos_i <= 0.0 || n.dot(wo) <= 0.0 {
            return 0.0;
        }
        match self.kind {
            MaterialKind::Diffuse => cos_i * FRAC_1_PI,
            MaterialKind::Glossy => {
                let cos_a = wo.reflect(n).dot(wi);
                if cos_a <= 0.0 {
                    0.0
                } else {
                    let e = self.exponent;
                    (e + 1.0) / (2.0 * PI) * cos_a.powf(e)
                }
            }
        }
    }

    /// Cosine sampling for diffuse surfaces, lobe sampling for glossy ones.
    /// Returns `None` when a lobe sample falls below the surface.
    pub fn sample(&self, n: Vec3, wo: Vec3, u: [f64; 2]) -> Option<BsdfSample> {
        match self.kind {
            MaterialKind::Diffuse => {
                let local = cosine_hemisphere(u);
                if local.z <= 0.0 {
                    return None;
                }
                let wi = Onb::from_normal(n).to_world(local);
                Some(BsdfSample {
                    wi,
                    weight: self.albedo,
                    pdf: local.z * FRAC_1_PI,
                })
            }
            MaterialKind::Glossy => {
                let r = wo.reflect(n);
                let e = self.exponent;
                let cos_a = u[0].powf(1.0 / (e + 1.0));
                let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
                let phi = 2.0 * PI * u[1];
                let local = Vec3::new(sin_a * phi.cos(), sin_a * phi.sin(), cos_a);
                let wi = Onb::from_normal(r).to_world(local).normalized();
                let cos_i = n.dot(wi);
                if cos_i <= 0.0 {
                    return None;
                }
                let pdf = (e + 1.0) / (2.0 * PI) * cos_a.powf(e);
                Some(BsdfSample {
                    wi,
                    weight: self.albedo * ((e + 2.0) / (e + 1.0) * cos_i),
                    pdf,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{equal_area_square_to_hemisphere, hash_to_unit, mix64};

    /// Stratified quadrature of ∫ f cosθ dω over the hemisphere with an
    /// equal-area map, independent of the material's own sampler.
    fn hemispherical_albedo(m: &Material, wo: Vec3, n_side: usize) -> Rgb {
        let n = Vec3::Z;
        let mut acc = Rgb::ZERO;
        let cell = 1.0 / n_side as f64;
        for i in 0..n_side {
            for j in 0..n_side {
                let u = [(i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell];
                let wi = equal_area_square_to_hemisphere(u);
                acc += m.eval(n, wo, wi) * wi.z;
            }
        }
        acc * (2.0 * PI / (n_side * n_side) as f64)
    }

    #[test]
    fn diffuse_is_constant() {
        let m = Material::diffuse(Rgb::splat(0.5));
        let f = m.eval(Vec3::Z, Vec3::Z, Vec3::new(0.3, 0.4, 0.866).normalized());
        assert!((f - Rgb::splat(0.5 / PI)).length() < 1e-15);
    }

    #[test]
    fn below_surface_is_black() {
        for m in [Material::diffuse(Rgb::splat(0.5)), Material::glossy(Rgb::splat(0.5), 20.0)] {
            let f = m.eval(Vec3::Z, Vec3::Z, Vec3::new(0.0, 0.6, -0.8));
            assert_eq!(f, Rgb::ZERO);
        }
    }

    #[test]
    fn diffuse_reciprocity() {
        let m = Material::diffuse(Rgb::new(0.2, 0.5, 0.7));
        let a = Vec3::new(0.1, 0.2, 0.97).normalized();
        let b = Vec3::new(-0.5, 0.3, 0.8).normalized();
        assert_eq!(m.eval(Vec3::Z, a, b), m.eval(Vec3::Z, b, a));
    }

    #[test]
    fn glossy_energy_conservation() {
        let albedo = Rgb::new(0.9, 0.6, 0.3);
        for e in [1.0, 10.0, 50.0] {
            let m = Material::glossy(albedo, e);
            for theta in [0.0f64, 0.5, 1.0, 1.4] {
                let wo = Vec3::new(theta.sin(), 0.0, theta.cos());
                // 1000 x 1000 = 10^6 quadrature nodes
                let a = hemispherical_albedo(&m, wo, 1000);
                for c in 0..3 {
                    assert!(a[c] <= albedo[c] + 1e-3, "exp {e} theta {theta}: {a:?}");
                }
            }
        }
        // normal incidence integrates to the albedo itself
        let m = Material::glossy(albedo, 10.0);
        let a = hemispherical_albedo(&m, Vec3::Z, 1000);
        assert!((a - albedo).length() < 5e-3);
    }

    #[test]
    fn sample_weight_matches_eval_over_pdf() {
        for m in [Material::diffuse(Rgb::splat(0.6)), Material::glossy(Rgb::splat(0.6), 15.0)] {
            let wo = Vec3::new(0.3, -0.2, 0.93).normalized();
            for i in 0..200u64 {
                let u = [hash_to_unit(mix64(i)), hash_to_unit(mix64(i ^ 0xABCDEF))];
                if let Some(s) = m.sample(Vec3::Z, wo, u) {
                    let expect = m.eval(Vec3::Z, wo, s.wi) * (s.wi.z / s.pdf);
                    assert!((expect - s.weight).length() < 1e-9);
                    assert!((m.pdf(Vec3::Z, wo, s.wi) - s.pdf).abs() < 1e-9 * s.pdf.max(1.0));
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(Material::diffuse(Rgb::splat(1.0)).validate().is_err());
        assert!(Material::emissive(Rgb::new(-1.0, 0.0, 0.0)).validate().is_err());
        assert!(Material::glossy(Rgb::splat(0.5), f64::NAN).validate().is_err());
        assert!(Material::diffuse(Rgb::splat(0.99)).validate().is_ok());
    }
}
