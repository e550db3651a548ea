use serde::{Deserialize, Serialize};

use super::{offset_origin, Aabb, Material, Ray, Shape};
use crate::error::{Error, Result};
use crate::math::{Onb, Rgb, Vec3};

/// Pinhole camera with a vertical field of view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    #[serde(default = "default_up")]
    pub up: Vec3,
    pub fov_degrees: f64,
}

fn default_up() -> Vec3 {
    Vec3::Y
}

impl Camera {
    /// Primary ray through film coordinates in [0,1]², y pointing down.
    pub fn generate_ray(&self, film: [f64; 2], aspect: f64) -> Ray {
        let forward = (self.look_at - self.position).normalized();
        let right = forward.cross(self.up).normalized();
        let up = right.cross(forward);
        let h = (self.fov_degrees.to_radians() * 0.5).tan();
        let sx = (2.0 * film[0] - 1.0) * h * aspect;
        let sy = (1.0 - 2.0 * film[1]) * h;
        Ray::new(self.position, (forward + right * sx + up * sy).normalized())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub material: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AreaLight {
    pub primitive: usize,
    pub emission: Rgb,
    pub area: f64,
}

/// A ray/surface intersection prepared for shading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingPoint {
    pub position: Vec3,
    /// Shading normal, flipped to the side of `wo`.
    pub normal: Vec3,
    /// The primitive's own (front) normal, unflipped.
    pub front_normal: Vec3,
    /// Unit direction toward the previous path vertex.
    pub wo: Vec3,
    pub t: f64,
    pub primitive: usize,
    pub material: Material,
    pub front_face: bool,
    /// Index into the scene's light list when the primitive emits.
    pub light: Option<usize>,
}

impl ShadingPoint {
    /// Radiance emitted toward `wo`; lights emit from their front side only.
    #[inline]
    pub fn emitted(&self) -> Rgb {
        if self.front_face {
            self.material.emission
        } else {
            Rgb::ZERO
        }
    }

    #[inline]
    pub fn eval_bsdf(&self, wi: Vec3) -> Rgb {
        self.material.eval(self.normal, self.wo, wi)
    }

    #[inline]
    pub fn spawn_ray(&self, direction: Vec3) -> Ray {
        Ray::spawn(self.position, self.normal, direction)
    }
}

/// BSDF value at a shading point; the cosine factor is applied by callers.
pub fn eval_bsdf(sp: &ShadingPoint, wi: Vec3) -> Rgb {
    sp.eval_bsdf(wi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightSample {
    pub position: Vec3,
    pub normal: Vec3,
    pub pdf_area: f64,
    pub emission: Rgb,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSample {
    pub position: Vec3,
    pub normal: Vec3,
    pub primitive: usize,
    pub pdf_area: f64,
}

/// Immutable scene: primitives, materials, the derived light list and bounds.
#[derive(Clone, Debug)]
pub struct Scene {
    primitives: Vec<Primitive>,
    materials: Vec<Material>,
    lights: Vec<AreaLight>,
    light_of_primitive: Vec<Option<usize>>,
    area_cdf: Vec<f64>,
    total_area: f64,
    bounds: Aabb,
    pub camera: Camera,
}

#[derive(Clone, Debug, Default)]
pub struct SceneBuilder {
    primitives: Vec<Primitive>,
    materials: Vec<Material>,
    camera: Option<Camera>,
}

impl SceneBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn material(&mut self, m: Material) -> usize {
        self.materials.push(m);
        self.materials.len() - 1
    }

    pub fn shape(&mut self, shape: Shape, material: usize) -> &mut Self {
        self.primitives.push(Primitive { shape, material });
        self
    }

    /// Axis-aligned quad from a corner and two edges; the front side is
    /// `edge_u × edge_v`.
    pub fn quad(&mut self, corner: Vec3, edge_u: Vec3, edge_v: Vec3, material: usize) -> &mut Self {
        self.shape(
            Shape::Quad {
                corner,
                edge_u,
                edge_v,
            },
            material,
        )
    }

    pub fn sphere(&mut self, center: Vec3, radius: f64, material: usize) -> &mut Self {
        self.shape(Shape::Sphere { center, radius }, material)
    }

    pub fn camera(&mut self, camera: Camera) -> &mut Self {
        self.camera = Some(camera);
        self
    }

    pub fn build(&self) -> Result<Scene> {
        if self.primitives.is_empty() {
            return Err(Error::usage("scene has no primitives"));
        }
        for m in &self.materials {
            m.validate()?;
        }
        let mut bounds = Aabb::EMPTY;
        let mut lights = Vec::new();
        let mut light_of_primitive = Vec::with_capacity(self.primitives.len());
        let mut area_cdf = Vec::with_capacity(self.primitives.len());
        let mut total_area = 0.0;
        for (i, p) in self.primitives.iter().enumerate() {
            p.shape.validate()?;
            let m = self
                .materials
                .get(p.material)
                .ok_or_else(|| Error::usage(format!("primitive {i} references missing material {}", p.material)))?;
            bounds = bounds.union(p.shape.bounds());
            let area = p.shape.area();
            total_area += area;
            area_cdf.push(total_area);
            if m.is_emissive() {
                light_of_primitive.push(Some(lights.len()));
                lights.push(AreaLight {
                    primitive: i,
                    emission: m.emission,
                    area,
                });
            } else {
                light_of_primitive.push(None);
            }
        }
        let camera = self.camera.unwrap_or(Camera {
            position: Vec3::new(0.0, 0.0, -5.0),
            look_at: Vec3::ZERO,
            up: Vec3::Y,
            fov_degrees: 40.0,
        });
        Ok(Scene {
            primitives: self.primitives.clone(),
            materials: self.materials.clone(),
            lights,
            light_of_primitive,
            area_cdf,
            total_area,
            bounds,
            camera,
        })
    }
}

impl Scene {
    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn lights(&self) -> &[AreaLight] {
        &self.lights
    }

    pub fn light_count(&self) -> usize {
        self.lights.len()
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn material_of(&self, primitive: usize) -> &Material {
        &self.materials[self.primitives[primitive].material]
    }

    /// Nearest primitive hit `(index, t, front normal)` by linear sweep.
    pub fn intersect_raw(&self, ray: &Ray) -> Option<(usize, f64, Vec3)> {
        let mut r = *ray;
        let mut best = None;
        for (i, p) in self.primitives.iter().enumerate() {
            if let Some(h) = p.shape.intersect(&r) {
                r.t_max = h.t;
                best = Some((i, h.t, h.normal));
            }
        }
        best
    }

    pub fn intersect(&self, ray: &Ray) -> Option<ShadingPoint> {
        let (primitive, t, front_normal) = self.intersect_raw(ray)?;
        let wo = -ray.direction;
        let front_face = front_normal.dot(wo) > 0.0;
        let normal = if front_face { front_normal } else { -front_normal };
        Some(ShadingPoint {
            position: ray.at(t),
            normal,
            front_normal,
            wo,
            t,
            primitive,
            material: self.materials[self.primitives[primitive].material],
            front_face,
            light: self.light_of_primitive[primitive],
        })
    }

    pub fn occluded(&self, ray: &Ray) -> bool {
        self.primitives.iter().any(|p| p.shape.intersect(ray).is_some())
    }

    /// Mutual visibility of two surface points, each offset off its surface.
    pub fn visible(&self, p: Vec3, n_p: Vec3, q: Vec3, n_q: Vec3) -> bool {
        let d = q - p;
        let dist = d.length();
        if dist <= 0.0 {
            return false;
        }
        let dir = d / dist;
        let from = offset_origin(p, n_p, dir);
        let to = offset_origin(q, n_q, -dir);
        let seg = to - from;
        let len = seg.length();
        if len <= 0.0 || seg.dot(dir) <= 0.0 {
            return false;
        }
        let ray = Ray {
            origin: from,
            direction: seg / len,
            t_min: 0.0,
            t_max: len,
        };
        !self.occluded(&ray)
    }

    /// Uniform point on light `index`.
    pub fn sample_light_point(&self, index: usize, u: [f64; 2]) -> Result<LightSample> {
        let light = self.lights.get(index).ok_or_else(|| {
            Error::contract(format!("light index {index} out of range ({} lights)", self.lights.len()))
        })?;
        let (position, normal) = self.primitives[light.primitive].shape.sample_point(u);
        Ok(LightSample {
            position,
            normal,
            pdf_area: 1.0 / light.area,
            emission: light.emission,
        })
    }

    /// Area-uniform point over every surface in the scene.
    pub fn sample_surface(&self, u_select: f64, u: [f64; 2]) -> SurfaceSample {
        let target = u_select * self.total_area;
        let i = self
            .area_cdf
            .partition_point(|&c| c <= target)
            .min(self.primitives.len() - 1);
        let (position, normal) = self.primitives[i].shape.sample_point(u);
        SurfaceSample {
            position,
            normal,
            primitive: i,
            pdf_area: 1.0 / self.total_area,
        }
    }

    /// Shading point for a surface sample seen from direction `wo`.
    pub fn shading_point_at(&self, s: &SurfaceSample, wo: Vec3) -> ShadingPoint {
        let front_face = s.normal.dot(wo) > 0.0;
        ShadingPoint {
            position: s.position,
            normal: if front_face { s.normal } else { -s.normal },
            front_normal: s.normal,
            wo,
            t: 0.0,
            primitive: s.primitive,
            material: *self.material_of(s.primitive),
            front_face,
            light: self.light_of_primitive[s.primitive],
        }
    }

    /// Local frame at a shading point.
    pub fn frame(sp: &ShadingPoint) -> Onb {
        Onb::from_normal(sp.normal)
    }
}
