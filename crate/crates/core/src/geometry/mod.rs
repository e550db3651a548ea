//! Scene representation, ray casting and BSDF evaluation.

mod material;
mod scene;
pub mod scene_file;

pub use material::{BsdfSample, Material, MaterialKind};
pub use scene::{
    eval_bsdf, AreaLight, Camera, LightSample, Primitive, Scene, SceneBuilder, ShadingPoint, SurfaceSample,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{uniform_sphere, uniform_triangle, Vec3};

/// Origin offset along the geometric normal for spawned rays.
pub const RAY_EPSILON: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Unbounded ray; `direction` must already be normalized.
    #[inline]
    pub fn new(origin: Vec3, direction: Vec3) -> Ray {
        debug_assert!(direction.is_unit());
        Ray {
            origin,
            direction,
            t_min: 0.0,
            t_max: f64::INFINITY,
        }
    }

    pub fn with_range(origin: Vec3, direction: Vec3, t_min: f64, t_max: f64) -> Result<Ray> {
        if !direction.is_unit() {
            return Err(Error::contract("ray direction must be normalized"));
        }
        if !(t_min >= 0.0 && t_min < t_max) {
            return Err(Error::contract(format!(
                "ray range [{t_min}, {t_max}] must satisfy 0 <= t_min < t_max"
            )));
        }
        Ok(Ray {
            origin,
            direction,
            t_min,
            t_max,
        })
    }

    /// Ray leaving a surface point, offset to the side `direction` points to.
    #[inline]
    pub fn spawn(position: Vec3, geo_normal: Vec3, direction: Vec3) -> Ray {
        Ray::new(offset_origin(position, geo_normal, direction), direction)
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[inline]
pub fn offset_origin(position: Vec3, geo_normal: Vec3, direction: Vec3) -> Vec3 {
    if geo_normal.dot(direction) >= 0.0 {
        position + geo_normal * RAY_EPSILON
    } else {
        position - geo_normal * RAY_EPSILON
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f64::INFINITY),
        max: Vec3::splat(f64::NEG_INFINITY),
    };

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn include(self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    /// Maps `p` to [0,1]³ relative to the box; degenerate axes map to 0.
    pub fn normalize(&self, p: Vec3) -> Vec3 {
        let e = self.extent();
        let f = |v: f64, lo: f64, ext: f64| if ext > 1e-12 { (v - lo) / ext } else { 0.0 };
        Vec3::new(
            f(p.x, self.min.x, e.x),
            f(p.y, self.min.y, e.y),
            f(p.z, self.min.z, e.z),
        )
    }
}

/// Geometric primitive. Quads are parallelograms spanned by two edges from a
/// corner; the built-in scenes only use axis-aligned ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    Triangle { p0: Vec3, p1: Vec3, p2: Vec3 },
    Quad { corner: Vec3, edge_u: Vec3, edge_v: Vec3 },
}

/// Raw intersection: distance and the primitive's front-facing normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub normal: Vec3,
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Sphere { center, radius } => center.is_finite() && radius > 0.0 && radius.is_finite(),
            Shape::Triangle { p0, p1, p2 } => (p1 - p0).cross(p2 - p0).length() > 1e-12,
            Shape::Quad {
                corner,
                edge_u,
                edge_v,
            } => corner.is_finite() && edge_u.cross(edge_v).length() > 1e-12,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!("degenerate shape {self:?}")))
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            Shape::Triangle { p0, p1, p2 } => 0.5 * (p1 - p0).cross(p2 - p0).length(),
            Shape::Quad { edge_u, edge_v, .. } => edge_u.cross(edge_v).length(),
        }
    }

    pub fn bounds(&self) -> Aabb {
        match *self {
            Shape::Sphere { center, radius } => Aabb {
                min: center - Vec3::splat(radius),
                max: center + Vec3::splat(radius),
            },
            Shape::Triangle { p0, p1, p2 } => Aabb::EMPTY.include(p0).include(p1).include(p2),
            Shape::Quad {
                corner,
                edge_u,
                edge_v,
            } => Aabb::EMPTY
                .include(corner)
                .include(corner + edge_u)
                .include(corner + edge_v)
                .include(corner + edge_u + edge_v),
        }
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        match *self {
            Shape::Sphere { center, radius } => {
                let oc = ray.origin - center;
                let half_b = oc.dot(ray.direction);
                let c = oc.length_squared() - radius * radius;
                let disc = half_b * half_b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let mut t = -half_b - sq;
                if t <= ray.t_min || t >= ray.t_max {
                    t = -half_b + sq;
                    if t <= ray.t_min || t >= ray.t_max {
                        return None;
                    }
                }
                let normal = (ray.at(t) - center) / radius;
                Some(Hit { t, normal })
            }
            Shape::Triangle { p0, p1, p2 } => {
                let e1 = p1 - p0;
                let e2 = p2 - p0;
                let pv = ray.direction.cross(e2);
                let det = e1.dot(pv);
                if det.abs() < 1e-14 {
                    return None;
                }
                let inv = 1.0 / det;
                let tv = ray.origin - p0;
                let b1 = tv.dot(pv) * inv;
                if !(0.0..=1.0).contains(&b1) {
                    return None;
                }
                let qv = tv.cross(e1);
                let b2 = ray.direction.dot(qv) * inv;
                if b2 < 0.0 || b1 + b2 > 1.0 {
                    return None;
                }
                let t = e2.dot(qv) * inv;
                if t <= ray.t_min || t >= ray.t_max {
                    return None;
                }
                Some(Hit {
                    t,
                    normal: e1.cross(e2).normalized(),
                })
            }
            Shape::Quad {
                corner,
                edge_u,
                edge_v,
            } => {
                let n = edge_u.cross(edge_v);
                let denom = n.dot(ray.direction);
                if denom.abs() < 1e-14 {
                    return None;
                }
                let t = n.dot(corner - ray.origin) / denom;
                if t <= ray.t_min || t >= ray.t_max {
                    return None;
                }
                let w = n / n.length_squared();
                let q = ray.at(t) - corner;
                let a = w.dot(q.cross(edge_v));
                let b = w.dot(edge_u.cross(q));
                if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                    return None;
                }
                Some(Hit {
                    t,
                    normal: n.normalized(),
                })
            }
        }
    }

    /// Area-uniform point on the surface: (position, front normal).
    pub fn sample_point(&self, u: [f64; 2]) -> (Vec3, Vec3) {
        match *self {
            Shape::Sphere { center, radius } => {
                let n = uniform_sphere(u);
                (center + n * radius, n)
            }
            Shape::Triangle { p0, p1, p2 } => {
                let (b0, b1) = uniform_triangle(u);
                let p = p0 * b0 + p1 * b1 + p2 * (1.0 - b0 - b1);
                (p, (p1 - p0).cross(p2 - p0).normalized())
            }
            Shape::Quad {
                corner,
                edge_u,
                edge_v,
            } => (
                corner + edge_u * u[0] + edge_v * u[1],
                edge_u.cross(edge_v).normalized(),
            ),
        }
    }
}
