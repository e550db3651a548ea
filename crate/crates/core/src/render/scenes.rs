//! Built-in scenes, constructed programmatically.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Camera, Material, Scene, SceneBuilder};
use crate::math::{Rgb, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneId {
    CornellDiffuse,
    CornellGlossy,
    SplitRoom,
    Furnace,
    Bandit2,
}

impl SceneId {
    pub const ALL: [SceneId; 5] = [
        SceneId::CornellDiffuse,
        SceneId::CornellGlossy,
        SceneId::SplitRoom,
        SceneId::Furnace,
        SceneId::Bandit2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneId::CornellDiffuse => "cornell-diffuse",
            SceneId::CornellGlossy => "cornell-glossy",
            SceneId::SplitRoom => "split-room",
            SceneId::Furnace => "furnace",
            SceneId::Bandit2 => "bandit-2",
        }
    }
}

impl FromStr for SceneId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SceneId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown scene '{s}'")))
    }
}

impl std::fmt::Display for SceneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn scenes_builtin(id: SceneId) -> Scene {
    match id {
        SceneId::CornellDiffuse => cornell_box(false),
        SceneId::CornellGlossy => cornell_box(true),
        SceneId::SplitRoom => split_room(),
        SceneId::Furnace => furnace(0.5, 1.0),
        SceneId::Bandit2 => bandit2(1.0, 3.0),
    }
}

/// Looks up a built-in scene by name.
pub fn builtin_by_name(name: &str) -> Result<Scene> {
    Ok(scenes_builtin(name.parse()?))
}

/// Axis-aligned box without a bottom face, outward normals.
fn open_box(b: &mut SceneBuilder, min: Vec3, max: Vec3, m: usize) {
    let e = max - min;
    let (dx, dy, dz) = (Vec3::X * e.x, Vec3::Y * e.y, Vec3::Z * e.z);
    b.quad(Vec3::new(min.x, max.y, min.z), dz, dx, m); // top, +y
    b.quad(min, dy, dx, m); // front, -z
    b.quad(Vec3::new(min.x, min.y, max.z), dx, dy, m); // back, +z
    b.quad(min, dz, dy, m); // left, -x
    b.quad(Vec3::new(max.x, min.y, min.z), dy, dz, m); // right, +x
}

/// Unit Cornell box, open toward the camera at z = 0.
pub fn cornell_box(glossy: bool) -> Scene {
    let mut b = SceneBuilder::new();
    let white = b.material(Material::diffuse(Rgb::splat(0.73)));
    let red = b.material(Material::diffuse(Rgb::new(0.63, 0.065, 0.05)));
    let green = b.material(Material::diffuse(Rgb::new(0.14, 0.45, 0.091)));
    let lamp = b.material(Material::emissive(Rgb::new(15.0, 14.0, 12.0)));
    let tall = if glossy {
        b.material(Material::glossy(Rgb::splat(0.8), 12.0))
    } else {
        white
    };
    let floor = if glossy {
        b.material(Material::glossy(Rgb::new(0.6, 0.6, 0.55), 4.0))
    } else {
        white
    };

    b.quad(Vec3::ZERO, Vec3::Z, Vec3::X, floor);
    b.quad(Vec3::new(0.0, 1.0, 0.0), Vec3::X, Vec3::Z, white);
    b.quad(Vec3::new(0.0, 0.0, 1.0), Vec3::Y, Vec3::X, white);
    b.quad(Vec3::ZERO, Vec3::Y, Vec3::Z, red);
    b.quad(Vec3::new(1.0, 0.0, 0.0), Vec3::Z, Vec3::Y, green);
    b.quad(
        Vec3::new(0.38, 0.999, 0.38),
        Vec3::X * 0.24,
        Vec3::Z * 0.24,
        lamp,
    );
    open_box(&mut b, Vec3::new(0.13, 0.0, 0.12), Vec3::new(0.43, 0.3, 0.42), white);
    open_box(&mut b, Vec3::new(0.55, 0.0, 0.48), Vec3::new(0.85, 0.6, 0.78), tall);
    b.camera(Camera {
        position: Vec3::new(0.5, 0.5, -1.35),
        look_at: Vec3::new(0.5, 0.5, 0.0),
        up: Vec3::Y,
        fov_degrees: 40.0,
    });
    b.build().expect("built-in scene is valid")
}

/// Closed unit cube whose six inner faces all emit `le` and reflect
/// diffusely with albedo `rho`. Radiance is `le / (1 − rho)` everywhere.
pub fn furnace(rho: f64, le: f64) -> Scene {
    let mut b = SceneBuilder::new();
    let m = b.material(Material::diffuse(Rgb::splat(rho)).with_emission(Rgb::splat(le)));
    b.quad(Vec3::ZERO, Vec3::Z, Vec3::X, m);
    b.quad(Vec3::new(0.0, 1.0, 0.0), Vec3::X, Vec3::Z, m);
    b.quad(Vec3::ZERO, Vec3::X, Vec3::Y, m);
    b.quad(Vec3::new(0.0, 0.0, 1.0), Vec3::Y, Vec3::X, m);
    b.quad(Vec3::ZERO, Vec3::Y, Vec3::Z, m);
    b.quad(Vec3::new(1.0, 0.0, 0.0), Vec3::Z, Vec3::Y, m);
    b.camera(Camera {
        position: Vec3::splat(0.5),
        look_at: Vec3::new(0.5, 0.5, 1.0),
        up: Vec3::Y,
        fov_degrees: 60.0,
    });
    b.build().expect("furnace parameters must give a valid material")
}

/// A tiny receiver patch lit by two identical small lights placed
/// symmetrically, emitting `le_a` and `le_b`. The camera sees only the
/// receiver, so per-light contributions are in the ratio `le_a : le_b`.
pub fn bandit2(le_a: f64, le_b: f64) -> Scene {
    let mut b = SceneBuilder::new();
    let recv = b.material(Material::diffuse(Rgb::splat(0.5)));
    let la = b.material(Material::emissive(Rgb::splat(le_a)));
    let lb = b.material(Material::emissive(Rgb::splat(le_b)));
    let h = 0.005;
    b.quad(Vec3::new(-h, 0.0, -h), Vec3::Z * (2.0 * h), Vec3::X * (2.0 * h), recv);
    let s = 0.025;
    // facing down (edge_u × edge_v = −y)
    b.quad(Vec3::new(-1.0 - s, 1.0, -s), Vec3::X * (2.0 * s), Vec3::Z * (2.0 * s), la);
    b.quad(Vec3::new(1.0 - s, 1.0, -s), Vec3::X * (2.0 * s), Vec3::Z * (2.0 * s), lb);
    b.camera(Camera {
        position: Vec3::new(0.0, 0.5, 0.0),
        look_at: Vec3::ZERO,
        up: Vec3::Z,
        fov_degrees: 1.0,
    });
    b.build().expect("bandit lights must be valid")
}

/// Four open-top rooms in a 2×2 layout, each with two wall-mounted lights,
/// seen from above. Walls are full height, so no light reaches a point in
/// another room directly.
pub fn split_room() -> Scene {
    let mut b = SceneBuilder::new();
    let floors = [
        b.material(Material::diffuse(Rgb::new(0.75, 0.75, 0.75))),
        b.material(Material::diffuse(Rgb::new(0.70, 0.55, 0.40))),
        b.material(Material::diffuse(Rgb::new(0.45, 0.60, 0.70))),
        b.material(Material::diffuse(Rgb::new(0.60, 0.70, 0.45))),
    ];
    let wall = b.material(Material::diffuse(Rgb::splat(0.6)));
    let h = 1.0;
    // outer walls, facing inward
    b.quad(Vec3::ZERO, Vec3::X * 2.0, Vec3::Y * h, wall); // z = 0, +z
    b.quad(Vec3::new(0.0, 0.0, 2.0), Vec3::Y * h, Vec3::X * 2.0, wall); // z = 2, -z
    b.quad(Vec3::ZERO, Vec3::Y * h, Vec3::Z * 2.0, wall); // x = 0, +x
    b.quad(Vec3::new(2.0, 0.0, 0.0), Vec3::Z * 2.0, Vec3::Y * h, wall); // x = 2, -x
    // interior walls (two-sided)
    b.quad(Vec3::new(1.0, 0.0, 0.0), Vec3::Y * h, Vec3::Z * 2.0, wall);
    b.quad(Vec3::new(0.0, 0.0, 1.0), Vec3::Y * h, Vec3::X * 2.0, wall);

    let strengths = [(9.0, 5.0), (6.0, 10.0), (8.0, 8.0), (12.0, 4.0)];
    for room in 0..4 {
        let x0 = (room % 2) as f64;
        let z0 = (room / 2) as f64;
        b.quad(Vec3::new(x0, 0.0, z0), Vec3::Z, Vec3::X, floors[room]);
        let (la, lb) = strengths[room];
        let ma = b.material(Material::emissive(Rgb::splat(la)));
        let mb = b.material(Material::emissive(Rgb::splat(lb)));
        let (w, lh) = (0.3, 0.2);
        let off = 1e-3;
        // light A on the wall x = x0, facing +x
        b.quad(
            Vec3::new(x0 + off, 0.6, z0 + 0.2),
            Vec3::Y * lh,
            Vec3::Z * w,
            ma,
        );
        // light B on the wall x = x0 + 1, facing -x
        b.quad(
            Vec3::new(x0 + 1.0 - off, 0.6, z0 + 0.5),
            Vec3::Z * w,
            Vec3::Y * lh,
            mb,
        );
    }
    b.camera(Camera {
        position: Vec3::new(1.0, 7.0, 1.0),
        look_at: Vec3::new(1.0, 0.0, 1.0),
        up: -Vec3::Z,
        fov_degrees: 17.0,
    });
    b.build().expect("split room is valid")
}

/// Room index (0..4) of a point in the split-room scene: `x` picks the
/// column, `z` the row.
pub fn split_room_index(p: Vec3) -> usize {
    let col = usize::from(p.x >= 1.0);
    let row = usize::from(p.z >= 1.0);
    row * 2 + col
}

/// Light indices of a split-room room, in the scene's light list order.
pub fn split_room_lights(room: usize) -> [usize; 2] {
    [2 * room, 2 * room + 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ray;

    #[test]
    fn names_round_trip() {
        for id in SceneId::ALL {
            assert_eq!(id.name().parse::<SceneId>().unwrap(), id);
        }
        assert!(matches!("nope".parse::<SceneId>(), Err(Error::Usage(_))));
    }

    #[test]
    fn split_room_has_eight_lights() {
        let s = split_room();
        assert_eq!(s.light_count(), 8);
        for room in 0..4 {
            for l in split_room_lights(room) {
                let c = s.primitives()[s.lights()[l].primitive].shape.bounds();
                let mid = (c.min + c.max) * 0.5;
                assert_eq!(split_room_index(mid), room);
            }
        }
    }

    #[test]
    fn split_room_lights_are_room_private() {
        let s = split_room();
        // floor centers of each room
        for room in 0..4 {
            let p = Vec3::new((room % 2) as f64 + 0.5, 0.0, (room / 2) as f64 + 0.5);
            for (l, light) in s.lights().iter().enumerate() {
                let c = s.primitives()[light.primitive].shape.bounds();
                let q = (c.min + c.max) * 0.5;
                let vis = s.visible(p, Vec3::Y, q, (p - q).normalized());
                assert_eq!(vis, split_room_lights(room).contains(&l), "room {room} light {l}");
            }
        }
    }

    #[test]
    fn emitters_all_listed_once() {
        for id in SceneId::ALL {
            let s = scenes_builtin(id);
            let emissive: Vec<usize> = (0..s.primitives().len())
                .filter(|&i| s.material_of(i).is_emissive())
                .collect();
            let listed: Vec<usize> = s.lights().iter().map(|l| l.primitive).collect();
            assert_eq!(emissive, listed, "{id}");
            for p in s.primitives() {
                assert!(s.bounds().contains_box(&p.shape.bounds()));
            }
        }
    }

    #[test]
    fn cornell_camera_sees_back_wall() {
        let s = cornell_box(false);
        let sp = s.intersect(&s.camera.generate_ray([0.5, 0.2], 1.0)).unwrap();
        assert!(sp.position.z > 0.9 || sp.position.y > 0.99);
        let r = Ray::new(Vec3::new(0.5, 0.5, 0.5), Vec3::Y);
        let hit = s.intersect(&r).unwrap();
        assert!(hit.light.is_some());
        assert!(hit.front_face);
    }
}
