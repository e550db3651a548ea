//! TOML scene description.
//!
//! ```toml
//! [camera]
//! position = [0.5, 0.5, -1.4]
//! look_at = [0.5, 0.5, 0.0]
//! up = [0.0, 1.0, 0.0]        # optional
//! fov_degrees = 40.0
//!
//! [materials.white]
//! kind = "diffuse"            # or "glossy"
//! albedo = [0.7, 0.7, 0.7]    # each channel in [0, 1)
//! exponent = 0.0              # Phong exponent, glossy only
//! emission = [0.0, 0.0, 0.0]  # optional; nonzero makes every shape using it a light
//!
//! [[shapes]]
//! type = "quad"               # quad | triangle | sphere
//! corner = [0.0, 0.0, 0.0]
//! edge_u = [1.0, 0.0, 0.0]    # front side is edge_u x edge_v
//! edge_v = [0.0, 0.0, 1.0]
//! material = "white"
//!
//! [[shapes]]
//! type = "sphere"
//! center = [0.5, 0.3, 0.5]
//! radius = 0.2
//! material = "white"
//!
//! [[shapes]]
//! type = "triangle"
//! p0 = [0.0, 0.0, 0.0]
//! p1 = [1.0, 0.0, 0.0]
//! p2 = [0.0, 1.0, 0.0]
//! material = "white"
//! ```
//!
//! Lights are not listed separately: the light list is derived from the
//! shapes whose material emits.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Camera, Material, Scene, SceneBuilder, Shape};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub camera: Camera,
    pub materials: BTreeMap<String, Material>,
    pub shapes: Vec<ShapeEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeEntry {
    #[serde(flatten)]
    pub shape: Shape,
    pub material: String,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<SceneFile> {
        toml::from_str(text).map_err(|e| Error::usage(format!("malformed scene file: {e}")))
    }

    pub fn load(path: &Path) -> Result<SceneFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_scene(&self) -> Result<Scene> {
        let mut b = SceneBuilder::new();
        let mut ids = BTreeMap::new();
        for (name, m) in &self.materials {
            ids.insert(name.as_str(), b.material(*m));
        }
        for s in &self.shapes {
            let id = ids
                .get(s.material.as_str())
                .ok_or_else(|| Error::usage(format!("unknown material '{}'", s.material)))?;
            b.shape(s.shape, *id);
        }
        b.camera(self.camera);
        b.build()
    }

    /// Export a built scene. Materials are named `m0`, `m1`, …
    pub fn from_scene(scene: &Scene) -> SceneFile {
        let materials = scene
            .materials()
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("m{i}"), *m))
            .collect();
        let shapes = scene
            .primitives()
            .iter()
            .map(|p| ShapeEntry {
                shape: p.shape,
                material: format!("m{}", p.material),
            })
            .collect();
        SceneFile {
            camera: scene.camera,
            materials,
            shapes,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene file serializes")
    }
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    SceneFile::load(path)?.to_scene()
}
