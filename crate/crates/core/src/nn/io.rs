//! Network files: a flat little-endian binary blob plus a TOML sidecar.
//!
//! Binary layout: `u64` layer-size count `n`, then `n` sizes as `u64`, then for
//! each layer its row-major weights followed by its biases, all `f64`.
//! The sidecar (`<file>.toml`) records sizes and activations.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Layer, TinyMlp};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetadata {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    #[serde(default)]
    pub description: String,
}

impl NetworkMetadata {
    pub fn of(net: &TinyMlp) -> Self {
        NetworkMetadata {
            sizes: net.sizes(),
            activations: net.layers().iter().map(|l| l.activation).collect(),
            description: String::new(),
        }
    }
}

impl TinyMlp {
    pub fn write_binary<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let sizes = self.sizes();
        w.write_all(&(sizes.len() as u64).to_le_bytes())?;
        for s in &sizes {
            w.write_all(&(*s as u64).to_le_bytes())?;
        }
        for l in self.layers() {
            for x in l.weights.iter().chain(&l.biases) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(8 * (1 + self.layers().len() + 1 + self.num_parameters()));
        self.write_binary(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    /// Reads one network blob; activations come from the sidecar or caller.
    pub fn read_binary<R: Read>(r: &mut R, activations: &[Activation]) -> Result<TinyMlp> {
        let bad = |e: std::io::Error| Error::usage(format!("truncated network blob: {e}"));
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(bad)?;
        let n = u64::from_le_bytes(word) as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::usage(format!("implausible layer count {n} in network blob")));
        }
        if activations.len() != n - 1 {
            return Err(Error::usage("activation list does not match layer count"));
        }
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut word).map_err(bad)?;
            sizes.push(u64::from_le_bytes(word) as usize);
        }
        let mut layers = Vec::with_capacity(n - 1);
        for l in 0..n - 1 {
            let (i, o) = (sizes[l], sizes[l + 1]);
            let mut read_vec = |len: usize| -> Result<Vec<f64>> {
                (0..len)
                    .map(|_| {
                        r.read_exact(&mut word).map_err(bad)?;
                        Ok(f64::from_le_bytes(word))
                    })
                    .collect()
            };
            let weights = read_vec(i * o)?;
            let biases = read_vec(o)?;
            layers.push(Layer {
                inputs: i,
                outputs: o,
                weights,
                biases,
                activation: activations[l],
            });
        }
        TinyMlp::from_layers(layers)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".toml");
    PathBuf::from(s)
}

pub fn write_network(net: &TinyMlp, path: &Path, description: &str) -> Result<()> {
    std::fs::write(path, net.to_bytes()).map_err(|e| Error::io(path, e))?;
    let mut meta = NetworkMetadata::of(net);
    meta.description = description.to_string();
    let side = sidecar_path(path);
    let text = toml::to_string(&meta).expect("metadata serializes");
    std::fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

pub fn read_network(path: &Path) -> Result<TinyMlp> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: NetworkMetadata =
        toml::from_str(&text).map_err(|e| Error::usage(format!("malformed network sidecar: {e}")))?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let net = TinyMlp::read_binary(&mut bytes.as_slice(), &meta.activations)?;
    if net.sizes() != meta.sizes {
        return Err(Error::usage("network blob disagrees with its sidecar sizes"));
    }
    Ok(net)
}
