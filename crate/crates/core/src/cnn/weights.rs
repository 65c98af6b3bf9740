//! Weight storage: a JSON manifest describing named tensors plus a flat
//! little-endian float32 payload.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::cnn::spec::{Layer, NetworkSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the payload.
    offset: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArchiveManifest {
    format_version: u32,
    entries: Vec<ManifestEntry>,
}

/// An in-memory weight set addressed by tensor name.
///
/// Convolution kernels use the shape [kh, kw, in_per_group, out] with the
/// output index fastest; fully-connected weights use [in, out]. Each conv
/// or fc layer `L` owns two tensors, `L.kernel`/`L.weight` and `L.bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightArchive {
    tensors: BTreeMap<String, (Vec<usize>, Vec<f32>)>,
}

const MANIFEST_FILE: &str = "manifest.json";
const PAYLOAD_FILE: &str = "weights.bin";
const FORMAT_VERSION: u32 = 1;

impl WeightArchive {
    pub fn new() -> Self {
        Self {
            tensors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, shape: Vec<usize>, data: Vec<f32>) -> Result<()> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || len != data.len() {
            return Err(Error::WeightArchive(format!(
                "tensor {name}: shape {shape:?} does not match {} values",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::WeightArchive(format!(
                "tensor {name}: non-finite value {bad}"
            )));
        }
        self.tensors.insert(name.to_string(), (shape, data));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f32])> {
        self.tensors
            .get(name)
            .map(|(shape, data)| (shape.as_slice(), data.as_slice()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    /// Loads `manifest.json` + `weights.bin` from a directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let manifest: ArchiveManifest = serde_json::from_str(&manifest_text)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::WeightArchive(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        let payload = fs::read(dir.join(PAYLOAD_FILE))?;
        let mut archive = Self::new();
        for entry in &manifest.entries {
            let count: usize = entry.shape.iter().product();
            let bytes = count
                .checked_mul(4)
                .ok_or_else(|| Error::WeightArchive(format!("tensor {}: overflow", entry.name)))?;
            let start = usize::try_from(entry.offset)
                .map_err(|_| Error::WeightArchive(format!("tensor {}: bad offset", entry.name)))?;
            let end = start.checked_add(bytes).filter(|&e| e <= payload.len());
            let Some(end) = end else {
                return Err(Error::WeightArchive(format!(
                    "truncated payload: tensor {} needs bytes {start}..{} but file has {}",
                    entry.name,
                    start + bytes,
                    payload.len()
                )));
            };
            let data: Vec<f32> = payload[start..end]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            archive.insert(&entry.name, entry.shape.clone(), data)?;
        }
        Ok(archive)
    }

    /// Writes `manifest.json` + `weights.bin` into a directory.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        let mut payload = Vec::new();
        for (name, (shape, data)) in &self.tensors {
            entries.push(ManifestEntry {
                name: name.clone(),
                shape: shape.clone(),
                offset: payload.len() as u64,
            });
            for v in data {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        let manifest = ArchiveManifest {
            format_version: FORMAT_VERSION,
            entries,
        };
        fs::write(
            dir.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        fs::write(dir.join(PAYLOAD_FILE), payload)?;
        Ok(())
    }

    /// Checks that the archive holds exactly the tensors the spec needs,
    /// with matching shapes.
    pub fn validate_against(&self, spec: &NetworkSpec) -> Result<()> {
        let mut expected: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for layer in &spec.layers {
            match *layer {
                Layer::Conv {
                    ref name,
                    kernel: [kh, kw],
                    in_channels,
                    out_channels,
                    groups,
                    ..
                } => {
                    expected.insert(
                        format!("{name}.kernel"),
                        vec![kh, kw, in_channels / groups, out_channels],
                    );
                    expected.insert(format!("{name}.bias"), vec![out_channels]);
                }
                Layer::Fc {
                    ref name,
                    in_features,
                    out_features,
                } => {
                    expected.insert(format!("{name}.weight"), vec![in_features, out_features]);
                    expected.insert(format!("{name}.bias"), vec![out_features]);
                }
                _ => {}
            }
        }
        for (name, shape) in &expected {
            match self.get(name) {
                None => {
                    return Err(Error::WeightArchive(format!("missing tensor {name}")));
                }
                Some((got, _)) if got != shape.as_slice() => {
                    return Err(Error::WeightArchive(format!(
                        "tensor {name}: shape {got:?}, spec needs {shape:?}"
                    )));
                }
                Some(_) => {}
            }
        }
        for name in self.names() {
            if !expected.contains_key(name) {
                return Err(Error::WeightArchive(format!(
                    "tensor {name} does not belong to any layer in the spec"
                )));
            }
        }
        Ok(())
    }
}

impl Default for WeightArchive {
    fn default() -> Self {
        Self::new()
    }
}

/// Seeded random weights matching a spec, for self-contained runs without
/// externally converted pre-trained weights.
pub fn random_archive(spec: &NetworkSpec, seed: u64) -> Result<WeightArchive> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut archive = WeightArchive::new();
    let mut fill = |shape: Vec<usize>, scale: f32| -> (Vec<usize>, Vec<f32>) {
        let len: usize = shape.iter().product();
        let data = (0..len).map(|_| rng.gen_range(-scale..scale)).collect();
        (shape, data)
    };
    for layer in &spec.layers {
        match *layer {
            Layer::Conv {
                ref name,
                kernel: [kh, kw],
                in_channels,
                out_channels,
                groups,
                ..
            } => {
                let fan_in = (kh * kw * in_channels / groups) as f32;
                let (shape, data) = fill(
                    vec![kh, kw, in_channels / groups, out_channels],
                    (1.0 / fan_in).sqrt(),
                );
                archive.insert(&format!("{name}.kernel"), shape, data)?;
                let (shape, data) = fill(vec![out_channels], 0.1);
                archive.insert(&format!("{name}.bias"), shape, data)?;
            }
            Layer::Fc {
                ref name,
                in_features,
                out_features,
            } => {
                let (shape, data) =
                    fill(vec![in_features, out_features], (1.0 / in_features as f32).sqrt());
                archive.insert(&format!("{name}.weight"), shape, data)?;
                let (shape, data) = fill(vec![out_features], 0.1);
                archive.insert(&format!("{name}.bias"), shape, data)?;
            }
            _ => {}
        }
    }
    Ok(archive)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> NetworkSpec {
        NetworkSpec {
            input: (8, 8, 2),
            channel_means: vec![],
            layers: vec![
                Layer::Conv {
                    name: "c1".into(),
                    kernel: [3, 3],
                    in_channels: 2,
                    out_channels: 4,
                    stride: 1,
                    pad: 1,
                    groups: 1,
                },
                Layer::Relu { name: "r1".into() },
                Layer::Fc {
                    name: "f1".into(),
                    in_features: 8 * 8 * 4,
                    out_features: 3,
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let archive = random_archive(&tiny_spec(), 99).unwrap();
        archive.save(dir.path()).unwrap();
        let back = WeightArchive::load(dir.path()).unwrap();
        assert_eq!(archive, back);
    }

    #[test]
    fn truncated_payload_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let archive = random_archive(&tiny_spec(), 7).unwrap();
        archive.save(dir.path()).unwrap();
        let payload_path = dir.path().join(PAYLOAD_FILE);
        let bytes = fs::read(&payload_path).unwrap();
        fs::write(&payload_path, &bytes[..bytes.len() - 1]).unwrap();
        let err = WeightArchive::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("truncated payload"));
    }

    #[test]
    fn validation_accepts_matching_archive() {
        let spec = tiny_spec();
        let archive = random_archive(&spec, 1).unwrap();
        archive.validate_against(&spec).unwrap();
    }

    #[test]
    fn validation_names_missing_and_foreign_tensors() {
        let spec = tiny_spec();
        let mut archive = random_archive(&spec, 1).unwrap();
        archive.insert("ghost.weight", vec![2], vec![1.0, 2.0]).unwrap();
        let err = archive.validate_against(&spec).unwrap_err();
        assert!(err.to_string().contains("ghost.weight"));

        let mut missing = random_archive(&spec, 1).unwrap();
        missing.tensors.remove("f1.bias");
        let err = missing.validate_against(&spec).unwrap_err();
        assert!(err.to_string().contains("f1.bias"));
    }

    #[test]
    fn validation_checks_shapes() {
        let spec = tiny_spec();
        let mut archive = random_archive(&spec, 1).unwrap();
        archive.insert("f1.bias", vec![4], vec![0.0; 4]).unwrap();
        let err = archive.validate_against(&spec).unwrap_err();
        assert!(err.to_string().contains("f1.bias"));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut archive = WeightArchive::new();
        let err = archive
            .insert("w", vec![2], vec![1.0, f32::INFINITY])
            .unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn random_archives_are_seed_deterministic() {
        let spec = tiny_spec();
        assert_eq!(
            random_archive(&spec, 5).unwrap(),
            random_archive(&spec, 5).unwrap()
        );
        assert_ne!(
            random_archive(&spec, 5).unwrap(),
            random_archive(&spec, 6).unwrap()
        );
    }
}
