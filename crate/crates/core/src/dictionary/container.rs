//! Dictionary container: a directory with `manifest.json` and one
//! `layer_<id>.f32` file per layer (`n × d`, row-major, little-endian binary32,
//! no header). The manifest records a CRC32 of every layer file.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ConceptDictionary, ConceptEntry};
use crate::io::{bytes_to_f32, f32_to_bytes, read_json, write_json};
use crate::{Error, Real, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerFileEntry {
    pub layer_id: u32,
    pub file: String,
    pub crc32: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerManifest {
    pub format_version: u32,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub num_layers: usize,
    pub layer_ids: Vec<u32>,
    pub concepts: Vec<ConceptEntry>,
    pub layers: Vec<LayerFileEntry>,
}

/// Layer file name for a layer id.
pub fn layer_file_name(layer_id: u32) -> String {
    format!("layer_{layer_id}.f32")
}

/// Writes `dict` into the directory `dir`, creating it if needed.
///
/// Values are stored as binary32; an `f32` dictionary round-trips bit for bit.
pub fn save_dictionary<T: Real>(dict: &ConceptDictionary<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut layers = Vec::with_capacity(dict.num_layers());
    for (layer_id, m) in dict.layers() {
        // column-major d × n is the row-major n × d layout
        let data: Vec<f32> = m.iter().map(|x| x.as_f32()).collect();
        let bytes = f32_to_bytes(&data);
        let file = layer_file_name(layer_id);
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(Error::io(&path))?;
        layers.push(LayerFileEntry {
            layer_id,
            file,
            crc32: crc32fast::hash(&bytes),
        });
    }
    let manifest = ContainerManifest {
        format_version: FORMAT_VERSION,
        n: dict.num_concepts(),
        d: dict.dim(),
        num_layers: dict.num_layers(),
        layer_ids: dict.layer_ids().to_vec(),
        concepts: dict.entries().to_vec(),
        layers,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn read_manifest(dir: &Path) -> Result<ContainerManifest> {
    let manifest: ContainerManifest = read_json(&dir.join(MANIFEST_FILE))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            expected: FORMAT_VERSION,
            found: manifest.format_version,
        });
    }
    Ok(manifest)
}

/// Loads and validates a container written by [`save_dictionary`].
pub fn load_dictionary<T: Real>(dir: &Path) -> Result<ConceptDictionary<T>> {
    let manifest = read_manifest(dir)?;
    if manifest.concepts.len() != manifest.n {
        return Err(Error::dims("concept list", manifest.n, manifest.concepts.len()));
    }
    if manifest.layer_ids.len() != manifest.num_layers {
        return Err(Error::dims("layer ids", manifest.num_layers, manifest.layer_ids.len()));
    }
    if manifest.layers.len() != manifest.num_layers {
        return Err(Error::dims("layer files", manifest.num_layers, manifest.layers.len()));
    }
    let mut layers = Vec::with_capacity(manifest.num_layers);
    for (entry, &layer_id) in manifest.layers.iter().zip(&manifest.layer_ids) {
        if entry.layer_id != layer_id {
            return Err(Error::InvalidData(format!(
                "layer file {} is for layer {}, manifest expects {layer_id}",
                entry.file, entry.layer_id
            )));
        }
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(Error::io(&path))?;
        let found = crc32fast::hash(&bytes);
        if found != entry.crc32 {
            return Err(Error::ChecksumMismatch {
                file: entry.file.clone(),
                expected: entry.crc32,
                found,
            });
        }
        let data = bytes_to_f32(&bytes).ok_or_else(|| {
            Error::InvalidData(format!("{}: length is not a multiple of 4", entry.file))
        })?;
        let row_len = manifest.d.max(1);
        if data.len() != manifest.n * manifest.d {
            return Err(Error::dims(
                format!("rows in {}", entry.file),
                manifest.n,
                data.len() / row_len,
            ));
        }
        layers.push(DMatrix::from_iterator(
            manifest.d,
            manifest.n,
            data.into_iter().map(T::of_f32),
        ));
    }
    ConceptDictionary::new(manifest.concepts, manifest.layer_ids, layers)
}
