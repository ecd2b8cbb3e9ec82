//! Stimulus activations and their on-disk ingest format.
//!
//! A stimulus directory holds `acts_manifest.json` plus one
//! `acts_layer_<id>.f32` per layer. Each layer file is a row-major matrix of
//! little-endian binary32 activations, one row per stimulus; the manifest maps
//! every concept to the half-open row range `[start, end)` holding its stimuli
//! (the same range in every layer).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::io::{read_f32_file, write_f32_file};
use crate::{Error, Real, Result};

pub const ACTS_MANIFEST: &str = "acts_manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusGroup<T: Real> {
    pub concept_id: usize,
    pub name: String,
    /// `d × m`, one stimulus activation per column.
    pub activations: DMatrix<T>,
}

/// Last-token activations for every concept's stimuli at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusActivationSet<T: Real> {
    dim: usize,
    groups: Vec<StimulusGroup<T>>,
}

impl<T: Real> StimulusActivationSet<T> {
    pub fn new(groups: Vec<StimulusGroup<T>>) -> Result<Self> {
        let dim = groups
            .first()
            .map(|g| g.activations.nrows())
            .ok_or_else(|| Error::InvalidData("stimulus set has no concepts".into()))?;
        if dim == 0 {
            return Err(Error::InvalidData("activation dimension must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for g in &groups {
            if g.activations.nrows() != dim {
                return Err(Error::dims(
                    format!("activations of concept {}", g.concept_id),
                    dim,
                    g.activations.nrows(),
                ));
            }
            if g.activations.ncols() < 2 {
                return Err(Error::InvalidData(format!(
                    "concept {} has {} activations, at least 2 are required",
                    g.concept_id,
                    g.activations.ncols()
                )));
            }
            if !seen.insert(g.concept_id) {
                return Err(Error::InvalidData(format!("duplicate concept {}", g.concept_id)));
            }
        }
        Ok(Self { dim, groups })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[StimulusGroup<T>] {
        &self.groups
    }

    pub fn group(&self, concept_id: usize) -> Option<&StimulusGroup<T>> {
        self.groups.iter().find(|g| g.concept_id == concept_id)
    }

    pub fn concept_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.groups.iter().map(|g| g.concept_id).collect();
        ids.sort_unstable();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActsConcept {
    pub concept_id: usize,
    pub name: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActsManifest {
    pub d: usize,
    pub layer_ids: Vec<u32>,
    pub concepts: Vec<ActsConcept>,
}

fn layer_file(layer_id: u32) -> String {
    format!("acts_layer_{layer_id}.f32")
}

/// Reads a stimulus directory into one activation set per layer.
pub fn read_stimuli<T: Real>(dir: &Path) -> Result<BTreeMap<u32, StimulusActivationSet<T>>> {
    let manifest_path = dir.join(ACTS_MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(Error::io(&manifest_path))?;
    let manifest: ActsManifest = serde_json::from_str(&text).map_err(Error::json(&manifest_path))?;
    let rows = manifest.concepts.iter().map(|c| c.end).max().unwrap_or(0);
    let mut out = BTreeMap::new();
    for &layer_id in &manifest.layer_ids {
        let path = dir.join(layer_file(layer_id));
        let data = read_f32_file(&path)?;
        if data.len() % manifest.d != 0 || data.len() / manifest.d < rows {
            return Err(Error::dims(
                format!("rows in {}", path.display()),
                rows,
                data.len() / manifest.d.max(1),
            ));
        }
        let mut groups = Vec::with_capacity(manifest.concepts.len());
        for c in &manifest.concepts {
            if c.start > c.end {
                return Err(Error::InvalidData(format!("concept {} has an inverted row range", c.concept_id)));
            }
            let m = c.end - c.start;
            let activations = DMatrix::from_fn(manifest.d, m, |i, j| {
                T::of_f32(data[(c.start + j) * manifest.d + i])
            });
            groups.push(StimulusGroup {
                concept_id: c.concept_id,
                name: c.name.clone(),
                activations,
            });
        }
        out.insert(layer_id, StimulusActivationSet::new(groups)?);
    }
    Ok(out)
}

/// Writes per-layer activation sets in the ingest format. All layers must
/// list the same concepts with the same stimulus counts.
pub fn write_stimuli<T: Real>(dir: &Path, sets: &BTreeMap<u32, StimulusActivationSet<T>>) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let first = sets
        .values()
        .next()
        .ok_or_else(|| Error::InvalidData("no layers to write".into()))?;
    let mut concepts = Vec::new();
    let mut start = 0;
    for g in first.groups() {
        let end = start + g.activations.ncols();
        concepts.push(ActsConcept {
            concept_id: g.concept_id,
            name: g.name.clone(),
            start,
            end,
        });
        start = end;
    }
    for (&layer_id, set) in sets {
        if set.groups().len() != concepts.len() {
            return Err(Error::dims(format!("concepts in layer {layer_id}"), concepts.len(), set.groups().len()));
        }
        let mut data = Vec::with_capacity(start * set.dim());
        for (g, c) in set.groups().iter().zip(&concepts) {
            if g.concept_id != c.concept_id || g.activations.ncols() != c.end - c.start {
                return Err(Error::InvalidData(format!(
                    "layer {layer_id} disagrees with the first layer on concept {}",
                    c.concept_id
                )));
            }
            for col in g.activations.column_iter() {
                data.extend(col.iter().map(|x| x.as_f32()));
            }
        }
        write_f32_file(&dir.join(layer_file(layer_id)), &data)?;
    }
    let manifest = ActsManifest {
        d: first.dim(),
        layer_ids: sets.keys().copied().collect(),
        concepts,
    };
    let path = dir.join(ACTS_MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).map_err(Error::json(&path))?;
    fs::write(&path, text).map_err(Error::io(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(id: usize, cols: usize) -> StimulusGroup<f32> {
        StimulusGroup {
            concept_id: id,
            name: format!("c{id}"),
            activations: DMatrix::from_fn(3, cols, |i, j| (id * 10 + i + j) as f32 * 0.5),
        }
    }

    #[test]
    fn rejects_single_stimulus_groups() {
        assert!(StimulusActivationSet::new(vec![group(0, 1)]).is_err());
        assert!(StimulusActivationSet::new(vec![group(0, 2), group(0, 2)]).is_err());
        assert!(StimulusActivationSet::<f32>::new(vec![]).is_err());
    }

    #[test]
    fn ingest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let set = StimulusActivationSet::new(vec![group(0, 2), group(1, 3)]).unwrap();
        let sets: BTreeMap<u32, _> = [(2, set.clone()), (5, set)].into_iter().collect();
        write_stimuli(dir.path(), &sets).unwrap();
        let back = read_stimuli::<f32>(dir.path()).unwrap();
        assert_eq!(back, sets);
    }
}
