//! Concept dictionaries: construction from stimulus activations, validation,
//! on-disk containers and task partitions.
//!
//! A dictionary holds one `d × n` matrix per layer whose column `i` is the unit
//! direction of concept `i` at that layer. On disk the same data is the `n × d`
//! row-major layout, so "row i" in the file format and "column i" in memory
//! refer to the same atom.

mod container;
mod extract;
mod partition;
mod stimuli;
mod validate;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

pub use container::{load_dictionary, save_dictionary, ContainerManifest, LayerFileEntry, FORMAT_VERSION};
pub use extract::{
    build_dictionary, extract_direction, sample_differences, DirectionExtractionConfig,
    DEFAULT_MAX_PAIRS,
};
pub use partition::{
    read_partition, select_undesirable, write_partition, Label, MockAnnotator, PartitionAnnotation,
    PartitionSet,
};
pub use stimuli::{read_stimuli, write_stimuli, StimulusGroup, StimulusActivationSet};
pub use validate::{validate_dictionary, NonFiniteEntry, NormViolation, ValidationReport, NORM_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEntry {
    #[serde(rename = "id")]
    pub concept_id: usize,
    pub name: String,
    pub stimulus_count: usize,
}

/// Per-layer concept dictionary. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDictionary<T: Real> {
    dim: usize,
    layer_ids: Vec<u32>,
    entries: Vec<ConceptEntry>,
    layers: Vec<DMatrix<T>>,
}

impl<T: Real> ConceptDictionary<T> {
    /// Checks the structural invariants (shapes, ids, names). Row norms are
    /// not checked here; see [`validate_dictionary`].
    pub fn new(
        entries: Vec<ConceptEntry>,
        layer_ids: Vec<u32>,
        layers: Vec<DMatrix<T>>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidData("dictionary has no layers".into()));
        }
        if layer_ids.len() != layers.len() {
            return Err(Error::dims("layer ids", layers.len(), layer_ids.len()));
        }
        if layer_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidData("layer ids must be strictly increasing".into()));
        }
        let dim = layers[0].nrows();
        if dim == 0 {
            return Err(Error::InvalidData("dimension must be positive".into()));
        }
        let n = entries.len();
        for (layer_id, m) in layer_ids.iter().zip(&layers) {
            if m.nrows() != dim {
                return Err(Error::dims(format!("dimension of layer {layer_id}"), dim, m.nrows()));
            }
            if m.ncols() != n {
                return Err(Error::dims(format!("concepts in layer {layer_id}"), n, m.ncols()));
            }
        }
        for (i, e) in entries.iter().enumerate() {
            if e.concept_id != i {
                return Err(Error::InvalidData(format!(
                    "concept ids must be contiguous from 0: position {i} has id {}",
                    e.concept_id
                )));
            }
            if e.name.is_empty() {
                return Err(Error::InvalidData(format!("concept {i} has an empty name")));
            }
        }
        Ok(Self {
            dim,
            layer_ids,
            entries,
            layers,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_concepts(&self) -> usize {
        self.entries.len()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_ids(&self) -> &[u32] {
        &self.layer_ids
    }

    pub fn entries(&self) -> &[ConceptEntry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    /// Layer matrix by layer id.
    pub fn layer(&self, layer_id: u32) -> Option<&DMatrix<T>> {
        self.layer_ids
            .binary_search(&layer_id)
            .ok()
            .map(|k| &self.layers[k])
    }

    /// Layer matrix by position.
    pub fn layer_at(&self, index: usize) -> &DMatrix<T> {
        &self.layers[index]
    }

    pub fn layers(&self) -> impl Iterator<Item = (u32, &DMatrix<T>)> {
        self.layer_ids.iter().copied().zip(self.layers.iter())
    }

    pub fn concept_by_name(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Layer id → matrix map, the form consumed by intervention streams.
    pub fn layer_map(&self) -> std::collections::BTreeMap<u32, DMatrix<T>> {
        self.layers().map(|(id, m)| (id, m.clone())).collect()
    }

    pub fn into_parts(self) -> (Vec<ConceptEntry>, Vec<u32>, Vec<DMatrix<T>>) {
        (self.entries, self.layer_ids, self.layers)
    }
}
