//! Concept direction extraction ("representation reading").
//!
//! The direction of a concept at a layer is the first principal direction of
//! the unit-normalised differences between its stimulus activations and those
//! of contrast concepts. Differences are not mean-centred.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConceptDictionary, ConceptEntry, StimulusActivationSet};
use crate::linalg::{canonicalize_sign, top_eigenpair};
use crate::rng::SeedTree;
use crate::{Error, Real, Result};

pub const DEFAULT_MAX_PAIRS: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionExtractionConfig {
    /// Cap on the number of sampled difference vectors per concept and layer.
    pub max_pairs: usize,
    pub rng_seed: u64,
    /// Concepts to contrast against; every other concept when `None`.
    pub contrast_concepts: Option<Vec<usize>>,
}

impl Default for DirectionExtractionConfig {
    fn default() -> Self {
        Self {
            max_pairs: DEFAULT_MAX_PAIRS,
            rng_seed: 0,
            contrast_concepts: None,
        }
    }
}

impl DirectionExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_pairs == 0 {
            return Err(Error::InvalidParams("max_pairs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Samples the unit-normalised differences `f(target) - f(other)` used for
/// one concept, as the columns of a `d × p` matrix.
///
/// When the number of available pairs exceeds `max_pairs`, a uniform sample
/// without replacement is drawn from a stream keyed by `(rng_seed, target)`.
/// Differences that vanish (relative to the operands) are dropped.
pub fn sample_differences<T: Real>(
    target: usize,
    stimuli: &StimulusActivationSet<T>,
    cfg: &DirectionExtractionConfig,
) -> Result<DMatrix<T>> {
    cfg.validate()?;
    let group = stimuli
        .group(target)
        .ok_or_else(|| Error::InvalidData(format!("concept {target} has no stimuli")))?;

    let contrast: Vec<&DMatrix<T>> = match &cfg.contrast_concepts {
        Some(ids) => ids
            .iter()
            .filter(|&&id| id != target)
            .filter_map(|&id| stimuli.group(id))
            .map(|g| &g.activations)
            .collect(),
        None => stimuli
            .groups()
            .iter()
            .filter(|g| g.concept_id != target)
            .map(|g| &g.activations)
            .collect(),
    };
    let others: Vec<_> = contrast.iter().flat_map(|m| m.column_iter()).collect();
    if others.is_empty() {
        return Err(Error::EmptyContrastSet { concept: target });
    }

    let m_target = group.activations.ncols();
    let total = m_target * others.len();
    let picks: Vec<usize> = if total <= cfg.max_pairs {
        (0..total).collect()
    } else {
        let mut rng = SeedTree::new(cfg.rng_seed).index(target as u64).rng();
        let mut picks = index::sample(&mut rng, total, cfg.max_pairs).into_vec();
        picks.sort_unstable();
        picks
    };

    let tiny = T::eps() * T::lit(16.0);
    let mut cols: Vec<DVector<T>> = Vec::with_capacity(picks.len());
    for p in picks {
        let a = group.activations.column(p / others.len());
        let b = &others[p % others.len()];
        let diff = a - *b;
        let norm = diff.norm();
        let scale = a.norm().max(b.norm());
        if norm == T::zero() || norm <= tiny * scale {
            continue;
        }
        cols.push(diff / norm);
    }
    if cols.is_empty() {
        return Err(Error::DegenerateSet { concept: target });
    }
    Ok(DMatrix::from_columns(&cols))
}

/// First principal direction of a set of difference columns, unit norm with
/// canonical sign (largest-magnitude coordinate positive).
///
/// Uses the `p × p` Gram matrix when there are fewer differences than
/// dimensions and the `d × d` second-moment matrix otherwise.
pub(crate) fn principal_direction<T: Real>(diffs: &DMatrix<T>) -> DVector<T> {
    let (d, p) = diffs.shape();
    let mut v = if p < d {
        let (_, u) = top_eigenpair(diffs.tr_mul(diffs));
        diffs * u
    } else {
        let (_, v) = top_eigenpair(diffs * diffs.transpose());
        v
    };
    let norm = v.norm();
    v /= norm;
    canonicalize_sign(&mut v);
    v
}

/// Extracts the unit direction of `target` from one layer's stimuli.
pub fn extract_direction<T: Real>(
    target: usize,
    stimuli: &StimulusActivationSet<T>,
    cfg: &DirectionExtractionConfig,
) -> Result<DVector<T>> {
    let diffs = sample_differences(target, stimuli, cfg)?;
    Ok(principal_direction(&diffs))
}

/// Builds a dictionary with one layer per entry of `per_layer`. Every layer
/// must list the same concepts (ids `0..n`) with the same dimension.
///
/// Cells are computed in parallel; each cell's randomness depends only on the
/// seed and concept id, so the result does not depend on scheduling.
pub fn build_dictionary<T: Real>(
    per_layer: &BTreeMap<u32, StimulusActivationSet<T>>,
    cfg: &DirectionExtractionConfig,
) -> Result<ConceptDictionary<T>> {
    cfg.validate()?;
    let (_, first) = per_layer
        .iter()
        .next()
        .ok_or_else(|| Error::InvalidData("no layers to build".into()))?;
    let ids = first.concept_ids();
    if ids.iter().enumerate().any(|(i, &id)| i != id) {
        return Err(Error::InvalidData("concept ids must be contiguous from 0".into()));
    }
    let d = first.dim();
    for (&layer_id, set) in per_layer {
        if set.dim() != d {
            return Err(Error::dims(format!("dimension of layer {layer_id}"), d, set.dim()));
        }
        if set.concept_ids() != ids {
            return Err(Error::InvalidData(format!("layer {layer_id} has a different concept set")));
        }
    }
    let n = ids.len();
    let layer_ids: Vec<u32> = per_layer.keys().copied().collect();

    let cells: Vec<(usize, usize)> = (0..layer_ids.len())
        .flat_map(|l| (0..n).map(move |i| (l, i)))
        .collect();
    let directions: Vec<Result<DVector<T>>> = cells
        .par_iter()
        .map(|&(l, i)| {
            let layer = layer_ids[l];
            extract_direction(i, &per_layer[&layer], cfg).map_err(|e| Error::Extraction {
                layer,
                concept: i,
                source: Box::new(e),
            })
        })
        .collect();

    let mut layers = vec![DMatrix::zeros(d, n); layer_ids.len()];
    for (&(l, i), dir) in cells.iter().zip(directions) {
        layers[l].set_column(i, &dir?);
    }
    let entries = ids
        .iter()
        .map(|&i| {
            let g = first.group(i).expect("id taken from the set");
            ConceptEntry {
                concept_id: i,
                name: g.name.clone(),
                stimulus_count: g.activations.ncols(),
            }
        })
        .collect();
    ConceptDictionary::new(entries, layer_ids, layers)
}
