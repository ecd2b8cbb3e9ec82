use std::collections::BTreeMap;

use serde::Serialize;

use super::ConceptDictionary;
use crate::Real;

/// Allowed deviation of an atom's Euclidean norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormViolation {
    pub layer_id: u32,
    pub row: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonFiniteEntry {
    pub layer_id: u32,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub d: usize,
    pub num_layers: usize,
    pub max_norm_deviation: f64,
    pub norm_violations: Vec<NormViolation>,
    pub non_finite: Vec<NonFiniteEntry>,
    pub duplicate_names: Vec<String>,
    pub passed: bool,
}

/// Checks unit row norms, finiteness and name uniqueness. Never fails; the
/// verdict is in `passed`.
pub fn validate_dictionary<T: Real>(dict: &ConceptDictionary<T>) -> ValidationReport {
    let mut norm_violations = Vec::new();
    let mut non_finite = Vec::new();
    let mut max_dev = 0.0_f64;
    for (layer_id, m) in dict.layers() {
        for (row, atom) in m.column_iter().enumerate() {
            let mut finite = true;
            for (col, x) in atom.iter().enumerate() {
                if !x.is_finite_value() {
                    finite = false;
                    non_finite.push(NonFiniteEntry { layer_id, row, col });
                }
            }
            if !finite {
                continue;
            }
            let norm = atom.norm().as_f64();
            let dev = (norm - 1.0).abs();
            max_dev = max_dev.max(dev);
            if dev > NORM_TOLERANCE {
                norm_violations.push(NormViolation { layer_id, row, norm });
            }
        }
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in dict.entries() {
        *counts.entry(e.name.as_str()).or_default() += 1;
    }
    let duplicate_names: Vec<String> = counts
        .into_iter()
        .filter(|&(_, c)| c > 1)
        .map(|(name, _)| name.to_string())
        .collect();
    let passed = norm_violations.is_empty() && non_finite.is_empty() && duplicate_names.is_empty();
    ValidationReport {
        n: dict.num_concepts(),
        d: dict.dim(),
        num_layers: dict.num_layers(),
        max_norm_deviation: max_dev,
        norm_violations,
        non_finite,
        duplicate_names,
        passed,
    }
}
