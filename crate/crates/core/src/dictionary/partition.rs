//! Task partitions: per-concept relevance scores labelled benign or
//! undesirable, as produced by an external annotator.
//!
//! File format (`partitions/<task_id>.jsonl`): a header line
//! `{"task_id": ..., "higher_is_undesirable": bool}` followed by one
//! `{"concept_id": ..., "score": ..., "label": "benign"|"undesirable"}` per line.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Undesirable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionAnnotation {
    #[serde(skip)]
    pub task_id: String,
    pub concept_id: usize,
    pub score: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    task_id: String,
    higher_is_undesirable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub task_id: String,
    pub higher_is_undesirable: bool,
    pub annotations: Vec<PartitionAnnotation>,
}

impl PartitionSet {
    /// Score oriented so that larger always means more undesirable.
    fn oriented(&self, score: f64) -> f64 {
        if self.higher_is_undesirable {
            score
        } else {
            -score
        }
    }

    /// Checks score range, label/sign consistency and duplicate concepts.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for a in &self.annotations {
            if !(-1.0..=1.0).contains(&a.score) {
                return Err(Error::InvalidData(format!(
                    "concept {}: score {} outside [-1, 1]",
                    a.concept_id, a.score
                )));
            }
            let s = self.oriented(a.score);
            let consistent = match a.label {
                Label::Undesirable => s >= 0.0,
                Label::Benign => s <= 0.0,
            };
            if !consistent {
                return Err(Error::InvalidData(format!(
                    "concept {}: label {:?} contradicts score {} (higher_is_undesirable = {})",
                    a.concept_id, a.label, a.score, self.higher_is_undesirable
                )));
            }
            if !seen.insert(a.concept_id) {
                return Err(Error::InvalidData(format!("concept {} annotated twice", a.concept_id)));
            }
        }
        Ok(())
    }

    /// The `k` most undesirable concepts; see [`select_undesirable`].
    pub fn select(&self, k: usize) -> Result<Vec<usize>> {
        select_undesirable(&self.annotations, &self.task_id, k, self.higher_is_undesirable)
    }
}

/// Returns the `k` undesirable concepts of `task_id` with the most undesirable
/// score, ties broken by ascending concept id. The result is in rank order.
pub fn select_undesirable(
    annotations: &[PartitionAnnotation],
    task_id: &str,
    k: usize,
    higher_is_undesirable: bool,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be positive".into()));
    }
    let sign = if higher_is_undesirable { 1.0 } else { -1.0 };
    let mut pool: Vec<(f64, usize)> = annotations
        .iter()
        .filter(|a| a.task_id == task_id && a.label == Label::Undesirable)
        .map(|a| (sign * a.score, a.concept_id))
        .collect();
    if pool.len() < k {
        return Err(Error::InsufficientUndesirable {
            task_id: task_id.to_string(),
            requested: k,
            available: pool.len(),
        });
    }
    pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(pool.into_iter().take(k).map(|(_, id)| id).collect())
}

pub fn read_partition(path: &Path) -> Result<PartitionSet> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Header = lines
        .next()
        .ok_or_else(|| Error::InvalidData(format!("{}: missing header line", path.display())))
        .and_then(|l| serde_json::from_str(l).map_err(Error::json(path)))?;
    let mut annotations = Vec::new();
    for line in lines {
        let mut a: PartitionAnnotation = serde_json::from_str(line).map_err(Error::json(path))?;
        a.task_id = header.task_id.clone();
        annotations.push(a);
    }
    let set = PartitionSet {
        task_id: header.task_id,
        higher_is_undesirable: header.higher_is_undesirable,
        annotations,
    };
    set.validate()?;
    Ok(set)
}

pub fn write_partition(path: &Path, set: &PartitionSet) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    let mut out = Vec::new();
    let header = Header {
        task_id: set.task_id.clone(),
        higher_is_undesirable: set.higher_is_undesirable,
    };
    let line = serde_json::to_string(&header).map_err(Error::json(path))?;
    writeln!(out, "{line}").map_err(Error::io(path))?;
    for a in &set.annotations {
        let line = serde_json::to_string(a).map_err(Error::json(path))?;
        writeln!(out, "{line}").map_err(Error::io(path))?;
    }
    fs::write(path, out).map_err(Error::io(path))
}

/// Offline stand-in for an LLM partitioner: a concept is undesirable when its
/// name contains one of the keywords (case-insensitive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockAnnotator {
    pub task_id: String,
    pub keywords: Vec<String>,
}

impl MockAnnotator {
    pub const UNDESIRABLE_SCORE: f64 = 0.9;
    pub const BENIGN_SCORE: f64 = -0.5;

    pub fn annotate<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> PartitionSet {
        let keywords: Vec<String> = self.keywords.iter().map(|k| k.to_lowercase()).collect();
        let annotations = names
            .into_iter()
            .enumerate()
            .map(|(concept_id, name)| {
                let name = name.to_lowercase();
                let hit = keywords.iter().any(|k| name.contains(k.as_str()));
                PartitionAnnotation {
                    task_id: self.task_id.clone(),
                    concept_id,
                    score: if hit { Self::UNDESIRABLE_SCORE } else { Self::BENIGN_SCORE },
                    label: if hit { Label::Undesirable } else { Label::Benign },
                }
            })
            .collect();
        PartitionSet {
            task_id: self.task_id.clone(),
            higher_is_undesirable: true,
            annotations,
        }
    }
}
