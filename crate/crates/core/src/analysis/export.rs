use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AffinityMatrix, ConceptEmbedding};
use crate::io::{write_f32_file, write_json};
use crate::{Error, Real, Result};

pub const EMBEDDING_FILE: &str = "embedding.f32";
pub const EMBEDDING_MANIFEST: &str = "embedding.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    pub n: usize,
    pub reduced_dim: usize,
    pub retained_energy: f64,
    pub singular_values: Vec<f64>,
    pub row_norms: Vec<f64>,
    pub names: Vec<String>,
    pub file: String,
}

/// Writes the normalised vectors as row-major `n × d̂` f32 plus a manifest.
pub fn write_embedding<T: Real>(dir: &Path, emb: &ConceptEmbedding<T>, names: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let data: Vec<f32> = emb.vectors.as_slice().iter().map(|v| v.as_f32()).collect();
    write_f32_file(&dir.join(EMBEDDING_FILE), &data)?;
    let manifest = EmbeddingManifest {
        n: emb.num_concepts(),
        reduced_dim: emb.reduced_dim,
        retained_energy: emb.retained_energy,
        singular_values: emb.singular_values.iter().map(|v| v.as_f64()).collect(),
        row_norms: emb.row_norms.iter().map(|v| v.as_f64()).collect(),
        names: names.to_vec(),
        file: EMBEDDING_FILE.into(),
    };
    write_json(&dir.join(EMBEDDING_MANIFEST), &manifest)
}

/// One `i j value` line per stored entry, preceded by an `n` header line.
pub fn write_affinity_coo<T: Real>(path: &Path, a: &AffinityMatrix<T>) -> Result<()> {
    let mut out = format!("{}\n", a.n);
    for &(i, j, v) in &a.entries {
        let _ = writeln!(out, "{i} {j} {:e}", v.as_f64());
    }
    std::fs::write(path, out).map_err(Error::io(path))
}

pub fn read_affinity_coo(path: &Path) -> Result<AffinityMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let mut lines = text.lines();
    let bad = |msg: &str| Error::InvalidData(format!("{}: {msg}", path.display()));
    let n: usize = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| bad("missing size header"))?;
    let mut entries = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let mut parts = line.split_whitespace();
        let (Some(i), Some(j), Some(v)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("malformed entry"));
        };
        let i: usize = i.parse().map_err(|_| bad("bad row index"))?;
        let j: usize = j.parse().map_err(|_| bad("bad column index"))?;
        let v: f64 = v.parse().map_err(|_| bad("bad value"))?;
        if i >= n || j >= n {
            return Err(bad("index out of range"));
        }
        entries.push((i, j, v));
    }
    entries.sort_by_key(|a| (a.0, a.1));
    Ok(AffinityMatrix { n, entries })
}
