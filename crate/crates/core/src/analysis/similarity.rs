use super::ConceptEmbedding;
use crate::{Error, Real, Result};

/// `|⟨e_i, e_j⟩|` on the normalised embedding. The absolute value absorbs the
/// sign ambiguity of principal directions.
pub fn similarity<T: Real>(emb: &ConceptEmbedding<T>, i: usize, j: usize) -> T {
    let s = emb.vectors.column(i).dot(&emb.vectors.column(j)).abs();
    if s > T::one() {
        T::one()
    } else {
        s
    }
}

/// The `k` concepts most similar to `query` (excluding itself), by descending
/// similarity with ties broken by ascending id.
pub fn retrieve_top_k<T: Real>(emb: &ConceptEmbedding<T>, query: usize, k: usize) -> Result<Vec<(usize, T)>> {
    let n = emb.num_concepts();
    if query >= n {
        return Err(Error::InvalidParams(format!("query concept {query} out of range {n}")));
    }
    if k >= n {
        return Err(Error::InvalidParams(format!("k = {k} must be below the number of concepts {n}")));
    }
    let mut scored: Vec<(usize, T)> = (0..n)
        .filter(|&j| j != query)
        .map(|j| (j, similarity(emb, query, j)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    scored.truncate(k);
    Ok(scored)
}
