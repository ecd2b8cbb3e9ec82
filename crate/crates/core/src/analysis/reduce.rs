use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dictionary::ConceptDictionary;
use crate::linalg::sym_eigen_desc;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    /// Fraction of the squared singular-value energy to keep, in (0, 1].
    pub energy_fraction: f64,
    /// Layers to concatenate; all layers when `None`.
    pub layer_subset: Option<Vec<u32>>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            energy_fraction: 0.95,
            layer_subset: None,
        }
    }
}

/// Reduced concept vectors, one column per concept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptEmbedding<T: Real> {
    pub reduced_dim: usize,
    /// `d̂ × n`, each column scaled to unit norm (zero columns stay zero).
    pub vectors: DMatrix<T>,
    /// `d̂ × n` projections before normalisation.
    pub projected: DMatrix<T>,
    /// Norm of each projected column, i.e. the per-concept normalisation constant.
    pub row_norms: Vec<T>,
    /// All singular values of the concatenated data, descending.
    pub singular_values: Vec<T>,
    /// Retained share of the squared singular-value energy.
    pub retained_energy: f64,
}

impl<T: Real> ConceptEmbedding<T> {
    pub fn num_concepts(&self) -> usize {
        self.vectors.ncols()
    }

    /// Mean of the per-concept norms.
    pub fn normalization_constant(&self) -> T {
        let n = self.row_norms.len().max(1);
        self.row_norms.iter().fold(T::zero(), |a, &b| a + b) / T::lit(n as f64)
    }

    /// Builds an embedding directly from unit-normalised points (columns),
    /// bypassing the reduction.
    pub fn from_points(points: DMatrix<T>) -> Self {
        let row_norms: Vec<T> = points.column_iter().map(|c| c.norm()).collect();
        let mut vectors = points.clone();
        for (mut col, &norm) in vectors.column_iter_mut().zip(&row_norms) {
            if norm > T::zero() {
                col /= norm;
            }
        }
        Self {
            reduced_dim: points.nrows(),
            vectors,
            projected: points,
            row_norms,
            singular_values: Vec::new(),
            retained_energy: 1.0,
        }
    }
}

/// Smallest number of leading components whose squared singular values reach
/// `fraction` of the total. Returns the count and the retained share.
pub fn select_rank<T: Real>(singular_values: &[T], fraction: f64) -> (usize, f64) {
    let energies: Vec<f64> = singular_values.iter().map(|s| s.as_f64().powi(2)).collect();
    let total: f64 = energies.iter().sum();
    if total == 0.0 {
        return (0, 0.0);
    }
    let mut cum = 0.0;
    for (k, e) in energies.iter().enumerate() {
        cum += e;
        if cum >= fraction * total {
            return (k + 1, cum / total);
        }
    }
    (energies.len(), cum / total)
}

/// Concatenates each concept's per-layer directions, keeps the leading
/// singular components that retain `energy_fraction` of the energy, and
/// normalises every reduced vector by its own norm.
pub fn concat_and_reduce<T: Real>(dict: &ConceptDictionary<T>, cfg: &ReductionConfig) -> Result<ConceptEmbedding<T>> {
    if !(cfg.energy_fraction > 0.0 && cfg.energy_fraction <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "energy_fraction must lie in (0, 1], got {}",
            cfg.energy_fraction
        )));
    }
    let n = dict.num_concepts();
    if n < 2 {
        return Err(Error::InvalidData("reduction needs at least 2 concepts".into()));
    }
    let layers: Vec<&DMatrix<T>> = match &cfg.layer_subset {
        None => dict.layers().map(|(_, m)| m).collect(),
        Some(ids) => ids
            .iter()
            .map(|&id| dict.layer(id).ok_or(Error::MissingLayerDictionary(id)))
            .collect::<Result<_>>()?,
    };
    if layers.is_empty() {
        return Err(Error::InvalidParams("layer subset is empty".into()));
    }
    let width = layers.len() * dict.dim();

    // Work with whichever Gram matrix is smaller.
    let (eigenvalues, coords_of) = if n <= width {
        let mut gram = DMatrix::<T>::zeros(n, n);
        for m in &layers {
            gram += m.tr_mul(m);
        }
        let (vals, vecs) = sym_eigen_desc(gram);
        (vals, Basis::Left(vecs))
    } else {
        let mut x = DMatrix::<T>::zeros(width, n);
        for (l, m) in layers.iter().enumerate() {
            x.rows_mut(l * dict.dim(), dict.dim()).copy_from(*m);
        }
        let (vals, vecs) = sym_eigen_desc(&x * x.transpose());
        (vals, Basis::Right(vecs, x))
    };

    let top = eigenvalues.first().copied().unwrap_or_else(T::zero);
    let cutoff = top * T::lit((n.max(width) as f64) * 10.0) * T::eps();
    let singular_values: Vec<T> = eigenvalues
        .iter()
        .map(|&l| if l > cutoff { l.sqrt() } else { T::zero() })
        .collect();
    let (k, retained) = select_rank(&singular_values, cfg.energy_fraction);
    if k == 0 {
        return Err(Error::DegenerateSpectrum);
    }

    let projected = match coords_of {
        // X = U Σ Vᵀ, so the coordinates of concept i are U[i, ..k] Σ
        Basis::Left(u) => DMatrix::from_fn(k, n, |r, i| u[(i, r)] * singular_values[r]),
        Basis::Right(v, x) => v.columns(0, k).tr_mul(&x),
    };
    let mut emb = ConceptEmbedding::from_points(projected);
    emb.singular_values = singular_values;
    emb.retained_energy = retained;
    emb.reduced_dim = k;
    Ok(emb)
}

enum Basis<T: Real> {
    Left(DMatrix<T>),
    Right(DMatrix<T>, DMatrix<T>),
}
