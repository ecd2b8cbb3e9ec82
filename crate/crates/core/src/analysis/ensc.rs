use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ConceptEmbedding;
use crate::solver::{ActiveSetSolver, ElasticNetParams};
use crate::{Error, Real, Result};

/// Affinity entries below this value are dropped.
pub const AFFINITY_DROP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnscParams {
    /// Sparsity balance of the self-expression penalty.
    pub tau_c: f64,
    /// Inverse regularisation strength; the solver runs with `alpha = 1/gamma`.
    pub gamma: f64,
    pub num_clusters: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EnscParams {
    fn default() -> Self {
        Self {
            tau_c: 1.0,
            gamma: 100.0,
            num_clusters: 200,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl EnscParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.num_clusters == 0 {
            return Err(Error::InvalidParams("num_clusters must be positive".into()));
        }
        self.solver_params::<f64>().validate()
    }

    pub fn solver_params<T: Real>(&self) -> ElasticNetParams<T> {
        ElasticNetParams::new(T::lit(1.0 / self.gamma), T::lit(self.tau_c))
            .with_tol(T::lit(self.tol))
            .with_max_iter(self.max_iter)
    }
}

/// Symmetric sparse affinity with zero diagonal, stored as sorted triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T: Real> {
    pub n: usize,
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Real> AffinityMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .map(|k| self.entries[k].2)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            a[(i, j)] = v;
        }
        a
    }

    /// Builds from a dense matrix, keeping off-diagonal entries at or above the drop threshold.
    pub fn from_dense(a: &DMatrix<T>) -> Self {
        let n = a.nrows();
        let drop = T::lit(AFFINITY_DROP);
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && a[(i, j)] >= drop {
                    entries.push((i, j, a[(i, j)]));
                }
            }
        }
        Self { n, entries }
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|&(i, j, v)| self.get(j, i) == v)
    }

    pub fn degrees(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for &(i, _, v) in &self.entries {
            d[i] += v;
        }
        d
    }
}

/// A point whose self-expression did not meet the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnscFailure {
    pub point: usize,
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct EnscOutput<T: Real> {
    pub affinity: AffinityMatrix<T>,
    /// Column `i` holds the self-expression code of point `i`.
    pub codes: Vec<(Vec<usize>, Vec<T>)>,
    pub failures: Vec<EnscFailure>,
}

pub fn ensc_affinity<T: Real>(emb: &ConceptEmbedding<T>, params: &EnscParams) -> Result<EnscOutput<T>> {
    ensc_affinity_points(&emb.vectors, params)
}

/// Expresses every column of `points` as an elastic-net combination of the
/// other columns, then symmetrises: `A = (|C| + |C|ᵀ) / 2`.
pub fn ensc_affinity_points<T: Real>(points: &DMatrix<T>, params: &EnscParams) -> Result<EnscOutput<T>> {
    params.validate()?;
    let n = points.ncols();
    if n < 2 {
        return Err(Error::InvalidData("self-expression needs at least 2 points".into()));
    }
    let sp = params.solver_params::<T>();
    let results: Vec<Result<_>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x: DVector<T> = points.column(i).into_owned();
            ActiveSetSolver::new(sp).exclude(i).solve(&x, points)
        })
        .collect();

    let half = T::lit(0.5);
    let mut acc: BTreeMap<(usize, usize), T> = BTreeMap::new();
    let mut codes = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        let code = res?;
        if !code.converged {
            failures.push(EnscFailure {
                point: i,
                kkt_residual: code.kkt_residual.as_f64(),
                iterations: code.iterations,
            });
        }
        for (&j, &v) in code.indices.iter().zip(&code.values) {
            if j == i {
                continue;
            }
            let w = v.abs() * half;
            *acc.entry((i, j)).or_insert_with(T::zero) += w;
            *acc.entry((j, i)).or_insert_with(T::zero) += w;
        }
        codes.push((code.indices, code.values));
    }
    let drop = T::lit(AFFINITY_DROP);
    let entries = acc
        .into_iter()
        .filter(|&(_, v)| v >= drop)
        .map(|((i, j), v)| (i, j, v))
        .collect();
    Ok(EnscOutput {
        affinity: AffinityMatrix { n, entries },
        codes,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affinity_is_symmetric_with_zero_diagonal() {
        let pts = DMatrix::<f64>::from_fn(4, 9, |i, j| ((i * 3 + j * 7) as f64).sin());
        let pts = DMatrix::from_columns(&pts.column_iter().map(|c| c.normalize()).collect::<Vec<_>>());
        let out = ensc_affinity_points(&pts, &EnscParams { num_clusters: 2, ..Default::default() }).unwrap();
        assert!(out.affinity.is_symmetric());
        for i in 0..9 {
            assert_eq!(out.affinity.get(i, i), 0.0);
        }
        assert!(out.affinity.entries.iter().all(|e| e.2 >= AFFINITY_DROP));
        assert!(out.failures.is_empty(), "{:?}", out.failures);
    }
}
