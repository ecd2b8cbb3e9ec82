use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AffinityMatrix;
use crate::linalg::sym_eigen_desc;
use crate::rng::SeedTree;
use crate::{Error, Real, Result};

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
    /// Connected components of the affinity graph.
    pub num_components: usize,
    /// Set when the graph has more components than requested clusters.
    pub disconnected_warning: bool,
}

/// Labels of the connected components of the affinity graph, numbered by
/// first appearance.
pub fn connected_components<T: Real>(a: &AffinityMatrix<T>) -> (usize, Vec<usize>) {
    let mut adj = vec![Vec::new(); a.n];
    for &(i, j, _) in &a.entries {
        adj[i].push(j);
    }
    let mut label = vec![usize::MAX; a.n];
    let mut count = 0;
    for s in 0..a.n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = count;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (count, label)
}

/// Normalised spectral clustering: the top `k` eigenvectors of
/// `D^{-1/2} A D^{-1/2}`, row-normalised, then seeded k-means.
pub fn spectral_cluster<T: Real>(a: &AffinityMatrix<T>, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = a.n;
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!("cluster count {k} must lie in 1..={n}")));
    }
    let (num_components, _) = connected_components(a);
    let disconnected_warning = num_components > k;
    if k == n {
        return Ok(ClusterAssignment {
            labels: (0..n).collect(),
            num_clusters: k,
            num_components,
            disconnected_warning,
        });
    }
    let deg = a.degrees();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|d| if d.as_f64() > 0.0 { 1.0 / d.as_f64().sqrt() } else { 0.0 })
        .collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for &(i, j, v) in &a.entries {
        m[(i, j)] = v.as_f64() * inv_sqrt[i] * inv_sqrt[j];
    }
    // isolated points act as their own component
    for i in 0..n {
        if inv_sqrt[i] == 0.0 {
            m[(i, i)] = 1.0;
        }
    }
    let (_, vecs) = sym_eigen_desc(m);
    let mut emb = vecs.columns(0, k).transpose();
    for mut col in emb.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let labels = kmeans(&emb, k, seed)?;
    Ok(ClusterAssignment {
        labels,
        num_clusters: k,
        num_components,
        disconnected_warning,
    })
}

/// k-means++ seeding followed by Lloyd iterations, best of several restarts.
/// Points are the columns of `points`. Labels are renumbered by first appearance.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.ncols();
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!("cluster count {k} must lie in 1..={n}")));
    }
    let tree = SeedTree::new(seed).child("kmeans");
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..KMEANS_RESTARTS {
        let mut rng = tree.index(r as u64).rng();
        let (inertia, labels) = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    Ok(relabel(&best.expect("at least one restart").1))
}

fn sq_dist(points: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    (points.column(i) - c.column(j)).norm_squared()
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut impl Rng) -> (f64, Vec<usize>) {
    let (dim, n) = points.shape();
    let mut centers = DMatrix::<f64>::zeros(dim, k);
    centers.set_column(0, &points.column(rng.random_range(0..n)));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.set_column(c, &points.column(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centers, c));
        }
    }

    let mut labels = vec![0usize; n];
    for iter in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for i in 0..n {
            let best = (0..k)
                .map(|c| (sq_dist(points, i, &centers, c), c))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|p| p.1)
                .unwrap_or(0);
            if best != labels[i] || iter == 0 {
                changed |= best != labels[i];
                labels[i] = best;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut sums = DMatrix::<f64>::zeros(dim, k);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let mut col = sums.column_mut(labels[i]);
            col += points.column(i);
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers.set_column(c, &(sums.column(c) / counts[c] as f64));
            } else {
                // reseed an empty cluster at the worst-served point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points, a, &centers, labels[a]).total_cmp(&sq_dist(points, b, &centers, labels[b]))
                    })
                    .unwrap_or(0);
                centers.set_column(c, &points.column(far));
                labels[far] = c;
            }
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points, i, &centers, labels[i])).sum();
    (inertia, labels)
}

fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Best-match accuracy between predicted and true labels (Hungarian assignment).
pub fn clustering_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Ok(1.0);
    }
    let p = predicted.iter().max().unwrap() + 1;
    let t = truth.iter().max().unwrap() + 1;
    let size = p.max(t);
    let mut counts = vec![vec![0i64; size]; size];
    for (&a, &b) in predicted.iter().zip(truth) {
        counts[a][b] += 1;
    }
    let max = counts.iter().flatten().copied().max().unwrap_or(0);
    let cost: Vec<Vec<i64>> = counts.iter().map(|r| r.iter().map(|&c| max - c).collect()).collect();
    let assign = hungarian(&cost);
    let matched: i64 = assign.iter().enumerate().map(|(i, &j)| counts[i][j]).sum();
    Ok(matched as f64 / predicted.len() as f64)
}

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(sizes: &[usize]) -> AffinityMatrix<f64> {
        let n: usize = sizes.iter().sum();
        let mut a = DMatrix::zeros(n, n);
        let mut start = 0;
        for &s in sizes {
            for i in start..start + s {
                for j in start..start + s {
                    if i != j {
                        a[(i, j)] = 1.0;
                    }
                }
            }
            start += s;
        }
        AffinityMatrix::from_dense(&a)
    }

    #[test]
    fn block_diagonal_is_recovered() {
        let a = blocks(&[4, 5, 3]);
        let out = spectral_cluster(&a, 3, 7).unwrap();
        let truth: Vec<usize> = [0; 4].iter().chain(&[1; 5]).chain(&[2; 3]).copied().collect();
        assert_eq!(clustering_accuracy(&out.labels, &truth).unwrap(), 1.0);
        assert_eq!(out.num_components, 3);
        assert!(!out.disconnected_warning);
    }

    #[test]
    fn warns_when_components_exceed_k() {
        let out = spectral_cluster(&blocks(&[3, 3, 3]), 2, 1).unwrap();
        assert!(out.disconnected_warning);
    }

    #[test]
    fn k_equal_n_is_identity() {
        let out = spectral_cluster(&blocks(&[2, 2]), 4, 0).unwrap();
        assert_eq!(out.labels, vec![0, 1, 2, 3]);
        assert!(spectral_cluster(&blocks(&[2]), 3, 0).is_err());
    }

    #[test]
    fn accuracy_is_permutation_invariant() {
        assert_eq!(clustering_accuracy(&[1, 1, 0, 0, 2], &[0, 0, 2, 2, 1]).unwrap(), 1.0);
        assert_eq!(clustering_accuracy(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert!(clustering_accuracy(&[0], &[0, 1]).is_err());
    }
}
