//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::Real;

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Column `k` of the returned matrix pairs with value `k`.
pub fn sym_eigen_desc<T: Real>(m: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Largest eigenpair of a symmetric matrix.
pub fn top_eigenpair<T: Real>(m: DMatrix<T>) -> (T, DVector<T>) {
    let (values, vectors) = sym_eigen_desc(m);
    (values[0], vectors.column(0).into_owned())
}

/// Flips `v` so that its largest-magnitude coordinate is positive (first such
/// coordinate on ties).
pub fn canonicalize_sign<T: Real>(v: &mut DVector<T>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < T::zero() {
        v.neg_mut();
    }
}

/// Orthonormal basis of the column span, by modified Gram-Schmidt with one
/// re-orthogonalisation pass. A column is dropped when its remainder falls
/// below `rel_tol` times its original norm.
///
/// Returns the basis (`d × rank`) and the number of dropped columns.
pub fn orthonormal_basis<T: Real>(cols: &DMatrix<T>, rel_tol: T) -> (DMatrix<T>, usize) {
    let d = cols.nrows();
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(cols.ncols());
    let mut dropped = 0;
    for col in cols.column_iter() {
        let original = col.norm();
        if original == T::zero() {
            dropped += 1;
            continue;
        }
        let mut w = col.into_owned();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&w);
                w.axpy(-proj, q, T::one());
            }
        }
        let rem = w.norm();
        if rem <= rel_tol * original {
            dropped += 1;
            continue;
        }
        w /= rem;
        basis.push(w);
    }
    let rank = basis.len();
    let mut q = DMatrix::zeros(d, rank);
    for (j, b) in basis.iter().enumerate() {
        q.set_column(j, b);
    }
    (q, dropped)
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |acc, &s| if s > acc { s } else { acc })
}

/// Largest absolute cosine between two distinct columns.
pub fn mutual_coherence<T: Real>(m: &DMatrix<T>) -> T {
    let norms: Vec<T> = m.column_iter().map(|c| c.norm()).collect();
    let gram = m.tr_mul(m);
    let mut mu = T::zero();
    for i in 0..m.ncols() {
        for j in (i + 1)..m.ncols() {
            let denom = norms[i] * norms[j];
            if denom > T::zero() {
                let c = (gram[(i, j)] / denom).abs();
                if c > mu {
                    mu = c;
                }
            }
        }
    }
    mu
}

/// Copies the selected columns into a new matrix.
pub fn select_columns<T: Real>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(m.nrows(), idx.len());
    for (k, &j) in idx.iter().enumerate() {
        out.set_column(k, &m.column(j));
    }
    out
}
