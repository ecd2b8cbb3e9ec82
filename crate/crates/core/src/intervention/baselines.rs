use nalgebra::{DMatrix, DVector};

use crate::linalg::orthonormal_basis;
use crate::{Error, Real, Result};

/// Allowed deviation from unit norm for vector-addition directions.
pub const UNIT_TOLERANCE: f64 = 1e-5;

/// Vector addition `z − ĉ·v` for a unit direction `v`.
pub fn vec_add<T: Real>(z: &DVector<T>, v: &DVector<T>, strength: T) -> Result<DVector<T>> {
    if z.len() != v.len() {
        return Err(Error::dims("direction dimension", z.len(), v.len()));
    }
    let norm = v.norm();
    if (norm - T::one()).abs() > T::lit(UNIT_TOLERANCE) {
        return Err(Error::NonUnitDirection { norm: norm.as_f64() });
    }
    let mut out = z.clone();
    out.axpy(-strength, v, T::one());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthoProjection<T: Real> {
    pub z_out: DVector<T>,
    /// Dimension of the removed span.
    pub rank: usize,
    /// The directions were linearly dependent; projection used a basis of their span.
    pub rank_deficient: bool,
}

/// Orthogonal projection `z − Π_span(V) z` onto the complement of the span of
/// the columns of `directions`.
pub fn ortho_project<T: Real>(z: &DVector<T>, directions: &DMatrix<T>) -> Result<OrthoProjection<T>> {
    if directions.ncols() == 0 {
        return Err(Error::InvalidParams("orthogonal projection needs at least one direction".into()));
    }
    if directions.nrows() != z.len() {
        return Err(Error::dims("direction dimension", z.len(), directions.nrows()));
    }
    let (basis, dropped) = orthonormal_basis(directions, T::lit(1e-10));
    if basis.ncols() == 0 {
        return Err(Error::RankDeficient { rank: 0, required: 1 });
    }
    Ok(OrthoProjection {
        z_out: project_out(z, &basis),
        rank: basis.ncols(),
        rank_deficient: dropped > 0,
    })
}

/// `z − Q Qᵀ z` for an orthonormal basis `Q`.
pub(crate) fn project_out<T: Real>(z: &DVector<T>, basis: &DMatrix<T>) -> DVector<T> {
    let coords = basis.tr_mul(z);
    z - basis * coords
}
