use nalgebra::{DMatrix, DVector};

use super::{InterventionPlan, InterventionResult, Method};
use crate::solver::{solve_elastic_net, ElasticNetParams, SparseCode};
use crate::{Error, Real, Result};

/// How the coefficients of the analysis step are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decomposer<T: Real> {
    /// Elastic-net sparse coding (the production choice).
    ElasticNet(ElasticNetParams<T>),
    /// Unregularized least squares; requires full column rank.
    LeastSquares,
    /// `min ‖z − Dc‖² + λ‖c‖²`; requires `DᵀD + λI` positive definite.
    Ridge(T),
}

/// Dense coefficient vector of `z` over `dict`.
pub fn decompose<T: Real>(z: &DVector<T>, dict: &DMatrix<T>, how: &Decomposer<T>) -> Result<DVector<T>> {
    if z.len() != dict.nrows() {
        return Err(Error::dims("activation vs dictionary dimension", dict.nrows(), z.len()));
    }
    match how {
        Decomposer::ElasticNet(params) => Ok(solve_elastic_net(z, dict, params)?.dense()),
        Decomposer::LeastSquares => {
            let k = dict.ncols();
            let rank = dict.clone().svd(false, false).rank(T::lit(1e-10) * crate::linalg::spectral_norm(dict));
            if rank < k {
                return Err(Error::RankDeficient { rank, required: k });
            }
            normal_equations(dict, z, T::zero()).ok_or(Error::RankDeficient { rank, required: k })
        }
        Decomposer::Ridge(lambda) => normal_equations(dict, z, *lambda).ok_or_else(|| {
            Error::InvalidParams(format!("ridge system is not positive definite for lambda = {lambda}"))
        }),
    }
}

fn normal_equations<T: Real>(dict: &DMatrix<T>, z: &DVector<T>, lambda: T) -> Option<DVector<T>> {
    let mut gram = dict.tr_mul(dict);
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = dict.tr_mul(z);
    gram.cholesky().map(|ch| ch.solve(&rhs))
}

/// `z − Σ_{i∈I} c_i D_i`, plus the removed vector.
pub fn remove_concepts<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    undesirable: &[usize],
    coefficient: impl Fn(usize) -> T,
) -> (DVector<T>, DVector<T>) {
    let mut removed = DVector::zeros(z.len());
    for &i in undesirable {
        let c = coefficient(i);
        if c != T::zero() {
            removed.axpy(c, &dict.column(i), T::one());
        }
    }
    (z - &removed, removed)
}

/// Oblique projection with an arbitrary decomposer; returns `z_ctrl`.
pub fn oblique_project_with<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    undesirable: &[usize],
    how: &Decomposer<T>,
) -> Result<DVector<T>> {
    if let Some(&bad) = undesirable.iter().find(|&&i| i >= dict.ncols()) {
        return Err(Error::InvalidParams(format!("undesirable concept {bad} out of range {}", dict.ncols())));
    }
    let c = decompose(z, dict, how)?;
    Ok(remove_concepts(z, dict, undesirable, |i| c[i]).0)
}

pub(crate) fn synthesize<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    undesirable: &[usize],
    code: SparseCode<T>,
    solver_iterations: usize,
) -> InterventionResult<T> {
    let (z_ctrl, removed) = remove_concepts(z, dict, undesirable, |i| code.get(i));
    let controlled = code
        .indices
        .iter()
        .zip(&code.values)
        .filter(|(j, _)| undesirable.binary_search(j).is_err())
        .map(|(&j, &v)| (j, v))
        .collect();
    InterventionResult {
        z_ctrl,
        converged: code.converged,
        code: Some(code),
        controlled: Some(controlled),
        removed_energy: removed.norm(),
        solver_iterations,
        rank_deficient: false,
    }
}

/// Decomposes `z` by elastic-net sparse coding, zeroes the undesirable
/// coefficients and re-synthesizes. A non-converged decomposition is still
/// applied and reported through `converged`.
pub fn oblique_project<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    plan: &InterventionPlan<T>,
) -> Result<InterventionResult<T>> {
    if plan.method != Method::ObliqProj {
        return Err(Error::InvalidParams(format!("plan method is {:?}, not ObliqProj", plan.method)));
    }
    plan.validate(dict.ncols())?;
    let code = solve_elastic_net(z, dict, &plan.en_params)?;
    let iterations = code.iterations;
    Ok(synthesize(z, dict, &plan.undesirable, code, iterations))
}
