//! Elastic-net sparse coding.
//!
//! Solves
//!
//! ```text
//! min_c  ½‖z − D c‖² + α (τ ‖c‖₁ + (1 − τ) ½ ‖c‖²)
//! ```
//!
//! for a dictionary `D` (`d × n`, one atom per column). [`solve_elastic_net`]
//! is the production active-set solver; [`oracle_solve`] is an independent
//! accelerated proximal-gradient reference for tests; [`kkt_residual`] is the
//! optimality certificate both are judged by.

mod active_set;
mod oracle;

use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::scalar::{all_finite, sign};
use crate::{Error, Real, Result};

pub use active_set::{solve_elastic_net, ActiveSetSolver};
pub use oracle::{oracle_solve, oracle_solve_with, OracleOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ElasticNetParams<T: Real> {
    /// Overall regularization weight α > 0.
    pub alpha: T,
    /// ℓ1 share τ ∈ [0, 1]; τ = 1 is the lasso, τ = 0 ridge.
    pub tau: T,
    /// Budget of coordinate-descent sweeps.
    pub max_iter: usize,
    /// KKT tolerance.
    pub tol: T,
}

impl<T: Real> Default for ElasticNetParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.05),
            tau: T::lit(0.95),
            max_iter: 10_000,
            tol: T::lit(1e-6),
        }
    }
}

impl<T: Real> ElasticNetParams<T> {
    pub fn new(alpha: T, tau: T) -> Self {
        Self {
            alpha,
            tau,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) || !self.alpha.is_finite_value() {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.tau >= T::zero() && self.tau <= T::one()) {
            return Err(Error::InvalidParams(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be positive".into()));
        }
        Ok(())
    }

    /// ℓ1 weight `ατ`.
    #[inline]
    pub fn l1(&self) -> T {
        self.alpha * self.tau
    }

    /// ℓ2 weight `α(1 − τ)`.
    #[inline]
    pub fn l2(&self) -> T {
        self.alpha * (T::one() - self.tau)
    }
}

/// Result of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode<T: Real> {
    /// Number of atoms in the dictionary the code refers to.
    pub n: usize,
    /// Support, ascending.
    pub indices: Vec<usize>,
    /// Nonzero coefficients aligned with `indices`.
    pub values: Vec<T>,
    /// `z − D c` as computed at the end of the solve.
    pub residual: DVector<T>,
    pub objective: T,
    pub kkt_residual: T,
    /// Coordinate-descent sweeps (active set) or gradient steps (oracle).
    pub iterations: usize,
    pub converged: bool,
    pub elapsed: Duration,
}

impl<T: Real> SparseCode<T> {
    pub fn support_size(&self) -> usize {
        self.indices.len()
    }

    pub fn get(&self, j: usize) -> T {
        match self.indices.binary_search(&j) {
            Ok(k) => self.values[k],
            Err(_) => T::zero(),
        }
    }

    pub fn dense(&self) -> DVector<T> {
        let mut c = DVector::zeros(self.n);
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            c[j] = v;
        }
        c
    }

    pub fn l1_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc + v.abs())
    }

    /// Converts a non-converged code into [`Error::NotConverged`].
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                kkt_residual: self.kkt_residual.as_f64(),
            })
        }
    }

    /// Builds a code from a dense vector, computing residual, objective and
    /// KKT residual from scratch.
    pub(crate) fn from_dense(
        z: &DVector<T>,
        dict: &DMatrix<T>,
        c: &DVector<T>,
        params: &ElasticNetParams<T>,
        iterations: usize,
        converged: bool,
        elapsed: Duration,
    ) -> Self {
        let (indices, values): (Vec<usize>, Vec<T>) = c
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != T::zero())
            .map(|(j, &v)| (j, v))
            .unzip();
        let residual = z - dict * c;
        let objective = objective_from_residual(&residual, &values, params);
        let kkt = kkt_from_residual(dict, c, &residual, params, None);
        Self {
            n: dict.ncols(),
            indices,
            values,
            residual,
            objective,
            kkt_residual: kkt,
            iterations,
            converged: converged && kkt <= params.tol,
            elapsed,
        }
    }
}

pub(crate) fn check_inputs<T: Real>(z: &DVector<T>, dict: &DMatrix<T>) -> Result<()> {
    if z.len() != dict.nrows() {
        return Err(Error::dims("activation vs dictionary dimension", dict.nrows(), z.len()));
    }
    if !all_finite(z.iter()) {
        return Err(Error::NonFiniteInput("activation"));
    }
    if !all_finite(dict.iter()) {
        return Err(Error::NonFiniteInput("dictionary"));
    }
    Ok(())
}

pub(crate) fn objective_from_residual<T: Real>(
    residual: &DVector<T>,
    values: &[T],
    params: &ElasticNetParams<T>,
) -> T {
    let half = T::lit(0.5);
    let l1: T = values.iter().fold(T::zero(), |acc, v| acc + v.abs());
    let l2: T = values.iter().fold(T::zero(), |acc, &v| acc + v * v);
    half * residual.norm_squared() + params.l1() * l1 + params.l2() * half * l2
}

/// Per-coordinate KKT violation given the correlation `g = D_jᵀ r`.
#[inline]
pub(crate) fn coordinate_violation<T: Real>(g: T, c: T, l1: T, l2: T) -> T {
    if c != T::zero() {
        (g - l1 * sign(c) - l2 * c).abs()
    } else {
        let excess = g.abs() - l1;
        if excess > T::zero() {
            excess
        } else {
            T::zero()
        }
    }
}

pub(crate) fn kkt_from_residual<T: Real>(
    dict: &DMatrix<T>,
    c: &DVector<T>,
    residual: &DVector<T>,
    params: &ElasticNetParams<T>,
    excluded: Option<usize>,
) -> T {
    let g = dict.tr_mul(residual);
    let (l1, l2) = (params.l1(), params.l2());
    let mut worst = T::zero();
    for j in 0..dict.ncols() {
        if Some(j) == excluded {
            continue;
        }
        let v = coordinate_violation(g[j], c[j], l1, l2);
        if v > worst {
            worst = v;
        }
    }
    worst
}

/// Elastic-net objective of a dense coefficient vector.
pub fn objective<T: Real>(z: &DVector<T>, dict: &DMatrix<T>, c: &DVector<T>, params: &ElasticNetParams<T>) -> T {
    let residual = z - dict * c;
    objective_from_residual(&residual, c.as_slice(), params)
}

/// Largest violation of the elastic-net optimality conditions:
/// for `c_j ≠ 0`, `D_jᵀ(z − Dc) = ατ·sign(c_j) + α(1−τ)c_j`;
/// for `c_j = 0`, `|D_jᵀ(z − Dc)| ≤ ατ`.
pub fn kkt_residual<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    c: &DVector<T>,
    params: &ElasticNetParams<T>,
) -> Result<T> {
    check_inputs(z, dict)?;
    if c.len() != dict.ncols() {
        return Err(Error::dims("coefficient length", dict.ncols(), c.len()));
    }
    if !all_finite(c.iter()) {
        return Err(Error::NonFiniteInput("coefficients"));
    }
    let residual = z - dict * c;
    Ok(kkt_from_residual(dict, c, &residual, params, None))
}
