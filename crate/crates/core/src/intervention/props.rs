//! Executable forms of the two reductions of oblique projection:
//! with a constant regularizer over a full-column-rank `D_I` it is orthogonal
//! projection; with a single atom and a ridge penalty it is vector addition.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::baselines::{ortho_project, vec_add};
use super::oblique::{decompose, oblique_project_with, Decomposer};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Report {
    /// `‖(z − D_I c*) − Π_range(D_I)^⊥ z‖`.
    pub discrepancy: f64,
    /// Discrepancy divided by `‖z‖` (0 when `z = 0`).
    pub relative_discrepancy: f64,
    pub passed: bool,
}

pub const PROP1_RELATIVE_TOL: f64 = 1e-6;
pub const PROP2_TOL: f64 = 1e-10;

/// Compares least-squares oblique projection over `d_i` with orthogonal
/// projection onto the complement of its range.
pub fn check_prop1<T: Real>(z: &DVector<T>, d_i: &DMatrix<T>) -> Result<Prop1Report> {
    let all: Vec<usize> = (0..d_i.ncols()).collect();
    let oblique = oblique_project_with(z, d_i, &all, &Decomposer::LeastSquares)?;
    let orth = ortho_project(z, d_i)?;
    let discrepancy = (&oblique - &orth.z_out).norm().as_f64();
    let zn = z.norm().as_f64();
    let relative = if zn > 0.0 { discrepancy / zn } else { discrepancy };
    Ok(Prop1Report {
        discrepancy,
        relative_discrepancy: relative,
        passed: discrepancy <= PROP1_RELATIVE_TOL * zn.max(f64::MIN_POSITIVE),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop2Report {
    /// Ridge solution computed by the decomposer.
    pub coefficient: f64,
    /// `⟨z, v⟩ / (λ + 1)`.
    pub closed_form: f64,
    pub coefficient_error: f64,
    /// `η_λ = |⟨z, v⟩| / (λ + 1)`.
    pub eta: f64,
    /// `‖(z − c* v) − vec_add(z, v₊, η_λ)‖`.
    pub vecadd_error: f64,
    pub passed: bool,
}

/// Compares single-atom ridge oblique projection with vector addition along
/// `v₊ = sign(⟨z, v⟩)·v` at strength `η_λ`.
pub fn check_prop2<T: Real>(z: &DVector<T>, v: &DVector<T>, lambda: T) -> Result<Prop2Report> {
    if !(lambda > -T::one()) {
        return Err(Error::InvalidParams(format!("lambda must exceed -1, got {lambda}")));
    }
    let dict = DMatrix::from_columns(std::slice::from_ref(v));
    let c = decompose(z, &dict, &Decomposer::Ridge(lambda))?[0];
    let inner = z.dot(v);
    let closed = inner / (lambda + T::one());
    let eta = inner.abs() / (lambda + T::one());
    let v_plus = if inner > T::zero() { v.clone() } else { -v };
    let oblique = oblique_project_with(z, &dict, &[0], &Decomposer::Ridge(lambda))?;
    let added = vec_add(z, &v_plus, eta)?;
    let coefficient_error = (c - closed).abs().as_f64();
    let vecadd_error = (&oblique - &added).norm().as_f64();
    Ok(Prop2Report {
        coefficient: c.as_f64(),
        closed_form: closed.as_f64(),
        coefficient_error,
        eta: eta.as_f64(),
        vecadd_error,
        passed: coefficient_error <= PROP2_TOL && vecadd_error <= PROP2_TOL,
    })
}
