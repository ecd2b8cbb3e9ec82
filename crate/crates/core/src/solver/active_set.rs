//! Active-set elastic-net solver.
//!
//! The working set starts from the warm-start support (or empty). Each outer
//! step computes the full correlation `Dᵀr`, stops if the KKT certificate holds,
//! and otherwise replaces the working set by the current support plus the most
//! violating inactive atoms. The restricted problem is solved by coordinate
//! descent on the working-set Gram matrix. Only the working columns are ever
//! touched by the inner loop, so the per-step cost is one `d × n` product plus
//! `O(|W|² d)` for the Gram.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{check_inputs, coordinate_violation, objective_from_residual};
use super::{ElasticNetParams, SparseCode};
use crate::linalg::select_columns;
use crate::scalar::{sign, soft_threshold};
use crate::{Error, Real, Result};

/// Minimum number of violators admitted per outer step.
const MIN_ADMIT: usize = 16;

const POLISH_EVERY: usize = 10;

#[derive(Debug, Clone)]
pub struct ActiveSetSolver<'a, T: Real> {
    params: ElasticNetParams<T>,
    warm: Option<(&'a [usize], &'a [T])>,
    excluded: Option<usize>,
}

impl<'a, T: Real> ActiveSetSolver<'a, T> {
    pub fn new(params: ElasticNetParams<T>) -> Self {
        Self {
            params,
            warm: None,
            excluded: None,
        }
    }

    /// Starts from a previous solution. Only affects speed, not the optimum.
    pub fn warm_start(mut self, code: &'a SparseCode<T>) -> Self {
        self.warm = Some((&code.indices, &code.values));
        self
    }

    pub fn warm_start_from(mut self, indices: &'a [usize], values: &'a [T]) -> Self {
        self.warm = Some((indices, values));
        self
    }

    /// Forces coefficient `j` to zero (used for self-expression, where a point
    /// may not represent itself). The KKT certificate skips `j`.
    pub fn exclude(mut self, j: usize) -> Self {
        self.excluded = Some(j);
        self
    }

    pub fn params(&self) -> &ElasticNetParams<T> {
        &self.params
    }

    pub fn solve(&self, z: &DVector<T>, dict: &DMatrix<T>) -> Result<SparseCode<T>> {
        let start = Instant::now();
        let params = &self.params;
        params.validate()?;
        check_inputs(z, dict)?;
        let n = dict.ncols();
        if let Some(j) = self.excluded {
            if j >= n {
                return Err(Error::InvalidParams(format!("excluded atom {j} out of range {n}")));
            }
        }
        let (l1, l2, tol) = (params.l1(), params.l2(), params.tol);
        let inner_tol = tol * T::lit(0.1);

        let mut c = DVector::<T>::zeros(n);
        if let Some((idx, vals)) = self.warm {
            for (&j, &v) in idx.iter().zip(vals) {
                if j < n && Some(j) != self.excluded && v.is_finite_value() {
                    c[j] = v;
                }
            }
        }

        let mut iterations = 0usize;
        let mut converged = false;
        let (residual, kkt) = loop {
            let residual = residual_of(z, dict, &c);
            let g = dict.tr_mul(&residual);
            let mut worst = T::zero();
            let mut violators: Vec<(T, usize)> = Vec::new();
            for j in 0..n {
                if Some(j) == self.excluded {
                    continue;
                }
                let v = coordinate_violation(g[j], c[j], l1, l2);
                if v > worst {
                    worst = v;
                }
                if c[j] == T::zero() && v > tol {
                    violators.push((v, j));
                }
            }
            if worst <= tol {
                converged = true;
                break (residual, worst);
            }
            if iterations >= params.max_iter {
                break (residual, worst);
            }

            let mut working: Vec<usize> = (0..n).filter(|&j| c[j] != T::zero()).collect();
            let admit = MIN_ADMIT.max(working.len());
            violators.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
            working.extend(violators.iter().take(admit).map(|&(_, j)| j));
            working.sort_unstable();

            let sub = select_columns(dict, &working);
            let gram = sub.tr_mul(&sub);
            let mut gw = DVector::from_iterator(working.len(), working.iter().map(|&j| g[j]));
            let mut cw = DVector::from_iterator(working.len(), working.iter().map(|&j| c[j]));
            let w = working.len();
            while iterations < params.max_iter {
                iterations += 1;
                for k in 0..w {
                    let gkk = gram[(k, k)];
                    let denom = gkk + l2;
                    if denom <= T::zero() {
                        continue;
                    }
                    let old = cw[k];
                    let new = soft_threshold(gw[k] + gkk * old, l1) / denom;
                    if new != old {
                        cw[k] = new;
                        gw.axpy(old - new, &gram.column(k), T::one());
                    }
                }
                let mut inner = max_violation(&gw, &cw, l1, l2);
                if inner > inner_tol && iterations.is_multiple_of(POLISH_EVERY) {
                    if let Some((c2, g2)) = support_solve(&gram, &gw, &cw, l1, l2) {
                        let dz = &gw + &gram * &cw;
                        let before = restricted_objective(&gram, &dz, &cw, l1, l2);
                        let after = restricted_objective(&gram, &dz, &c2, l1, l2);
                        if after <= before {
                            let v2 = max_violation(&g2, &c2, l1, l2);
                            cw = c2;
                            gw = g2;
                            inner = v2;
                        }
                    }
                }
                if inner <= inner_tol {
                    break;
                }
            }
            for (k, &j) in working.iter().enumerate() {
                c[j] = cw[k];
            }
        };
        let (indices, values): (Vec<usize>, Vec<T>) = c
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != T::zero())
            .map(|(j, &v)| (j, v))
            .unzip();
        let objective = objective_from_residual(&residual, &values, params);
        Ok(SparseCode {
            n,
            indices,
            values,
            residual,
            objective,
            kkt_residual: kkt,
            iterations,
            converged,
            elapsed: start.elapsed(),
        })
    }
}

fn restricted_objective<T: Real>(gram: &DMatrix<T>, dz: &DVector<T>, c: &DVector<T>, l1: T, l2: T) -> T {
    let half = T::lit(0.5);
    let l1_norm = c.iter().fold(T::zero(), |a, &v| a + v.abs());
    half * c.dot(&(gram * c)) - dz.dot(c) + l1 * l1_norm + half * l2 * c.norm_squared()
}

fn max_violation<T: Real>(g: &DVector<T>, c: &DVector<T>, l1: T, l2: T) -> T {
    g.iter()
        .zip(c.iter())
        .map(|(&g, &c)| coordinate_violation(g, c, l1, l2))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// Moves toward the exact minimiser of the smooth problem on the current
/// support with the current signs held fixed, stopping where the first
/// coordinate crosses zero (that coordinate is set to zero). Coordinate
/// descent alone crawls when the working columns are nearly dependent.
fn support_solve<T: Real>(
    gram: &DMatrix<T>,
    gw: &DVector<T>,
    cw: &DVector<T>,
    l1: T,
    l2: T,
) -> Option<(DVector<T>, DVector<T>)> {
    let support: Vec<usize> = (0..cw.len()).filter(|&k| cw[k] != T::zero()).collect();
    if support.is_empty() {
        return None;
    }
    let dz = gw + gram * cw;
    let s = support.len();
    let mut a = DMatrix::from_fn(s, s, |i, j| gram[(support[i], support[j])]);
    for i in 0..s {
        a[(i, i)] += l2;
    }
    let signs = DVector::from_fn(s, |i, _| sign(cw[support[i]]));
    let current = DVector::from_fn(s, |i, _| cw[support[i]]);
    let scale = a.diagonal().amax();
    let svd = a.svd(true, true);
    let cutoff = scale * T::eps() * T::lit(s as f64 * 10.0);

    // target point and whether the whole segment toward it may be taken
    let (target, full_step) = match svd.singular_values.imin() {
        k if svd.singular_values[k] <= cutoff => {
            // Dependent columns: the smooth part is flat along the null
            // direction while the l1 term is linear, so slide along it
            // (downhill in the l1 term) until a coefficient reaches zero.
            let v = svd.v_t.as_ref()?.row(k).transpose();
            let dir = if signs.dot(&v) > T::zero() { -v } else { v };
            (&current + dir, false)
        }
        _ => {
            let b = DVector::from_fn(s, |i, _| dz[support[i]] - l1 * signs[i]);
            (svd.solve(&b, cutoff).ok()?, true)
        }
    };

    let mut step = if full_step { T::one() } else { T::max_value()? };
    let mut blocking = None;
    for (i, &k) in support.iter().enumerate() {
        let (from, to) = (current[i], target[i]);
        if sign(to) != sign(from) || (!full_step && (to - from) * from < T::zero()) {
            let t = from / (from - to);
            if t < step {
                step = t;
                blocking = Some(k);
            }
        }
    }
    if blocking.is_none() && !full_step {
        return None;
    }
    let x = target;
    let mut c2 = cw.clone();
    for (i, &k) in support.iter().enumerate() {
        c2[k] = cw[k] + step * (x[i] - cw[k]);
    }
    if let Some(k) = blocking {
        c2[k] = T::zero();
    }
    let g2 = dz - gram * &c2;
    Some((c2, g2))
}

fn residual_of<T: Real>(z: &DVector<T>, dict: &DMatrix<T>, c: &DVector<T>) -> DVector<T> {
    let mut r = z.clone();
    for (j, &v) in c.iter().enumerate() {
        if v != T::zero() {
            r.axpy(-v, &dict.column(j), T::one());
        }
    }
    r
}

/// Decomposes `z` over the atoms of `dict`. Non-convergence is reported
/// through [`SparseCode::converged`], not as an error.
pub fn solve_elastic_net<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    params: &ElasticNetParams<T>,
) -> Result<SparseCode<T>> {
    ActiveSetSolver::new(*params).solve(z, dict)
}
