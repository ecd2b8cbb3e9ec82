//! Reference solver: accelerated proximal gradient (FISTA with gradient-based
//! restart) with fixed step `1/‖D‖₂²`. Slow but simple enough to trust; meant
//! for small problems in tests.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{check_inputs, kkt_from_residual, ElasticNetParams, SparseCode};
use crate::linalg::spectral_norm;
use crate::scalar::soft_threshold;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub max_iter: usize,
    /// Target KKT residual.
    pub stationarity: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iter: 2_000_000,
            stationarity: 1e-12,
        }
    }
}

pub fn oracle_solve<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    params: &ElasticNetParams<T>,
) -> Result<SparseCode<T>> {
    oracle_solve_with(z, dict, params, &OracleOptions::default())
}

pub fn oracle_solve_with<T: Real>(
    z: &DVector<T>,
    dict: &DMatrix<T>,
    params: &ElasticNetParams<T>,
    opts: &OracleOptions,
) -> Result<SparseCode<T>> {
    let start = Instant::now();
    params.validate()?;
    check_inputs(z, dict)?;
    let n = dict.ncols();
    let target = T::lit(opts.stationarity);
    let lipschitz = {
        let s = spectral_norm(dict);
        s * s
    };
    let mut c = DVector::<T>::zeros(n);
    if lipschitz == T::zero() {
        return Ok(SparseCode::from_dense(z, dict, &c, params, 0, true, start.elapsed()));
    }
    let step = T::one() / lipschitz;
    let (l1, l2) = (params.l1(), params.l2());
    let shrink = T::one() / (T::one() + step * l2);

    let mut y = c.clone();
    let mut t = T::one();
    for it in 1..=opts.max_iter {
        let grad = -dict.tr_mul(&(z - dict * &y));
        let mut next = &y - grad * step;
        next.apply(|x| *x = soft_threshold(*x, step * l1) * shrink);

        // restart momentum when the step points against the last update
        let restart = (&y - &next).dot(&(&next - &c)) > T::zero();
        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * T::lit(0.5);
        if restart {
            y = next.clone();
            t = T::one();
        } else {
            y = &next + (&next - &c) * ((t - T::one()) / t_next);
            t = t_next;
        }
        c = next;

        if it % 10 == 0 {
            let r = z - dict * &c;
            if kkt_from_residual(dict, &c, &r, params, None) <= target {
                return Ok(SparseCode::from_dense(z, dict, &c, params, it, true, start.elapsed()));
            }
        }
    }
    let r = z - dict * &c;
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        kkt_residual: kkt_from_residual(dict, &c, &r, params, None).as_f64(),
    })
}
