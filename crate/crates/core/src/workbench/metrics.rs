use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::solver::SparseCode;
use crate::{Error, Result};

/// Coefficients with magnitude above this count as part of a support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    /// `None` when nothing was recovered.
    pub support_precision: Option<f64>,
    /// `None` when nothing was planted.
    pub support_recall: Option<f64>,
    /// RMSE over the union of planted and recovered supports.
    pub coeff_rmse: f64,
    /// Mean fraction of the planted undesirable component removed by an intervention.
    pub removed_undesirable_energy_ratio: Option<f64>,
    /// Mean solver wallclock in seconds.
    pub wallclock_per_solve: f64,
    pub samples: usize,
    pub nonconverged: usize,
}

/// Compares solved codes against planted ones, pooling support counts over
/// all samples.
pub fn eval_recovery(solved: &[SparseCode<f64>], truth: &[DVector<f64>]) -> Result<RecoveryMetrics> {
    if solved.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: solved.len(),
            right: truth.len(),
        });
    }
    let (mut tp, mut found, mut planted) = (0usize, 0usize, 0usize);
    let (mut sq, mut union) = (0.0, 0usize);
    let mut seconds = 0.0;
    for (code, t) in solved.iter().zip(truth) {
        if code.n != t.len() {
            return Err(Error::dims("recovered code", t.len(), code.n));
        }
        let c = code.dense();
        for j in 0..t.len() {
            let in_t = t[j].abs() > SUPPORT_THRESHOLD;
            let in_c = c[j].abs() > SUPPORT_THRESHOLD;
            tp += usize::from(in_t && in_c);
            found += usize::from(in_c);
            planted += usize::from(in_t);
            if in_t || in_c {
                sq += (c[j] - t[j]).powi(2);
                union += 1;
            }
        }
        seconds += code.elapsed.as_secs_f64();
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(RecoveryMetrics {
        support_precision: ratio(tp, found),
        support_recall: ratio(tp, planted),
        coeff_rmse: if union > 0 { (sq / union as f64).sqrt() } else { 0.0 },
        removed_undesirable_energy_ratio: None,
        wallclock_per_solve: if solved.is_empty() { 0.0 } else { seconds / solved.len() as f64 },
        samples: solved.len(),
        nonconverged: solved.iter().filter(|c| !c.converged).count(),
    })
}

/// How much of the planted undesirable component `u = D_I c*_I` an
/// intervention removed: `1 - ‖z_ctrl - (z - u)‖² / ‖u‖²`, clamped to `[0, 1]`.
/// `None` when `u` vanishes.
pub fn removed_energy_ratio(
    z: &DVector<f64>,
    z_ctrl: &DVector<f64>,
    dict: &DMatrix<f64>,
    truth: &DVector<f64>,
    undesirable: &[usize],
) -> Option<f64> {
    let mut u = DVector::zeros(z.len());
    for &i in undesirable {
        u.axpy(truth[i], &dict.column(i), 1.0);
    }
    let energy = u.norm_squared();
    if energy <= 0.0 {
        return None;
    }
    let miss = (z_ctrl - (z - &u)).norm_squared();
    Some((1.0 - miss / energy).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn code(c: &DVector<f64>) -> SparseCode<f64> {
        let (indices, values) = c.iter().enumerate().filter(|p| *p.1 != 0.0).map(|(j, &v)| (j, v)).unzip();
        SparseCode {
            n: c.len(),
            indices,
            values,
            residual: DVector::zeros(1),
            objective: 0.0,
            kkt_residual: 0.0,
            iterations: 1,
            converged: true,
            elapsed: Duration::from_millis(2),
        }
    }

    #[test]
    fn perfect_recovery() {
        let t = DVector::from_vec(vec![0.0, 1.0, -2.0, 0.0]);
        let m = eval_recovery(&[code(&t)], std::slice::from_ref(&t)).unwrap();
        assert_eq!(m.support_precision, Some(1.0));
        assert_eq!(m.support_recall, Some(1.0));
        assert_eq!(m.coeff_rmse, 0.0);
        assert!((m.wallclock_per_solve - 0.002).abs() < 1e-12);
    }

    #[test]
    fn empty_recovery() {
        let t = DVector::from_vec(vec![1.0, 1.0, 1.0, 0.0]);
        let m = eval_recovery(&[code(&DVector::zeros(4))], &[t]).unwrap();
        assert_eq!(m.support_recall, Some(0.0));
        assert_eq!(m.support_precision, None);
        assert!((m.coeff_rmse - 1.0).abs() < 1e-12);
        assert!(eval_recovery(&[], &[DVector::zeros(2)]).is_err());
    }

    #[test]
    fn energy_ratio() {
        let d = DMatrix::<f64>::identity(2, 2);
        let truth = DVector::from_vec(vec![1.0, 2.0]);
        let z = &d * &truth;
        let ideal = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(removed_energy_ratio(&z, &ideal, &d, &truth, &[1]), Some(1.0));
        assert_eq!(removed_energy_ratio(&z, &z, &d, &truth, &[1]), Some(0.0));
        assert_eq!(removed_energy_ratio(&z, &z, &d, &truth, &[]), None);
    }
}
