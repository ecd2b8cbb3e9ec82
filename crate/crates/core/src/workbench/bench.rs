use rayon::prelude::*;
use serde::Serialize;

use super::{eval_recovery, gen_synthetic, RecoveryMetrics, SyntheticSpec};
use crate::solver::{solve_elastic_net, ElasticNetParams};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub d: usize,
    pub support_size: usize,
    pub solves: usize,
    pub median_ms: f64,
    pub max_ms: f64,
    pub max_kkt_residual: f64,
    pub metrics: RecoveryMetrics,
}

/// Solves every planted signal of `spec` and reports timing and recovery.
/// Solves run one after another so timings are not inflated by contention.
pub fn bench(spec: &SyntheticSpec, params: &ElasticNetParams<f64>) -> Result<BenchReport> {
    let data = gen_synthetic(spec)?;
    let mut codes = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let atoms = data.dictionary.layer(s.layer_id).expect("sample layer exists");
        codes.push(solve_elastic_net(&s.z, atoms, params)?);
    }
    let truth: Vec<_> = data.samples.iter().map(|s| s.truth.clone()).collect();
    let metrics = eval_recovery(&codes, &truth)?;
    let mut ms: Vec<f64> = codes.iter().map(|c| c.elapsed.as_secs_f64() * 1e3).collect();
    ms.sort_by(f64::total_cmp);
    Ok(BenchReport {
        n: spec.n,
        d: spec.d,
        support_size: spec.support_size,
        solves: codes.len(),
        median_ms: median(&ms),
        max_ms: ms.last().copied().unwrap_or(0.0),
        max_kkt_residual: codes.iter().map(|c| c.kkt_residual).fold(0.0, f64::max),
        metrics,
    })
}

/// Recovery over many independently seeded problems, solved in parallel.
pub fn recovery_sweep(spec: &SyntheticSpec, params: &ElasticNetParams<f64>, seeds: &[u64]) -> Result<Vec<RecoveryMetrics>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let data = gen_synthetic(&SyntheticSpec { seed, ..spec.clone() })?;
            let codes = data
                .samples
                .iter()
                .map(|s| solve_elastic_net(&s.z, data.dictionary.layer(s.layer_id).expect("layer"), params))
                .collect::<Result<Vec<_>>>()?;
            let truth: Vec<_> = data.samples.iter().map(|s| s.truth.clone()).collect();
            eval_recovery(&codes, &truth)
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}
