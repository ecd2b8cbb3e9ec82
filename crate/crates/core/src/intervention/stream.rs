use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::Serialize;

use super::baselines::{project_out, vec_add};
use super::oblique::synthesize;
use super::{ActivationFrame, InterventionPlan, InterventionResult, Method};
use crate::linalg::{orthonormal_basis, select_columns};
use crate::solver::{check_inputs, kkt_from_residual, objective_from_residual, solve_elastic_net, SparseCode};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StreamStats {
    pub frames: usize,
    pub solver_calls: usize,
    pub reused_codes: usize,
    pub solver_iterations: usize,
    pub nonconverged: usize,
}

/// Applies a plan to a sequence of frames, layer by layer.
///
/// With `reuse_coefficients`, the code solved for the first frame of each
/// layer is kept and applied to later frames of that layer; the residual is
/// always recomputed against the new frame. The cache lives in this value
/// only, so independent streams can run concurrently.
pub struct InterventionStream<'a, T: Real> {
    dicts: &'a BTreeMap<u32, DMatrix<T>>,
    plan: &'a InterventionPlan<T>,
    codes: HashMap<u32, SparseCode<T>>,
    bases: HashMap<u32, (DMatrix<T>, bool)>,
    stats: StreamStats,
}

impl<'a, T: Real> InterventionStream<'a, T> {
    pub fn new(dicts: &'a BTreeMap<u32, DMatrix<T>>, plan: &'a InterventionPlan<T>) -> Result<Self> {
        for d in dicts.values() {
            plan.validate(d.ncols())?;
        }
        Ok(Self {
            dicts,
            plan,
            codes: HashMap::new(),
            bases: HashMap::new(),
            stats: StreamStats::default(),
        })
    }

    pub fn stats(&self) -> StreamStats {
        self.stats
    }

    pub fn process(&mut self, frame: &ActivationFrame<T>) -> Result<InterventionResult<T>> {
        let dict = self
            .dicts
            .get(&frame.layer_id)
            .ok_or(Error::MissingLayerDictionary(frame.layer_id))?;
        let z = &frame.z;
        let plan = self.plan;
        self.stats.frames += 1;
        match plan.method {
            Method::ObliqProj => {
                let cached = if plan.reuse_coefficients {
                    self.codes.get(&frame.layer_id)
                } else {
                    None
                };
                let result = match cached {
                    Some(first) => {
                        check_inputs(z, dict)?;
                        self.stats.reused_codes += 1;
                        let code = recode(z, dict, first, plan);
                        synthesize(z, dict, &plan.undesirable, code, 0)
                    }
                    None => {
                        let code = solve_elastic_net(z, dict, &plan.en_params)?;
                        self.stats.solver_calls += 1;
                        self.stats.solver_iterations += code.iterations;
                        let iterations = code.iterations;
                        if plan.reuse_coefficients {
                            self.codes.insert(frame.layer_id, code.clone());
                        }
                        synthesize(z, dict, &plan.undesirable, code, iterations)
                    }
                };
                if !result.converged {
                    self.stats.nonconverged += 1;
                }
                Ok(result)
            }
            Method::VecAdd => {
                let mut out = z.clone();
                for &i in &plan.undesirable {
                    out = vec_add(&out, &dict.column(i).into_owned(), plan.vecadd_strength)?;
                }
                Ok(baseline_result(z, out, false))
            }
            Method::OrthoProj => {
                if plan.undesirable.is_empty() {
                    return Ok(baseline_result(z, z.clone(), false));
                }
                if z.len() != dict.nrows() {
                    return Err(Error::dims("activation vs dictionary dimension", dict.nrows(), z.len()));
                }
                let (basis, deficient) = self.bases.entry(frame.layer_id).or_insert_with(|| {
                    let (q, dropped) = orthonormal_basis(&select_columns(dict, &plan.undesirable), T::lit(1e-10));
                    (q, dropped > 0)
                });
                if basis.ncols() == 0 {
                    return Err(Error::RankDeficient { rank: 0, required: 1 });
                }
                Ok(baseline_result(z, project_out(z, basis), *deficient))
            }
        }
    }
}

fn baseline_result<T: Real>(z: &nalgebra::DVector<T>, out: nalgebra::DVector<T>, rank_deficient: bool) -> InterventionResult<T> {
    InterventionResult {
        removed_energy: (z - &out).norm(),
        z_ctrl: out,
        code: None,
        controlled: None,
        converged: true,
        solver_iterations: 0,
        rank_deficient,
    }
}

/// The cached coefficients re-expressed against a new activation.
fn recode<T: Real>(
    z: &nalgebra::DVector<T>,
    dict: &DMatrix<T>,
    first: &SparseCode<T>,
    plan: &InterventionPlan<T>,
) -> SparseCode<T> {
    let c = first.dense();
    let residual = z - dict * &c;
    SparseCode {
        n: first.n,
        indices: first.indices.clone(),
        values: first.values.clone(),
        objective: objective_from_residual(&residual, &first.values, &plan.en_params),
        kkt_residual: kkt_from_residual(dict, &c, &residual, &plan.en_params, None),
        residual,
        iterations: 0,
        converged: first.converged,
        elapsed: std::time::Duration::ZERO,
    }
}

/// Runs a fresh stream over `frames` in order.
pub fn intervene_stream<T: Real>(
    frames: &[ActivationFrame<T>],
    dicts: &BTreeMap<u32, DMatrix<T>>,
    plan: &InterventionPlan<T>,
) -> Result<(Vec<ActivationFrame<T>>, StreamStats)> {
    let mut stream = InterventionStream::new(dicts, plan)?;
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        let r = stream.process(f)?;
        out.push(ActivationFrame::new(f.layer_id, r.z_ctrl));
    }
    Ok((out, stream.stats()))
}
