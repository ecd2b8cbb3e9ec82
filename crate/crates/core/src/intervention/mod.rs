//! Activation intervention: oblique projection over a concept dictionary and
//! the vector-addition / orthogonal-projection baselines.
//!
//! Oblique projection decomposes `z = D c + r`, zeroes the coefficients of the
//! undesirable concepts `I` and re-synthesizes `z_ctrl = r + D c_ctrl`. Since
//! `c_ctrl` differs from `c` only on `I`, this equals `z − D_I c_I`, which is
//! how it is computed: the output is bit-identical to the input whenever no
//! undesirable concept is active.

mod baselines;
mod frames;
mod oblique;
mod props;
mod stream;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::solver::{ElasticNetParams, SparseCode};
use crate::{Error, Real, Result};

pub use baselines::{ortho_project, vec_add, OrthoProjection, UNIT_TOLERANCE};
pub use frames::{read_frames, sidecar_path, write_frames, FrameEntry, FrameIndex};
pub use oblique::{decompose, oblique_project, oblique_project_with, remove_concepts, Decomposer};
pub use props::{check_prop1, check_prop2, Prop1Report, Prop2Report};
pub use stream::{intervene_stream, InterventionStream, StreamStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ObliqProj,
    VecAdd,
    OrthoProj,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "obliqproj" | "oblique" => Ok(Method::ObliqProj),
            "vecadd" => Ok(Method::VecAdd),
            "orthoproj" | "orthogonal" => Ok(Method::OrthoProj),
            _ => Err(Error::InvalidParams(format!("unknown intervention method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct InterventionPlan<T: Real> {
    pub method: Method,
    /// Undesirable concept ids, sorted and unique.
    pub undesirable: Vec<usize>,
    /// Strength ĉ for vector addition.
    pub vecadd_strength: T,
    /// Decomposition parameters for oblique projection.
    pub en_params: ElasticNetParams<T>,
    /// Reuse the first code solved at each layer for later frames of that layer.
    pub reuse_coefficients: bool,
}

impl<T: Real> InterventionPlan<T> {
    pub fn new(method: Method, undesirable: impl IntoIterator<Item = usize>) -> Self {
        let mut undesirable: Vec<usize> = undesirable.into_iter().collect();
        undesirable.sort_unstable();
        undesirable.dedup();
        Self {
            method,
            undesirable,
            vecadd_strength: T::one(),
            en_params: ElasticNetParams::default(),
            reuse_coefficients: false,
        }
    }

    pub fn oblique(undesirable: impl IntoIterator<Item = usize>, en_params: ElasticNetParams<T>) -> Self {
        Self {
            en_params,
            ..Self::new(Method::ObliqProj, undesirable)
        }
    }

    pub fn with_strength(mut self, strength: T) -> Self {
        self.vecadd_strength = strength;
        self
    }

    pub fn with_reuse(mut self, reuse: bool) -> Self {
        self.reuse_coefficients = reuse;
        self
    }

    /// Checks the plan against a dictionary with `n` atoms.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&bad) = self.undesirable.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidParams(format!("undesirable concept {bad} out of range {n}")));
        }
        if self.undesirable.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("undesirable set must be sorted and unique".into()));
        }
        if !self.vecadd_strength.is_finite_value() {
            return Err(Error::InvalidParams("vector-addition strength must be finite".into()));
        }
        if self.method == Method::ObliqProj {
            self.en_params.validate()?;
        }
        Ok(())
    }
}

/// One activation vector tagged with its layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationFrame<T: Real> {
    pub layer_id: u32,
    pub z: DVector<T>,
}

impl<T: Real> ActivationFrame<T> {
    pub fn new(layer_id: u32, z: DVector<T>) -> Self {
        Self { layer_id, z }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionResult<T: Real> {
    pub z_ctrl: DVector<T>,
    /// Decomposition of the input (oblique projection only).
    pub code: Option<SparseCode<T>>,
    /// `(concept, coefficient)` pairs of the controlled code (oblique projection only).
    pub controlled: Option<Vec<(usize, T)>>,
    /// Norm of what was removed, `‖z − z_ctrl‖`.
    pub removed_energy: T,
    /// False when the decomposition did not reach its tolerance.
    pub converged: bool,
    pub solver_iterations: usize,
    /// Orthogonal projection only: the directions were numerically dependent.
    pub rank_deficient: bool,
}
