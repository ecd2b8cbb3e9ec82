//! Concept dictionaries, elastic-net sparse coding and activation steering.
//!
//! The crate is organised around four stages:
//!
//! * [`dictionary`]: extract unit concept directions from stimulus activations,
//!   persist them, and select undesirable concepts from task partitions.
//! * [`solver`]: decompose an activation over a dictionary with an active-set
//!   elastic-net solver, with a proximal-gradient reference and a KKT certificate.
//! * [`intervention`]: oblique projection (zero the undesirable coefficients and
//!   re-synthesize), the vector-addition and orthogonal-projection baselines, and
//!   a per-layer frame stream.
//! * [`analysis`]: SVD reduction, similarity, retrieval, elastic-net subspace
//!   clustering and decomposition reports.
//!
//! [`workbench`] ties them together with synthetic data, recovery metrics and a
//! config-driven pipeline.
//!
//! All numerical code is generic over [`Real`] (implemented for `f32` and `f64`);
//! the aliases below fix the scalar to `f64`, which is what the workbench uses.

pub mod analysis;
pub mod dictionary;
pub mod error;
pub mod io;
pub mod intervention;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod solver;
pub mod workbench;

pub use error::{Error, Result};
pub use scalar::Real;

pub use dictionary::{ConceptDictionary, ConceptEntry, DirectionExtractionConfig, StimulusActivationSet};
pub use intervention::{ActivationFrame, InterventionPlan, InterventionResult, Method};
pub use solver::{ElasticNetParams, SparseCode};

/// Dense column vector.
pub type Vector<T> = nalgebra::DVector<T>;
/// Dense column-major matrix. Dictionary layers store one atom per column (`d × n`).
pub type Matrix<T> = nalgebra::DMatrix<T>;

pub type Dictionary = ConceptDictionary<f64>;
pub type DictionaryF32 = ConceptDictionary<f32>;
pub type Params = ElasticNetParams<f64>;
pub type ParamsF32 = ElasticNetParams<f32>;
pub type Code = SparseCode<f64>;
pub type CodeF32 = SparseCode<f32>;
pub type Plan = InterventionPlan<f64>;
pub type Frame = ActivationFrame<f64>;
pub type Stimuli = StimulusActivationSet<f64>;
