//! Concept-space analysis: SVD reduction of the concatenated per-layer
//! directions, absolute-cosine similarity and retrieval, elastic-net subspace
//! clustering (EnSC) with spectral clustering, and decomposition reports.

mod ensc;
mod export;
mod reduce;
mod report;
mod similarity;
mod spectral;

pub use ensc::{ensc_affinity, ensc_affinity_points, AffinityMatrix, EnscFailure, EnscOutput, EnscParams, AFFINITY_DROP};
pub use export::{read_affinity_coo, write_affinity_coo, write_embedding, EmbeddingManifest};
pub use reduce::{concat_and_reduce, select_rank, ConceptEmbedding, ReductionConfig};
pub use report::{decomposition_report, report_csv, ReportRow};
pub use similarity::{retrieve_top_k, similarity};
pub use spectral::{clustering_accuracy, connected_components, kmeans, spectral_cluster, ClusterAssignment};
