use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SyntheticSpec;
use crate::analysis::{EnscParams, ReductionConfig};
use crate::dictionary::DEFAULT_MAX_PAIRS;
use crate::intervention::Method;
use crate::solver::ElasticNetParams;
use crate::{Error, Result};

/// Pipeline configuration, read from TOML. Every field has a default, so an
/// empty file is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct Config {
    /// Root seed; every random stream in the run is derived from it.
    pub seed: u64,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub dictionary: DictionaryStage,
    pub solver: SolverStage,
    pub partition: PartitionStage,
    pub intervention: InterventionStage,
    pub analysis: AnalysisStage,
}


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionarySource {
    /// Generated from `[dictionary.synthetic]`.
    Synthetic,
    /// A saved dictionary directory.
    Container,
    /// A stimulus-activation directory to extract directions from.
    Stimuli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionaryStage {
    pub source: DictionarySource,
    pub path: Option<PathBuf>,
    pub max_pairs: usize,
    /// The spec's own `seed` is ignored; the pipeline derives it from the root seed.
    pub synthetic: SyntheticSpec,
}

impl Default for DictionaryStage {
    fn default() -> Self {
        Self {
            source: DictionarySource::Synthetic,
            path: None,
            max_pairs: DEFAULT_MAX_PAIRS,
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverStage {
    pub alpha: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverStage {
    fn default() -> Self {
        let p = ElasticNetParams::<f64>::default();
        Self {
            alpha: p.alpha,
            tau: p.tau,
            tol: p.tol,
            max_iter: p.max_iter,
        }
    }
}

impl SolverStage {
    pub fn params(&self) -> ElasticNetParams<f64> {
        ElasticNetParams::new(self.alpha, self.tau)
            .with_tol(self.tol)
            .with_max_iter(self.max_iter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionStage {
    /// Partition JSONL to select from. When absent, concept names are
    /// labelled with the keyword annotator.
    pub path: Option<PathBuf>,
    pub task_id: String,
    pub keywords: Vec<String>,
    pub top_k: usize,
    /// Explicit undesirable ids; bypasses partition selection entirely.
    pub undesirable: Option<Vec<usize>>,
}

impl Default for PartitionStage {
    fn default() -> Self {
        Self {
            path: None,
            task_id: "task".into(),
            keywords: Vec::new(),
            top_k: 50,
            undesirable: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterventionStage {
    pub enabled: bool,
    pub method: Method,
    /// Frame file to intervene on. Synthetic dictionaries fall back to their planted signals.
    pub frames: Option<PathBuf>,
    pub vecadd_strength: f64,
    pub reuse_coefficients: bool,
}

impl Default for InterventionStage {
    fn default() -> Self {
        Self {
            enabled: true,
            method: Method::ObliqProj,
            frames: None,
            vecadd_strength: 1.0,
            reuse_coefficients: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisStage {
    pub enabled: bool,
    pub energy_fraction: f64,
    pub layers: Option<Vec<u32>>,
    pub cluster: bool,
    pub tau_c: f64,
    pub gamma: f64,
    pub num_clusters: usize,
    /// Concept to run a retrieval query for.
    pub retrieve_query: Option<usize>,
    pub retrieve_k: usize,
}

impl Default for AnalysisStage {
    fn default() -> Self {
        let e = EnscParams::default();
        Self {
            enabled: false,
            energy_fraction: ReductionConfig::default().energy_fraction,
            layers: None,
            cluster: true,
            tau_c: e.tau_c,
            gamma: e.gamma,
            num_clusters: e.num_clusters,
            retrieve_query: None,
            retrieve_k: 10,
        }
    }
}

impl AnalysisStage {
    pub fn reduction(&self) -> ReductionConfig {
        ReductionConfig {
            energy_fraction: self.energy_fraction,
            layer_subset: self.layers.clone(),
        }
    }

    pub fn ensc(&self) -> EnscParams {
        EnscParams {
            tau_c: self.tau_c,
            gamma: self.gamma,
            num_clusters: self.num_clusters,
            ..EnscParams::default()
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative input paths are relative to the config file
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.dictionary.path);
        fix(&mut self.partition.path);
        fix(&mut self.intervention.frames);
        fix(&mut self.output_dir);
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.solver.params().validate().map_err(cfg_err)?;
        if self.dictionary.source != DictionarySource::Synthetic && self.dictionary.path.is_none() {
            return Err(Error::Config("dictionary.path is required for this source".into()));
        }
        if self.dictionary.source == DictionarySource::Synthetic {
            self.dictionary.synthetic.validate().map_err(cfg_err)?;
        }
        if self.dictionary.max_pairs == 0 {
            return Err(Error::Config("dictionary.max_pairs must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if self.analysis.enabled {
            let f = self.analysis.energy_fraction;
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("analysis.energy_fraction must lie in (0, 1], got {f}")));
            }
            if self.analysis.cluster {
                self.analysis.ensc().validate().map_err(cfg_err)?;
            }
        }
        Ok(())
    }
}
