use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::metrics::removed_energy_ratio;
use super::{gen_synthetic, Config, DictionarySource, SyntheticData};
use crate::analysis::{
    clustering_accuracy, concat_and_reduce, ensc_affinity, retrieve_top_k, spectral_cluster, write_affinity_coo,
    write_embedding,
};
use crate::dictionary::{
    build_dictionary, load_dictionary, read_partition, read_stimuli, save_dictionary, validate_dictionary,
    write_partition, ConceptDictionary, DirectionExtractionConfig, MockAnnotator, PartitionSet, ValidationReport,
};
use crate::intervention::{intervene_stream, read_frames, write_frames, InterventionPlan, StreamStats};
use crate::io::write_json;
use crate::rng::SeedTree;
use crate::{ActivationFrame, Error, Method, Result};

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct DictionarySummary {
    pub source: DictionarySource,
    pub n: usize,
    pub d: usize,
    pub layer_ids: Vec<u32>,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterventionSummary {
    pub method: Method,
    pub removed_concepts: Vec<usize>,
    pub stats: StreamStats,
    /// Mean removed share of the planted undesirable component (synthetic frames only).
    pub removed_undesirable_energy_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub reduced_dim: usize,
    pub retained_energy: f64,
    pub num_clusters: Option<usize>,
    pub num_components: Option<usize>,
    pub disconnected_warning: Option<bool>,
    /// Agreement with the planted subspaces (synthetic subspace dictionaries only).
    pub cluster_accuracy: Option<f64>,
    pub ensc_failures: usize,
    pub retrieval: Option<Vec<(usize, f64)>>,
}

/// Contents of the run manifest. Everything except `timings` is a pure
/// function of the configuration and inputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub config: Config,
    pub dictionary: DictionarySummary,
    pub intervention: Option<InterventionSummary>,
    pub analysis: Option<AnalysisSummary>,
    pub artifacts: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    /// Solves that missed their tolerance anywhere in the run.
    pub fn nonconverged(&self) -> usize {
        self.intervention.as_ref().map_or(0, |i| i.stats.nonconverged)
            + self.analysis.as_ref().map_or(0, |a| a.ensc_failures)
    }
}

struct Run<'a> {
    cfg: &'a Config,
    out: &'a Path,
    seeds: SeedTree,
    artifacts: Vec<String>,
    timings: BTreeMap<String, f64>,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out.join(name)
    }

    fn timed<R>(&mut self, stage: &'static str, f: impl FnOnce(&mut Self) -> Result<R>) -> Result<R> {
        let start = Instant::now();
        let r = f(self).map_err(Error::in_stage(stage))?;
        self.timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
        Ok(r)
    }
}

/// Runs the configured stages, writing artifacts and `run_manifest.json` into `out`.
pub fn run_pipeline(cfg: &Config, out: &Path) -> Result<RunReport> {
    cfg.validate()?;
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_stages(cfg, out)),
        None => run_stages(cfg, out),
    }
}

fn run_stages(cfg: &Config, out: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(out).map_err(Error::io(out))?;
    let mut run = Run {
        cfg,
        out,
        seeds: SeedTree::new(cfg.seed),
        artifacts: Vec::new(),
        timings: BTreeMap::new(),
    };

    let (dict, synthetic) = run.timed("dictionary", load_stage)?;
    let dictionary = run.timed("validate", |run| {
        let validation = validate_dictionary(&dict);
        write_json(&run.path("validation.json"), &validation)?;
        if !validation.passed {
            return Err(Error::InvalidData("dictionary failed validation".into()));
        }
        Ok(DictionarySummary {
            source: cfg.dictionary.source,
            n: dict.num_concepts(),
            d: dict.dim(),
            layer_ids: dict.layer_ids().to_vec(),
            validation,
        })
    })?;

    let intervention = if cfg.intervention.enabled {
        let undesirable = run.timed("partition", |run| partition_stage(run, &dict))?;
        Some(run.timed("intervention", |run| intervention_stage(run, &dict, synthetic.as_ref(), undesirable))?)
    } else {
        None
    };

    let analysis = if cfg.analysis.enabled {
        Some(run.timed("analysis", |run| analysis_stage(run, &dict, synthetic.as_ref()))?)
    } else {
        None
    };

    let mut artifacts = run.artifacts.clone();
    artifacts.sort();
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        dictionary,
        intervention,
        analysis,
        artifacts,
        timings: run.timings,
    };
    write_json(&out.join(RUN_MANIFEST), &report)?;
    Ok(report)
}

fn load_stage(run: &mut Run) -> Result<(ConceptDictionary<f64>, Option<SyntheticData>)> {
    let stage = &run.cfg.dictionary;
    let (dict, synthetic) = match stage.source {
        DictionarySource::Synthetic => {
            let mut spec = stage.synthetic.clone();
            spec.seed = run.seeds.child("synthetic").seed();
            let data = gen_synthetic(&spec)?;
            (data.dictionary.clone(), Some(data))
        }
        DictionarySource::Container => (load_dictionary(stage_path(stage.path.as_deref())?)?, None),
        DictionarySource::Stimuli => {
            let stimuli = read_stimuli::<f64>(stage_path(stage.path.as_deref())?)?;
            let cfg = DirectionExtractionConfig {
                max_pairs: stage.max_pairs,
                rng_seed: run.seeds.child("extract").seed(),
                contrast_concepts: None,
            };
            (build_dictionary(&stimuli, &cfg)?, None)
        }
    };
    let dir = run.path("dictionary");
    save_dictionary(&dict, &dir)?;
    Ok((dict, synthetic))
}

fn stage_path(p: Option<&Path>) -> Result<&Path> {
    p.ok_or_else(|| Error::Config("missing input path".into()))
}

fn partition_stage(run: &mut Run, dict: &ConceptDictionary<f64>) -> Result<Vec<usize>> {
    let stage = &run.cfg.partition;
    if let Some(ids) = &stage.undesirable {
        return Ok(ids.clone());
    }
    let set: PartitionSet = match &stage.path {
        Some(p) => read_partition(p)?,
        None => {
            let annotator = MockAnnotator {
                task_id: stage.task_id.clone(),
                keywords: stage.keywords.clone(),
            };
            let set = annotator.annotate(dict.names());
            write_partition(&run.path("partition.jsonl"), &set)?;
            set
        }
    };
    set.validate()?;
    let selected = set.select(stage.top_k)?;
    write_json(&run.path("selected.json"), &selected)?;
    Ok(selected)
}

fn intervention_stage(
    run: &mut Run,
    dict: &ConceptDictionary<f64>,
    synthetic: Option<&SyntheticData>,
    undesirable: Vec<usize>,
) -> Result<InterventionSummary> {
    let stage = &run.cfg.intervention;
    let frames: Vec<ActivationFrame<f64>> = match (&stage.frames, synthetic) {
        (Some(p), _) => read_frames(p)?,
        (None, Some(data)) => {
            let frames: Vec<_> = data
                .samples
                .iter()
                .map(|s| ActivationFrame::new(s.layer_id, s.z.clone()))
                .collect();
            write_frames(&run.path("frames_in.f32"), &frames)?;
            run.artifacts.push("frames_in.json".into());
            frames
        }
        (None, None) => return Err(Error::Config("intervention.frames is required for non-synthetic dictionaries".into())),
    };
    let plan = InterventionPlan::new(stage.method, undesirable)
        .with_strength(stage.vecadd_strength)
        .with_reuse(stage.reuse_coefficients);
    let plan = InterventionPlan {
        en_params: run.cfg.solver.params(),
        ..plan
    };
    plan.validate(dict.num_concepts())?;
    let (controlled, stats) = intervene_stream(&frames, &dict.layer_map(), &plan)?;
    write_frames(&run.path("frames_out.f32"), &controlled)?;
    run.artifacts.push("frames_out.json".into());

    let ratio = synthetic.filter(|_| stage.frames.is_none()).and_then(|data| {
        let ratios: Vec<f64> = data
            .samples
            .iter()
            .zip(&controlled)
            .filter_map(|(s, c)| {
                let atoms = dict.layer(s.layer_id)?;
                removed_energy_ratio(&s.z, &c.z, atoms, &s.truth, &plan.undesirable)
            })
            .collect();
        (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
    });
    Ok(InterventionSummary {
        method: plan.method,
        removed_concepts: plan.undesirable,
        stats,
        removed_undesirable_energy_ratio: ratio,
    })
}

fn analysis_stage(
    run: &mut Run,
    dict: &ConceptDictionary<f64>,
    synthetic: Option<&SyntheticData>,
) -> Result<AnalysisSummary> {
    let stage = run.cfg.analysis.clone();
    let emb = concat_and_reduce(dict, &stage.reduction())?;
    let names: Vec<String> = dict.names().iter().map(|s| s.to_string()).collect();
    let dir = run.path("embedding");
    write_embedding(&dir, &emb, &names)?;

    let retrieval = match stage.retrieve_query {
        Some(q) => {
            let hits: Vec<(usize, f64)> = retrieve_top_k(&emb, q, stage.retrieve_k)?;
            write_json(&run.path("retrieval.json"), &hits)?;
            Some(hits)
        }
        None => None,
    };

    let mut summary = AnalysisSummary {
        reduced_dim: emb.reduced_dim,
        retained_energy: emb.retained_energy,
        num_clusters: None,
        num_components: None,
        disconnected_warning: None,
        cluster_accuracy: None,
        ensc_failures: 0,
        retrieval,
    };
    if stage.cluster {
        let ensc = ensc_affinity(&emb, &stage.ensc())?;
        write_affinity_coo(&run.path("affinity.txt"), &ensc.affinity)?;
        let assignment = spectral_cluster(&ensc.affinity, stage.num_clusters, run.seeds.child("cluster").seed())?;
        write_json(&run.path("clusters.json"), &assignment)?;
        if let Some(groups) = synthetic.and_then(|s| s.groups.as_ref()) {
            summary.cluster_accuracy = Some(clustering_accuracy(&assignment.labels, groups)?);
        }
        summary.num_clusters = Some(assignment.num_clusters);
        summary.num_components = Some(assignment.num_components);
        summary.disconnected_warning = Some(assignment.disconnected_warning);
        summary.ensc_failures = ensc.failures.len();
    }
    Ok(summary)
}
