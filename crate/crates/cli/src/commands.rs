use std::path::{Path, PathBuf};

use concept_engine::analysis::{
    concat_and_reduce, ensc_affinity, report_csv, decomposition_report, retrieve_top_k, spectral_cluster,
    write_affinity_coo, write_embedding,
};
use concept_engine::dictionary::{
    build_dictionary, load_dictionary, read_partition, read_stimuli, save_dictionary, validate_dictionary,
    DirectionExtractionConfig, MockAnnotator,
};
use concept_engine::intervention::{intervene_stream, read_frames, write_frames, InterventionPlan};
use concept_engine::io::write_json;
use concept_engine::rng::SeedTree;
use concept_engine::workbench::{bench, gen_synthetic, run_pipeline, Config, SyntheticSpec, RUN_MANIFEST};
use concept_engine::{ActivationFrame, Dictionary, Error, Params, Result};
use serde_json::json;

use crate::{Cli, Command, Format, PartitionCommand, SolverArgs, SynthArgs};

const STRICT_EXIT: u8 = 4;

/// Writes a line to stdout, ignoring a closed pipe.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

struct Ctx {
    cfg: Config,
    out: PathBuf,
    format: Format,
    strict: bool,
}

impl Ctx {
    fn params(&self, args: &SolverArgs) -> Result<Params> {
        let mut s = self.cfg.solver;
        s.alpha = args.alpha.unwrap_or(s.alpha);
        s.tau = args.tau.unwrap_or(s.tau);
        s.tol = args.tol.unwrap_or(s.tol);
        s.max_iter = args.max_iter.unwrap_or(s.max_iter);
        let p = s.params();
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(&self.out)
    }

    fn strict_code(&self, nonconverged: usize) -> u8 {
        if self.strict && nonconverged > 0 {
            eprintln!("{nonconverged} solve(s) did not converge");
            STRICT_EXIT
        } else {
            0
        }
    }

    fn synth_spec(&self, a: &SynthArgs) -> SyntheticSpec {
        let base = &self.cfg.dictionary.synthetic;
        SyntheticSpec {
            n: a.n.unwrap_or(base.n),
            d: a.d.unwrap_or(base.d),
            num_layers: a.layers.unwrap_or(base.num_layers),
            support_size: a.s.unwrap_or(base.support_size),
            noise_sigma: a.noise.unwrap_or(base.noise_sigma),
            samples_per_layer: a.samples.unwrap_or(base.samples_per_layer),
            subspace_structure: match (a.subspaces, a.subspace_dim) {
                (Some(k), Some(m)) => Some((k, m)),
                _ => base.subspace_structure,
            },
            coeff_range: base.coeff_range,
            seed: SeedTree::new(self.cfg.seed).child("synthetic").seed(),
        }
    }
}

fn print_json(value: &serde_json::Value) {
    outln!("{}", serde_json::to_string_pretty(value).expect("json value serialises"));
}

fn load(dir: &Path) -> Result<Dictionary> {
    load_dictionary(dir)
}

fn resolve_concept(dict: &Dictionary, q: &str) -> Result<usize> {
    q.parse::<usize>()
        .ok()
        .filter(|&i| i < dict.num_concepts())
        .or_else(|| dict.concept_by_name(q))
        .ok_or_else(|| Error::InvalidData(format!("unknown concept {q:?}")))
}

pub fn dispatch(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(t) = g.threads {
        cfg.threads = Some(t);
    }
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        // the pipeline builds its own pool; this covers the other commands
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let out = g
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx {
        cfg,
        out,
        format: g.format,
        strict: g.strict,
    };

    match &cli.command {
        Command::BuildDict { stimuli, max_pairs } => {
            let sets = read_stimuli::<f64>(stimuli)?;
            let ecfg = DirectionExtractionConfig {
                max_pairs: max_pairs.unwrap_or(ctx.cfg.dictionary.max_pairs),
                rng_seed: SeedTree::new(ctx.cfg.seed).child("extract").seed(),
                contrast_concepts: None,
            };
            let dict = build_dictionary(&sets, &ecfg)?;
            let dir = ctx.out_dir()?.join("dictionary");
            save_dictionary(&dict, &dir)?;
            print_json(&json!({"dictionary": dir, "n": dict.num_concepts(), "d": dict.dim(), "layers": dict.layer_ids()}));
            Ok(0)
        }
        Command::ValidateDict { dict } => {
            let report = validate_dictionary(&load(dict)?);
            print_json(&serde_json::to_value(&report).expect("report serialises"));
            Ok(if report.passed { 0 } else { 3 })
        }
        Command::Partition {
            action: PartitionCommand::Select { partition, dict, keywords, task_id, k },
        } => {
            let set = match (partition, dict) {
                (Some(p), _) => read_partition(p)?,
                (None, Some(d)) => {
                    let dict = load(d)?;
                    MockAnnotator {
                        task_id: task_id.clone(),
                        keywords: keywords.clone(),
                    }
                    .annotate(dict.names())
                }
                (None, None) => return Err(Error::Config("either --partition or --dict is required".into())),
            };
            set.validate()?;
            let selected = set.select(*k)?;
            match ctx.format {
                Format::Json => print_json(&json!({"task_id": set.task_id, "selected": selected})),
                Format::Csv => {
                    outln!("concept_id");
                    for id in &selected {
                        outln!("{id}");
                    }
                }
            }
            Ok(0)
        }
        Command::Decompose { dict, frames, frame, top, solver } => {
            let params = ctx.params(solver)?;
            let dict = load(dict)?;
            let frames = read_frames::<f64>(frames)?;
            let f = frames
                .get(*frame)
                .ok_or_else(|| Error::InvalidData(format!("frame {frame} out of range {}", frames.len())))?;
            let atoms = dict.layer(f.layer_id).ok_or(Error::MissingLayerDictionary(f.layer_id))?;
            let names: Vec<String> = dict.names().iter().map(|s| s.to_string()).collect();
            let (rows, code) = decomposition_report(&f.z, atoms, &names, &params, *top)?;
            match ctx.format {
                Format::Csv => outln!("{}", report_csv(&rows).trim_end()),
                Format::Json => print_json(&json!({
                    "layer_id": f.layer_id,
                    "support_size": code.support_size(),
                    "objective": code.objective,
                    "kkt_residual": code.kkt_residual,
                    "iterations": code.iterations,
                    "converged": code.converged,
                    "concepts": rows,
                })),
            }
            Ok(ctx.strict_code(usize::from(!code.converged)))
        }
        Command::Intervene {
            dict,
            frames,
            undesirable,
            partition,
            top_k,
            method,
            strength,
            reuse,
            solver,
        } => {
            let params = ctx.params(solver)?;
            let dict = load(dict)?;
            let frames: Vec<ActivationFrame<f64>> = read_frames(frames)?;
            let ids = match partition {
                Some(p) => {
                    let set = read_partition(p)?;
                    set.validate()?;
                    set.select(*top_k)?
                }
                None => undesirable.clone(),
            };
            let plan = InterventionPlan {
                en_params: params,
                ..InterventionPlan::new(*method, ids).with_strength(*strength).with_reuse(*reuse)
            };
            plan.validate(dict.num_concepts())?;
            let (out, stats) = intervene_stream(&frames, &dict.layer_map(), &plan)?;
            let path = ctx.out_dir()?.join("frames_out.f32");
            write_frames(&path, &out)?;
            print_json(&json!({"frames": path, "removed_concepts": plan.undesirable, "stats": stats}));
            Ok(ctx.strict_code(stats.nonconverged))
        }
        Command::Retrieve { dict, query, k, energy } => {
            let dict = load(dict)?;
            let q = resolve_concept(&dict, query)?;
            let mut red = ctx.cfg.analysis.reduction();
            red.energy_fraction = energy.unwrap_or(red.energy_fraction);
            let emb = concat_and_reduce(&dict, &red)?;
            let hits = retrieve_top_k(&emb, q, *k)?;
            let names = dict.names();
            match ctx.format {
                Format::Csv => {
                    outln!("concept_id,name,similarity");
                    for (j, s) in &hits {
                        outln!("{j},{},{s}", names[*j]);
                    }
                }
                Format::Json => print_json(&json!({
                    "query": q,
                    "results": hits.iter().map(|(j, s)| json!({"concept_id": j, "name": names[*j], "similarity": s})).collect::<Vec<_>>(),
                })),
            }
            Ok(0)
        }
        Command::Reduce { dict, energy } => {
            let dict = load(dict)?;
            let mut red = ctx.cfg.analysis.reduction();
            red.energy_fraction = energy.unwrap_or(red.energy_fraction);
            let emb = concat_and_reduce(&dict, &red)?;
            let names: Vec<String> = dict.names().iter().map(|s| s.to_string()).collect();
            let dir = ctx.out_dir()?.join("embedding");
            write_embedding(&dir, &emb, &names)?;
            print_json(&json!({"embedding": dir, "reduced_dim": emb.reduced_dim, "retained_energy": emb.retained_energy}));
            Ok(0)
        }
        Command::Cluster { dict, k, gamma, tau_c, energy } => {
            let dict = load(dict)?;
            let mut stage = ctx.cfg.analysis.clone();
            stage.energy_fraction = energy.unwrap_or(stage.energy_fraction);
            stage.num_clusters = k.unwrap_or(stage.num_clusters);
            stage.gamma = gamma.unwrap_or(stage.gamma);
            stage.tau_c = tau_c.unwrap_or(stage.tau_c);
            let ensc = stage.ensc();
            ensc.validate().map_err(|e| Error::Config(e.to_string()))?;
            let emb = concat_and_reduce(&dict, &stage.reduction())?;
            let out = ensc_affinity(&emb, &ensc)?;
            let assignment = spectral_cluster(
                &out.affinity,
                stage.num_clusters,
                SeedTree::new(ctx.cfg.seed).child("cluster").seed(),
            )?;
            let dir = ctx.out_dir()?;
            write_affinity_coo(&dir.join("affinity.txt"), &out.affinity)?;
            write_json(&dir.join("clusters.json"), &assignment)?;
            if assignment.disconnected_warning {
                eprintln!(
                    "warning: affinity graph has {} components for {} clusters",
                    assignment.num_components, assignment.num_clusters
                );
            }
            match ctx.format {
                Format::Csv => {
                    outln!("concept_id,name,cluster");
                    for (j, (name, l)) in dict.names().iter().zip(&assignment.labels).enumerate() {
                        outln!("{j},{name},{l}");
                    }
                }
                Format::Json => print_json(&json!({"assignment": assignment, "ensc_failures": out.failures})),
            }
            Ok(ctx.strict_code(out.failures.len()))
        }
        Command::Synth { spec } => {
            let spec = ctx.synth_spec(spec);
            spec.validate().map_err(|e| Error::Config(e.to_string()))?;
            let data = gen_synthetic(&spec)?;
            let dir = ctx.out_dir()?;
            save_dictionary(&data.dictionary, &dir.join("dictionary"))?;
            let frames: Vec<_> = data
                .samples
                .iter()
                .map(|s| ActivationFrame::new(s.layer_id, s.z.clone()))
                .collect();
            write_frames(&dir.join("frames.f32"), &frames)?;
            let truth: Vec<Vec<(usize, f64)>> = data
                .samples
                .iter()
                .map(|s| s.truth.iter().enumerate().filter(|p| *p.1 != 0.0).map(|(j, &v)| (j, v)).collect())
                .collect();
            write_json(&dir.join("truth.json"), &json!({"codes": truth, "groups": data.groups}))?;
            print_json(&json!({"output_dir": dir, "n": spec.n, "d": spec.d, "frames": frames.len()}));
            Ok(0)
        }
        Command::Bench { spec, solver } => {
            let params = ctx.params(solver)?;
            let spec = ctx.synth_spec(spec);
            spec.validate().map_err(|e| Error::Config(e.to_string()))?;
            let report = bench(&spec, &params)?;
            print_json(&serde_json::to_value(&report).expect("report serialises"));
            Ok(ctx.strict_code(report.metrics.nonconverged))
        }
        Command::Run => {
            let report = run_pipeline(&ctx.cfg, ctx.out_dir()?)?;
            print_json(&json!({
                "manifest": ctx.out.join(RUN_MANIFEST),
                "artifacts": report.artifacts,
                "nonconverged": report.nonconverged(),
            }));
            Ok(ctx.strict_code(report.nonconverged()))
        }
    }
}
