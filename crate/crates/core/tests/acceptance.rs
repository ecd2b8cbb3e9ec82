mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use common::{gaussian_matrix, gaussian_vector, random_dictionary, unit_columns};
use concept_engine::analysis::{
    clustering_accuracy, concat_and_reduce, ensc_affinity_points, select_rank, spectral_cluster, EnscParams,
    ReductionConfig,
};
use concept_engine::dictionary::{load_dictionary, save_dictionary, FORMAT_VERSION};
use concept_engine::intervention::{check_prop1, check_prop2, oblique_project};
use concept_engine::linalg::mutual_coherence;
use concept_engine::rng::SeedTree;
use concept_engine::solver::{objective, oracle_solve, solve_elastic_net, ElasticNetParams};
use concept_engine::workbench::{
    bench, gen_synthetic, planted_low_rank, planted_subspace_points, recovery_sweep, run_pipeline, Config,
    SyntheticSpec, RUN_MANIFEST,
};
use concept_engine::{ConceptDictionary, ConceptEntry, Error, InterventionPlan};
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for seed in 0..100u64 {
        let mut rng = SeedTree::new(seed).child("prop1").rng();
        let k = rng.random_range(1..=8);
        let d_i = unit_columns(gaussian_matrix(32, k, &mut rng));
        let rank = d_i.clone().svd(false, false).rank(1e-10);
        if rank < k {
            failures += 1;
            continue;
        }
        let z = gaussian_vector(32, &mut rng);
        let r = check_prop1(&z, &d_i).unwrap();
        worst = worst.max(r.relative_discrepancy);
        if r.relative_discrepancy > 1e-6 {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 5.0,
        format!("max relative error {worst:.2e}, {failures} failures, {secs:.3} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (mut coef, mut vecadd) = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let mut rng = SeedTree::new(seed).child("prop2").rng();
        let d = rng.random_range(2..=32);
        let v = gaussian_vector(d, &mut rng).normalize();
        let z = gaussian_vector(d, &mut rng);
        for lambda in [-0.5, 0.0, 1.0, 10.0] {
            let r = check_prop2(&z, &v, lambda).unwrap();
            // closed form recomputed here rather than taken from the report
            let expected = z.dot(&v) / (lambda + 1.0);
            coef = coef.max((r.coefficient - expected).abs());
            vecadd = vecadd.max(r.vecadd_error);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        coef <= 1e-10 && vecadd <= 1e-10 && secs < 2.0,
        format!("coefficient error {coef:.2e}, vec_add error {vecadd:.2e}, {secs:.3} s"),
    )
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (mut gap, mut kkt) = (0.0f64, 0.0f64);
    let alphas = [0.01, 0.05, 0.5];
    let taus = [0.0, 0.5, 0.95, 1.0];
    for seed in 0..200u64 {
        let mut rng = SeedTree::new(seed).child("solver").rng();
        let d = rng.random_range(2..=20);
        let n = rng.random_range(1..=50);
        let dict = random_dictionary(d, n, seed);
        let z = gaussian_vector(d, &mut rng);
        let params = ElasticNetParams::new(alphas[seed as usize % 3], taus[(seed as usize / 3) % 4]);
        let ours = solve_elastic_net(&z, &dict, &params).unwrap();
        let oracle = oracle_solve(&z, &dict, &params).unwrap();
        let f = objective(&z, &dict, &ours.dense(), &params);
        let g = objective(&z, &dict, &oracle.dense(), &params);
        gap = gap.max((f - g).abs());
        kkt = kkt.max(ours.kkt_residual);
    }

    let mut closed = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = SeedTree::new(seed).child("closed").rng();
        let d = rng.random_range(2..=20);
        let z = gaussian_vector(d, &mut rng);
        let alpha = 0.05 + seed as f64 * 0.02;
        // orthonormal dictionary: per-coordinate soft threshold and scaling
        let q = gaussian_matrix(d, d, &mut rng).qr().q();
        let p = ElasticNetParams::new(alpha, 0.95).with_tol(1e-12);
        let code = solve_elastic_net(&z, &q, &p).unwrap();
        let proj = q.tr_mul(&z);
        for j in 0..d {
            let want = soft(proj[j], alpha * 0.95) / (1.0 + alpha * 0.05);
            closed = closed.max((code.get(j) - want).abs());
        }
        // ridge: normal equations
        let n = rng.random_range(1..=30);
        let dict = random_dictionary(d, n, seed + 1000);
        let p = ElasticNetParams::new(alpha, 0.0).with_tol(1e-12);
        let code = solve_elastic_net(&z, &dict, &p).unwrap();
        let mut gram = dict.tr_mul(&dict);
        gram += DMatrix::identity(n, n) * alpha;
        let want = gram.lu().solve(&dict.tr_mul(&z)).unwrap();
        closed = closed.max((code.dense() - want).amax());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        gap <= 1e-6 && kkt <= 1e-6 && closed <= 1e-10 && secs < 30.0,
        format!("objective gap {gap:.2e}, KKT {kkt:.2e}, closed-form error {closed:.2e}, {secs:.3} s"),
    )
}

fn criterion_4() -> Outcome {
    let mut identity = 0.0f64;
    let mut altered = 0;
    for seed in 0..50u64 {
        let mut rng = SeedTree::new(seed).child("identity").rng();
        let d = rng.random_range(2..=32);
        let n = rng.random_range(1..=64);
        let dict = random_dictionary(d, n, seed);
        let z = gaussian_vector(d, &mut rng);
        let out = oblique_project(&z, &dict, &InterventionPlan::oblique([], ElasticNetParams::default())).unwrap();
        identity = identity.max((&out.z_ctrl - &z).norm() / z.norm());

        let removed: Vec<usize> = (0..n).filter(|j| j % 3 == 0).collect();
        let out = oblique_project(&z, &dict, &InterventionPlan::oblique(removed.clone(), ElasticNetParams::default())).unwrap();
        let code = out.code.unwrap();
        let kept = out.controlled.unwrap();
        for (&j, &v) in code.indices.iter().zip(&code.values) {
            let after = kept.iter().find(|(k, _)| *k == j).map(|x| x.1);
            let ok = if removed.contains(&j) {
                after.is_none()
            } else {
                after.map(f64::to_bits) == Some(v.to_bits())
            };
            if !ok {
                altered += 1;
            }
        }
    }
    outcome(
        identity <= 1e-9 && altered == 0,
        format!("identity error {identity:.2e}, altered benign coefficients {altered}"),
    )
}

fn criterion_5() -> Outcome {
    let spec = SyntheticSpec {
        n: 48,
        d: 1024,
        support_size: 3,
        samples_per_layer: 1,
        ..SyntheticSpec::default()
    };
    let seeds: Vec<u64> = (0..50).collect();
    let coherence = seeds
        .iter()
        .map(|&seed| {
            let data = gen_synthetic(&SyntheticSpec { seed, ..spec.clone() }).unwrap();
            mutual_coherence(data.dictionary.layer_at(0))
        })
        .fold(0.0f64, f64::max);
    let params = ElasticNetParams::new(0.01, 0.95);
    let metrics = recovery_sweep(&spec, &params, &seeds).unwrap();
    let exact = metrics
        .iter()
        .filter(|m| m.support_precision == Some(1.0) && m.support_recall == Some(1.0))
        .count();
    outcome(
        coherence < 0.2 && exact >= 48,
        format!("{exact}/50 seeds exact, max coherence {coherence:.3}"),
    )
}

fn criterion_6() -> Outcome {
    let spec = SyntheticSpec {
        n: 10_000,
        d: 1024,
        support_size: 50,
        samples_per_layer: 5,
        seed: 6,
        ..SyntheticSpec::default()
    };
    let report = bench(&spec, &ElasticNetParams::default()).unwrap();
    outcome(
        report.median_ms < 500.0 && report.max_kkt_residual <= 1e-5 && report.metrics.nonconverged == 0,
        format!(
            "median {:.1} ms, max KKT {:.2e}, {} solves",
            report.median_ms, report.max_kkt_residual, report.solves
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut worst = 1.0f64;
    let mut structural = true;
    for seed in 0..10u64 {
        let (points, labels) = planted_subspace_points(64, 4, 5, 25, 0.01, seed).unwrap();
        let a = ensc_affinity_points(&points, &EnscParams::default()).unwrap().affinity;
        structural &= a.is_symmetric() && (0..points.ncols()).all(|i| a.get(i, i) == 0.0);
        let clusters = spectral_cluster(&a, 4, seed).unwrap();
        worst = worst.min(clustering_accuracy(&clusters.labels, &labels).unwrap());
    }
    outcome(
        worst >= 0.95 && structural,
        format!("min accuracy {worst:.3} over 10 seeds, symmetric with zero diagonal: {structural}; block structure on a released dictionary not checked (none available)"),
    )
}

fn criterion_8() -> Outcome {
    let x = unit_columns(planted_low_rank(64, 100, 10, 1e-3, 8));
    let entries = (0..100)
        .map(|i| ConceptEntry {
            concept_id: i,
            name: format!("c{i}"),
            stimulus_count: 2,
        })
        .collect();
    let dict = ConceptDictionary::new(entries, vec![0], vec![x]).unwrap();
    let emb = concat_and_reduce(
        &dict,
        &ReductionConfig {
            energy_fraction: 0.95,
            layer_subset: None,
        },
    )
    .unwrap();
    let energies: Vec<f64> = emb.singular_values.iter().map(|s| s * s).collect();
    let total: f64 = energies.iter().sum();
    let below = energies[..emb.reduced_dim - 1].iter().sum::<f64>() / total;
    let (k, _) = select_rank(&emb.singular_values, 0.95);
    outcome(
        emb.reduced_dim <= 12 && emb.retained_energy >= 0.95 && below < 0.95 && k == emb.reduced_dim,
        format!(
            "reduced dimension {}, retained {:.4}, one fewer retains {below:.4}; released 13B dictionary not available",
            emb.reduced_dim, emb.retained_energy
        ),
    )
}

fn edit_manifest(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) {
    let path = dir.join("manifest.json");
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    edit(&mut v);
    fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
}

fn criterion_9() -> Outcome {
    let mut mismatches = 0;
    for seed in 0..20u64 {
        let mut rng = SeedTree::new(seed).child("persist").rng();
        let d = rng.random_range(1..=24);
        let n = rng.random_range(1..=40);
        let num_layers = rng.random_range(1..=3);
        let layers: Vec<DMatrix<f32>> = (0..num_layers)
            .map(|_| unit_columns(gaussian_matrix(d, n, &mut rng)).map(|x| x as f32))
            .collect();
        let entries = (0..n)
            .map(|i| ConceptEntry {
                concept_id: i,
                name: format!("concept {i}"),
                stimulus_count: 2,
            })
            .collect();
        let dict = ConceptDictionary::new(entries, (0..num_layers as u32).map(|l| 2 * l).collect(), layers).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dictionary(&dict, dir.path()).unwrap();
        let back: ConceptDictionary<f32> = load_dictionary(dir.path()).unwrap();
        let same_bits = dict
            .layers()
            .zip(back.layers())
            .all(|((a, x), (b, y))| a == b && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        if !same_bits || back.entries() != dict.entries() {
            mismatches += 1;
        }
    }

    let dict: ConceptDictionary<f64> = {
        let m = random_dictionary(8, 5, 9);
        let entries = (0..5)
            .map(|i| ConceptEntry {
                concept_id: i,
                name: format!("c{i}"),
                stimulus_count: 2,
            })
            .collect();
        ConceptDictionary::new(entries, vec![0], vec![m]).unwrap()
    };
    let fresh = || {
        let dir = tempfile::tempdir().unwrap();
        save_dictionary(&dict, dir.path()).unwrap();
        dir
    };
    let version = {
        let dir = fresh();
        edit_manifest(dir.path(), |v| v["format_version"] = (FORMAT_VERSION + 1).into());
        matches!(load_dictionary::<f64>(dir.path()), Err(Error::FormatVersionMismatch { .. }))
    };
    let checksum = {
        let dir = fresh();
        let file = dir.path().join("layer_0.f32");
        let mut bytes = fs::read(&file).unwrap();
        bytes[3] ^= 0x40;
        fs::write(&file, bytes).unwrap();
        matches!(load_dictionary::<f64>(dir.path()), Err(Error::ChecksumMismatch { .. }))
    };
    let dimension = {
        let dir = fresh();
        edit_manifest(dir.path(), |v| v["d"] = 9.into());
        matches!(load_dictionary::<f64>(dir.path()), Err(Error::DimensionMismatch { .. }))
    };
    outcome(
        mismatches == 0 && version && checksum && dimension,
        format!("{mismatches}/20 round-trip mismatches; errors detected: version {version}, checksum {checksum}, dimension {dimension}"),
    )
}

fn criterion_10() -> Outcome {
    let mut cfg = Config::default();
    cfg.seed = 10;
    cfg.dictionary.synthetic = SyntheticSpec {
        n: 100,
        d: 64,
        subspace_structure: Some((4, 5)),
        samples_per_layer: 8,
        ..SyntheticSpec::default()
    };
    cfg.partition.keywords = vec!["c00".into()];
    cfg.partition.top_k = 5;
    cfg.analysis.enabled = true;
    cfg.analysis.num_clusters = 4;
    cfg.analysis.retrieve_query = Some(0);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_pipeline(&cfg, a.path()).unwrap();
    let rb = run_pipeline(&cfg, b.path()).unwrap();
    let mut differing = Vec::new();
    for name in &ra.artifacts {
        let (pa, pb) = (a.path().join(name), b.path().join(name));
        if pa.is_dir() {
            for entry in fs::read_dir(&pa).unwrap() {
                let file = entry.unwrap().file_name();
                if fs::read(pa.join(&file)).unwrap() != fs::read(pb.join(&file)).unwrap() {
                    differing.push(format!("{name}/{}", file.to_string_lossy()));
                }
            }
        } else if fs::read(&pa).unwrap() != fs::read(&pb).unwrap() {
            differing.push(name.clone());
        }
    }
    let manifest = |dir: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(dir.join(RUN_MANIFEST)).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    if manifest(a.path()) != manifest(b.path()) {
        differing.push(RUN_MANIFEST.into());
    }
    outcome(
        differing.is_empty() && ra.artifacts == rb.artifacts,
        format!("{} artifacts compared, differing: {differing:?}", ra.artifacts.len()),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("least-squares oblique projection equals orthogonal projection", criterion_1),
        ("single-atom ridge oblique projection equals vector addition", criterion_2),
        ("solver matches the reference solver and closed forms", criterion_3),
        ("empty removal is the identity and benign coefficients are preserved", criterion_4),
        ("exact support recovery on incoherent dictionaries", criterion_5),
        ("overcomplete solve budget", criterion_6),
        ("subspace clustering", criterion_7),
        ("energy-based rank selection", criterion_8),
        ("dictionary persistence", criterion_9),
        ("pipeline reproducibility", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("{} criterion {}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
