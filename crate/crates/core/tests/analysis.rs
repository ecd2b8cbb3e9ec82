mod common;

use common::{gaussian_matrix, random_dictionary, unit_columns};
use concept_engine::analysis::{
    clustering_accuracy, concat_and_reduce, decomposition_report, ensc_affinity_points, retrieve_top_k,
    similarity, spectral_cluster, ConceptEmbedding, EnscParams, ReductionConfig,
};
use concept_engine::rng::SeedTree;
use concept_engine::solver::{oracle_solve, ElasticNetParams};
use concept_engine::workbench::{planted_low_rank, planted_subspace_points};
use concept_engine::{ConceptDictionary, ConceptEntry};
use nalgebra::{DMatrix, DVector};

fn dictionary(layers: Vec<DMatrix<f64>>) -> ConceptDictionary<f64> {
    let n = layers[0].ncols();
    let entries = (0..n)
        .map(|i| ConceptEntry {
            concept_id: i,
            name: format!("c{i}"),
            stimulus_count: 2,
        })
        .collect();
    let ids = (0..layers.len() as u32).collect();
    ConceptDictionary::new(entries, ids, layers).unwrap()
}

fn reduce(dict: &ConceptDictionary<f64>, energy: f64) -> ConceptEmbedding<f64> {
    concat_and_reduce(
        dict,
        &ReductionConfig {
            energy_fraction: energy,
            layer_subset: None,
        },
    )
    .unwrap()
}

#[test]
fn full_energy_keeps_the_geometry() {
    let layers: Vec<_> = (0..3).map(|l| random_dictionary(6, 10, 20 + l)).collect();
    let dict = dictionary(layers.clone());
    let emb = reduce(&dict, 1.0);
    assert_eq!(emb.reduced_dim, 10);
    let mut gram = DMatrix::<f64>::zeros(10, 10);
    for m in &layers {
        gram += m.tr_mul(m);
    }
    let projected_gram = emb.projected.tr_mul(&emb.projected);
    assert!((projected_gram - gram).amax() <= 1e-8);
}

#[test]
fn low_rank_data_reduces_to_its_rank() {
    let x = unit_columns(planted_low_rank(64, 200, 10, 1e-3, 7));
    let emb = reduce(&dictionary(vec![x]), 0.95);
    assert!(emb.reduced_dim <= 12, "{}", emb.reduced_dim);
    assert!(emb.retained_energy >= 0.95);
}

#[test]
fn retrieval_cases() {
    let mut rng = SeedTree::new(8).rng();
    let mut points = unit_columns(gaussian_matrix(16, 12, &mut rng));
    // concept 7 duplicates concept 3
    let dup = points.column(3).into_owned();
    points.set_column(7, &dup);
    let emb = ConceptEmbedding::from_points(points.clone());
    assert!((similarity(&emb, 3, 7) - 1.0).abs() <= 1e-12);
    assert_eq!(retrieve_top_k(&emb, 3, 1).unwrap()[0].0, 7);
    let all = retrieve_top_k(&emb, 0, 11).unwrap();
    assert_eq!(all.len(), 11);
    let mut ids: Vec<usize> = all.iter().map(|r| r.0).collect();
    ids.sort_unstable();
    assert_eq!(ids, (1..12).collect::<Vec<_>>());
    assert!(all.windows(2).all(|w| w[0].1 >= w[1].1));
    assert!(retrieve_top_k(&emb, 0, 12).is_err());

    // a tight cluster of five near-collinear concepts among random ones
    let base = DVector::from_fn(16, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let mut points = unit_columns(gaussian_matrix(16, 30, &mut rng));
    for (k, j) in [4usize, 9, 13, 21, 27].into_iter().enumerate() {
        let mut v = base.clone();
        v[1 + k] = 0.01;
        points.set_column(j, &v.normalize());
    }
    let emb = ConceptEmbedding::from_points(points);
    let mut top: Vec<usize> = retrieve_top_k(&emb, 4, 4).unwrap().into_iter().map(|r| r.0).collect();
    top.sort_unstable();
    assert_eq!(top, vec![9, 13, 21, 27]);
}

fn zeroed(points: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
    let mut m = points.clone();
    m.column_mut(i).fill(0.0);
    m
}

fn oracle_affinity(points: &DMatrix<f64>, params: &EnscParams, i: usize, j: usize) -> f64 {
    let sp = params.solver_params::<f64>();
    let ci = oracle_solve(&points.column(i).into_owned(), &zeroed(points, i), &sp).unwrap();
    let cj = oracle_solve(&points.column(j).into_owned(), &zeroed(points, j), &sp).unwrap();
    (ci.get(j).abs() + cj.get(i).abs()) / 2.0
}

#[test]
fn three_point_affinity_matches_the_oracle() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let points = DMatrix::from_column_slice(3, 3, &[1.0, 0.0, 0.0, s, s, 0.0, 0.0, 0.0, 1.0]);
    let params = EnscParams {
        gamma: 10.0,
        tau_c: 0.9,
        ..EnscParams::default()
    };
    let out = ensc_affinity_points(&points, &params).unwrap();
    assert!(out.failures.is_empty());
    assert!(out.affinity.is_symmetric());
    for i in 0..3 {
        assert_eq!(out.affinity.get(i, i), 0.0);
        for j in 0..3 {
            if i != j {
                assert!((out.affinity.get(i, j) - oracle_affinity(&points, &params, i, j)).abs() <= 1e-6);
            }
        }
    }
    assert!(out.affinity.get(0, 1) > 0.1);
    assert_eq!(out.affinity.get(0, 2), 0.0);
}

#[test]
fn orthogonal_subspaces_have_no_cross_affinity() {
    let (points, labels) = planted_subspace_points(8, 2, 2, 6, 0.0, 9).unwrap();
    let params = EnscParams {
        gamma: 50.0,
        ..EnscParams::default()
    };
    let out = ensc_affinity_points(&points, &params).unwrap();
    assert!(out.failures.is_empty());
    let n = points.ncols();
    for i in 0..n {
        for j in 0..n {
            if labels[i] != labels[j] {
                assert!(out.affinity.get(i, j) <= 1e-6);
            }
        }
    }
    for (i, j) in [(0, 1), (0, 7), (3, 11)] {
        if i < n && j < n {
            assert!((out.affinity.get(i, j) - oracle_affinity(&points, &params, i, j)).abs() <= 1e-6);
        }
    }
    let clusters = spectral_cluster(&out.affinity, 2, 0).unwrap();
    assert!(clustering_accuracy(&clusters.labels, &labels).unwrap() >= 0.95);
}

#[test]
fn two_subspaces_cluster_with_noise() {
    let (points, labels) = planted_subspace_points(32, 2, 3, 20, 0.01, 10).unwrap();
    let out = ensc_affinity_points(&points, &EnscParams::default()).unwrap();
    let clusters = spectral_cluster(&out.affinity, 2, 1).unwrap();
    assert_eq!(clusters.num_clusters, 2);
    assert!(clustering_accuracy(&clusters.labels, &labels).unwrap() >= 0.95);
}

#[test]
fn report_cases() {
    let dict = random_dictionary(32, 12, 11);
    let names: Vec<String> = (0..12).map(|i| format!("concept {i}")).collect();
    let params = ElasticNetParams::new(0.01, 0.95).with_tol(1e-10);

    let z = dict.column(5) * 2.0;
    let (rows, _) = decomposition_report(&z, &dict, &names, &params, 3).unwrap();
    assert_eq!(rows[0].concept_id, 5);
    assert_eq!(rows[0].name, "concept 5");
    assert!((rows[0].coefficient - 2.0).abs() <= 0.05);

    let (rows, code) = decomposition_report(&DVector::zeros(32), &dict, &names, &params, 3).unwrap();
    assert!(rows.is_empty());
    assert!(code.indices.is_empty());

    let z = dict.column(1) * 1.0 - dict.column(4) * 0.7 + dict.column(9) * 0.4;
    let (rows, _) = decomposition_report(&z, &dict, &names, &params, 3).unwrap();
    let ids: Vec<usize> = rows.iter().map(|r| r.concept_id).collect();
    assert_eq!(ids, vec![1, 4, 9]);
    assert!(rows[1].coefficient < 0.0);
}
