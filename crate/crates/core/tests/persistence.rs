mod common;

use std::fs;
use std::path::Path;

use common::{gaussian_matrix, unit_columns};
use concept_engine::dictionary::{load_dictionary, save_dictionary, FORMAT_VERSION};
use concept_engine::rng::SeedTree;
use concept_engine::{ConceptDictionary, ConceptEntry, Error};
use nalgebra::DMatrix;
use rand::Rng;
use serde_json::Value;

fn random_f32_dictionary(seed: u64) -> ConceptDictionary<f32> {
    let mut rng = SeedTree::new(seed).rng();
    let d = rng.random_range(1..20);
    let n = rng.random_range(1..30);
    let num_layers = rng.random_range(1..4);
    let layers: Vec<DMatrix<f32>> = (0..num_layers)
        .map(|_| unit_columns(gaussian_matrix(d, n, &mut rng)).map(|x| x as f32))
        .collect();
    let entries = (0..n)
        .map(|i| ConceptEntry {
            concept_id: i,
            name: format!("concept, \"{i}\" ü"),
            stimulus_count: 2 + i,
        })
        .collect();
    let mut ids: Vec<u32> = (0..num_layers as u32).map(|l| l * 3 + 1).collect();
    ids.sort_unstable();
    ConceptDictionary::new(entries, ids, layers).unwrap()
}

fn edit_manifest(dir: &Path, edit: impl FnOnce(&mut Value)) {
    let path = dir.join("manifest.json");
    let mut v: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    edit(&mut v);
    fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
}

#[test]
fn f32_dictionaries_round_trip_bit_for_bit() {
    for seed in 0..20 {
        let dict = random_f32_dictionary(seed);
        let dir = tempfile::tempdir().unwrap();
        save_dictionary(&dict, dir.path()).unwrap();
        let back: ConceptDictionary<f32> = load_dictionary(dir.path()).unwrap();
        assert_eq!(back.entries(), dict.entries());
        assert_eq!(back.layer_ids(), dict.layer_ids());
        for ((_, a), (_, b)) in dict.layers().zip(back.layers()) {
            let bits_a: Vec<u32> = a.iter().map(|x| x.to_bits()).collect();
            let bits_b: Vec<u32> = b.iter().map(|x| x.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }
}

#[test]
fn version_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_dictionary(&random_f32_dictionary(1), dir.path()).unwrap();
    edit_manifest(dir.path(), |v| v["format_version"] = (FORMAT_VERSION + 1).into());
    let err = load_dictionary::<f32>(dir.path()).unwrap_err();
    assert!(matches!(err, Error::FormatVersionMismatch { found, .. } if found == FORMAT_VERSION + 1));
}

#[test]
fn corrupted_layer_fails_the_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let dict = random_f32_dictionary(2);
    save_dictionary(&dict, dir.path()).unwrap();
    let file = dir.path().join(format!("layer_{}.f32", dict.layer_ids()[0]));
    let mut bytes = fs::read(&file).unwrap();
    bytes[0] ^= 0x01;
    fs::write(&file, bytes).unwrap();
    assert!(matches!(load_dictionary::<f32>(dir.path()), Err(Error::ChecksumMismatch { .. })));
}

#[test]
fn wrong_dimensions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dict = random_f32_dictionary(3);
    save_dictionary(&dict, dir.path()).unwrap();
    // a truncated layer file with a matching checksum
    let file = dir.path().join(format!("layer_{}.f32", dict.layer_ids()[0]));
    let mut bytes = fs::read(&file).unwrap();
    bytes.truncate(bytes.len() - 4);
    fs::write(&file, &bytes).unwrap();
    let crc = crc32fast::hash(&bytes);
    edit_manifest(dir.path(), |v| v["layers"][0]["crc32"] = crc.into());
    assert!(matches!(load_dictionary::<f32>(dir.path()), Err(Error::DimensionMismatch { .. })));

    let dir = tempfile::tempdir().unwrap();
    save_dictionary(&dict, dir.path()).unwrap();
    edit_manifest(dir.path(), |v| v["n"] = (dict.num_concepts() + 1).into());
    assert!(matches!(load_dictionary::<f32>(dir.path()), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn missing_container_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_dictionary::<f64>(&dir.path().join("absent")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}
