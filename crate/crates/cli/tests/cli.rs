use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concept-engine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path) {
    let out = run(&["--output-dir", dir.to_str().unwrap(), "synth", "--n", "30", "--d", "12", "--samples", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_then_decompose_and_intervene() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let dict = dir.path().join("dictionary");
    let frames = dir.path().join("frames.f32");
    let (dict, frames) = (dict.to_str().unwrap(), frames.to_str().unwrap());

    let out = run(&["validate-dict", "--dict", dict]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["decompose", "--dict", dict, "--frames", frames, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("concept_id,name,coefficient\n"));
    assert!(text.lines().count() > 1);

    let target = dir.path().join("controlled");
    let out = run(&[
        "--output-dir",
        target.to_str().unwrap(),
        "intervene",
        "--dict",
        dict,
        "--frames",
        frames,
        "--undesirable",
        "1,2,3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.is_object());
    assert!(target.join("frames_out.f32").is_file());
}

#[test]
fn invalid_parameters_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--output-dir", dir.path().to_str().unwrap(), "bench", "--n", "30", "--d", "12", "--alpha=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let out = run(&["--config", dir.path().join("absent.toml").to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nunknown_key = 3\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["validate-dict", "--dict", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn strict_mode_flags_nonconvergence_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--output-dir", dir.path().to_str().unwrap(), "bench", "--n", "200", "--d", "32", "--s", "10", "--max-iter", "1"];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let mut strict = vec!["--strict"];
    strict.extend(args);
    let out = run(&strict);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn run_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 3\noutput_dir = \"out\"\n[dictionary.synthetic]\nn = 40\nd = 16\n[partition]\nundesirable = [0, 4]\n",
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/run_manifest.json").is_file());
}
