//! End-to-end tests of the `laminar` binary: exit codes, file outputs,
//! determinism of re-runs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_laminar"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("laminar_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn laminar");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn generate_moons(dir: &Path, n: usize) -> PathBuf {
    let csv = dir.join("moons.csv");
    run_ok(bin().args([
        "generate",
        "--kind",
        "two-moons",
        "--n",
        &n.to_string(),
        "--seed",
        "7",
        "--out",
        csv.to_str().unwrap(),
    ]));
    csv
}

fn train_tiny(dir: &Path, data: &Path) -> PathBuf {
    let ckpt = dir.join("model.ckpt");
    run_ok(bin().args([
        "train",
        "--data",
        data.to_str().unwrap(),
        "--out",
        ckpt.to_str().unwrap(),
        "--epochs",
        "5",
        "--flow-width",
        "4",
        "--hidden-width",
        "4",
        "--steps-train",
        "8",
        "--steps-inference",
        "8",
    ]));
    ckpt
}

#[test]
fn generate_is_byte_deterministic() {
    let dir = tmp("generate_det");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out in [&a, &b] {
        run_ok(bin().args([
            "generate",
            "--kind",
            "two-moons",
            "--n",
            "200",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let sa = a.with_extension("spec.json");
    let sb = b.with_extension("spec.json");
    assert_eq!(std::fs::read(&sa).unwrap(), std::fs::read(&sb).unwrap());
    // header + n rows, 2 coords + label
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 201);
    assert!(text.starts_with("x1,x2,label\n"));
}

#[test]
fn invalid_kind_is_usage_error() {
    let out = bin()
        .args(["generate", "--kind", "spiral-of-doom", "--out", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_file_is_runtime_error() {
    let dir = tmp("missing_data");
    let out = bin()
        .args([
            "train",
            "--data",
            dir.join("nope.csv").to_str().unwrap(),
            "--out",
            dir.join("m.ckpt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn distances_single_source_and_rerun_determinism() {
    let dir = tmp("distances");
    let csv = generate_moons(&dir, 120);
    let ckpt = train_tiny(&dir, &csv);

    let out1 = dir.join("d1");
    run_ok(bin().args([
        "distances",
        "--model",
        ckpt.to_str().unwrap(),
        "--data",
        csv.to_str().unwrap(),
        "--k",
        "10",
        "--source",
        "0",
        "--out-dir",
        out1.to_str().unwrap(),
    ]));
    // the source row starts at distance zero
    let matrix = laminar::DistanceMatrix::load(&out1.join("distances.bin")).unwrap();
    assert_eq!(matrix.sources, vec![0]);
    assert_eq!(matrix.values[(0, 0)], 0.0);

    let out2 = dir.join("d2");
    run_ok(bin().args([
        "distances",
        "--model",
        ckpt.to_str().unwrap(),
        "--data",
        csv.to_str().unwrap(),
        "--k",
        "10",
        "--source",
        "0",
        "--out-dir",
        out2.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(out1.join("distances.bin")).unwrap(),
        std::fs::read(out2.join("distances.bin")).unwrap(),
        "re-running distances must be bit-identical"
    );
    assert_eq!(
        std::fs::read(out1.join("tensors.bin")).unwrap(),
        std::fs::read(out2.join("tensors.bin")).unwrap()
    );
}

#[test]
fn dimension_mismatch_names_both_dims() {
    let dir = tmp("dim_mismatch");
    let csv = generate_moons(&dir, 80);
    let ckpt = train_tiny(&dir, &csv);
    // 3-column data against the 2-D model
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "x1,x2,x3\n1,2,3\n4,5,6\n").unwrap();
    let out = bin()
        .args([
            "distances",
            "--model",
            ckpt.to_str().unwrap(),
            "--data",
            bad.to_str().unwrap(),
            "--k",
            "1",
            "--out-dir",
            dir.join("dd").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains('2') && stderr.contains('3'),
        "stderr: {stderr}"
    );
}

#[test]
fn cluster_prints_jaccard_table_with_truth_labels() {
    let dir = tmp("cluster");
    let csv = generate_moons(&dir, 150);
    let ckpt = train_tiny(&dir, &csv);
    let ddir = dir.join("dists");
    run_ok(bin().args([
        "distances",
        "--model",
        ckpt.to_str().unwrap(),
        "--data",
        csv.to_str().unwrap(),
        "--k",
        "12",
        "--out-dir",
        ddir.to_str().unwrap(),
    ]));
    let labels = dir.join("labels.csv");
    let out = run_ok(bin().args([
        "cluster",
        "--distances",
        ddir.join("distances.bin").to_str().unwrap(),
        "--k",
        "2",
        "--data",
        csv.to_str().unwrap(),
        "--out",
        labels.to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("jaccard"), "stdout: {stdout}");
    let text = std::fs::read_to_string(&labels).unwrap();
    assert_eq!(text.lines().count(), 151); // header + one label per point
    assert!(text.starts_with("label\n"));
}

#[test]
fn compare_uses_sidecar_transform() {
    let dir = tmp("compare");
    let csv = dir.join("shear.csv");
    run_ok(bin().args([
        "generate",
        "--kind",
        "sheared-disk",
        "--n",
        "100",
        "--seed",
        "3",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let ckpt = train_tiny(&dir, &csv);
    let out = run_ok(bin().args([
        "compare",
        "--model",
        ckpt.to_str().unwrap(),
        "--data",
        csv.to_str().unwrap(),
        "--out",
        dir.join("scores.csv").to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("median"), "stdout: {stdout}");
    assert!(dir.join("scores.csv").exists());
}

#[test]
fn viz_emits_svg_with_manifest() {
    let dir = tmp("viz");
    let csv = generate_moons(&dir, 100);
    let ckpt = train_tiny(&dir, &csv);
    let ddir = dir.join("dists");
    run_ok(bin().args([
        "distances",
        "--model",
        ckpt.to_str().unwrap(),
        "--data",
        csv.to_str().unwrap(),
        "--k",
        "10",
        "--source",
        "0",
        "--out-dir",
        ddir.to_str().unwrap(),
    ]));
    let fig = dir.join("distance.svg");
    run_ok(bin().args([
        "viz",
        "distance",
        "--data",
        csv.to_str().unwrap(),
        "--distances",
        ddir.join("distances.bin").to_str().unwrap(),
        "--out",
        fig.to_str().unwrap(),
    ]));
    assert!(fig.exists());
    let manifest = dir.join("distance.manifest.json");
    assert!(manifest.exists());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(parsed["figure"], "distance_map");

    let tens = dir.join("tensors.svg");
    run_ok(bin().args([
        "viz",
        "tensors",
        "--tensors",
        ddir.join("tensors.bin").to_str().unwrap(),
        "--out",
        tens.to_str().unwrap(),
    ]));
    assert!(tens.exists());
}

#[test]
fn training_loss_log_is_smoothly_decreasing_on_blob_data() {
    let dir = tmp("loss_log");
    // correlated Gaussian blob: per-coordinate standardization cannot whiten
    // it, so there is steady likelihood to gain
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let mut csv = String::from("x1,x2\n");
    for _ in 0..200 {
        let g1: f64 = rng.sample(rand_distr::StandardNormal);
        let g2: f64 = rng.sample(rand_distr::StandardNormal);
        csv.push_str(&format!("{},{}\n", g1, 0.9 * g1 + 0.43 * g2));
    }
    let data = dir.join("blob.csv");
    std::fs::write(&data, csv).unwrap();
    let ckpt = dir.join("blob.ckpt");
    run_ok(bin().args([
        "train",
        "--data",
        data.to_str().unwrap(),
        "--out",
        ckpt.to_str().unwrap(),
        "--epochs",
        "40",
        "--learning-rate",
        "0.002",
        "--flow-width",
        "8",
        "--hidden-width",
        "8",
        "--steps-train",
        "8",
        "--steps-inference",
        "8",
    ]));
    let log = std::fs::read_to_string(ckpt.with_extension("loss.csv")).unwrap();
    let losses: Vec<f64> = log
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 40);
    // 10-epoch moving average must never increase
    let smoothed: Vec<f64> =
        losses.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    for pair in smoothed.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-9,
            "smoothed loss increased: {} -> {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn checkpoint_reload_reproduces_loss_exactly() {
    let dir = tmp("reload_loss");
    let csv = generate_moons(&dir, 100);
    let ckpt = train_tiny(&dir, &csv);
    let a = laminar::pipeline::checkpoint_loss(&ckpt, &csv, 8).unwrap();
    let b = laminar::pipeline::checkpoint_loss(&ckpt, &csv, 8).unwrap();
    assert_eq!(a, b);
    // and through a fresh copy of the checkpoint file
    let copy = dir.join("copy.ckpt");
    std::fs::copy(&ckpt, &copy).unwrap();
    let c = laminar::pipeline::checkpoint_loss(&copy, &csv, 8).unwrap();
    assert_eq!(a, c);
}
