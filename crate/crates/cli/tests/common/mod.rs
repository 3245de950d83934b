#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dvc_core::repstore::{write_labels, write_matrix, MatrixFormat, RepresentationSet};
use dvc_core::synthlab::{gen_class_benchmark, ClassBenchmarkSpec, SynthObserverSpec};

pub fn dvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dvc"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn dvc")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn small_spec() -> ClassBenchmarkSpec {
    ClassBenchmarkSpec { n_classes: 4, per_class: 60, latent_dims: 4, n_features: 20, ..ClassBenchmarkSpec::default() }
}

pub fn write_set(dir: &Path, set: &RepresentationSet) -> PathBuf {
    let path = dir.join(format!("{}.bin", set.observer_id));
    write_matrix(&set.matrix, &path, MatrixFormat::Rawbin).unwrap();
    path
}

/// Three observers (two siblings and an outsider) written as rawbin files
/// with a shared labels file and a registry.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub files: Vec<PathBuf>,
    pub labels: PathBuf,
    pub registry: PathBuf,
}

pub fn fixture(spec: &ClassBenchmarkSpec) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let observers = [
        SynthObserverSpec::new("net_a", Some("conv"), 1.0, 0.5),
        SynthObserverSpec::new("net_b", Some("conv"), 1.0, 0.5),
        SynthObserverSpec::new("other", Some("mlp"), 1.0, 0.5),
    ];
    let sets = gen_class_benchmark(spec, &observers, 11).unwrap();
    let labels = dir.path().join("labels.txt");
    write_labels(&sets[0].1.label_names(), &labels).unwrap();
    let mut registry = String::new();
    let mut files = Vec::new();
    for (meta, set) in &sets {
        let f = write_set(dir.path(), set);
        registry.push_str(&format!(
            "[[observer]]\nid = \"{}\"\nmatrix = \"{}.bin\"\nlabels = \"labels.txt\"\nfamily = \"{}\"\n\n",
            meta.observer_id,
            meta.observer_id,
            meta.family.as_deref().unwrap()
        ));
        files.push(f);
    }
    let reg = dir.path().join("registry.toml");
    std::fs::write(&reg, registry).unwrap();
    Fixture { dir, files, labels, registry: reg }
}

pub fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Runs every command twice into separate directories; returns the list of
/// files that differ (empty when byte-identical) and the number compared.
pub fn determinism_check(fx: &Fixture) -> (Vec<String>, usize) {
    let (a, b, c) = (p(&fx.files[0]), p(&fx.files[1]), p(&fx.files[2]));
    let labels = p(&fx.labels);
    let runs: Vec<Vec<String>> = vec![
        vec!["dvc-pair", "--a", a, "--b", b, "--labels", labels],
        vec!["dvc-matrix", "--registry", p(&fx.registry)],
        vec!["kappa", "--a", a, "--b", c, "--labels", labels, "--decoder", "logreg"],
        vec!["rsa", "--a", a, "--b", c, "--labels", labels],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let mut diffs = Vec::new();
    let mut compared = 0;
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = fx.dir.path().join(format!("det_{k}_{rep}"));
            let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
            full.extend(["--seed", "7", "--out", p(&out)]);
            let res = dvc(&full);
            assert!(code(&res) != 1, "{args:?} failed: {}", String::from_utf8_lossy(&res.stderr));
            outputs.push(read_dir_sorted(&out));
        }
        compared += outputs[0].len();
        if outputs[0] != outputs[1] {
            diffs.push(args[0].clone());
        }
    }
    (diffs, compared)
}
