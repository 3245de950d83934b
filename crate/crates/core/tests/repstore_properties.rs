use std::fmt::Write;
use std::fs;

use dvc_core::engine::{dvc_matrix, summarize, DvcConfig};
use dvc_core::repstore::{
    load_representation, read_matrix, registry_load, write_labels, write_matrix, write_rawbin, Dtype, MatrixFile,
    MatrixFormat, ObserverKind, ObserverMeta,
};
use dvc_core::synthlab::{gen_class_benchmark, ClassBenchmarkSpec, SynthObserverSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3f64..1e3,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

fn matrices() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
        prop::collection::vec(finite(), r * c).prop_map(move |v| DMatrix::from_row_slice(r, c, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rawbin_is_bitwise_lossless(m in matrices()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        write_matrix(&m, &p, MatrixFormat::Rawbin).unwrap();
        let back = read_matrix(&p).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (x, y) in back.iter().zip(m.iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        let info = MatrixFile::inspect(&p).unwrap();
        prop_assert_eq!(info.shape, m.shape());
    }

    #[test]
    fn csv_keeps_fifteen_significant_digits(m in matrices()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_matrix(&m, &p, MatrixFormat::Csv).unwrap();
        let back = read_matrix(&p).unwrap();
        for (x, y) in back.iter().zip(m.iter()) {
            prop_assert!((x - y).abs() <= 1e-15 * y.abs().max(f64::MIN_POSITIVE));
        }
    }
}

#[test]
fn benchmark_sized_rawbin_loads() {
    let dir = tempfile::tempdir().unwrap();
    let m = DMatrix::from_fn(3200, 100, |i, j| ((i * 31 + j * 7) % 97) as f64 / 13.0);
    let labels: Vec<String> = (0..3200).map(|i| format!("cat{}", i / 400)).collect();
    let (mp, lp) = (dir.path().join("v4.bin"), dir.path().join("labels.txt"));
    write_rawbin(&m, &mp, Dtype::F64).unwrap();
    write_labels(&labels, &lp).unwrap();
    let set = load_representation(&mp, &lp, &ObserverMeta::new("v4", ObserverKind::Brain)).unwrap();
    assert_eq!(set.matrix.shape(), (3200, 100));
    assert_eq!(set.n_classes(), 8);
    assert_eq!(set.class_counts(), vec![400; 8]);
}

#[test]
fn fifteen_model_registry_supports_accuracy_regression() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ClassBenchmarkSpec { n_classes: 3, per_class: 20, n_features: 12, ..ClassBenchmarkSpec::default() };
    let mut roster = vec![SynthObserverSpec { kind: ObserverKind::Brain, ..SynthObserverSpec::new("monkey", None, 0.0, 0.3) }];
    for k in 0..15 {
        roster.push(SynthObserverSpec::new(&format!("model{k:02}"), None, 0.0, 0.3 + 0.2 * k as f64));
    }
    let sets = gen_class_benchmark(&spec, &roster, 2).unwrap();
    let mut toml = String::new();
    for (k, (meta, set)) in sets.iter().enumerate() {
        let mp = format!("{}.csv", meta.observer_id);
        write_matrix(&set.matrix, dir.path().join(&mp), MatrixFormat::Csv).unwrap();
        write_labels(&set.label_names(), dir.path().join("labels.txt")).unwrap();
        let kind = if k == 0 { "brain" } else { "model" };
        writeln!(toml, "[[observer]]\nid = \"{}\"\nmatrix = \"{mp}\"\nlabels = \"labels.txt\"\nkind = \"{kind}\"", meta.observer_id).unwrap();
        if k > 0 {
            writeln!(toml, "accuracy = {}", 0.9 - 0.02 * k as f64).unwrap();
        }
    }
    let reg = dir.path().join("registry.toml");
    fs::write(&reg, toml).unwrap();

    let entries = registry_load(&reg).unwrap();
    assert_eq!(entries.iter().filter(|e| e.meta.accuracy.is_some()).count(), 15);
    let loaded: Vec<_> = entries.iter().map(|e| e.load().unwrap()).collect();
    let metas: Vec<_> = entries.iter().map(|e| e.meta.clone()).collect();
    let m = dvc_matrix(&loaded, &DvcConfig { split_repeats: 2, n_pcs: 5, ..DvcConfig::with_seed(1) }).unwrap();
    let s = summarize(&m, &metas).unwrap();
    assert_eq!(s.references, vec!["monkey"]);
    assert_eq!(s.accuracy_correlation.expect("correlation computed").n, 15);
}
