use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use dvc_core::consistency::{
    decide_groupmean, decide_logreg, kappa as kappa_of, rdm, rsa_category, ClassGroupMap, DecisionRecord,
    KappaResult,
};
use dvc_core::engine::{self, summarize, DvcConfig, DvcResult};
use dvc_core::repstore::{
    load_representation, read_labels, read_matrix, registry_load, ObserverKind, ObserverMeta, RepresentationSet,
};
use dvc_core::synthlab::{
    sweep_bias, sweep_recovery, sweep_shared_fluctuation, BiasObserverSpec, RecoverySpec, SharedFluctuationSpec,
};
use dvc_core::Error;

use crate::output::{fmt_f64, CsvText, OutDir, Row};
use crate::{Common, Decoder, Outcome, SimKind, Status};

/// Observer id from a file name: the stem, without directory or extension.
fn observer_id(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .with_context(|| format!("cannot derive an observer id from {}", path.display()))
}

fn load_observer(path: &Path, labels: &Path) -> Result<RepresentationSet> {
    let meta = ObserverMeta::new(observer_id(path)?, ObserverKind::Model);
    load_representation(path, labels, &meta).with_context(|| format!("loading {}", path.display()))
}

fn read_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn load_config(path: Option<&Path>, seed: u64) -> Result<DvcConfig> {
    let mut cfg: DvcConfig = read_toml(path)?;
    cfg.seed = seed;
    cfg.validate()?;
    Ok(cfg)
}

fn entry_status(r: &DvcResult) -> Status {
    if r.aggregate.is_none() {
        Status::Failed
    } else if r.diagnostics.n_degenerate > 0 {
        Status::Partial
    } else {
        Status::Complete
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn entries_csv(results: &[&DvcResult]) -> String {
    let mut csv = CsvText::new(&[
        "observer_a",
        "observer_b",
        "class_a",
        "class_b",
        "conditioning_class",
        "corrected",
        "r_cross",
        "r_self",
        "self_a",
        "self_b",
        "capped",
        "valid_repeats",
        "capped_repeats",
        "degenerate_reason",
    ]);
    for r in results {
        for e in &r.entries {
            let c = e.components;
            csv.record([
                r.observer_a.clone(),
                r.observer_b.clone(),
                e.class_pair.0.clone(),
                e.class_pair.1.clone(),
                e.conditioning_class.clone(),
                opt(c.map(|c| c.corrected)),
                opt(c.map(|c| c.r_cross)),
                opt(c.map(|c| c.r_self)),
                opt(c.map(|c| c.self_a)),
                opt(c.map(|c| c.self_b)),
                c.map(|c| c.capped_flag.to_string()).unwrap_or_default(),
                e.valid_repeats.to_string(),
                e.capped_repeats.to_string(),
                e.degenerate_reason.clone().unwrap_or_default(),
            ]);
        }
    }
    csv.into_string()
}

fn dvc_row(r: &DvcResult) -> Row {
    Row::new(&r.observer_a, &r.observer_b, "dvc", r.aggregate.unwrap_or(f64::NAN))
}

pub fn dvc_pair(a: &Path, b: &Path, labels: &Path, config: Option<&Path>, common: &Common) -> Result<Outcome> {
    let cfg = load_config(config, common.seed)?;
    let sa = load_observer(a, labels)?;
    let sb = load_observer(b, labels)?;
    let result = engine::dvc_pair(&sa, &sb, &cfg)?;

    #[derive(Serialize)]
    struct Out<'a> {
        #[serde(flatten)]
        result: &'a DvcResult,
        rows: Vec<Row>,
    }
    let mut out = OutDir::create(&common.out)?;
    out.write_json("dvc_pair.json", &Out { result: &result, rows: vec![dvc_row(&result)] })?;
    out.write_bytes("entries.csv", entries_csv(&[&result]).as_bytes())?;
    Ok(Outcome { status: entry_status(&result), files: out.written().to_vec() })
}

pub fn dvc_matrix(registry: &Path, config: Option<&Path>, common: &Common) -> Result<Outcome> {
    let cfg = load_config(config, common.seed)?;
    let entries = registry_load(registry).with_context(|| format!("loading registry {}", registry.display()))?;
    if entries.is_empty() {
        bail!("registry {} lists no observers", registry.display());
    }
    let sets = entries
        .iter()
        .map(|e| e.load().with_context(|| format!("loading observer {:?}", e.meta.observer_id)))
        .collect::<Result<Vec<_>>>()?;
    let metas: Vec<ObserverMeta> = entries.iter().map(|e| e.meta.clone()).collect();
    let m = engine::dvc_matrix(&sets, &cfg)?;
    let summary = summarize(&m, &metas)?;

    let mut header = vec!["observer"];
    header.extend(m.ids.iter().map(String::as_str));
    let mut csv = CsvText::new(&header);
    for (i, id) in m.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend((0..m.ids.len()).map(|j| fmt_f64(m.values[(i, j)])));
        csv.record(rec);
    }

    #[derive(Serialize)]
    struct Entries<'a> {
        config: &'a DvcConfig,
        results: &'a [DvcResult],
        failures: &'a [engine::PairFailure],
    }
    #[derive(Serialize)]
    struct SummaryOut<'a> {
        #[serde(flatten)]
        summary: &'a engine::Summary,
        rows: Vec<Row>,
    }
    let mut rows: Vec<Row> = m.results.iter().map(dvc_row).collect();
    rows.extend(m.failures.iter().map(|f| Row::new(&f.observer_a, &f.observer_b, "dvc", f64::NAN)));

    let mut out = OutDir::create(&common.out)?;
    out.write_bytes("matrix.csv", csv.into_string().as_bytes())?;
    out.write_bytes("entries.csv", entries_csv(&m.results.iter().collect::<Vec<_>>()).as_bytes())?;
    out.write_json("entries.json", &Entries { config: &cfg, results: &m.results, failures: &m.failures })?;
    out.write_json("summary.json", &SummaryOut { summary: &summary, rows })?;

    for f in &m.failures {
        warn!("pair {} / {} failed: {}", f.observer_a, f.observer_b, f.reason);
    }
    let computed = m.values.iter().filter(|v| v.is_finite()).count();
    let status = if computed == 0 {
        Status::Failed
    } else if m.is_partial() || m.results.iter().any(|r| r.diagnostics.n_degenerate > 0) {
        Status::Partial
    } else {
        Status::Complete
    };
    Ok(Outcome { status, files: out.written().to_vec() })
}

/// Truth labels for the coarse decision space: fine labels are mapped
/// through the group map, coarse labels are kept.
fn coarse_truth(labels: &[String], map: &ClassGroupMap) -> Result<Vec<String>> {
    let coarse = map.coarse_classes();
    labels
        .iter()
        .map(|l| match map.groups.get(l) {
            Some(c) => Ok(c.clone()),
            None if coarse.contains(l) => Ok(l.clone()),
            None => bail!("label {l:?} is neither a fine nor a coarse class of the group map"),
        })
        .collect()
}

fn groupmean_record(path: &Path, truth: &[String], map: &ClassGroupMap) -> Result<DecisionRecord> {
    let probs: DMatrix<f64> = read_matrix(path).with_context(|| format!("loading {}", path.display()))?;
    if probs.nrows() != truth.len() {
        bail!("{} has {} rows but there are {} labels", path.display(), probs.nrows(), truth.len());
    }
    let choices = decide_groupmean(&probs, map).with_context(|| format!("decoding {}", path.display()))?;
    Ok(DecisionRecord::new(choices, truth.to_vec())?)
}

pub fn kappa(
    a: &Path,
    b: &Path,
    labels: &Path,
    decoder: Decoder,
    groups: Option<&Path>,
    folds: usize,
    common: &Common,
) -> Result<Outcome> {
    let (id_a, id_b) = (observer_id(a)?, observer_id(b)?);
    let (da, db) = match decoder {
        Decoder::Logreg => {
            if groups.is_some() {
                warn!("--groups is ignored by the logreg decoder");
            }
            let sa = load_observer(a, labels)?;
            let sb = load_observer(b, labels)?;
            if !sa.same_stimuli(&sb) {
                bail!(Error::LabelMismatch("observers do not share stimuli".into()));
            }
            (decide_logreg(&sa, folds, common.seed)?, decide_logreg(&sb, folds, common.seed)?)
        }
        Decoder::Groupmean => {
            let groups = groups.context("--groups is required for the groupmean decoder")?;
            let map = ClassGroupMap::read_csv(groups)?;
            let truth = coarse_truth(&read_labels(labels)?, &map)?;
            (groupmean_record(a, &truth, &map)?, groupmean_record(b, &truth, &map)?)
        }
    };

    #[derive(Serialize)]
    struct Out {
        observer_a: String,
        observer_b: String,
        decoder: Decoder,
        folds: Option<usize>,
        seed: u64,
        result: Option<KappaResult>,
        #[serde(skip_serializing_if = "Option::is_none")]
        degenerate_reason: Option<String>,
        rows: Vec<Row>,
    }
    let (result, reason, status) = match kappa_of(&da, &db) {
        Ok(k) => (Some(k), None, Status::Complete),
        Err(Error::Degenerate(msg)) => {
            warn!("kappa is undefined: {msg}");
            (None, Some(msg), Status::Partial)
        }
        Err(e) => return Err(e.into()),
    };
    let rows = vec![Row::new(&id_a, &id_b, "kappa", result.map_or(f64::NAN, |k| k.kappa))];
    let body = Out {
        observer_a: id_a,
        observer_b: id_b,
        decoder,
        folds: (decoder == Decoder::Logreg).then_some(folds),
        seed: common.seed,
        result,
        degenerate_reason: reason,
        rows,
    };

    let mut out = OutDir::create(&common.out)?;
    out.write_json("kappa.json", &body)?;
    for (name, rec) in [("decisions_a.csv", &da), ("decisions_b.csv", &db)] {
        let mut csv = CsvText::new(&["trial", "choice", "truth"]);
        for (t, (c, y)) in rec.choices.iter().zip(&rec.truth).enumerate() {
            csv.record([t.to_string(), c.clone(), y.clone()]);
        }
        out.write_bytes(name, csv.into_string().as_bytes())?;
    }
    Ok(Outcome { status, files: out.written().to_vec() })
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rsa(a: &Path, b: &Path, labels: &Path, common: &Common) -> Result<Outcome> {
    let sa = load_observer(a, labels)?;
    let sb = load_observer(b, labels)?;
    let value = rsa_category(&sa, &sb)?;

    #[derive(Serialize)]
    struct Out {
        observer_a: String,
        observer_b: String,
        rsa: f64,
        rdm_distance: &'static str,
        comparison: &'static str,
        class_names: Vec<String>,
        rdm_a: Vec<Vec<f64>>,
        rdm_b: Vec<Vec<f64>>,
        rows: Vec<Row>,
    }
    let rows = vec![Row::new(&sa.observer_id, &sb.observer_id, "rsa", value)];
    let body = Out {
        observer_a: sa.observer_id.clone(),
        observer_b: sb.observer_id.clone(),
        rsa: value,
        rdm_distance: "1 - pearson",
        comparison: "spearman, upper triangle",
        class_names: sa.class_names.clone(),
        rdm_a: rows_of(&rdm(&sa)?),
        rdm_b: rows_of(&rdm(&sb)?),
        rows,
    };
    let mut out = OutDir::create(&common.out)?;
    out.write_json("rsa.json", &body)?;
    Ok(Outcome { status: Status::Complete, files: out.written().to_vec() })
}

fn bias_levels() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 3.0]
}

fn shared_levels() -> Vec<f64> {
    vec![0.0, 4.0, 8.0, 16.0, 32.0]
}

fn replicates() -> usize {
    20
}

/// Bias sweep file: the swept levels, replicate count and the observer model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSim {
    pub levels: Vec<f64>,
    pub replicates: usize,
    pub model: BiasObserverSpec,
}

impl Default for BiasSim {
    fn default() -> Self {
        BiasSim { levels: bias_levels(), replicates: replicates(), model: BiasObserverSpec::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharedSim {
    pub levels: Vec<f64>,
    pub replicates: usize,
    pub model: SharedFluctuationSpec,
}

impl Default for SharedSim {
    fn default() -> Self {
        SharedSim { levels: shared_levels(), replicates: replicates(), model: SharedFluctuationSpec::default() }
    }
}

fn check_levels(levels: &[f64], replicates: usize, bad: &mut Vec<String>) {
    if levels.len() < 2 {
        bad.push(format!("levels: need at least 2, got {}", levels.len()));
    }
    if let Some(v) = levels.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        bad.push(format!("levels: {v} is not a finite non-negative number"));
    }
    if replicates == 0 {
        bad.push("replicates must be at least 1".into());
    }
}

/// Collects every problem in a spec before failing.
fn finish_validation(kind: &str, mut bad: Vec<String>, model: dvc_core::Result<()>) -> Result<()> {
    if let Err(e) = model {
        bad.push(e.to_string());
    }
    if !bad.is_empty() {
        bail!("invalid {kind} spec:\n  {}", bad.join("\n  "));
    }
    Ok(())
}

pub fn simulate(kind: SimKind, spec: Option<&Path>, common: &Common) -> Result<Outcome> {
    let seed = common.seed;
    let mut out = OutDir::create(&common.out)?;
    let (csv, spec_json, any_nan) = match kind {
        SimKind::Recovery => {
            let s: RecoverySpec = read_toml(spec)?;
            let rows = sweep_recovery(&s, seed)?;
            let mut csv = CsvText::new(&[
                "rho_true",
                "noise",
                "mean_corrected",
                "sd_corrected",
                "mean_uncorrected",
                "predicted_uncorrected",
                "n_valid",
            ]);
            for r in &rows {
                csv.record([
                    fmt_f64(r.rho_true),
                    fmt_f64(r.noise),
                    fmt_f64(r.mean_corrected),
                    fmt_f64(r.sd_corrected),
                    fmt_f64(r.mean_uncorrected),
                    fmt_f64(r.predicted_uncorrected),
                    r.n_valid.to_string(),
                ]);
            }
            let nan = rows.iter().any(|r| r.n_valid < s.replicates);
            (csv, serde_json::to_value(&s)?, nan)
        }
        SimKind::Bias => {
            let s: BiasSim = read_toml(spec)?;
            let mut bad = Vec::new();
            check_levels(&s.levels, s.replicates, &mut bad);
            finish_validation("bias", bad, s.model.validate())?;
            let rows = sweep_bias(&s.model, &s.levels, seed, s.replicates)?;
            let mut csv = CsvText::new(&["bias_scale", "kappa", "dvc", "accuracy"]);
            for r in &rows {
                csv.record([fmt_f64(r.bias_scale), fmt_f64(r.kappa), fmt_f64(r.dvc), fmt_f64(r.accuracy)]);
            }
            let nan = rows.iter().any(|r| !(r.kappa.is_finite() && r.dvc.is_finite()));
            (csv, serde_json::to_value(&s)?, nan)
        }
        SimKind::Shared => {
            let s: SharedSim = read_toml(spec)?;
            let mut bad = Vec::new();
            check_levels(&s.levels, s.replicates, &mut bad);
            finish_validation("shared", bad, s.model.validate())?;
            let rows = sweep_shared_fluctuation(&s.model, &s.levels, seed, s.replicates)?;
            let mut csv = CsvText::new(&["shared_sd", "dvc", "rsa"]);
            for r in &rows {
                csv.record([fmt_f64(r.shared_sd), fmt_f64(r.dvc), fmt_f64(r.rsa)]);
            }
            let nan = rows.iter().any(|r| !(r.dvc.is_finite() && r.rsa.is_finite()));
            (csv, serde_json::to_value(&s)?, nan)
        }
    };
    let mut echo = BTreeMap::new();
    echo.insert("kind", serde_json::to_value(kind)?);
    echo.insert("seed", serde_json::to_value(seed)?);
    echo.insert("spec", spec_json);
    out.write_bytes("sweep.csv", csv.into_string().as_bytes())?;
    out.write_json("spec.json", &echo)?;
    let status = if any_nan { Status::Partial } else { Status::Complete };
    Ok(Outcome { status, files: out.written().to_vec() })
}
