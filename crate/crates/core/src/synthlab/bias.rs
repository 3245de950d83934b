use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_of, normal};
use crate::consistency::{kappa, DecisionRecord};
use crate::engine::{dvc_pair, DvcConfig};
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::seed;

/// Two observers whose 10-way outputs are one-hot(truth) plus noise plus a
/// class bias vector shared by every trial and both observers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasObserverSpec {
    pub n_classes: usize,
    pub per_class: usize,
    /// Independent per-observer, per-output noise.
    pub noise_sd: f64,
    pub bias_scale: f64,
    /// Defaults to 0.1·(k+1) for output k.
    pub class_bias_pattern: Option<Vec<f64>>,
    /// Per-trial fluctuation common to both observers, spread over the
    /// outputs through a fixed random direction.
    pub shared_sd: f64,
    pub dvc: DvcConfig,
}

impl Default for BiasObserverSpec {
    fn default() -> Self {
        BiasObserverSpec {
            n_classes: 10,
            per_class: 100,
            noise_sd: 0.5,
            bias_scale: 0.0,
            class_bias_pattern: None,
            shared_sd: 0.3,
            dvc: DvcConfig::default(),
        }
    }
}

impl BiasObserverSpec {
    pub fn pattern(&self) -> Vec<f64> {
        self.class_bias_pattern
            .clone()
            .unwrap_or_else(|| (0..self.n_classes).map(|k| 0.1 * (k + 1) as f64).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.n_classes < 2 {
            bad.push("n_classes must be at least 2".to_string());
        }
        if self.per_class < 2 {
            bad.push("per_class must be at least 2".to_string());
        }
        for (name, v) in [("noise_sd", self.noise_sd), ("bias_scale", self.bias_scale), ("shared_sd", self.shared_sd)] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("{name} = {v} must be non-negative"));
            }
        }
        if self.pattern().len() != self.n_classes {
            bad.push(format!(
                "class_bias_pattern has {} entries for {} classes",
                self.pattern().len(),
                self.n_classes
            ));
        }
        if let Err(e) = self.dvc.validate() {
            bad.push(e.to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasObservers {
    pub a: RepresentationSet,
    pub b: RepresentationSet,
}

impl BiasObservers {
    /// Argmax choices of both observers, ties to the lowest class.
    pub fn decisions(&self) -> Result<(DecisionRecord, DecisionRecord)> {
        Ok((argmax_decisions(&self.a)?, argmax_decisions(&self.b)?))
    }
}

fn argmax_decisions(set: &RepresentationSet) -> Result<DecisionRecord> {
    let choices = set
        .matrix
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            set.class_names[best].clone()
        })
        .collect();
    let truth = set.label_names().into_iter().map(str::to_string).collect();
    DecisionRecord::new(choices, truth)
}

/// The draws depend only on the seed and the spec's shape, not on
/// `bias_scale`, so observers at different bias levels share their noise.
pub fn gen_bias_observers(spec: &BiasObserverSpec, seed: u64) -> Result<BiasObservers> {
    spec.validate()?;
    let c = spec.n_classes;
    let n = c * spec.per_class;
    let truth: Vec<usize> = (0..n).map(|t| t % c).collect();
    let bias: Vec<f64> = spec.pattern().iter().map(|p| spec.bias_scale * p).collect();

    let mut shared_rng = seed::rng(seed::derive(seed, &[0xB1A5, 0]));
    let direction = DVector::from_fn(c, |_, _| normal(&mut shared_rng));
    let shared: Vec<f64> = (0..n).map(|_| spec.shared_sd * normal(&mut shared_rng)).collect();

    let observer = |which: u64, id: &str| {
        let mut rng = seed::rng(seed::derive(seed, &[0xB1A5, 1 + which]));
        let mut x = DMatrix::zeros(n, c);
        for t in 0..n {
            for k in 0..c {
                let onehot = if truth[t] == k { 1.0 } else { 0.0 };
                x[(t, k)] = onehot + spec.noise_sd * normal(&mut rng) + shared[t] * direction[k] + bias[k];
            }
        }
        RepresentationSet::from_indices(id, x, &truth)
    };
    Ok(BiasObservers { a: observer(0, "biased_a")?, b: observer(1, "biased_b")? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSweepRow {
    pub bias_scale: f64,
    pub kappa: f64,
    pub dvc: f64,
    pub accuracy: f64,
}

fn bias_level(spec: &BiasObserverSpec, level: f64, seed: u64) -> Result<BiasSweepRow> {
    let spec = BiasObserverSpec { bias_scale: level, ..spec.clone() };
    let obs = gen_bias_observers(&spec, seed)?;
    let (da, db) = obs.decisions()?;
    let k = kappa(&da, &db).map(|k| k.kappa).unwrap_or(f64::NAN);
    let cfg = DvcConfig { seed: seed::derive(seed, &[0xD7C]), ..spec.dvc.clone() };
    let dvc = dvc_pair(&obs.a, &obs.b, &cfg)?.aggregate.unwrap_or(f64::NAN);
    Ok(BiasSweepRow {
        bias_scale: level,
        kappa: k,
        dvc,
        accuracy: 0.5 * (da.accuracy() + db.accuracy()),
    })
}

/// Kappa on argmax decisions, DVC on the raw outputs, and mean accuracy
/// per bias level, averaged over `replicates` seeds derived from `seed`.
pub fn sweep_bias(spec: &BiasObserverSpec, levels: &[f64], seed: u64, replicates: usize) -> Result<Vec<BiasSweepRow>> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least 2 levels".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..levels.len()).flat_map(|l| (0..replicates).map(move |r| (l, r))).collect();
    let rows: Vec<BiasSweepRow> = cells
        .par_iter()
        .map(|&(l, r)| bias_level(spec, levels[l], seed::derive(seed, &[r as u64])))
        .collect::<Result<_>>()?;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(l, &level)| {
            let block = &rows[l * replicates..(l + 1) * replicates];
            BiasSweepRow {
                bias_scale: level,
                kappa: mean_of(block.iter().map(|r| r.kappa)),
                dvc: mean_of(block.iter().map(|r| r.dvc)),
                accuracy: mean_of(block.iter().map(|r| r.accuracy)),
            }
        })
        .collect())
}
