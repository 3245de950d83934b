use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{normal, normal_matrix};
use crate::consistency::ClassGroupMap;
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::seed;

/// Fine-class classifiers evaluated on coarse categories of unequal size,
/// with a miscalibrated fine-class prior common to both observers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharedPriorSpec {
    /// Fine classes per coarse class.
    pub group_sizes: Vec<usize>,
    pub per_group: usize,
    /// Logit boost of the true fine class.
    pub signal: f64,
    pub noise_sd: f64,
    /// Sd of the shared per-fine-class logit offset.
    pub prior_sd: f64,
}

impl Default for SharedPriorSpec {
    fn default() -> Self {
        SharedPriorSpec {
            group_sizes: vec![1, 1, 2, 3, 5, 8],
            per_group: 200,
            signal: 3.0,
            noise_sd: 1.0,
            prior_sd: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedPriorObserver {
    /// n×F softmax outputs, columns in `map.fine_classes` order.
    pub probs: DMatrix<f64>,
    /// The probabilities as a representation labelled by coarse class.
    pub features: RepresentationSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedPriorData {
    pub map: ClassGroupMap,
    /// Coarse class of every trial.
    pub truth: Vec<String>,
    pub observers: [SharedPriorObserver; 2],
}

fn softmax_rows(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = logits.clone();
    for mut row in p.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let total = row.sum();
        row /= total;
    }
    p
}

pub fn gen_shared_prior(spec: &SharedPriorSpec, seed: u64) -> Result<SharedPriorData> {
    let g = spec.group_sizes.len();
    if g < 2 || spec.group_sizes.contains(&0) || spec.per_group < 5 {
        return Err(Error::InvalidArgument(
            "need ≥2 non-empty groups and ≥5 trials per group".into(),
        ));
    }
    let coarse: Vec<String> = (0..g).map(|k| format!("g{k:02}")).collect();
    let mut pairs = Vec::new();
    let mut members = Vec::new();
    for (k, &size) in spec.group_sizes.iter().enumerate() {
        members.push((pairs.len()..pairs.len() + size).collect::<Vec<usize>>());
        for _ in 0..size {
            pairs.push((format!("f{:03}", pairs.len()), coarse[k].clone()));
        }
    }
    let f = pairs.len();
    let groups: BTreeMap<String, String> = pairs.iter().cloned().collect();
    let map = ClassGroupMap::new(pairs.into_iter().map(|(fine, _)| fine).collect(), groups)?;

    let n = g * spec.per_group;
    let truth_idx: Vec<usize> = (0..n).map(|t| t % g).collect();
    let mut rng = seed::rng(seed::derive(seed, &[0x9410]));
    let prior: Vec<f64> = (0..f).map(|_| spec.prior_sd * normal(&mut rng)).collect();
    let fine: Vec<usize> = truth_idx
        .iter()
        .map(|&k| {
            let m = &members[k];
            m[rand::Rng::random_range(&mut rng, 0..m.len())]
        })
        .collect();

    let observer = |which: u64| -> Result<SharedPriorObserver> {
        let mut orng = seed::rng(seed::derive(seed, &[0x9410, 1 + which]));
        let mut logits = normal_matrix(&mut orng, n, f) * spec.noise_sd;
        for t in 0..n {
            for j in 0..f {
                logits[(t, j)] += prior[j];
            }
            logits[(t, fine[t])] += spec.signal;
        }
        let probs = softmax_rows(&logits);
        let id = if which == 0 { "prior_a" } else { "prior_b" };
        let features = RepresentationSet::from_labels(id, probs.clone(), &truth_idx.iter().map(|&k| &coarse[k]).collect::<Vec<_>>())?;
        Ok(SharedPriorObserver { probs, features })
    };
    Ok(SharedPriorData {
        truth: truth_idx.iter().map(|&k| coarse[k].clone()).collect(),
        observers: [observer(0)?, observer(1)?],
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure() {
        let d = gen_shared_prior(&SharedPriorSpec::default(), 1).unwrap();
        assert_eq!(d.map.fine_classes.len(), 20);
        assert_eq!(d.map.coarse_classes().len(), 6);
        assert_eq!(d.truth.len(), 1200);
        let p = &d.observers[0].probs;
        for row in p.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        assert_eq!(d.observers[1].features.label_names()[7], d.truth[7]);
    }
}
