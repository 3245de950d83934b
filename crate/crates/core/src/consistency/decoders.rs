use nalgebra::DMatrix;

use super::{ClassGroupMap, DecisionRecord};
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::statcore::{logreg_fit_cv, LogRegOptions};

/// Out-of-fold multinomial logistic-regression choices, one per sample.
pub fn decide_logreg(set: &RepresentationSet, folds: usize, seed: u64) -> Result<DecisionRecord> {
    decide_logreg_with(set, folds, seed, &LogRegOptions::default())
}

pub fn decide_logreg_with(
    set: &RepresentationSet,
    folds: usize,
    seed: u64,
    opts: &LogRegOptions,
) -> Result<DecisionRecord> {
    set.validate()?;
    let cv = logreg_fit_cv(&set.matrix, &set.labels, folds, seed, opts)?;
    let choices = cv.predicted.iter().map(|&c| set.class_names[c].clone()).collect();
    let truth = set.label_names().into_iter().map(str::to_string).collect();
    DecisionRecord::new(choices, truth)
}

/// Coarse-class choices from fine-class probabilities: each coarse score
/// is the mean probability of its member fine classes.
pub fn decide_groupmean(probs: &DMatrix<f64>, map: &ClassGroupMap) -> Result<Vec<String>> {
    map.validate()?;
    if probs.ncols() != map.fine_classes.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probability columns for {} fine classes",
            probs.ncols(),
            map.fine_classes.len()
        )));
    }
    let coarse = map.coarse_classes();
    let members: Vec<Vec<usize>> = coarse
        .iter()
        .map(|c| {
            map.fine_classes
                .iter()
                .enumerate()
                .filter(|(_, f)| &map.groups[*f] == c)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let mut choices = Vec::with_capacity(probs.nrows());
    for (i, row) in probs.row_iter().enumerate() {
        let total: f64 = row.iter().sum();
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "row {i} is not a probability vector (sum {total})"
            )));
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, m) in members.iter().enumerate() {
            let score = m.iter().map(|&j| row[j]).sum::<f64>() / m.len() as f64;
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        choices.push(coarse[best].clone());
    }
    Ok(choices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn groupmean_hand_example() {
        let map = ClassGroupMap::from_pairs(&[("f0", "A"), ("f1", "A"), ("f2", "B")]).unwrap();
        let p = DMatrix::from_row_slice(1, 3, &[0.2, 0.3, 0.5]);
        assert_eq!(decide_groupmean(&p, &map).unwrap(), vec!["B"]);
    }

    #[test]
    fn groupmean_singletons_match_argmax_and_ties_pick_first() {
        let map = ClassGroupMap::from_pairs(&[("x", "a"), ("y", "b"), ("z", "c")]).unwrap();
        let p = DMatrix::from_row_slice(3, 3, &[0.1, 0.7, 0.2, 0.5, 0.2, 0.3, 0.2, 0.2, 0.6]);
        assert_eq!(decide_groupmean(&p, &map).unwrap(), vec!["b", "a", "c"]);
        let uniform = DMatrix::from_element(2, 3, 1.0 / 3.0);
        assert_eq!(decide_groupmean(&uniform, &map).unwrap(), vec!["a", "a"]);
    }

    #[test]
    fn groupmean_rejects_bad_rows() {
        let map = ClassGroupMap::from_pairs(&[("x", "a"), ("y", "b")]).unwrap();
        assert!(decide_groupmean(&DMatrix::from_row_slice(1, 2, &[0.5, 0.6]), &map).is_err());
        assert!(decide_groupmean(&DMatrix::from_row_slice(1, 3, &[0.5, 0.5, 0.0]), &map).is_err());
    }

    fn blobs(sep: f64, shuffle: bool, seed: u64) -> RepresentationSet {
        let mut rng = crate::seed::rng(seed);
        let (c, per) = (4, 60);
        let mut labels: Vec<usize> = (0..c * per).map(|i| i % c).collect();
        let m = DMatrix::from_fn(c * per, 6, |r, j| {
            let z: f64 = rng.sample(StandardNormal);
            z + if j == labels[r] { sep } else { 0.0 }
        });
        if shuffle {
            use rand::seq::SliceRandom;
            labels.shuffle(&mut rng);
        }
        RepresentationSet::from_indices("obs", m, &labels).unwrap()
    }

    #[test]
    fn logreg_separable_and_chance() {
        let rec = decide_logreg(&blobs(8.0, false, 1), 5, 3).unwrap();
        assert!(rec.accuracy() >= 0.98);
        let chance: f64 = (0..20)
            .map(|s| decide_logreg(&blobs(8.0, true, 100 + s), 5, s).unwrap().accuracy())
            .sum::<f64>()
            / 20.0;
        assert!((chance - 0.25).abs() <= 0.05, "chance accuracy {chance}");
    }

    #[test]
    fn logreg_deterministic() {
        let set = blobs(1.0, false, 2);
        assert_eq!(decide_logreg(&set, 5, 9).unwrap(), decide_logreg(&set, 5, 9).unwrap());
    }
}
