use serde::{Deserialize, Serialize};

use super::matrix::{DvcMatrix, PairFailure};
use crate::error::{Error, Result};
use crate::repstore::{ObserverKind, ObserverMeta};
use crate::statcore::{pearson_test, rank_sum_test, RankSumTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverScore {
    pub observer_id: String,
    pub family: Option<String>,
    pub accuracy: Option<f64>,
    pub self_dvc: Option<f64>,
    /// Mean DVC to the reference observers, excluding itself.
    pub mean_dvc_to_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCorrelation {
    pub observers: Vec<String>,
    pub r: f64,
    pub n: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyContrast {
    pub within: Vec<f64>,
    pub between: Vec<f64>,
    pub within_mean: Option<f64>,
    pub between_mean: Option<f64>,
    pub test: Option<RankSumTest>,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Brain observers if any, otherwise every observer.
    pub references: Vec<String>,
    pub observers: Vec<ObserverScore>,
    pub accuracy_correlation: Option<AccuracyCorrelation>,
    pub accuracy_notice: Option<String>,
    pub family_contrast: FamilyContrast,
    pub failures: Vec<PairFailure>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Group statistics over a DVC matrix: accuracy vs mean DVC to the
/// references, and within- vs between-family DVC.
pub fn summarize(matrix: &DvcMatrix, metas: &[ObserverMeta]) -> Result<Summary> {
    let n = matrix.ids.len();
    if metas.len() != n || metas.iter().zip(&matrix.ids).any(|(m, id)| &m.observer_id != id) {
        return Err(Error::ShapeMismatch("observer metadata does not match the matrix ids".into()));
    }
    let value = |i: usize, j: usize| {
        let v = matrix.values[(i, j)];
        v.is_finite().then_some(v)
    };

    let brains: Vec<usize> = (0..n).filter(|&i| metas[i].kind == ObserverKind::Brain).collect();
    let refs: Vec<usize> = if brains.is_empty() { (0..n).collect() } else { brains.clone() };

    let observers: Vec<ObserverScore> = (0..n)
        .map(|i| {
            let to_ref: Vec<f64> = refs.iter().filter(|&&r| r != i).filter_map(|&r| value(i, r)).collect();
            ObserverScore {
                observer_id: matrix.ids[i].clone(),
                family: metas[i].family.clone(),
                accuracy: metas[i].accuracy,
                self_dvc: value(i, i),
                mean_dvc_to_reference: mean(&to_ref),
            }
        })
        .collect();

    let candidates: Vec<&ObserverScore> = observers
        .iter()
        .enumerate()
        .filter(|(i, _)| brains.is_empty() || !brains.contains(i))
        .map(|(_, o)| o)
        .filter(|o| o.accuracy.is_some() && o.mean_dvc_to_reference.is_some())
        .collect();
    let (accuracy_correlation, accuracy_notice) = if candidates.len() < 3 {
        (
            None,
            Some(format!(
                "accuracy correlation skipped: {} observers have both accuracy metadata and a DVC score (need 3)",
                candidates.len()
            )),
        )
    } else {
        let acc: Vec<f64> = candidates.iter().map(|o| o.accuracy.unwrap()).collect();
        let dvc: Vec<f64> = candidates.iter().map(|o| o.mean_dvc_to_reference.unwrap()).collect();
        match pearson_test(&dvc, &acc) {
            Ok(t) => (
                Some(AccuracyCorrelation {
                    observers: candidates.iter().map(|o| o.observer_id.clone()).collect(),
                    r: t.r,
                    n: t.n,
                    p_value: t.p_value,
                }),
                None,
            ),
            Err(e) => (None, Some(format!("accuracy correlation skipped: {e}"))),
        }
    };

    let mut within = Vec::new();
    let mut between = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (Some(fi), Some(fj)) = (&metas[i].family, &metas[j].family) else { continue };
            let Some(v) = value(i, j) else { continue };
            if fi == fj { within.push(v) } else { between.push(v) }
        }
    }
    let notice = match (within.is_empty(), between.is_empty()) {
        (false, false) => None,
        (true, true) => Some("no observer pairs with family tags".to_string()),
        (true, false) => Some("within-family set is empty".to_string()),
        (false, true) => Some("between-family set is empty".to_string()),
    };
    let test = if notice.is_none() { rank_sum_test(&within, &between).ok() } else { None };
    let family_contrast = FamilyContrast {
        within_mean: mean(&within),
        between_mean: mean(&between),
        within,
        between,
        test,
        notice,
    };

    Ok(Summary {
        references: refs.iter().map(|&r| matrix.ids[r].clone()).collect(),
        observers,
        accuracy_correlation,
        accuracy_notice,
        family_contrast,
        failures: matrix.failures.clone(),
    })
}
