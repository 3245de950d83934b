use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pair::dvc_pair;
use super::{DvcConfig, DvcResult};
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;

/// An observer pair whose DVC could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub observer_a: String,
    pub observer_b: String,
    pub reason: String,
}

/// Aggregate DVC for every observer pair, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct DvcMatrix {
    pub ids: Vec<String>,
    /// `NaN` where the pair failed or had no valid entry.
    pub values: DMatrix<f64>,
    /// One result per computed pair (upper triangle with diagonal, row-major).
    pub results: Vec<DvcResult>,
    pub failures: Vec<PairFailure>,
}

impl DvcMatrix {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let v = self.values[(self.index_of(a)?, self.index_of(b)?)];
        v.is_finite().then_some(v)
    }

    pub fn result(&self, a: &str, b: &str) -> Option<&DvcResult> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.results.iter().find(|r| r.observer_a == lo && r.observer_b == hi)
    }

    /// True when some pairs failed or produced no aggregate.
    pub fn is_partial(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }
}

/// DVC for every unordered observer pair including each observer with
/// itself. Pair failures are recorded rather than propagated.
pub fn dvc_matrix(sets: &[RepresentationSet], config: &DvcConfig) -> Result<DvcMatrix> {
    config.validate()?;
    let ids: Vec<String> = sets.iter().map(|s| s.observer_id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!("duplicate observer id {:?}", w[0])));
    }
    let n = sets.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let outcomes: Vec<Result<DvcResult>> = pairs
        .par_iter()
        .map(|&(i, j)| dvc_pair(&sets[i], &sets[j], config))
        .collect();

    let mut values = DMatrix::from_element(n, n, f64::NAN);
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (&(i, j), outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Ok(res) => {
                let v = res.aggregate.unwrap_or(f64::NAN);
                values[(i, j)] = v;
                values[(j, i)] = v;
                results.push(res);
            }
            Err(e) => {
                log::warn!("pair {} / {} failed: {e}", ids[i], ids[j]);
                failures.push(PairFailure {
                    observer_a: ids[i].clone(),
                    observer_b: ids[j].clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(DvcMatrix { ids, values, results, failures })
}
