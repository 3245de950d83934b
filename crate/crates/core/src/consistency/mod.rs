//! Competing similarity measures: Cohen's kappa on trial-wise correctness
//! (error consistency) with pluggable behavioural decoders, and
//! category-level RSA.

mod decoders;
mod rsa;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use decoders::{decide_groupmean, decide_logreg, decide_logreg_with};
pub use rsa::{class_means, rdm, rsa_category};

/// Categorical choices of one observer against the true classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub choices: Vec<String>,
    pub truth: Vec<String>,
}

impl DecisionRecord {
    pub fn new(choices: Vec<String>, truth: Vec<String>) -> Result<Self> {
        if choices.len() != truth.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} choices for {} trials",
                choices.len(),
                truth.len()
            )));
        }
        Ok(DecisionRecord { choices, truth })
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn correct(&self) -> Vec<bool> {
        self.choices.iter().zip(&self.truth).map(|(c, t)| c == t).collect()
    }

    pub fn accuracy(&self) -> f64 {
        if self.is_empty() {
            return f64::NAN;
        }
        self.correct().iter().filter(|&&c| c).count() as f64 / self.len() as f64
    }

    /// Writes `trial,choice,truth` rows with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["trial", "choice", "truth"]).map_err(|e| csv_error(path, e))?;
        for (t, (c, y)) in self.choices.iter().zip(&self.truth).enumerate() {
            w.write_record([t.to_string().as_str(), c, y]).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut choices = Vec::new();
        let mut truth = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            if rec.len() != 3 {
                return Err(Error::parse(path.display().to_string(), format!("row {}: expected trial,choice,truth", i + 1)));
            }
            choices.push(rec[1].to_string());
            truth.push(rec[2].to_string());
        }
        DecisionRecord::new(choices, truth)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::parse(path.display().to_string(), e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub c_obs: f64,
    pub c_exp: f64,
    pub accuracy_pair: (f64, f64),
    /// |p_i - p_j|
    pub d: f64,
    /// Largest kappa attainable at this accuracy difference.
    pub bound: f64,
    pub n: usize,
}

/// Cohen's kappa between the correctness indicators of two observers.
pub fn kappa(a: &DecisionRecord, b: &DecisionRecord) -> Result<KappaResult> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} trials", a.len(), b.len())));
    }
    if a.truth != b.truth {
        return Err(Error::LabelMismatch("decision records disagree on the true classes".into()));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("kappa of empty decision records".into()));
    }
    let n = a.len();
    let (ca, cb) = (a.correct(), b.correct());
    let agree = ca.iter().zip(&cb).filter(|(x, y)| x == y).count();
    let c_obs = agree as f64 / n as f64;
    let p_i = a.accuracy();
    let p_j = b.accuracy();
    let c_exp = p_i * p_j + (1.0 - p_i) * (1.0 - p_j);
    if c_exp >= 1.0 {
        return Err(Error::Degenerate(
            "expected agreement is 1 (both observers always right or always wrong); kappa undefined".into(),
        ));
    }
    let d = (p_i - p_j).abs();
    Ok(KappaResult {
        kappa: (c_obs - c_exp) / (1.0 - c_exp),
        c_obs,
        c_exp,
        accuracy_pair: (p_i, p_j),
        d,
        bound: kappa_bound(d)?,
        n,
    })
}

/// Upper bound on kappa for two observers whose accuracies differ by `d`.
pub fn kappa_bound(d: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidArgument(format!("accuracy difference {d} outside [0, 1]")));
    }
    Ok((1.0 - d).powi(2) / (1.0 + d * d))
}

/// Assignment of fine classes to coarse classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroupMap {
    /// Column order of fine-class probability matrices.
    pub fine_classes: Vec<String>,
    pub groups: BTreeMap<String, String>,
}

impl ClassGroupMap {
    pub fn new(fine_classes: Vec<String>, groups: BTreeMap<String, String>) -> Result<Self> {
        let map = ClassGroupMap { fine_classes, groups };
        map.validate()?;
        Ok(map)
    }

    /// Builds the map from `(fine, coarse)` pairs in fine-class order.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Self> {
        let fine = pairs.iter().map(|(f, _)| f.as_ref().to_string()).collect();
        let groups = pairs
            .iter()
            .map(|(f, c)| (f.as_ref().to_string(), c.as_ref().to_string()))
            .collect();
        ClassGroupMap::new(fine, groups)
    }

    /// Reads `fine,coarse` rows (no header).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut pairs = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            if rec.len() != 2 {
                return Err(Error::parse(path.display().to_string(), "expected fine,coarse rows"));
            }
            pairs.push((rec[0].to_string(), rec[1].to_string()));
        }
        ClassGroupMap::from_pairs(&pairs)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.fine_classes {
            if !seen.insert(f) {
                return Err(Error::InvalidArgument(format!("fine class {f:?} listed twice")));
            }
            if !self.groups.contains_key(f) {
                return Err(Error::InvalidArgument(format!("fine class {f:?} has no coarse class")));
            }
        }
        if let Some(extra) = self.groups.keys().find(|k| !seen.contains(k)) {
            return Err(Error::InvalidArgument(format!("group entry for unknown fine class {extra:?}")));
        }
        Ok(())
    }

    /// Coarse classes in sorted order, which is also the tie-break order.
    pub fn coarse_classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.groups.values().cloned().collect();
        c.sort();
        c.dedup();
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(choices: &[&str], truth: &[&str]) -> DecisionRecord {
        DecisionRecord::new(
            choices.iter().map(|s| s.to_string()).collect(),
            truth.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_correctness_gives_one() {
        let truth = ["a"; 10];
        let mut ch = ["a"; 10];
        ch[0] = "b";
        ch[1] = "b";
        let r = rec(&ch, &truth);
        let k = kappa(&r, &r).unwrap();
        assert_eq!(k.c_obs, 1.0);
        assert!((k.c_exp - 0.68).abs() < 1e-12);
        assert!((k.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complementary_correctness_gives_minus_one() {
        let truth = ["a", "a", "a", "a"];
        let a = rec(&["a", "b", "a", "b"], &truth);
        let b = rec(&["b", "a", "b", "a"], &truth);
        let k = kappa(&a, &b).unwrap();
        assert_eq!(k.c_obs, 0.0);
        assert_eq!(k.c_exp, 0.5);
        assert_eq!(k.kappa, -1.0);
    }

    #[test]
    fn perfect_observers_are_degenerate() {
        let a = rec(&["a", "b"], &["a", "b"]);
        assert!(matches!(kappa(&a, &a), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mismatched_truth_rejected() {
        let a = rec(&["a", "b"], &["a", "b"]);
        let b = rec(&["a", "b"], &["b", "b"]);
        assert!(kappa(&a, &b).is_err());
    }

    #[test]
    fn bound_values() {
        assert_eq!(kappa_bound(0.0).unwrap(), 1.0);
        assert_eq!(kappa_bound(1.0).unwrap(), 0.0);
        assert!((kappa_bound(0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!(kappa_bound(1.5).is_err());
    }

    #[test]
    fn decision_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let r = rec(&["cat", "dog", "cat"], &["cat", "cat", "dog"]);
        r.write_csv(&p).unwrap();
        assert_eq!(DecisionRecord::read_csv(&p).unwrap(), r);
    }

    #[test]
    fn group_map_validation() {
        assert!(ClassGroupMap::from_pairs(&[("f0", "A"), ("f1", "A"), ("f2", "B")]).is_ok());
        let groups = BTreeMap::from([("f0".to_string(), "A".to_string())]);
        assert!(ClassGroupMap::new(vec!["f0".into(), "f1".into()], groups.clone()).is_err());
        assert!(ClassGroupMap::new(vec![], groups).is_err());
        assert!(ClassGroupMap::from_pairs(&[("f0", "A"), ("f0", "B")]).is_err());
    }
}
