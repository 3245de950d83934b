//! Observer representations: data model, validation and file formats.

mod matrix_io;
mod registry;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use matrix_io::{
    read_labels, read_matrix, write_labels, write_matrix, write_rawbin, Dtype, MatrixFile,
    MatrixFormat, RAWBIN_MAGIC, RAWBIN_VERSION,
};
pub use registry::{registry_load, RegistryEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserverKind {
    #[default]
    Model,
    Brain,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverMeta {
    pub observer_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default)]
    pub kind: ObserverKind,
}

impl ObserverMeta {
    pub fn new(observer_id: impl Into<String>, kind: ObserverKind) -> Self {
        ObserverMeta {
            observer_id: observer_id.into(),
            family: None,
            accuracy: None,
            kind,
        }
    }
}

/// One observer's responses to a shared stimulus set.
///
/// Rows are samples (stimuli), columns are features (units, neurons).
/// `labels[i]` indexes into `class_names`, which is kept sorted so that
/// class indices are reproducible across observers and runs.
#[derive(Clone, PartialEq)]
pub struct RepresentationSet {
    pub observer_id: String,
    pub matrix: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl fmt::Debug for RepresentationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepresentationSet")
            .field("observer_id", &self.observer_id)
            .field("n_samples", &self.n_samples())
            .field("n_features", &self.n_features())
            .field("class_names", &self.class_names)
            .finish()
    }
}

impl RepresentationSet {
    /// Build and validate a set from string labels. Class names are sorted
    /// lexicographically.
    pub fn from_labels<S: AsRef<str>>(
        observer_id: impl Into<String>,
        matrix: DMatrix<f64>,
        labels: &[S],
    ) -> Result<Self> {
        if labels.len() != matrix.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for a matrix with {} rows",
                labels.len(),
                matrix.nrows()
            )));
        }
        let mut class_names: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
        class_names.sort();
        class_names.dedup();
        let index: BTreeMap<&str, usize> = class_names
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let labels = labels.iter().map(|l| index[l.as_ref()]).collect();
        let set = RepresentationSet {
            observer_id: observer_id.into(),
            matrix,
            labels,
            class_names,
        };
        set.validate()?;
        Ok(set)
    }

    /// Build from integer class indices; class names become the decimal
    /// index zero-padded to a common width so that lexicographic and
    /// numeric order agree.
    pub fn from_indices(
        observer_id: impl Into<String>,
        matrix: DMatrix<f64>,
        labels: &[usize],
    ) -> Result<Self> {
        let width = labels
            .iter()
            .max()
            .map(|m| m.to_string().len())
            .unwrap_or(1);
        let names: Vec<String> = labels.iter().map(|l| format!("{l:0width$}")).collect();
        Self::from_labels(observer_id, matrix, &names)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.matrix.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for a matrix with {} rows",
                self.labels.len(),
                self.matrix.nrows()
            )));
        }
        if self.matrix.ncols() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "at least 2 features required, got {}",
                self.matrix.ncols()
            )));
        }
        check_finite(&self.matrix)?;
        let counts = self.class_counts();
        for (c, &n) in counts.iter().enumerate() {
            if n < 2 {
                return Err(Error::ClassTooSmall {
                    class: self.class_names[c].clone(),
                    count: n,
                    required: 2,
                });
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices of samples belonging to class `c`, in sample order.
    pub fn rows_of_class(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == c).then_some(i))
            .collect()
    }

    pub fn label_names(&self) -> Vec<&str> {
        self.labels
            .iter()
            .map(|&l| self.class_names[l].as_str())
            .collect()
    }

    /// A new set restricted to the given feature columns.
    pub fn select_features(&self, cols: &[usize]) -> RepresentationSet {
        RepresentationSet {
            observer_id: self.observer_id.clone(),
            matrix: self.matrix.select_columns(cols),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// True when both sets describe the same stimuli: equal sample count
    /// and identical label sequences.
    pub fn same_stimuli(&self, other: &RepresentationSet) -> bool {
        self.class_names == other.class_names && self.labels == other.labels
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Load a matrix file and its one-label-per-line companion.
pub fn load_representation(
    path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    meta: &ObserverMeta,
) -> Result<RepresentationSet> {
    let matrix = read_matrix(path.as_ref())?;
    let labels = read_labels(labels_path.as_ref())?;
    RepresentationSet::from_labels(meta.observer_id.clone(), matrix, &labels)
}
