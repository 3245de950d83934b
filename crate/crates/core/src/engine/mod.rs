//! The decision variable correlation pipeline.
//!
//! For each unordered class pair, each observer's features are split into
//! two random halves; each half is reduced with PCA and a binary decoder
//! turns it into one decision variable (DV) per stimulus. Within every
//! class of the pair, the four cross-observer correlations and the two
//! within-observer split-half correlations give a noise-corrected
//! correlation `r_cross / r_self`. Entries are averaged over independent
//! feature splits and the mean over all entries is the aggregate DVC.

mod correct;
mod decode;
mod matrix;
mod pair;
mod split;
mod summary;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statcore::{Correlation, LdaSolver};

pub use correct::corrected_dvc;
pub use decode::{decode_dvs, DecodedDvs};
pub use matrix::{dvc_matrix, DvcMatrix, PairFailure};
pub use pair::{dvc_pair, split_seeds};
pub use split::split_features;
pub use summary::{summarize, AccuracyCorrelation, FamilyContrast, ObserverScore, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DvDecoder {
    #[default]
    Lda,
    Logreg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DvcConfig {
    /// Principal components kept per feature half (clamped to rank).
    pub n_pcs: usize,
    pub correlation: Correlation,
    pub lda_solver: LdaSolver,
    pub dv_decoder: DvDecoder,
    pub split_repeats: usize,
    pub seed: u64,
    pub abs_before_geomean: bool,
}

impl Default for DvcConfig {
    fn default() -> Self {
        DvcConfig {
            n_pcs: 25,
            correlation: Correlation::Pearson,
            lda_solver: LdaSolver::Svd,
            dv_decoder: DvDecoder::Lda,
            split_repeats: 10,
            seed: 0,
            abs_before_geomean: true,
        }
    }
}

impl DvcConfig {
    pub fn with_seed(seed: u64) -> Self {
        DvcConfig {
            seed,
            ..DvcConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pcs == 0 {
            return Err(Error::InvalidArgument("n_pcs must be at least 1".into()));
        }
        if self.split_repeats == 0 {
            return Err(Error::InvalidArgument("split_repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// Decision variables of both observers, each decoded from two disjoint
/// feature halves, over the same stimuli.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDvSet {
    pub dv_a1: Vec<f64>,
    pub dv_a2: Vec<f64>,
    pub dv_b1: Vec<f64>,
    pub dv_b2: Vec<f64>,
}

impl SplitDvSet {
    pub fn len(&self) -> usize {
        self.dv_a1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dv_a1.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dv_a1.len();
        let all = [&self.dv_a1, &self.dv_a2, &self.dv_b1, &self.dv_b2];
        if all.iter().any(|v| v.len() != m) {
            return Err(Error::ShapeMismatch("split DV vectors differ in length".into()));
        }
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Degenerate("non-finite decision variable".into()));
        }
        Ok(())
    }
}

/// Correlations behind one corrected DVC value.
///
/// `cross` is ordered (A1,B1), (A1,B2), (A2,B1), (A2,B2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DvcComponents {
    pub cross: [f64; 4],
    pub self_a: f64,
    pub self_b: f64,
    pub r_cross: f64,
    pub r_self: f64,
    pub corrected: f64,
    pub capped_flag: bool,
}

/// One (class pair, conditioning class) cell of a [`DvcResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvcEntry {
    pub class_pair: (String, String),
    pub conditioning_class: String,
    /// Component-wise mean over the valid split repeats; `None` when every
    /// repeat was degenerate.
    pub components: Option<DvcComponents>,
    pub valid_repeats: usize,
    pub capped_repeats: usize,
    /// First failure reason among the repeats, if any failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate_reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_entries: usize,
    pub n_valid: usize,
    pub n_degenerate: usize,
    pub n_capped: usize,
    /// Decodes where `n_pcs` exceeded the rank of the data and was clamped.
    pub pcs_clamped: usize,
    pub degenerate_repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvcResult {
    /// Observers in canonical (sorted id) order; components labelled A
    /// refer to `observer_a`.
    pub observer_a: String,
    pub observer_b: String,
    pub entries: Vec<DvcEntry>,
    /// Mean corrected value over valid entries.
    pub aggregate: Option<f64>,
    pub diagnostics: Diagnostics,
    pub config_echo: DvcConfig,
}

impl DvcResult {
    pub fn entry(&self, pair: (&str, &str), conditioning: &str) -> Option<&DvcEntry> {
        self.entries.iter().find(|e| {
            e.class_pair.0 == pair.0 && e.class_pair.1 == pair.1 && e.conditioning_class == conditioning
        })
    }

    pub fn corrected_values(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter_map(|e| e.components.map(|c| c.corrected))
            .collect()
    }
}
