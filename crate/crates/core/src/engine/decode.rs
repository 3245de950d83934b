use nalgebra::DMatrix;

use super::{DvDecoder, DvcConfig};
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::statcore::{lda_fit, lda_project, logreg_fit, pca_fit_clamped, pca_project, LogRegOptions};

/// Decision variables for the samples of one class pair, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedDvs {
    /// Row indices (into the source set) of the decoded samples.
    pub rows: Vec<usize>,
    pub dvs: Vec<f64>,
    /// Decision boundary on the DV scale (LDA midpoint, or 0 for logreg).
    pub threshold: f64,
    pub n_components: usize,
    pub clamped: bool,
}

impl DecodedDvs {
    /// DVs of the samples whose label is `class`, preserving order.
    pub fn restrict(&self, labels: &[usize], class: usize) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.dvs)
            .filter_map(|(&r, &v)| (labels[r] == class).then_some(v))
            .collect()
    }
}

/// PCA (fit on the class-pair samples of this set) followed by the
/// configured binary decoder, applied back to the same samples.
pub fn decode_dvs(half: &RepresentationSet, class_pair: (usize, usize), config: &DvcConfig) -> Result<DecodedDvs> {
    decode_subset(half, None, class_pair, config)
}

/// [`decode_dvs`] on a column subset of `set` without materializing it.
pub(crate) fn decode_subset(
    half: &RepresentationSet,
    cols: Option<&[usize]>,
    class_pair: (usize, usize),
    config: &DvcConfig,
) -> Result<DecodedDvs> {
    let (c0, c1) = class_pair;
    if c0 == c1 || c0 >= half.n_classes() || c1 >= half.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "class pair ({c0}, {c1}) invalid for {} classes",
            half.n_classes()
        )));
    }
    let rows: Vec<usize> = (0..half.n_samples())
        .filter(|&i| half.labels[i] == c0 || half.labels[i] == c1)
        .collect();
    let y: Vec<usize> = rows.iter().map(|&i| half.labels[i]).collect();
    let x: DMatrix<f64> = match cols {
        Some(cols) => DMatrix::from_fn(rows.len(), cols.len(), |i, j| half.matrix[(rows[i], cols[j])]),
        None => half.matrix.select_rows(&rows),
    };

    let pca = pca_fit_clamped(&x, config.n_pcs)?;
    let z = pca_project(&pca, &x)?;
    let n_components = pca.n_components();

    let (dvs, threshold) = match config.dv_decoder {
        DvDecoder::Lda => {
            let axis = lda_fit(&z, &y, config.lda_solver)?;
            let dv = lda_project(&axis, &z)?;
            (dv.as_slice().to_vec(), axis.threshold)
        }
        DvDecoder::Logreg => {
            let fit = logreg_fit(&z, &y, &LogRegOptions::default())?;
            let dv = fit.model.decision_function(&z)?;
            (dv.as_slice().to_vec(), 0.0)
        }
    };
    Ok(DecodedDvs {
        rows,
        dvs,
        threshold,
        n_components,
        clamped: n_components < config.n_pcs,
    })
}
