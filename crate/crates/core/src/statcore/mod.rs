//! Numerical building blocks: PCA, binary LDA, correlation measures,
//! multinomial logistic regression and a few classical significance tests.

mod corr;
mod inference;
mod lda;
mod logreg;
mod pca;

pub use corr::{pearson, rank_average, spearman, Correlation};
pub use inference::{pearson_test, rank_sum_test, CorrelationTest, RankSumTest};
pub use lda::{ledoit_wolf_shrinkage, lda_fit, lda_project, LdaAxis, LdaSolver, Shrinkage};
pub use logreg::{
    logreg_fit, logreg_fit_cv, stratified_folds, CvPredictions, LogRegFit, LogRegModel,
    LogRegOptions,
};
pub use pca::{numerical_rank, pca_fit, pca_fit_clamped, pca_project, PcaModel};

use nalgebra::{DMatrix, DVector};

/// Column means of a samples-by-features matrix.
pub(crate) fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

pub(crate) fn center_columns(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    out
}

/// Angle in radians between two vectors, ignoring sign when `unsigned`.
pub fn angle_between(a: &DVector<f64>, b: &DVector<f64>, unsigned: bool) -> f64 {
    let mut cos = a.dot(b) / (a.norm() * b.norm());
    if unsigned {
        cos = cos.abs();
    }
    cos.clamp(-1.0, 1.0).acos()
}
