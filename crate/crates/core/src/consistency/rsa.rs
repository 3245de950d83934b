use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::statcore::{pearson, spearman};

/// C×d matrix of per-class mean responses, rows in class order.
pub fn class_means(set: &RepresentationSet) -> DMatrix<f64> {
    let c = set.n_classes();
    let mut means = DMatrix::zeros(c, set.n_features());
    let mut counts = vec![0usize; c];
    for (i, &l) in set.labels.iter().enumerate() {
        let mut row = means.row_mut(l);
        row += set.matrix.row(i);
        counts[l] += 1;
    }
    for (k, n) in counts.into_iter().enumerate() {
        if n > 0 {
            let mut row = means.row_mut(k);
            row /= n as f64;
        }
    }
    means
}

/// Correlation-distance RDM (1 - Pearson r) between class means.
pub fn rdm(set: &RepresentationSet) -> Result<DMatrix<f64>> {
    let means = class_means(set);
    let rows: Vec<Vec<f64>> = means.row_iter().map(|r| r.iter().copied().collect()).collect();
    let c = rows.len();
    let mut d = DMatrix::zeros(c, c);
    for i in 0..c {
        for j in i + 1..c {
            let r = pearson(&rows[i], &rows[j]).map_err(|e| {
                Error::Degenerate(format!("class mean of {:?} or {:?}: {e}", set.class_names[i], set.class_names[j]))
            })?;
            d[(i, j)] = 1.0 - r;
            d[(j, i)] = 1.0 - r;
        }
    }
    Ok(d)
}

fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let c = m.nrows();
    (0..c).flat_map(|i| (i + 1..c).map(move |j| m[(i, j)])).collect()
}

/// Spearman correlation between the upper triangles of the two observers'
/// class-level RDMs.
pub fn rsa_category(a: &RepresentationSet, b: &RepresentationSet) -> Result<f64> {
    if a.class_names != b.class_names {
        return Err(Error::LabelMismatch("observers have different class sets".into()));
    }
    if a.n_classes() < 3 {
        return Err(Error::InvalidArgument("RSA needs at least 3 classes".into()));
    }
    spearman(&upper_triangle(&rdm(a)?), &upper_triangle(&rdm(b)?))
}
