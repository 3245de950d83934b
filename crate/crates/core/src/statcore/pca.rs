use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{center_columns, column_means};
use crate::error::{Error, Result};

/// Principal axes of a centered data matrix.
///
/// `components` is k×d with orthonormal rows ordered by decreasing
/// explained variance. Each row is signed so its largest-magnitude entry is
/// positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.components.ncols()
    }
}

struct Decomposition {
    mean: DVector<f64>,
    singular: Vec<f64>,
    // rows are right singular vectors, same order as `singular`
    axes: DMatrix<f64>,
    rank: usize,
    n: usize,
}

fn decompose(x: &DMatrix<f64>) -> Result<Decomposition> {
    let (n, d) = x.shape();
    if n < 2 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 samples and 1 feature, got {n}x{d}"
        )));
    }
    let mean = column_means(x);
    let xc = center_columns(x, &mean);
    let scale = x.amax();
    let svd = xc.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let singular: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s_max = singular.first().copied().unwrap_or(0.0);
    if scale == 0.0 || s_max <= 1e-12 * scale * ((n * d) as f64).sqrt() {
        return Err(Error::ZeroVariance("all rows are identical".into()));
    }
    let tol = (n.max(d) as f64) * f64::EPSILON * s_max;
    let rank = singular.iter().filter(|&&s| s > tol).count();
    let mut axes = DMatrix::zeros(order.len(), d);
    for (r, &i) in order.iter().enumerate() {
        let mut row = v_t.row(i).into_owned();
        let (imax, _) = row.iter().enumerate().fold((0, 0.0f64), |acc, (j, v)| {
            if v.abs() > acc.1 {
                (j, v.abs())
            } else {
                acc
            }
        });
        if row[imax] < 0.0 {
            row.neg_mut();
        }
        axes.set_row(r, &row);
    }
    Ok(Decomposition {
        mean,
        singular,
        axes,
        rank,
        n,
    })
}

impl Decomposition {
    fn model(&self, k: usize) -> PcaModel {
        let denom = (self.n - 1) as f64;
        PcaModel {
            mean: self.mean.clone(),
            components: self.axes.rows(0, k).into_owned(),
            explained_variance: self.singular[..k].iter().map(|s| s * s / denom).collect(),
        }
    }
}

/// Numerical rank of the column-centered matrix.
pub fn numerical_rank(x: &DMatrix<f64>) -> Result<usize> {
    Ok(decompose(x)?.rank)
}

/// Fit the top-`k` principal axes via SVD of the centered data.
pub fn pca_fit(x: &DMatrix<f64>, k: usize) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if k == 0 || k > d || k + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..=min(n-1, d) = {}",
            (n.saturating_sub(1)).min(d)
        )));
    }
    Ok(decompose(x)?.model(k))
}

/// Like [`pca_fit`] but clamps `k` to the numerical rank of the data
/// instead of failing. Returns the model; its component count is the
/// number actually used.
pub fn pca_fit_clamped(x: &DMatrix<f64>, k: usize) -> Result<PcaModel> {
    let dec = decompose(x)?;
    let limit = dec.rank.min(x.nrows() - 1).min(x.ncols());
    Ok(dec.model(k.min(limit).max(1)))
}

/// `(X - mean) * components^T`.
pub fn pca_project(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != model.n_features() {
        return Err(Error::ShapeMismatch(format!(
            "PCA model has {} features, input has {}",
            model.n_features(),
            x.ncols()
        )));
    }
    Ok(center_columns(x, &model.mean) * model.components.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::seed::rng(seed);
        DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn diagonal_line_gives_diagonal_component() {
        let x = DMatrix::from_row_slice(4, 2, &[-2., -2., -1., -1., 1., 1., 2., 2.]);
        let m = pca_fit(&x, 1).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((m.components[(0, 0)] - h).abs() < 1e-12);
        assert!((m.components[(0, 1)] - h).abs() < 1e-12);
        // (2,2) with zero mean projects to 2*sqrt(2)
        let p = pca_project(&m, &DMatrix::from_row_slice(1, 2, &[2., 2.])).unwrap();
        assert!((p[(0, 0)] - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn k_out_of_range() {
        let x = random(10, 2, 1);
        assert!(matches!(pca_fit(&x, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(pca_fit(&x, 0), Err(Error::InvalidArgument(_))));
        assert!(pca_fit(&random(3, 5, 1), 3).is_err());
    }

    #[test]
    fn identical_rows_are_zero_variance() {
        let x = DMatrix::from_element(5, 3, 0.1);
        assert!(matches!(pca_fit(&x, 1), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn full_rank_reconstruction_is_lossless() {
        let x = random(200, 10, 2);
        let m = pca_fit(&x, 10).unwrap();
        let z = pca_project(&m, &x).unwrap();
        let mut recon = &z * &m.components;
        for mut row in recon.row_iter_mut() {
            row += m.mean.transpose();
        }
        assert!((&x - recon).norm() < 1e-8);
    }

    #[test]
    fn components_orthonormal_and_variance_sorted() {
        let x = random(80, 12, 3);
        let m = pca_fit(&x, 6).unwrap();
        let gram = &m.components * m.components.transpose();
        assert!((gram - DMatrix::identity(6, 6)).amax() < 1e-8);
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        for row in m.components.row_iter() {
            let big = row.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn projections_are_decorrelated() {
        let mut x = random(300, 5, 4);
        for r in 0..300 {
            x[(r, 1)] += 0.8 * x[(r, 0)];
        }
        let m = pca_fit(&x, 5).unwrap();
        let z = pca_project(&m, &x).unwrap();
        let cov = z.transpose() * &z / 299.0;
        let top = cov[(0, 0)];
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert!(cov[(i, j)].abs() / top < 1e-8);
                }
            }
        }
    }

    #[test]
    fn mean_row_projects_to_zero_and_shapes() {
        let x = random(30, 4, 5);
        let m = pca_fit(&x, 2).unwrap();
        let mean_row = DMatrix::from_row_slice(1, 4, m.mean.as_slice());
        assert!(pca_project(&m, &mean_row).unwrap().amax() < 1e-12);
        assert_eq!(pca_project(&m, &random(7, 4, 6)).unwrap().shape(), (7, 2));
        assert!(pca_project(&m, &random(7, 3, 6)).is_err());
    }

    #[test]
    fn clamped_fit_respects_rank() {
        // rank-1 data in 3 features
        let mut x = DMatrix::zeros(10, 3);
        for r in 0..10 {
            let t = r as f64 - 4.5;
            x[(r, 0)] = t;
            x[(r, 1)] = 2.0 * t;
            x[(r, 2)] = -t;
        }
        let m = pca_fit_clamped(&x, 25).unwrap();
        assert_eq!(m.n_components(), 1);
        assert_eq!(numerical_rank(&x).unwrap(), 1);
    }
}
