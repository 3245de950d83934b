use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Shrinkage intensity for the eigen solver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Shrinkage {
    /// Ledoit-Wolf closed-form estimate.
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Shrinkage {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shrinkage::Auto => s.serialize_str("auto"),
            Shrinkage::Fixed(g) => s.serialize_f64(*g),
        }
    }
}

impl<'de> Deserialize<'de> for Shrinkage {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(g) if (0.0..=1.0).contains(&g) => Ok(Shrinkage::Fixed(g)),
            Repr::Num(g) => Err(serde::de::Error::custom(format!(
                "shrinkage {g} outside [0, 1]"
            ))),
            Repr::Str(s) if s == "auto" => Ok(Shrinkage::Auto),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "shrinkage must be \"auto\" or a number, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdaSolver {
    #[default]
    Svd,
    EigenShrinkage(Shrinkage),
}

/// A binary discriminant axis. Projections of class1 samples tend to lie
/// above `threshold`, class0 below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaAxis {
    pub weights: DVector<f64>,
    pub threshold: f64,
    pub class_order: (usize, usize),
}

impl LdaAxis {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(lda_project(self, x)?
            .iter()
            .map(|&v| if v > self.threshold { self.class_order.1 } else { self.class_order.0 })
            .collect())
    }
}

/// Ledoit-Wolf shrinkage intensity for the covariance of already-centered
/// rows `z`, toward `trace/k * I`.
pub fn ledoit_wolf_shrinkage(z: &DMatrix<f64>) -> f64 {
    let (n, k) = z.shape();
    let nf = n as f64;
    let s = z.transpose() * z / nf;
    let mu = s.trace() / k as f64;
    let mut target_gap = s.clone();
    for i in 0..k {
        target_gap[(i, i)] -= mu;
    }
    let delta = target_gap.norm_squared();
    if delta <= 0.0 {
        return 0.0;
    }
    let s_norm2 = s.norm_squared();
    let mut beta_bar = 0.0;
    for row in z.row_iter() {
        let r = row.transpose();
        let sq = r.norm_squared();
        let quad = (r.transpose() * &s * &r)[(0, 0)];
        beta_bar += sq * sq - 2.0 * quad + s_norm2;
    }
    beta_bar /= nf * nf;
    beta_bar.min(delta) / delta
}

/// Fit a two-class Fisher discriminant. `y` must contain exactly two
/// distinct values; the smaller is class0.
pub fn lda_fit(x: &DMatrix<f64>, y: &[usize], solver: LdaSolver) -> Result<LdaAxis> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} rows", y.len())));
    }
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "LDA needs exactly two classes, got {}",
            classes.len()
        )));
    }
    let (c0, c1) = (classes[0], classes[1]);

    let mut means = [DVector::zeros(k), DVector::zeros(k)];
    let mut counts = [0usize; 2];
    for (i, &label) in y.iter().enumerate() {
        let g = usize::from(label == c1);
        means[g] += x.row(i).transpose();
        counts[g] += 1;
    }
    for g in 0..2 {
        if counts[g] < 2 {
            return Err(Error::ClassTooSmall {
                class: [c0, c1][g].to_string(),
                count: counts[g],
                required: 2,
            });
        }
        means[g] /= counts[g] as f64;
    }

    let mut z = x.clone();
    for (i, &label) in y.iter().enumerate() {
        let g = usize::from(label == c1);
        let mut row = z.row_mut(i);
        row -= means[g].transpose();
    }
    let delta = &means[1] - &means[0];

    let mut w = match solver {
        LdaSolver::Svd => {
            let svd = z.clone().svd(false, true);
            let v_t = svd.v_t.expect("requested V^T");
            let s = &svd.singular_values;
            let s_max = s.max();
            let s_min = s.min();
            if s.len() < k || s_max == 0.0 || s_min <= 1e-10 * s_max {
                return Err(Error::SingularScatter(format!(
                    "singular value ratio {:e}",
                    if s_max > 0.0 { s_min / s_max } else { 0.0 }
                )));
            }
            // S_w^{-1} delta up to a positive factor: V diag(1/s^2) V^T delta
            let mut coef = &v_t * &delta;
            for (c, sv) in coef.iter_mut().zip(s.iter()) {
                *c /= sv * sv;
            }
            v_t.transpose() * coef
        }
        LdaSolver::EigenShrinkage(shrink) => {
            let gamma = match shrink {
                Shrinkage::Auto => ledoit_wolf_shrinkage(&z),
                Shrinkage::Fixed(g) if (0.0..=1.0).contains(&g) => g,
                Shrinkage::Fixed(g) => {
                    return Err(Error::InvalidArgument(format!("shrinkage {g} outside [0, 1]")))
                }
            };
            let mut s = z.transpose() * &z / n as f64;
            let mu = s.trace() / k as f64;
            s *= 1.0 - gamma;
            for i in 0..k {
                s[(i, i)] += gamma * mu;
            }
            let eig = SymmetricEigen::new(s);
            let l_max = eig.eigenvalues.max();
            let l_min = eig.eigenvalues.min();
            if l_max <= 0.0 || l_min <= 1e-12 * l_max {
                return Err(Error::SingularScatter(format!(
                    "eigenvalue ratio {:e} at shrinkage {gamma}",
                    if l_max > 0.0 { l_min / l_max } else { 0.0 }
                )));
            }
            let mut coef = eig.eigenvectors.transpose() * &delta;
            for (c, l) in coef.iter_mut().zip(eig.eigenvalues.iter()) {
                *c /= l;
            }
            &eig.eigenvectors * coef
        }
    };

    let norm = w.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate("class means coincide; no discriminant axis".into()));
    }
    w /= norm;
    let (mut p0, mut p1) = (means[0].dot(&w), means[1].dot(&w));
    if p1 < p0 {
        w.neg_mut();
        p0 = -p0;
        p1 = -p1;
    }
    Ok(LdaAxis {
        weights: w,
        threshold: 0.5 * (p0 + p1),
        class_order: (c0, c1),
    })
}

/// Decision variables `X * weights`; the threshold is not subtracted.
pub fn lda_project(axis: &LdaAxis, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    if x.ncols() != axis.weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "axis has {} weights, input has {} columns",
            axis.weights.len(),
            x.ncols()
        )));
    }
    Ok(x * &axis.weights)
}
