use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_of, normal, normal_matrix, orthonormal};
use crate::consistency::rsa_category;
use crate::engine::{dvc_pair, DvcConfig};
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::seed;

/// Paired observers with a task subspace (class means plus trial
/// fluctuations correlated `base_corr` across observers), a task-irrelevant
/// subspace of fluctuations common to both observers, and independent
/// per-feature noise. Each observer embeds the latent space with its own
/// random orthonormal map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharedFluctuationSpec {
    pub base_corr: f64,
    pub indep_sd: f64,
    pub shared_sd: f64,
    /// Feature count of each observer.
    pub dims: usize,
    /// Samples per class.
    pub samples: usize,
    pub n_classes: usize,
    pub task_dims: usize,
    pub shared_dims: usize,
    pub class_sep: f64,
    /// Fraction of class-mean variance common to both observers; the rest
    /// is observer-specific class geometry.
    pub mean_overlap: f64,
    pub dvc: DvcConfig,
}

impl Default for SharedFluctuationSpec {
    fn default() -> Self {
        SharedFluctuationSpec {
            base_corr: 0.5,
            indep_sd: 0.5,
            shared_sd: 0.0,
            dims: 40,
            samples: 100,
            n_classes: 8,
            task_dims: 3,
            shared_dims: 4,
            class_sep: 1.0,
            mean_overlap: 0.3,
            dvc: DvcConfig::default(),
        }
    }
}

impl SharedFluctuationSpec {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(-1.0..=1.0).contains(&self.base_corr) {
            bad.push(format!("base_corr = {} outside [-1, 1]", self.base_corr));
        }
        for (name, v) in [("indep_sd", self.indep_sd), ("shared_sd", self.shared_sd), ("class_sep", self.class_sep)] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("{name} = {v} must be non-negative"));
            }
        }
        if !(0.0..=1.0).contains(&self.mean_overlap) {
            bad.push(format!("mean_overlap = {} outside [0, 1]", self.mean_overlap));
        }
        if self.n_classes < 3 {
            bad.push("n_classes must be at least 3".to_string());
        }
        if self.samples < 2 {
            bad.push("samples must be at least 2".to_string());
        }
        if self.task_dims == 0 {
            bad.push("task_dims must be at least 1".to_string());
        }
        if self.task_dims + self.shared_dims > self.dims {
            bad.push(format!(
                "task_dims + shared_dims = {} exceeds dims = {}",
                self.task_dims + self.shared_dims,
                self.dims
            ));
        }
        if let Err(e) = self.dvc.validate() {
            bad.push(e.to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

/// Draws depend on the seed and the spec's shape only; `shared_sd` scales
/// the common fluctuations after they are drawn.
pub fn gen_shared_fluctuation(
    spec: &SharedFluctuationSpec,
    seed: u64,
) -> Result<(RepresentationSet, RepresentationSet)> {
    spec.validate()?;
    let (c, r, q) = (spec.n_classes, spec.task_dims, spec.shared_dims);
    let n = c * spec.samples;
    let labels: Vec<usize> = (0..n).map(|t| t % c).collect();
    let mut rng = seed::rng(seed::derive(seed, &[0x5AED, 0]));
    let means = normal_matrix(&mut rng, c, r) * spec.class_sep;
    let common_task = normal_matrix(&mut rng, n, r);
    let shared = normal_matrix(&mut rng, n, q) * spec.shared_sd;
    let rho = spec.base_corr;
    let own_weight = (1.0 - rho.abs()).sqrt();
    let common_weight = rho.abs().sqrt();

    let observer = |which: u64, id: &str| {
        let mut rng = seed::rng(seed::derive(seed, &[0x5AED, 1 + which]));
        let embed = orthonormal(&mut rng, spec.dims, r + q);
        let own = normal_matrix(&mut rng, n, r);
        let own_means = normal_matrix(&mut rng, c, r) * spec.class_sep;
        let (wm, wo) = (spec.mean_overlap.sqrt(), (1.0 - spec.mean_overlap).sqrt());
        // signed so the two observers' task fluctuations correlate by rho
        let sign = if which == 1 && rho < 0.0 { -1.0 } else { 1.0 };
        let mut latent = DMatrix::zeros(n, r + q);
        for t in 0..n {
            for k in 0..r {
                latent[(t, k)] = wm * means[(labels[t], k)]
                    + wo * own_means[(labels[t], k)]
                    + sign * common_weight * common_task[(t, k)] + own_weight * own[(t, k)];
            }
            for k in 0..q {
                latent[(t, r + k)] = shared[(t, k)];
            }
        }
        let mut x = latent * embed.transpose();
        for v in x.iter_mut() {
            *v += spec.indep_sd * normal(&mut rng);
        }
        RepresentationSet::from_indices(id, x, &labels)
    };
    Ok((observer(0, "fluct_a")?, observer(1, "fluct_b")?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedSweepRow {
    pub shared_sd: f64,
    pub dvc: f64,
    pub rsa: f64,
}

fn shared_level(spec: &SharedFluctuationSpec, level: f64, seed: u64) -> Result<SharedSweepRow> {
    let spec = SharedFluctuationSpec { shared_sd: level, ..spec.clone() };
    let (a, b) = gen_shared_fluctuation(&spec, seed)?;
    let cfg = DvcConfig { seed: seed::derive(seed, &[0xD7C]), ..spec.dvc.clone() };
    let dvc = dvc_pair(&a, &b, &cfg)?.aggregate.unwrap_or(f64::NAN);
    let rsa = rsa_category(&a, &b).unwrap_or(f64::NAN);
    Ok(SharedSweepRow { shared_sd: level, dvc, rsa })
}

/// DVC and category-level RSA per shared-fluctuation level, averaged over
/// `replicates` seeds derived from `seed`.
pub fn sweep_shared_fluctuation(
    spec: &SharedFluctuationSpec,
    levels: &[f64],
    seed: u64,
    replicates: usize,
) -> Result<Vec<SharedSweepRow>> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least 2 levels".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..levels.len()).flat_map(|l| (0..replicates).map(move |r| (l, r))).collect();
    let rows: Vec<SharedSweepRow> = cells
        .par_iter()
        .map(|&(l, r)| shared_level(spec, levels[l], seed::derive(seed, &[r as u64])))
        .collect::<Result<_>>()?;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(l, &level)| {
            let block = &rows[l * replicates..(l + 1) * replicates];
            SharedSweepRow {
                shared_sd: level,
                dvc: mean_of(block.iter().map(|r| r.dvc)),
                rsa: mean_of(block.iter().map(|r| r.rsa)),
            }
        })
        .collect())
}
