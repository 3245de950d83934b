use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_of, normal};
use crate::engine::{corrected_dvc, DvcConfig, SplitDvSet};
use crate::error::{Error, Result};
use crate::seed;
use crate::statcore::pearson;

/// Two observers' decision variables: correlated signals plus independent
/// noise in each split half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentDvModel {
    pub rho_true: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub noise_a: f64,
    pub noise_b: f64,
    pub m: usize,
}

impl LatentDvModel {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(-1.0..=1.0).contains(&self.rho_true) {
            bad.push(format!("rho_true = {} outside [-1, 1]", self.rho_true));
        }
        for (name, v) in [("sigma_a", self.sigma_a), ("sigma_b", self.sigma_b)] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} = {v} must be positive"));
            }
        }
        for (name, v) in [("noise_a", self.noise_a), ("noise_b", self.noise_b)] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("{name} = {v} must be non-negative"));
            }
        }
        if self.m < 3 {
            bad.push(format!("m = {} too small", self.m));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

/// Noise-free signals of two observers on the same trials.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSignals {
    pub s_a: Vec<f64>,
    pub s_b: Vec<f64>,
}

pub fn gen_latent_signals(model: &LatentDvModel, seed: u64) -> Result<LatentSignals> {
    model.validate()?;
    let mut rng = seed::rng(seed::derive(seed, &[0x5167]));
    let c = (1.0 - model.rho_true * model.rho_true).sqrt();
    let (mut s_a, mut s_b) = (Vec::with_capacity(model.m), Vec::with_capacity(model.m));
    for _ in 0..model.m {
        let (z1, z2) = (normal(&mut rng), normal(&mut rng));
        s_a.push(model.sigma_a * z1);
        s_b.push(model.sigma_b * (model.rho_true * z1 + c * z2));
    }
    Ok(LatentSignals { s_a, s_b })
}

/// Signals from [`gen_latent_signals`] with fresh noise added per split.
pub fn gen_latent_dvs(model: &LatentDvModel, seed: u64) -> Result<SplitDvSet> {
    let sig = gen_latent_signals(model, seed)?;
    let mut rng = seed::rng(seed::derive(seed, &[0x9015]));
    let mut noisy = |s: &[f64], sd: f64| -> Vec<f64> { s.iter().map(|x| x + sd * normal(&mut rng)).collect() };
    let dv_a1 = noisy(&sig.s_a, model.noise_a);
    let dv_a2 = noisy(&sig.s_a, model.noise_a);
    let dv_b1 = noisy(&sig.s_b, model.noise_b);
    let dv_b2 = noisy(&sig.s_b, model.noise_b);
    Ok(SplitDvSet { dv_a1, dv_a2, dv_b1, dv_b2 })
}

/// Population correlation of one split of A with one split of B.
pub fn attenuated_correlation(model: &LatentDvModel) -> f64 {
    let va = model.sigma_a.powi(2) + model.noise_a.powi(2);
    let vb = model.sigma_b.powi(2) + model.noise_b.powi(2);
    model.rho_true * model.sigma_a * model.sigma_b / (va * vb).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverySpec {
    pub rho_true: Vec<f64>,
    /// Split noise sd, applied to both observers.
    pub noise_levels: Vec<f64>,
    pub sigma: f64,
    pub m: usize,
    pub replicates: usize,
    pub dvc: DvcConfig,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        RecoverySpec {
            rho_true: vec![0.2, 0.5, 0.8],
            noise_levels: vec![0.0, 0.5, 1.0, 2.0],
            sigma: 1.0,
            m: 5000,
            replicates: 20,
            dvc: DvcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub rho_true: f64,
    pub noise: f64,
    pub mean_corrected: f64,
    pub sd_corrected: f64,
    pub mean_uncorrected: f64,
    pub predicted_uncorrected: f64,
    pub n_valid: usize,
}

/// Mean corrected and raw cross correlation over replicates for every
/// (rho_true, noise) cell.
pub fn sweep_recovery(spec: &RecoverySpec, seed: u64) -> Result<Vec<RecoveryRow>> {
    if spec.rho_true.is_empty() || spec.noise_levels.is_empty() || spec.replicates == 0 {
        return Err(Error::InvalidArgument(
            "recovery sweep needs rho_true values, noise levels and replicates".into(),
        ));
    }
    let cells: Vec<(f64, f64)> = spec
        .rho_true
        .iter()
        .flat_map(|&r| spec.noise_levels.iter().map(move |&n| (r, n)))
        .collect();
    cells
        .par_iter()
        .map(|&(rho, noise)| {
            let model = LatentDvModel {
                rho_true: rho,
                sigma_a: spec.sigma,
                sigma_b: spec.sigma,
                noise_a: noise,
                noise_b: noise,
                m: spec.m,
            };
            model.validate()?;
            let mut corrected = Vec::new();
            let mut raw = Vec::new();
            for r in 0..spec.replicates {
                let s = gen_latent_dvs(&model, seed::derive(seed, &[r as u64]))?;
                raw.push(pearson(&s.dv_a1, &s.dv_b1)?);
                if let Ok(c) = corrected_dvc(&s, &spec.dvc) {
                    corrected.push(c.corrected);
                }
            }
            let mean_c = mean_of(corrected.iter().copied());
            let sd = (corrected.iter().map(|c| (c - mean_c).powi(2)).sum::<f64>()
                / (corrected.len().max(2) - 1) as f64)
                .sqrt();
            Ok(RecoveryRow {
                rho_true: rho,
                noise,
                mean_corrected: mean_c,
                sd_corrected: sd,
                mean_uncorrected: mean_of(raw.iter().copied()),
                predicted_uncorrected: attenuated_correlation(&model),
                n_valid: corrected.len(),
            })
        })
        .collect()
}
