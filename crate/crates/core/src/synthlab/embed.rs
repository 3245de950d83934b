use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{normal, LatentSignals};
use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSpec {
    pub dims: usize,
    /// Sd of the i.i.d. per-feature nuisance.
    pub nuisance_sd: f64,
    /// Each class is shifted by ±class_offset along the signal axis.
    pub class_offset: f64,
}

impl Default for EmbedSpec {
    fn default() -> Self {
        EmbedSpec { dims: 200, nuisance_sd: 0.3, class_offset: 1.0 }
    }
}

/// Seeded random unit vector; observer `which` (0 or 1) gets its own.
pub fn signal_axis(dims: usize, seed: u64, which: u64) -> DVector<f64> {
    let mut rng = seed::rng(seed::derive(seed, &[0xA715, which]));
    let v = DVector::from_fn(dims, |_, _| normal(&mut rng));
    v.normalize()
}

/// Lifts scalar latent signals into feature space: every trial becomes
/// `(s + offset_c)·u + nuisance`, with two balanced classes drawn
/// independently of the signals. Returns observers "latent_a" and
/// "latent_b" over the same trials.
pub fn embed_latents_as_features(
    latents: &LatentSignals,
    spec: &EmbedSpec,
    seed: u64,
) -> Result<(RepresentationSet, RepresentationSet)> {
    let m = latents.s_a.len();
    if latents.s_b.len() != m {
        return Err(Error::ShapeMismatch("latent signal lengths differ".into()));
    }
    if spec.dims < 2 {
        return Err(Error::InvalidArgument("dims must be at least 2".into()));
    }
    if m < 4 {
        return Err(Error::InvalidArgument("need at least 4 trials".into()));
    }
    if !(spec.nuisance_sd >= 0.0) || !spec.class_offset.is_finite() {
        return Err(Error::InvalidArgument("nuisance_sd must be non-negative".into()));
    }
    let mut labels: Vec<usize> = (0..m).map(|i| usize::from(i >= m / 2)).collect();
    labels.shuffle(&mut seed::rng(seed::derive(seed, &[0xC1A5])));

    let build = |which: u64, s: &[f64], id: &str| {
        let u = signal_axis(spec.dims, seed, which);
        let mut rng = seed::rng(seed::derive(seed, &[0x0015, which]));
        let mut x = DMatrix::zeros(m, spec.dims);
        for t in 0..m {
            let shift = if labels[t] == 1 { spec.class_offset } else { -spec.class_offset };
            let a = s[t] + shift;
            for j in 0..spec.dims {
                x[(t, j)] = a * u[j] + spec.nuisance_sd * normal(&mut rng);
            }
        }
        RepresentationSet::from_indices(id, x, &labels)
    };
    Ok((build(0, &latents.s_a, "latent_a")?, build(1, &latents.s_b, "latent_b")?))
}
