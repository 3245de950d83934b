use serde::{Deserialize, Serialize};

use super::{normal, normal_matrix};
use crate::error::{Error, Result};
use crate::repstore::{ObserverKind, ObserverMeta, RepresentationSet};
use crate::seed;

/// Multi-class stimulus set shared by every synthetic observer: class means
/// and per-stimulus fluctuations in a small latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassBenchmarkSpec {
    pub n_classes: usize,
    pub per_class: usize,
    pub latent_dims: usize,
    pub n_features: usize,
    pub class_sep: f64,
    /// Sd of the stimulus-driven fluctuation every observer sees.
    pub stimulus_sd: f64,
    pub feature_noise_sd: f64,
}

impl Default for ClassBenchmarkSpec {
    fn default() -> Self {
        ClassBenchmarkSpec {
            n_classes: 8,
            per_class: 400,
            latent_dims: 8,
            n_features: 100,
            class_sep: 1.0,
            stimulus_sd: 1.0,
            feature_noise_sd: 0.1,
        }
    }
}

/// One observer: the shared stimulus latent, plus a fluctuation common to
/// its family and one of its own, mixed into features by a random map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthObserverSpec {
    pub id: String,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub family_sd: f64,
    #[serde(default)]
    pub private_sd: f64,
    #[serde(default)]
    pub kind: ObserverKind,
}

impl SynthObserverSpec {
    pub fn new(id: &str, family: Option<&str>, family_sd: f64, private_sd: f64) -> Self {
        SynthObserverSpec {
            id: id.to_string(),
            family: family.map(str::to_string),
            family_sd,
            private_sd,
            kind: ObserverKind::Synthetic,
        }
    }

    /// Within-class correlation of this observer's latent with another's
    /// along any fixed direction.
    pub fn latent_correlation(&self, other: &SynthObserverSpec, stimulus_sd: f64) -> f64 {
        let var = |o: &SynthObserverSpec| {
            let f = if o.family.is_some() { o.family_sd.powi(2) } else { 0.0 };
            stimulus_sd.powi(2) + f + o.private_sd.powi(2)
        };
        let mut cov = stimulus_sd.powi(2);
        if self.family.is_some() && self.family == other.family {
            cov += self.family_sd * other.family_sd;
        }
        if self.id == other.id {
            cov = var(self);
        }
        cov / (var(self) * var(other)).sqrt()
    }
}

pub fn gen_class_benchmark(
    spec: &ClassBenchmarkSpec,
    observers: &[SynthObserverSpec],
    seed: u64,
) -> Result<Vec<(ObserverMeta, RepresentationSet)>> {
    if spec.n_classes < 2 || spec.per_class < 2 || spec.latent_dims == 0 || spec.n_features < 2 {
        return Err(Error::InvalidArgument("benchmark needs ≥2 classes, ≥2 per class, ≥2 features".into()));
    }
    let (c, r, d) = (spec.n_classes, spec.latent_dims, spec.n_features);
    let n = c * spec.per_class;
    let labels: Vec<usize> = (0..n).map(|t| t % c).collect();
    let mut rng = seed::rng(seed::derive(seed, &[0xBE7C]));
    let means = normal_matrix(&mut rng, c, r) * spec.class_sep;
    let stimulus = normal_matrix(&mut rng, n, r) * spec.stimulus_sd;

    observers
        .iter()
        .map(|o| {
            let mut latent = stimulus.clone();
            for t in 0..n {
                let mut row = latent.row_mut(t);
                row += means.row(labels[t]);
            }
            if let Some(f) = &o.family {
                let mut frng = seed::rng(seed::derive(seed, &[0xFA41, seed::hash_str(f)]));
                latent += normal_matrix(&mut frng, n, r) * o.family_sd;
            }
            let mut orng = seed::rng(seed::derive(seed, &[0x0B5E, seed::hash_str(&o.id)]));
            latent += normal_matrix(&mut orng, n, r) * o.private_sd;
            let mixing = normal_matrix(&mut orng, d, r) / (r as f64).sqrt();
            let mut x = latent * mixing.transpose();
            for v in x.iter_mut() {
                *v += spec.feature_noise_sd * normal(&mut orng);
            }
            let mut meta = ObserverMeta::new(o.id.clone(), o.kind);
            meta.family = o.family.clone();
            Ok((meta, RepresentationSet::from_indices(o.id.clone(), x, &labels)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_shared_labels() {
        let spec = ClassBenchmarkSpec { per_class: 10, ..ClassBenchmarkSpec::default() };
        let obs = [SynthObserverSpec::new("a", Some("f"), 1.0, 0.5), SynthObserverSpec::new("b", None, 0.0, 0.5)];
        let sets = gen_class_benchmark(&spec, &obs, 1).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].1.matrix.shape(), (80, 100));
        assert!(sets[0].1.same_stimuli(&sets[1].1));
        assert_eq!(sets[0].0.family.as_deref(), Some("f"));
    }

    #[test]
    fn latent_correlation_formula() {
        let a = SynthObserverSpec::new("a", Some("f"), 1.0, 0.5);
        let b = SynthObserverSpec::new("b", Some("f"), 1.0, 0.5);
        let c = SynthObserverSpec::new("c", Some("g"), 1.0, 0.5);
        assert!((a.latent_correlation(&b, 1.0) - 2.0 / 2.25).abs() < 1e-12);
        assert!((a.latent_correlation(&c, 1.0) - 1.0 / 2.25).abs() < 1e-12);
        assert_eq!(a.latent_correlation(&a, 1.0), 1.0);
    }

    #[test]
    fn observer_draws_do_not_depend_on_roster() {
        let spec = ClassBenchmarkSpec { per_class: 5, ..ClassBenchmarkSpec::default() };
        let a = SynthObserverSpec::new("a", None, 0.0, 0.5);
        let b = SynthObserverSpec::new("b", None, 0.0, 0.5);
        let one = gen_class_benchmark(&spec, &[a.clone()], 3).unwrap();
        let two = gen_class_benchmark(&spec, &[b, a], 3).unwrap();
        assert_eq!(one[0].1, two[1].1);
    }
}
