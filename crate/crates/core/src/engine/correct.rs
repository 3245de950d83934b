use super::{DvcComponents, DvcConfig, SplitDvSet};
use crate::error::{Error, Result};

/// Noise-corrected correlation from split-half decision variables:
/// `r_cross / r_self`, where `r_cross` is the geometric mean of the four
/// cross-observer correlations and `r_self` the geometric mean of the two
/// within-observer split-half correlations.
///
/// A non-positive split-half correlation leaves the normalization
/// undefined and is reported as [`Error::Degenerate`]. Values above 1 are
/// returned as-is with `capped_flag` set.
pub fn corrected_dvc(s: &SplitDvSet, config: &DvcConfig) -> Result<DvcComponents> {
    s.validate()?;
    let rho = |x: &[f64], y: &[f64]| config.correlation.compute(x, y);
    let cross = [
        rho(&s.dv_a1, &s.dv_b1)?,
        rho(&s.dv_a1, &s.dv_b2)?,
        rho(&s.dv_a2, &s.dv_b1)?,
        rho(&s.dv_a2, &s.dv_b2)?,
    ];
    let self_a = rho(&s.dv_a1, &s.dv_a2)?;
    let self_b = rho(&s.dv_b1, &s.dv_b2)?;
    if self_a <= 0.0 || self_b <= 0.0 {
        return Err(Error::Degenerate(format!(
            "non-positive split-half reliability ({self_a:.4}, {self_b:.4})"
        )));
    }

    let magnitude = cross.iter().map(|c| c.abs()).product::<f64>().powf(0.25);
    let r_cross = if config.abs_before_geomean || cross.iter().all(|&c| c > 0.0) {
        magnitude
    } else if cross.iter().all(|&c| c < 0.0) {
        -magnitude
    } else {
        return Err(Error::Degenerate(format!(
            "cross correlations of mixed sign {cross:?}"
        )));
    };
    let r_self = (self_a * self_b).sqrt();
    let corrected = r_cross / r_self;
    Ok(DvcComponents {
        cross,
        self_a,
        self_b,
        r_cross,
        r_self,
        corrected,
        capped_flag: corrected > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Latent signals with correlation `rho` and unit variance; every split
    /// adds its own N(0, noise^2).
    fn sample(rho: f64, noise: f64, m: usize, seed: u64) -> SplitDvSet {
        let mut rng = crate::seed::rng(seed ^ 0x5eed);
        let mut n = || -> f64 { rng.sample(StandardNormal) };
        let mut out = SplitDvSet { dv_a1: vec![], dv_a2: vec![], dv_b1: vec![], dv_b2: vec![] };
        for _ in 0..m {
            let sa = n();
            let sb = rho * sa + (1.0 - rho * rho).sqrt() * n();
            out.dv_a1.push(sa + noise * n());
            out.dv_a2.push(sa + noise * n());
            out.dv_b1.push(sb + noise * n());
            out.dv_b2.push(sb + noise * n());
        }
        out
    }

    #[test]
    fn identical_vectors_give_one() {
        let x = vec![0.1, 2.0, -1.0, 0.7, 3.3];
        let s = SplitDvSet { dv_a1: x.clone(), dv_a2: x.clone(), dv_b1: x.clone(), dv_b2: x };
        let c = corrected_dvc(&s, &DvcConfig::default()).unwrap();
        assert_eq!(c.corrected, 1.0);
        assert!(!c.capped_flag);
    }

    #[test]
    fn recovers_latent_correlation_under_attenuation() {
        // sigma = 1, noise = 1: rho_obs = 0.5 * 1/2 = 0.25, reliability 0.5
        let cfg = DvcConfig::default();
        let runs: Vec<DvcComponents> = (0..20)
            .map(|seed| corrected_dvc(&sample(0.5, 1.0, 5000, seed), &cfg).unwrap())
            .collect();
        let mean = |f: &dyn Fn(&DvcComponents) -> f64| runs.iter().map(f).sum::<f64>() / 20.0;
        assert!((mean(&|c| c.cross[0]) - 0.25).abs() < 0.03);
        assert!((mean(&|c| c.r_cross) - 0.25).abs() < 0.03);
        assert!((mean(&|c| c.self_a) - 0.5).abs() < 0.03);
        assert!((mean(&|c| c.corrected) - 0.5).abs() < 0.03);
    }

    #[test]
    fn heavy_noise_unbiased_but_can_exceed_one() {
        let cfg = DvcConfig::default();
        let runs: Vec<DvcComponents> = (0..20)
            .map(|seed| corrected_dvc(&sample(1.0, 3.0, 5000, 100 + seed), &cfg).unwrap())
            .collect();
        let mean = runs.iter().map(|c| c.corrected).sum::<f64>() / 20.0;
        assert!((mean - 1.0).abs() < 0.08, "mean {mean}");
        let capped: Vec<_> = runs.iter().filter(|c| c.capped_flag).collect();
        assert!(!capped.is_empty());
        assert!(capped.iter().all(|c| c.corrected > 1.0));
    }

    #[test]
    fn negative_reliability_is_degenerate() {
        let s = SplitDvSet {
            dv_a1: vec![1., 2., 3., 4.],
            dv_a2: vec![4., 3., 2., 1.],
            dv_b1: vec![1., 2., 3., 5.],
            dv_b2: vec![1., 3., 2., 4.],
        };
        assert!(matches!(corrected_dvc(&s, &DvcConfig::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn constant_dv_is_error() {
        let s = SplitDvSet {
            dv_a1: vec![1., 1., 1.],
            dv_a2: vec![1., 2., 3.],
            dv_b1: vec![1., 2., 3.],
            dv_b2: vec![1., 2., 3.],
        };
        assert!(matches!(corrected_dvc(&s, &DvcConfig::default()), Err(Error::ConstantInput)));
    }

    #[test]
    fn sign_handling_of_cross_correlations() {
        let x = vec![1., 2., 3., 4., 5.];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let s = SplitDvSet { dv_a1: x.clone(), dv_a2: x.clone(), dv_b1: neg.clone(), dv_b2: neg };
        let with_abs = corrected_dvc(&s, &DvcConfig::default()).unwrap();
        assert_eq!(with_abs.corrected, 1.0);
        let cfg = DvcConfig { abs_before_geomean: false, ..DvcConfig::default() };
        assert_eq!(corrected_dvc(&s, &cfg).unwrap().corrected, -1.0);

        // a1 and a2 agree (r = 0.8) but sit on opposite sides of b
        let b = vec![2., 4., 3., 2., 4.];
        let mixed = SplitDvSet {
            dv_a1: x.clone(),
            dv_a2: vec![2., 1., 3., 5., 4.],
            dv_b1: b.clone(),
            dv_b2: b,
        };
        let r = corrected_dvc(&mixed, &cfg);
        assert!(matches!(r, Err(Error::Degenerate(_))), "{r:?}");
    }

    #[test]
    fn length_mismatch_rejected() {
        let s = SplitDvSet {
            dv_a1: vec![1., 2., 3.],
            dv_a2: vec![1., 2., 3.],
            dv_b1: vec![1., 2., 3.],
            dv_b2: vec![1., 2.],
        };
        assert!(corrected_dvc(&s, &DvcConfig::default()).is_err());
    }
}
