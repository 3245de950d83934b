use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::corr::{pearson, rank_average};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTest {
    pub r: f64,
    pub n: usize,
    /// Two-sided, from Student's t with n-2 degrees of freedom.
    pub p_value: f64,
}

pub fn pearson_test(x: &[f64], y: &[f64]) -> Result<CorrelationTest> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument("correlation test needs at least 3 points".into()));
    }
    let r = pearson(x, y)?;
    let df = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * dist.cdf(-t.abs())
    };
    Ok(CorrelationTest { r, n, p_value })
}

/// Wilcoxon rank-sum / Mann-Whitney U result for samples `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// U statistic of the first sample.
    pub u: f64,
    pub z: f64,
    /// Two-sided, normal approximation with tie and continuity correction.
    pub p_value: f64,
}

pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("rank-sum test needs two non-empty samples".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = rank_average(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let u = r1 - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;

    let n = n1f + n2f;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return Ok(RankSumTest { u, z: 0.0, p_value: 1.0 });
    }
    let diff = u - mean;
    let corrected = (diff.abs() - 0.5).max(0.0) * diff.signum();
    let z = corrected / var.sqrt();
    let normal = Normal::standard();
    let p_value = (2.0 * normal.cdf(-z.abs())).min(1.0);
    Ok(RankSumTest { u, z, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_anticorrelation_has_zero_p() {
        let t = pearson_test(&[1., 2., 3., 4.], &[8., 6., 4., 2.]).unwrap();
        assert_eq!(t.r, -1.0);
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn t_test_reference_value() {
        // r = 0.6, n = 4: t = 0.6 * sqrt(2 / 0.64) = 1.0607, df = 2,
        // two-sided p = 1 - t / sqrt(t^2 + 2) = 0.4
        let t = pearson_test(&[1., 2., 3., 4.], &[2., 1., 4., 3.]).unwrap();
        assert!((t.p_value - 0.4).abs() < 1e-9, "{}", t.p_value);
    }

    #[test]
    fn rank_sum_separated_samples() {
        let a: Vec<f64> = (0..12).map(|i| 10.0 + i as f64).collect();
        let b: Vec<f64> = (0..16).map(|i| i as f64 * 0.5).collect();
        let t = rank_sum_test(&a, &b).unwrap();
        assert_eq!(t.u, 12.0 * 16.0);
        assert!(t.p_value < 1e-4);
        assert!(t.z > 0.0);
        let rev = rank_sum_test(&b, &a).unwrap();
        assert_eq!(rev.u, 0.0);
        assert!((rev.p_value - t.p_value).abs() < 1e-15);
    }

    #[test]
    fn rank_sum_identical_samples() {
        let t = rank_sum_test(&[1., 1., 1.], &[1., 1.]).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(rank_sum_test(&[], &[1.0]).is_err());
    }
}
