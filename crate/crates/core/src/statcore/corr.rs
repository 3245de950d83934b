use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    #[default]
    Pearson,
    Spearman,
}

impl Correlation {
    pub fn compute(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Correlation::Pearson => pearson(x, y),
            Correlation::Spearman => spearman(x, y),
        }
    }
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "correlation inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 3 points, got {}",
            x.len()
        )));
    }
    Ok(())
}

fn centered_sum_squares(v: &[f64]) -> (Vec<f64>, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let dev: Vec<f64> = v.iter().map(|a| a - mean).collect();
    let ss = dev.iter().map(|d| d * d).sum::<f64>();
    (dev, ss)
}

fn is_constant(v: &[f64], ss: f64) -> bool {
    let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    ss == 0.0 || ss.sqrt() <= 1e-14 * scale * (v.len() as f64).sqrt()
}

/// Product-moment correlation. Constant inputs are an error rather than 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    let (dx, sxx) = centered_sum_squares(x);
    let (dy, syy) = centered_sum_squares(y);
    if is_constant(x, sxx) || is_constant(y, syy) {
        return Err(Error::ConstantInput);
    }
    let sxy: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties assigned their average rank.
pub fn rank_average(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    pearson(&rank_average(x), &rank_average(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn self_and_negation() {
        let x = [0.3, 1.7, -2.0, 4.1, 0.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_values() {
        // sxy = 3, sxx = syy = 5
        assert_eq!(pearson(&[1., 2., 3., 4.], &[2., 1., 4., 3.]).unwrap(), 0.6);
        // ranks are the values themselves; sxy = -1, sxx = syy = 2
        assert_eq!(spearman(&[1., 2., 3.], &[3., 1., 2.]).unwrap(), -0.5);
    }

    #[test]
    fn constant_input_is_error() {
        assert!(matches!(pearson(&[1., 1., 1.], &[1., 2., 3.]), Err(Error::ConstantInput)));
        assert!(matches!(spearman(&[1., 2., 3.], &[5., 5., 5.]), Err(Error::ConstantInput)));
        assert!(pearson(&[1., 2.], &[1., 2.]).is_err());
        assert!(pearson(&[1., 2., 3.], &[1., 2.]).is_err());
    }

    #[test]
    fn monotone_transform_invariance() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert_eq!(spearman(&x, &ex).unwrap(), 1.0);
    }

    #[test]
    fn ties_match_enumerated_oracle() {
        // Oracle: average rank of a value = mean of the positions it could
        // occupy over every ordering of the tied block, found by enumerating
        // all permutations of the sorted order.
        fn oracle_ranks(v: &[f64]) -> Vec<f64> {
            let n = v.len();
            let mut perms = vec![vec![]];
            for _ in 0..n {
                let mut next = vec![];
                for p in &perms {
                    for i in 0..n {
                        if !p.contains(&i) {
                            let mut q = p.clone();
                            q.push(i);
                            next.push(q);
                        }
                    }
                }
                perms = next;
            }
            let sorted: Vec<Vec<usize>> = perms
                .into_iter()
                .filter(|p: &Vec<usize>| p.windows(2).all(|w| v[w[0]] <= v[w[1]]))
                .collect();
            let mut acc = vec![0.0; n];
            for p in &sorted {
                for (pos, &i) in p.iter().enumerate() {
                    acc[i] += (pos + 1) as f64;
                }
            }
            acc.iter().map(|a| a / sorted.len() as f64).collect()
        }
        let x = [1., 1., 2.];
        let y = [1., 2., 2.];
        assert_eq!(rank_average(&x), oracle_ranks(&x));
        assert_eq!(rank_average(&y), oracle_ranks(&y));
        let expected = pearson(&oracle_ranks(&x), &oracle_ranks(&y)).unwrap();
        assert_eq!(spearman(&x, &y).unwrap(), expected);
        assert!((expected - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pearson_positive_affine_invariant(
            xs in prop::collection::vec(-100.0f64..100.0, 5..40),
            a in 0.01f64..50.0,
            b in -100.0f64..100.0,
            seed in 0u64..1000,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate()
                .map(|(i, x)| x * 0.5 + ((i as u64 * 7919 + seed) % 97) as f64)
                .collect();
            let base = pearson(&xs, &ys);
            prop_assume!(base.is_ok());
            let mapped: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r = pearson(&mapped, &ys).unwrap();
            prop_assert!((r - base.unwrap()).abs() < 1e-12);
        }

        #[test]
        fn correlations_bounded(xs in prop::collection::vec(-1e3f64..1e3, 3..30),
                                ys in prop::collection::vec(-1e3f64..1e3, 3..30)) {
            let n = xs.len().min(ys.len());
            if let Ok(r) = pearson(&xs[..n], &ys[..n]) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
            if let Ok(r) = spearman(&xs[..n], &ys[..n]) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
