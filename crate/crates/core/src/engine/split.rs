use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::repstore::RepresentationSet;
use crate::seed;

/// Random disjoint feature halves: a seeded permutation whose first
/// `ceil(d/2)` indices form half 1 and the rest half 2. Column order inside
/// each half follows the original feature order.
pub fn split_features(set: &RepresentationSet, seed: u64) -> Result<(RepresentationSet, RepresentationSet)> {
    let (h1, h2) = split_indices(set.n_features(), seed)?;
    Ok((set.select_features(&h1), set.select_features(&h2)))
}

pub(crate) fn split_indices(d: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "feature split needs at least 2 features, got {d}"
        )));
    }
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut seed::rng(seed));
    let cut = d.div_ceil(2);
    let mut h1 = perm[..cut].to_vec();
    let mut h2 = perm[cut..].to_vec();
    h1.sort_unstable();
    h2.sort_unstable();
    Ok((h1, h2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn set(d: usize) -> RepresentationSet {
        let m = DMatrix::from_fn(4, d, |r, c| (r * d + c) as f64);
        RepresentationSet::from_labels("s", m, &["a", "a", "b", "b"]).unwrap()
    }

    #[test]
    fn even_split_is_disjoint_and_exhaustive() {
        let (a, b) = split_indices(4, 9).unwrap();
        assert_eq!((a.len(), b.len()), (2, 2));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
        let (h1, h2) = split_features(&set(4), 9).unwrap();
        assert_eq!(h1.matrix, set(4).matrix.select_columns(&a));
        assert_eq!(h2.labels, set(4).labels);
    }

    #[test]
    fn odd_split_uses_ceiling() {
        let (a, b) = split_indices(5, 1).unwrap();
        assert_eq!((a.len(), b.len()), (3, 2));
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        assert_eq!(split_indices(100, 3).unwrap(), split_indices(100, 3).unwrap());
        assert_ne!(split_indices(100, 3).unwrap(), split_indices(100, 4).unwrap());
    }

    #[test]
    fn too_few_features() {
        assert!(split_indices(1, 0).is_err());
    }
}
