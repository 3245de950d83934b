//! Synthetic observers with known ground truth, and the sweeps that
//! contrast DVC with kappa and RSA on them.
//!
//! Every generator is a pure function of its spec and seed. Sweeps reuse
//! the same random draws at every level (common random numbers), so the
//! swept parameter is the only thing that changes between rows.

mod benchmark;
mod bias;
mod embed;
mod latent;
mod prior;
mod shared;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use benchmark::{gen_class_benchmark, ClassBenchmarkSpec, SynthObserverSpec};
pub use bias::{gen_bias_observers, sweep_bias, BiasObserverSpec, BiasObservers, BiasSweepRow};
pub use embed::{embed_latents_as_features, EmbedSpec};
pub use latent::{
    attenuated_correlation, gen_latent_dvs, gen_latent_signals, sweep_recovery, LatentDvModel, LatentSignals,
    RecoveryRow, RecoverySpec,
};
pub use prior::{gen_shared_prior, SharedPriorData, SharedPriorObserver, SharedPriorSpec};
pub use shared::{gen_shared_fluctuation, sweep_shared_fluctuation, SharedFluctuationSpec, SharedSweepRow};

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub(crate) fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // row-major draw order, independent of nalgebra's storage order
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = normal(rng);
        }
    }
    m
}

/// `d`×`k` matrix with orthonormal columns, uniformly random up to the
/// sign convention of the QR factorization.
pub(crate) fn orthonormal(rng: &mut ChaCha8Rng, d: usize, k: usize) -> DMatrix<f64> {
    assert!(k <= d);
    normal_matrix(rng, d, k).qr().q()
}

/// Element-wise mean of equally shaped rows of numbers.
pub(crate) fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}
