//! Decision variable correlation (DVC) between paired representations.
//!
//! Given two observers' responses to the same labelled stimuli, the crate
//! decodes a per-stimulus decision variable for every class pair (PCA then a
//! binary linear discriminant), correlates those decision variables across
//! observers within each class, and divides out measurement noise using
//! split-half reliabilities. Competing measures (Cohen's kappa on
//! correctness, category-level RSA) and the synthetic observers used to
//! contrast them live alongside.

pub mod consistency;
pub mod engine;
pub mod error;
pub mod repstore;
pub mod seed;
pub mod statcore;
pub mod synthlab;

pub use error::{Error, Result};
