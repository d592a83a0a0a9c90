//! Public-data-assisted differentially private learning.
//!
//! The crate provides the two learners that exploit unlabeled public data
//! (projection onto the public span followed by noisy projected SGD, and the
//! exponential mechanism over an empirical-metric cover), the baseline
//! strategies they are compared against, hard-instance generators with
//! population-risk oracles, closed-form rate calculators, and a seeded Monte
//! Carlo harness for sweeping them.

pub mod covers;
pub mod domain;
pub mod dp;
pub mod error;
pub mod harness;
pub mod instances;
pub mod learners;
pub mod linalg;
pub mod losses;
pub mod rates;
pub mod vecops;

pub use domain::{
    derive_rng, validate_dataset, PrivacyParams, ProblemGeometry, RandomStream, SeedSpec,
    SplitDataset,
};
pub use error::{Error, Result};
