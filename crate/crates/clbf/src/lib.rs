//! Cascaded learned Bloom filter (CLBF).
//!
//! A CLBF answers approximate membership queries with zero false negatives.
//! It interleaves the weak learners of a boosted tree ensemble with Bloom
//! filters: each depth has a *trunk* filter that can reject a query before
//! the next weak learner runs, a score threshold that diverts high-scoring
//! queries into a *branch* filter, and the last depth partitions the score
//! range into regions backed by *final* filters. A dynamic program selects
//! the number of weak learners to keep, the per-filter false positive
//! rates, and the score partition so that a weighted sum of memory and
//! expected reject time is minimized subject to an overall false positive
//! budget.
//!
//! The crate also ships the structures the CLBF is benchmarked against
//! (classical Bloom filter, sandwiched LBF, partitioned LBF), synthetic
//! dataset generators with reproducible seeding, and binary serialization
//! for every structure.
//!
//! Model and dataset code is generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); measurement-domain code (bit counts, fractions,
//! nanoseconds) is plain `f64`. Concrete `f64` aliases live at the crate
//! root.

pub mod baselines;
pub mod bloom;
pub mod cascade;
pub mod dataset;
pub mod error;
pub mod gbdt;
pub mod hash;
pub mod optimizer;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default-precision dataset.
pub type Dataset64 = dataset::LabeledDataset<f64>;
/// Default-precision boosted ensemble.
pub type Ensemble64 = gbdt::BoostedEnsemble<f64>;
/// Default-precision cascaded learned Bloom filter.
pub type Clbf64 = cascade::Clbf<f64>;
/// Default-precision partitioned LBF baseline.
pub type Plbf64 = baselines::Plbf<f64>;
/// Default-precision sandwiched LBF baseline.
pub type Sandwiched64 = baselines::Sandwiched<f64>;
