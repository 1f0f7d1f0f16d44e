//! Core algorithms for controllable time series generation.
//!
//! The crate is organized around the two phases of the generation pipeline:
//!
//! * **Training phase** — [`vae`] learns a variational autoencoder over the
//!   training series (built on the dense-network kernels in [`nn`]), and
//!   [`clustering`] partitions the series by their external condition vectors
//!   (k-means / k-modes / k-prototypes depending on the schema).
//! * **Generation phase** — [`selection`] picks a small, diverse subset of the
//!   training data relative to an input series, [`mapping`] fits a white-box
//!   regressor from condition vectors to mean latent vectors on that subset,
//!   and [`latent`] provides bracketed linear interpolation/extrapolation for
//!   single-condition edits.
//!
//! [`eval`] carries the metric suite used to score generated output: distance
//! measures (ED, DTW), attribute coherence (Frechet distance over embeddings,
//! autocorrelation difference), a random-kernel classifier, and an
//! empirical-CDF outlier detector.
//!
//! The crate is `no_std`-compatible (`alloc` required); file formats, CLI and
//! orchestration live in the companion `ctsg` crate. All randomness flows
//! through explicitly seeded generators from [`rng`] and every floating-point
//! path uses `f64`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod clustering;
pub mod condition;
pub mod error;
pub mod eval;
pub mod latent;
pub mod mapping;
pub mod math;
pub mod nn;
pub mod rng;
pub mod selection;
pub mod series;
pub mod vae;

pub use condition::{ConditionSchema, ConditionValue, ConditionVector, Slot, SlotKind};
pub use error::{Error, Result};
pub use series::TimeSeries;
