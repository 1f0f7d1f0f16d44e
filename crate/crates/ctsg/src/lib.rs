//! Controllable time series generation: dataset tooling, the
//! training/generation pipeline, evaluation protocols, and the `ctsg` CLI.
//!
//! The numeric core (VAE, clustering, selection, mapping, metrics) lives in
//! the `ctsg-core` crate; this crate adds file formats, orchestration, and
//! the command-line interface.

pub mod bundle;
pub mod data;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use bundle::{load_bundle, save_bundle, Bundle};
pub use data::{load_csv, load_dir, normalize, save_csv, split, Dataset, NormalizationMeta};
pub use error::{CtsgError, Result};
pub use synth::{synth_generate, SynthSpec};
