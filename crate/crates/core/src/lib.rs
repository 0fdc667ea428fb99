//! Rainfall-runoff forecasting on spatio-temporal series.
//!
//! The crate covers the whole desk-scale pipeline: ingestion of
//! CAMELS-style CSV archives ([`dataset`]), a seeded water-balance
//! generator ([`synth`]), feature transforms, PCA and splits
//! ([`preprocess`]), exogenous space/time encodings ([`encodings`]), a
//! dense-encoder/LSTM/dense-decoder network trained with BPTT and Adam over
//! symbolic sliding windows ([`model`]), RMSE/NSE/NNSE reporting ([`eval`]),
//! and config-driven runs ([`cli`]).

pub mod cli;
pub mod dataset;
pub mod encodings;
pub mod error;
pub mod eval;
pub mod model;
pub mod numerics;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
