//! Feature-based video memorability prediction.
//!
//! A library and CLI toolkit covering the whole desk-scale pipeline:
//!
//! - loading and validating video metadata, ground-truth memorability
//!   scores, captions, and split manifests ([`dataset`]);
//! - ingesting precomputed per-video feature vectors and aggregating
//!   frame-level, per-second, and caption features ([`features`]);
//! - extracting MFCC matrices with delta and delta-delta channels from WAV
//!   audio ([`audio`]);
//! - Bayesian ridge regression with evidence-maximized hyperparameters
//!   ([`ridge`]);
//! - tie-aware Spearman and Pearson evaluation ([`metrics`]);
//! - an experiment harness with within-dataset and cross-dataset protocols,
//!   result-table rendering, and a seeded synthetic fixture generator
//!   ([`harness`]).

pub mod audio;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod metrics;
pub mod ridge;

pub use error::{Error, Result};
