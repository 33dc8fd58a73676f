//! Monte-Carlo studies, result files and the command-line front end for the
//! `cecfo-core` estimator.
//!
//! - [`cli`]: subcommands behind the `cecfo` binary.
//! - [`experiments`]: MSE estimation, the α sweep and the minimum-SNR search.
//! - [`validation`]: empirical check of the periodogram term moments.
//! - [`scenario`]: the `key = value` scenario file.
//! - [`output`]: CSV tables, run manifests and atomic file writes.
//! - [`frame_io`]: little-endian binary frame dumps.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod frame_io;
pub mod output;
pub mod scenario;
pub mod validation;

pub use error::{SimError, SimResult};
