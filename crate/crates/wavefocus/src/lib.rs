//! Command-line pipeline around `wavefocus-core`: configuration files,
//! design bundles, independent verification, `T` sweeps and figures.
//!
//! A design bundle is a directory holding the echoed config, the target and
//! `h` coefficients, `q` and the particle density on the ball grid, reports,
//! and a manifest listing every file with its SHA-256.

// `!(x > 0.0)` is the NaN-rejecting form
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod svg;

pub use config::DesignConfig;
pub use error::{exit, CliError, CliResult};

/// Environment variable that overrides the default output directory.
pub const OUTPUT_DIR_ENV: &str = "WAVEFOCUS_OUTPUT_DIR";
