//! File formats, configuration and the command line for `l2i-core`.
//!
//! Datasets are CSV files ([`dataset`]); experiments are described by
//! sectioned `key = value` files ([`config`]); runs write one metrics CSV
//! per seed plus a JSON summary ([`output`]). Seeds can be trained on
//! several threads ([`run`]) without changing any output byte.

pub mod commands;
pub mod config;
pub mod dataset;
mod error;
pub mod output;
pub mod run;

pub use error::{Error, Result};
