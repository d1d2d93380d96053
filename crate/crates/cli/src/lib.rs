//! Command-line front end: condition-number sweeps, bound validation,
//! hyperparameter fits and Bayesian optimization runs.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

pub use config::{parse_bo_config, parse_bounds_config, parse_fit_config, parse_sweep_config};
