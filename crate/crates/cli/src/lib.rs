//! Experiment harness: configuration, trial logs, comparisons and plots.

pub mod commands;
pub mod config;
pub mod plot;
pub mod runlog;
