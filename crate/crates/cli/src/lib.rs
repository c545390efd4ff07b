//! Experiment harness around the `rectwave` optimizers.

pub mod compare;
pub mod config;
pub mod scenarios;
pub mod suite;
