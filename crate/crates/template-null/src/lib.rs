//! Single-subject assessment against a healthy reference cohort.
//!
//! The library fits a Bayesian hierarchical linear model to a small
//! training cohort, generates a template null distribution of the naive
//! slope statistic under an arbitrary single-subject test design, and
//! delivers clinical decisions, p-values, power and error-rate estimates,
//! plus a simulation laboratory for error-rate tables and power curves.

pub mod bayes;
pub mod cli;
pub mod config;
pub mod data;
pub mod decision;
pub mod error;
pub mod estimator;
pub mod seed;
pub mod simlab;
pub mod template;

pub use config::{PriorConfig, RunConfig};
pub use data::{Dataset, DesignSpec, ModelParams, SubjectTrials, TrialRecord};
pub use error::{Error, Result};
