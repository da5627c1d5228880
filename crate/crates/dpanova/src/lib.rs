//! Differentially private one-way ANOVA: data ingestion, simulation
//! experiments and the command-line front end built on [`dpanova_core`].

pub mod cli;
pub mod error;
pub mod figures;
pub mod ingest;
pub mod public;
pub mod report;
pub mod simulation;

pub use dpanova_core as core;
pub use error::{Error, Result};
