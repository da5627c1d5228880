//! Differentially private one-way ANOVA.
//!
//! This crate is `no_std` (it needs `alloc`) and holds the pure algorithmic
//! pieces: exact ANOVA-style statistics and their L1 / Lq relatives, closed-form
//! sensitivity bounds, Laplace noise driven by reproducible counter-based
//! streams, the private statistics built from them, and the Monte Carlo
//! hypothesis test that turns a noisy statistic into a p-value.
//!
//! IO, parallel simulation sweeps and the command line live in the `dpanova`
//! crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod anova;
pub mod data;
mod error;
pub mod mechanism;
pub mod private;
pub mod rng;
pub mod scenario;
pub mod stats;
mod sum;

pub use anova::{anova_test, AnovaConfig, PValueRule, ReferenceConfig, ReferenceSampler, TestReport};
pub use data::{Dataset, GroupSummary};
pub use error::{Error, Result};
pub use mechanism::{BudgetSplit, PrivacyBudget};
pub use private::{PrivateStatOutput, Procedure};
pub use rng::{NoiseMode, NoiseSource, NoiseStream, StreamKey};
pub use scenario::{Allocation, ScenarioSpec};
pub use stats::StatDecomposition;
