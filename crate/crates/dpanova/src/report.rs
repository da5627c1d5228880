//! Machine-readable outputs: the JSON test report and the sweep manifest.

use dpanova_core::anova::TestReport;
use dpanova_core::{Procedure, StreamKey};
use serde::Serialize;
use serde_json::Value;

use crate::simulation::procedure_label;

/// What a real-data run publishes. Built only from the private release and
/// public parameters; raw values and group sizes never appear.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReportJson {
    pub statistic: String,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub epsilon_spent: f64,
    pub budget_shares: Vec<f64>,
    pub alpha: f64,
    pub stat_hat: f64,
    pub between_hat: f64,
    pub within_hat: f64,
    pub sigma_hat: f64,
    /// `null` when the null was retained without simulation.
    pub p_value: Option<f64>,
    pub decision: &'static str,
    pub reason: Option<&'static str>,
    pub reps: usize,
    pub reference_seed: SeedJson,
    pub data_noise: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedJson {
    pub seed: u64,
    pub index: u64,
}

impl From<StreamKey> for SeedJson {
    fn from(k: StreamKey) -> Self {
        Self {
            seed: k.seed,
            index: k.index,
        }
    }
}

impl TestReportJson {
    pub fn new(report: &TestReport, procedure: &Procedure, seeded: bool) -> Self {
        let out = &report.private_output;
        let reason = report.p_value.is_none().then_some(if out.within_hat < 0.0 {
            "noisy within-group term is negative"
        } else {
            "sigma estimate is not positive"
        });
        Self {
            statistic: procedure_label(procedure),
            n: out.n,
            k: out.k,
            epsilon: out.budget.epsilon(),
            epsilon_spent: out.budget.spent(),
            budget_shares: out.budget.shares(),
            alpha: report.alpha,
            stat_hat: out.stat_hat,
            between_hat: out.between_hat,
            within_hat: out.within_hat,
            sigma_hat: report.sigma_hat,
            p_value: report.p_value,
            decision: if report.reject { "reject" } else { "retain" },
            reason,
            reps: report.reps,
            reference_seed: report.reference_seed.into(),
            data_noise: if seeded { "user-seed" } else { "os-entropy" },
        }
    }
}

/// Provenance for a sweep's CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub figure: Option<String>,
    pub scale: Option<&'static str>,
    pub master_seed: u64,
    pub grids: Value,
    pub records: usize,
    pub rng: &'static str,
    pub versions: Versions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub dpanova: &'static str,
    pub rustc_edition: &'static str,
}

impl RunManifest {
    pub fn new(experiment: &str, master_seed: u64, grids: Value, records: usize) -> Self {
        Self {
            experiment: experiment.into(),
            figure: None,
            scale: None,
            master_seed,
            grids,
            records,
            rng: "chacha8 substreams keyed by splitmix64-derived (seed, stream)",
            versions: Versions {
                dpanova: env!("CARGO_PKG_VERSION"),
                rustc_edition: "2021",
            },
        }
    }
}
