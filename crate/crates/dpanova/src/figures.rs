//! Preset experiment grids.
//!
//! Desk scale uses 1000 trials and 500 reference replicates per test
//! (2000 trials for the ρ sweep); full scale uses 10,000 trials and 1000
//! replicates over wider grids.

use std::fmt;
use std::str::FromStr;

use dpanova_core::anova::AnovaConfig;
use dpanova_core::scenario::ScenarioSpec;
use dpanova_core::Procedure;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::simulation::{
    allocation_study, direct_var_study, power_curve, q_sweep, rho_sweep, sigma_study, type1_sweep,
    AllocationSettings, PowerSettings, Seeds, SigmaSettings, SweepResult, Type1Settings,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Sampling behaviour of the F1 `σ` estimate.
    Fig1,
    /// Type-I error rates under the null.
    Fig2,
    /// Power across budget shares `ρ`.
    Fig3,
    /// F1 against the classical-F baseline.
    Fig4,
    /// Power across exponents `q`.
    Fig5,
    /// Null quantiles under unequal allocations.
    Fig8,
    /// Budget spent on a direct variance estimate.
    DirectVar,
}

impl Figure {
    pub const ALL: [Figure; 7] = [
        Figure::Fig1,
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig8,
        Figure::DirectVar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig8 => "fig8",
            Figure::DirectVar => "direct-var",
        }
    }

    pub fn experiment(self, scale: Scale) -> Experiment {
        let desk = scale == Scale::Desk;
        let (trials, reps) = if desk { (1000, 500) } else { (10_000, 1000) };
        let effect = ScenarioSpec::spaced(300, 3, 0.15, 1.0).expect("valid preset scenario");
        match self {
            Figure::Fig1 => Experiment::Sigma(SigmaSettings {
                n_grid: if desk { vec![200, 1000] } else { vec![100, 200, 500, 1000, 2000, 5000] },
                k: 3,
                sigma: 0.15,
                epsilon: 1.0,
                rho: 0.7,
                sims: if desk { 2000 } else { 10_000 },
            }),
            Figure::Fig2 => Experiment::Type1(Type1Settings {
                n: 180,
                k: 3,
                sigma: 0.15,
                epsilons: vec![0.1, 1.0, 10.0],
                alphas: (1..=10).map(|i| i as f64 / 100.0).collect(),
                rho: 0.7,
                trials: if desk { 500 } else { trials },
                reps,
                public: true,
            }),
            Figure::Fig3 => Experiment::Rho {
                template: effect,
                n_grid: if desk { vec![240] } else { vec![100, 150, 200, 250, 300, 350, 400, 500] },
                rhos: (1..=9).map(|i| i as f64 / 10.0).collect(),
                settings: PowerSettings {
                    epsilon: 1.0,
                    alpha: 0.05,
                    trials: if desk { 2000 } else { trials },
                    reps,
                },
            },
            Figure::Fig4 => {
                let epsilons: &[f64] = if desk { &[1.0] } else { &[0.1, 1.0, 10.0] };
                let configs = epsilons
                    .iter()
                    .flat_map(|&eps| {
                        let f1 = AnovaConfig::f1(eps, 0.05, 0.7, reps);
                        let baseline = AnovaConfig {
                            procedure: Procedure::ClassicF,
                            ..f1
                        };
                        [f1, baseline]
                    })
                    .collect();
                Experiment::Power {
                    template: effect,
                    n_grid: if desk {
                        vec![300, 350]
                    } else {
                        vec![50, 100, 200, 300, 500, 1000, 2000, 3000, 5000, 10_000]
                    },
                    configs,
                    trials,
                }
            }
            Figure::Fig5 => Experiment::Q {
                template: effect,
                n_grid: if desk { vec![2000] } else { vec![500, 1000, 2000, 3000, 5000, 10_000] },
                qs: vec![0.75, 1.0, 1.5, 2.0],
                rho: 0.7,
                settings: PowerSettings {
                    epsilon: 0.1,
                    alpha: 0.05,
                    trials,
                    reps,
                },
            },
            Figure::Fig8 => Experiment::Allocation(AllocationSettings {
                k: 4,
                sigma: 0.1,
                allocations: vec![
                    vec![200, 200, 200, 200],
                    vec![100, 100, 100, 500],
                    vec![5, 10, 20, 765],
                    vec![3, 3, 3, 791],
                ],
                epsilon: 1.0,
                rho: 0.7,
                sims: if desk { 2000 } else { 10_000 },
            }),
            Figure::DirectVar => Experiment::DirectVar {
                template: effect,
                n_grid: if desk { vec![300] } else { vec![100, 200, 300, 400, 500, 750, 1000] },
                rho3s: if desk { vec![0.1, 0.2, 0.5] } else { vec![0.05, 0.1, 0.2, 0.3, 0.5] },
                rho: 0.7,
                settings: PowerSettings {
                    epsilon: 1.0,
                    alpha: 0.05,
                    trials,
                    reps,
                },
            },
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown figure `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

/// A fully specified experiment, ready to run from a master seed.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Power {
        template: ScenarioSpec,
        n_grid: Vec<usize>,
        configs: Vec<AnovaConfig>,
        trials: usize,
    },
    Rho {
        template: ScenarioSpec,
        n_grid: Vec<usize>,
        rhos: Vec<f64>,
        settings: PowerSettings,
    },
    Q {
        template: ScenarioSpec,
        n_grid: Vec<usize>,
        qs: Vec<f64>,
        rho: f64,
        settings: PowerSettings,
    },
    DirectVar {
        template: ScenarioSpec,
        n_grid: Vec<usize>,
        rho3s: Vec<f64>,
        rho: f64,
        settings: PowerSettings,
    },
    Type1(Type1Settings),
    Allocation(AllocationSettings),
    Sigma(SigmaSettings),
}

impl Experiment {
    pub fn run(&self, seeds: Seeds) -> Result<SweepResult> {
        match self {
            Experiment::Power { template, n_grid, configs, trials } => {
                power_curve("power", template, n_grid, configs, *trials, seeds)
            }
            Experiment::Rho { template, n_grid, rhos, settings } => {
                rho_sweep(template, n_grid, rhos, *settings, seeds)
            }
            Experiment::Q { template, n_grid, qs, rho, settings } => {
                q_sweep(template, n_grid, qs, *rho, *settings, seeds)
            }
            Experiment::DirectVar { template, n_grid, rho3s, rho, settings } => {
                direct_var_study(template, n_grid, rho3s, *rho, *settings, seeds)
            }
            Experiment::Type1(s) => type1_sweep(s, seeds),
            Experiment::Allocation(s) => allocation_study(s, seeds),
            Experiment::Sigma(s) => sigma_study(s, seeds),
        }
    }

    /// Grid description for the run manifest.
    pub fn grids(&self) -> Value {
        let scenario = |t: &ScenarioSpec| {
            json!({ "k": t.k, "sigma": t.sigma, "group_means": t.group_means, "spacing": t.spacing() })
        };
        let settings = |s: &PowerSettings| {
            json!({ "epsilon": s.epsilon, "alpha": s.alpha, "trials": s.trials, "reps": s.reps })
        };
        match self {
            Experiment::Power { template, n_grid, configs, trials } => json!({
                "kind": "power",
                "scenario": scenario(template),
                "n": n_grid,
                "trials": trials,
                "cells": configs.iter().map(|c| json!({
                    "procedure": crate::simulation::procedure_label(&c.procedure),
                    "epsilon": c.epsilon,
                    "alpha": c.alpha,
                    "reps": c.reference.reps,
                })).collect::<Vec<_>>(),
            }),
            Experiment::Rho { template, n_grid, rhos, settings: s } => json!({
                "kind": "rho-sweep", "scenario": scenario(template), "n": n_grid, "rho": rhos,
                "settings": settings(s),
            }),
            Experiment::Q { template, n_grid, qs, rho, settings: s } => json!({
                "kind": "q-sweep", "scenario": scenario(template), "n": n_grid, "q": qs, "rho": rho,
                "sigma_source": "known", "settings": settings(s),
            }),
            Experiment::DirectVar { template, n_grid, rho3s, rho, settings: s } => json!({
                "kind": "direct-var", "scenario": scenario(template), "n": n_grid, "rho3": rho3s,
                "rho": rho, "settings": settings(s),
            }),
            Experiment::Type1(s) => json!({
                "kind": "type1", "n": s.n, "k": s.k, "sigma": s.sigma, "epsilon": s.epsilons,
                "alpha": s.alphas, "rho": s.rho, "trials": s.trials, "reps": s.reps, "public": s.public,
            }),
            Experiment::Allocation(s) => json!({
                "kind": "allocation", "k": s.k, "sigma": s.sigma, "allocations": s.allocations,
                "epsilon": s.epsilon, "rho": s.rho, "sims": s.sims,
            }),
            Experiment::Sigma(s) => json!({
                "kind": "sigma-hat", "n": s.n_grid, "k": s.k, "sigma": s.sigma,
                "epsilon": s.epsilon, "rho": s.rho, "sims": s.sims,
            }),
        }
    }
}
