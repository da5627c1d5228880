//! Command-line interface.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpanova_core::anova::{anova_test, AnovaConfig};
use dpanova_core::mechanism::DEFAULT_RHO;
use dpanova_core::scenario::ScenarioSpec;
use dpanova_core::{NoiseMode, Procedure, StreamKey};

use crate::error::{Error, Result};
use crate::figures::{Experiment, Figure, Scale};
use crate::ingest::IngestionSpec;
use crate::report::{RunManifest, TestReportJson};
use crate::simulation::{AllocationSettings, PowerSettings, Seeds, SigmaSettings, Type1Settings};

pub const DEFAULT_SEED: u64 = 20_190_601;

#[derive(Debug, Parser)]
#[command(name = "dpanova", version, about = "Differentially private one-way ANOVA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the private F1 test on a CSV file.
    Test(TestArgs),
    /// Power curves over N (F1 and optionally the classical-F baseline).
    Power(PowerArgs),
    /// Type-I error rates under the null.
    Type1(Type1Args),
    /// Power across ρ, q or the direct-variance share ρ3.
    Sweep(SweepArgs),
    /// Null quantiles under unequal group allocations.
    Allocation(AllocationArgs),
    /// Mean and variance of the σ estimate under the null.
    Sigma(SigmaArgs),
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub group_col: String,
    #[arg(long)]
    pub value_col: String,
    /// Declared lower bound of the value column.
    #[arg(long, allow_hyphen_values = true)]
    pub min: f64,
    /// Declared upper bound of the value column.
    #[arg(long, allow_hyphen_values = true)]
    pub max: f64,
    /// Comma-separated category labels; their order fixes group indices.
    #[arg(long, value_delimiter = ',', required = true)]
    pub categories: Vec<String>,
    /// Privacy budget for this release. Required.
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = dpanova_core::anova::DEFAULT_REPS)]
    pub reps: usize,
    /// Seed for the noise and the reference simulation. Without it the
    /// noise comes from OS entropy.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Preset grid; overrides every grid flag except --trials and --reps.
    #[arg(long)]
    pub figure: Option<Figure>,
    /// Use the desk-scale preset (fewer trials and a narrower grid).
    #[arg(long)]
    pub desk_scale: bool,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// CSV output path; the manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SimArgs {
    fn scale(&self) -> Scale {
        if self.desk_scale {
            Scale::Desk
        } else {
            Scale::Full
        }
    }

    fn trials(&self) -> usize {
        self.trials.unwrap_or(match self.scale() {
            Scale::Desk => 1000,
            Scale::Full => 10_000,
        })
    }

    fn reps(&self) -> usize {
        self.reps.unwrap_or(match self.scale() {
            Scale::Desk => 500,
            Scale::Full => 1000,
        })
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Comma-separated database sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Gap between adjacent group means in units of σ.
    #[arg(long)]
    pub effect: Option<f64>,
}

impl ScenarioArgs {
    fn any(&self) -> bool {
        self.n.is_some() || self.k.is_some() || self.sigma.is_some() || self.effect.is_some()
    }

    fn template(&self, default_n: &[usize]) -> Result<(ScenarioSpec, Vec<usize>)> {
        let n_grid = self.n.clone().unwrap_or_else(|| default_n.to_vec());
        let first = *n_grid.first().ok_or_else(|| Error::usage("the N grid is empty"))?;
        let spec = ScenarioSpec::spaced(
            first,
            self.k.unwrap_or(3),
            self.sigma.unwrap_or(0.15),
            self.effect.unwrap_or(1.0),
        )?;
        Ok((spec, n_grid))
    }
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Comma-separated privacy budgets.
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Also run the classical-F baseline at each budget.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Args)]
pub struct Type1Args {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Rho,
    Q,
    Rho3,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// Budget shares for the rho axis, or the fixed share for the others.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rho3: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AllocationArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Semicolon-separated allocations of comma-separated group sizes.
    #[arg(long)]
    pub allocations: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test(args) => {
            let report = cmd_test(&args)?;
            eprintln!(
                "warning: this release spent epsilon = {}; privacy loss adds up over repeated runs on the same data",
                report.epsilon_spent
            );
            let json = serde_json::to_string_pretty(&report)?;
            emit(args.out.as_deref(), format!("{json}\n").as_bytes())
        }
        Command::Power(args) => simulate(&args.sim, power_experiment(&args)?, "power"),
        Command::Type1(args) => simulate(&args.sim, type1_experiment(&args)?, "type1"),
        Command::Sweep(args) => simulate(&args.sim, sweep_experiment(&args)?, "sweep"),
        Command::Allocation(args) => simulate(&args.sim, allocation_experiment(&args)?, "allocation"),
        Command::Sigma(args) => simulate(&args.sim, sigma_experiment(&args)?, "sigma"),
    }
}

/// Runs the private test on an ingested file and returns the report.
pub fn cmd_test(args: &TestArgs) -> Result<TestReportJson> {
    let spec = IngestionSpec {
        input: args.input.clone(),
        group_col: args.group_col.clone(),
        value_col: args.value_col.clone(),
        min: args.min,
        max: args.max,
        categories: args.categories.clone(),
    };
    let config = AnovaConfig::f1(args.epsilon, args.alpha, args.rho, args.reps);
    config.validate()?;
    let data = spec.load()?;
    let (mut noise, reference) = match args.seed {
        Some(seed) => (
            StreamKey::root(seed).child(0).stream(NoiseMode::Laplace),
            StreamKey::root(seed).child(1),
        ),
        None => (
            StreamKey::new(rand::random(), rand::random()).stream(NoiseMode::Laplace),
            StreamKey::root(rand::random()),
        ),
    };
    let report = anova_test(&data, &config, &mut noise, reference)?;
    Ok(TestReportJson::new(&report, &config.procedure, args.seed.is_some()))
}

fn preset(sim: &SimArgs, command: &str, allowed: &[Figure], explicit: bool) -> Result<Option<Experiment>> {
    let Some(figure) = sim.figure else {
        return Ok(None);
    };
    if !allowed.contains(&figure) {
        return Err(Error::usage(format!("figure {figure} is not produced by `{command}`")));
    }
    if explicit {
        return Err(Error::usage("--figure fixes the grid; drop the other grid flags"));
    }
    let mut experiment = figure.experiment(sim.scale());
    override_counts(&mut experiment, sim.trials, sim.reps);
    Ok(Some(experiment))
}

fn override_counts(experiment: &mut Experiment, trials: Option<usize>, reps: Option<usize>) {
    match experiment {
        Experiment::Power { configs, trials: t, .. } => {
            if let Some(v) = trials {
                *t = v;
            }
            if let Some(r) = reps {
                configs.iter_mut().for_each(|c| c.reference.reps = r);
            }
        }
        Experiment::Rho { settings, .. } | Experiment::Q { settings, .. } | Experiment::DirectVar { settings, .. } => {
            settings.trials = trials.unwrap_or(settings.trials);
            settings.reps = reps.unwrap_or(settings.reps);
        }
        Experiment::Type1(s) => {
            s.trials = trials.unwrap_or(s.trials);
            s.reps = reps.unwrap_or(s.reps);
        }
        Experiment::Allocation(s) => s.sims = trials.unwrap_or(s.sims),
        Experiment::Sigma(s) => s.sims = trials.unwrap_or(s.sims),
    }
}

fn nonempty<T: Clone>(name: &str, v: &Option<Vec<T>>, default: &[T]) -> Result<Vec<T>> {
    let v = v.clone().unwrap_or_else(|| default.to_vec());
    if v.is_empty() {
        return Err(Error::usage(format!("the {name} grid is empty")));
    }
    Ok(v)
}

pub fn power_experiment(args: &PowerArgs) -> Result<Experiment> {
    let explicit = args.scenario.any() || args.epsilon.is_some() || args.alpha.is_some() || args.rho.is_some() || args.baseline;
    if let Some(e) = preset(&args.sim, "power", &[Figure::Fig4], explicit)? {
        return Ok(e);
    }
    let (template, n_grid) = args.scenario.template(&[100, 200, 300, 400, 500])?;
    let reps = args.sim.reps();
    let mut configs = Vec::new();
    for eps in nonempty("epsilon", &args.epsilon, &[1.0])? {
        let f1 = AnovaConfig::f1(eps, args.alpha.unwrap_or(0.05), args.rho.unwrap_or(DEFAULT_RHO), reps);
        configs.push(f1);
        if args.baseline {
            configs.push(AnovaConfig {
                procedure: Procedure::ClassicF,
                ..f1
            });
        }
    }
    Ok(Experiment::Power {
        template,
        n_grid,
        configs,
        trials: args.sim.trials(),
    })
}

pub fn type1_experiment(args: &Type1Args) -> Result<Experiment> {
    let explicit = args.n.is_some()
        || args.k.is_some()
        || args.sigma.is_some()
        || args.epsilon.is_some()
        || args.alpha.is_some()
        || args.rho.is_some();
    if let Some(e) = preset(&args.sim, "type1", &[Figure::Fig2], explicit)? {
        return Ok(e);
    }
    let alphas: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
    Ok(Experiment::Type1(Type1Settings {
        n: args.n.unwrap_or(180),
        k: args.k.unwrap_or(3),
        sigma: args.sigma.unwrap_or(0.15),
        epsilons: nonempty("epsilon", &args.epsilon, &[0.1, 1.0, 10.0])?,
        alphas: nonempty("alpha", &args.alpha, &alphas)?,
        rho: args.rho.unwrap_or(DEFAULT_RHO),
        trials: args.sim.trials(),
        reps: args.sim.reps(),
        public: true,
    }))
}

pub fn sweep_experiment(args: &SweepArgs) -> Result<Experiment> {
    let explicit = args.scenario.any()
        || args.axis.is_some()
        || args.rho.is_some()
        || args.q.is_some()
        || args.rho3.is_some()
        || args.epsilon.is_some()
        || args.alpha.is_some();
    let allowed = [Figure::Fig3, Figure::Fig5, Figure::DirectVar];
    if let Some(e) = preset(&args.sim, "sweep", &allowed, explicit)? {
        return Ok(e);
    }
    let axis = args
        .axis
        .ok_or_else(|| Error::usage("choose --axis rho, q or rho3 (or a --figure preset)"))?;
    let (template, n_grid) = args.scenario.template(&[100, 200, 300, 400, 500])?;
    let settings = PowerSettings {
        epsilon: args.epsilon.unwrap_or(1.0),
        alpha: args.alpha.unwrap_or(0.05),
        trials: args.sim.trials(),
        reps: args.sim.reps(),
    };
    let single_rho = || -> Result<f64> {
        match args.rho.as_deref() {
            None => Ok(DEFAULT_RHO),
            Some([rho]) => Ok(*rho),
            Some(_) => Err(Error::usage("give a single --rho for this axis")),
        }
    };
    Ok(match axis {
        Axis::Rho => Experiment::Rho {
            template,
            n_grid,
            rhos: nonempty("rho", &args.rho, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])?,
            settings,
        },
        Axis::Q => Experiment::Q {
            template,
            n_grid,
            qs: nonempty("q", &args.q, &[0.75, 1.0, 1.5, 2.0])?,
            rho: single_rho()?,
            settings,
        },
        Axis::Rho3 => Experiment::DirectVar {
            template,
            n_grid,
            rho3s: nonempty("rho3", &args.rho3, &[0.1, 0.2, 0.5])?,
            rho: single_rho()?,
            settings,
        },
    })
}

fn parse_allocations(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(';')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            part.split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::usage(format!("bad group size `{x}`")))
                })
                .collect()
        })
        .collect()
}

pub fn allocation_experiment(args: &AllocationArgs) -> Result<Experiment> {
    let explicit = args.allocations.is_some() || args.sigma.is_some() || args.epsilon.is_some() || args.rho.is_some();
    if let Some(e) = preset(&args.sim, "allocation", &[Figure::Fig8], explicit)? {
        return Ok(e);
    }
    let allocations = match &args.allocations {
        Some(s) => parse_allocations(s)?,
        None => vec![vec![200; 4], vec![100, 100, 100, 500], vec![5, 10, 20, 765], vec![3, 3, 3, 791]],
    };
    let k = allocations.first().map_or(0, Vec::len);
    Ok(Experiment::Allocation(AllocationSettings {
        k,
        sigma: args.sigma.unwrap_or(0.1),
        allocations,
        epsilon: args.epsilon.unwrap_or(1.0),
        rho: args.rho.unwrap_or(DEFAULT_RHO),
        sims: args.sim.trials(),
    }))
}

pub fn sigma_experiment(args: &SigmaArgs) -> Result<Experiment> {
    let explicit =
        args.n.is_some() || args.k.is_some() || args.sigma.is_some() || args.epsilon.is_some() || args.rho.is_some();
    if let Some(e) = preset(&args.sim, "sigma", &[Figure::Fig1], explicit)? {
        return Ok(e);
    }
    Ok(Experiment::Sigma(SigmaSettings {
        n_grid: nonempty("N", &args.n, &[200, 1000])?,
        k: args.k.unwrap_or(3),
        sigma: args.sigma.unwrap_or(0.15),
        epsilon: args.epsilon.unwrap_or(1.0),
        rho: args.rho.unwrap_or(DEFAULT_RHO),
        sims: args.sim.trials(),
    }))
}

/// Runs `experiment` on `threads` workers (the global pool when `None`).
pub fn run_with_threads(experiment: &Experiment, seed: u64, threads: Option<usize>) -> Result<crate::simulation::SweepResult> {
    match threads {
        None => experiment.run(Seeds::new(seed)),
        Some(0) => Err(Error::usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::usage(e.to_string()))?
            .install(|| experiment.run(Seeds::new(seed))),
    }
}

fn simulate(sim: &SimArgs, experiment: Experiment, command: &str) -> Result<()> {
    let result = run_with_threads(&experiment, sim.seed, sim.threads)?;
    let csv = result.csv_bytes()?;
    emit(sim.out.as_deref(), &csv)?;
    if let Some(out) = &sim.out {
        let mut manifest = RunManifest::new(&result.experiment, sim.seed, experiment.grids(), result.records.len());
        manifest.figure = sim.figure.map(|f| f.name().to_owned());
        manifest.scale = sim.figure.map(|_| match sim.scale() {
            Scale::Desk => "desk",
            Scale::Full => "full",
        });
        let json = serde_json::to_string_pretty(&serde_json::json!({
            "command": command,
            "manifest": manifest,
        }))?;
        std::fs::write(manifest_path(out), format!("{json}\n"))?;
    }
    Ok(())
}

/// `results.csv` → `results.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => File::create(path)?.write_all(bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("dpanova").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn fig4_preset_matches_documented_grid() {
        let Command::Power(args) = parse(&["power", "--figure", "fig4", "--desk-scale"]).command else {
            panic!("power subcommand");
        };
        assert_eq!(power_experiment(&args).unwrap(), Figure::Fig4.experiment(Scale::Desk));
    }

    #[test]
    fn figure_conflicts_and_mismatches() {
        let Command::Power(args) = parse(&["power", "--figure", "fig4", "--n", "10"]).command else {
            panic!("power subcommand");
        };
        assert!(matches!(power_experiment(&args), Err(Error::Usage(_))));
        let Command::Power(args) = parse(&["power", "--figure", "fig2"]).command else {
            panic!("power subcommand");
        };
        assert!(matches!(power_experiment(&args), Err(Error::Usage(_))));
    }

    #[test]
    fn empty_grid_is_usage_error() {
        assert!(Cli::try_parse_from(["dpanova", "sweep", "--axis", "q", "--q", ""]).is_err());
        let Command::Allocation(args) = parse(&["allocation", "--allocations", ";"]).command else {
            panic!("allocation subcommand");
        };
        let err = allocation_experiment(&args).and_then(|e| e.run(Seeds::new(1)));
        assert!(matches!(err, Err(Error::Usage(_))), "{err:?}");
    }

    #[test]
    fn test_requires_epsilon() {
        let base = [
            "test", "--input", "x.csv", "--group-col", "g", "--value-col", "v", "--min", "0", "--max", "1",
            "--categories", "a,b",
        ];
        assert!(Cli::try_parse_from(std::iter::once("dpanova").chain(base)).is_err());
        let with_eps = std::iter::once("dpanova").chain(base).chain(["--epsilon", "1"]);
        assert!(Cli::try_parse_from(with_eps).is_ok());
    }

    #[test]
    fn allocations_parse() {
        assert_eq!(parse_allocations("1,2;3,4").unwrap(), [vec![1, 2], vec![3, 4]]);
        assert!(parse_allocations("1,x").is_err());
    }

    #[test]
    fn manifest_sits_beside_csv() {
        assert_eq!(manifest_path(Path::new("out/r.csv")), Path::new("out/r.manifest.json"));
    }
}
