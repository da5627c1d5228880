//! Monte Carlo experiments: power, type-I validity, tuning sweeps and the
//! allocation and variance-estimate studies.
//!
//! Every random draw comes from a [`StreamKey`] derived from a master seed,
//! so results depend only on the seed and never on thread scheduling.
//! Trials run in parallel and are merged by counting or by collecting in
//! index order.
//!
//! Within one sweep all cells share the data-generation keys (trial `t`
//! draws its dataset from the same substream in every cell), while each
//! cell gets its own noise keys. Comparisons across cells therefore use
//! common random numbers.

use dpanova_core::anova::{finish_test, AnovaConfig, ReferenceConfig, SigmaSource};
use dpanova_core::scenario::{synth_dataset, Allocation, ScenarioSpec};
use dpanova_core::stats::{expected_sa, sigma_hat_from_se};
use dpanova_core::{Procedure, ReferenceSampler, StreamKey};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::public::p_value_public_f;

/// Estimated rejection rate at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPoint {
    pub n: usize,
    pub power: f64,
    pub trials: usize,
    pub rejections: usize,
    pub stderr: f64,
    /// Synthetic values clamped into `[0, 1]` across all trials.
    pub clamped: usize,
}

impl PowerPoint {
    pub fn from_counts(n: usize, trials: usize, rejections: usize, clamped: usize) -> Self {
        let power = rejections as f64 / trials as f64;
        Self {
            n,
            power,
            trials,
            rejections,
            stderr: binomial_stderr(power, trials),
            clamped,
        }
    }
}

pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Key layout derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub master: u64,
}

impl Seeds {
    pub const fn new(master: u64) -> Self {
        Self { master }
    }

    /// Data-generation keys, shared by every cell of a sweep.
    pub const fn data(&self) -> StreamKey {
        StreamKey::root(self.master).child(0)
    }

    /// Noise keys private to cell `i`.
    pub const fn cell(&self, i: usize) -> StreamKey {
        StreamKey::root(self.master).child(1).child(i as u64)
    }
}

/// One row of a sweep's tabular output. Columns that do not apply to an
/// experiment are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub experiment: String,
    pub procedure: String,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub spacing: Option<f64>,
    pub epsilon: f64,
    pub rho: Option<f64>,
    pub q: Option<f64>,
    pub rho3: Option<f64>,
    pub alpha: Option<f64>,
    pub allocation: String,
    pub trials: usize,
    pub reps: Option<usize>,
    pub rejections: Option<usize>,
    pub power: Option<f64>,
    pub stderr: Option<f64>,
    pub quantile95: Option<f64>,
    pub expected_sa: Option<f64>,
    pub sigma_hat_mean: Option<f64>,
    pub sigma_hat_var: Option<f64>,
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub experiment: String,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        for r in &self.records {
            csv.serialize(r)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_csv(&mut out)?;
        Ok(out)
    }

    /// Records whose `procedure` column equals `label`, in grid order.
    pub fn by_procedure<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a SweepRecord> + 'a {
        self.records.iter().filter(move |r| r.procedure == label)
    }
}

pub fn procedure_label(p: &Procedure) -> String {
    match *p {
        Procedure::ClassicF => "classic-f".into(),
        Procedure::Fq { q: 1.0, .. } => "f1".into(),
        Procedure::Fq { .. } => "fq".into(),
        Procedure::DirectVariance { .. } => "direct-var".into(),
    }
}

fn allocation_label(a: &Allocation) -> String {
    match a {
        Allocation::Equal => "equal".into(),
        Allocation::Explicit(sizes) => sizes
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("/"),
    }
}

fn base_record(experiment: &str, spec: &ScenarioSpec, config: &AnovaConfig) -> SweepRecord {
    let (rho, q, rho3) = match config.procedure {
        Procedure::ClassicF => (None, Some(2.0), None),
        Procedure::Fq { q, rho } => (Some(rho), Some(q), None),
        Procedure::DirectVariance { rho3 } => (None, Some(1.0), Some(rho3)),
    };
    SweepRecord {
        experiment: experiment.into(),
        procedure: procedure_label(&config.procedure),
        n: spec.n,
        k: spec.k,
        sigma: spec.sigma,
        spacing: spec.spacing(),
        epsilon: config.epsilon,
        rho,
        q,
        rho3,
        alpha: Some(config.alpha),
        allocation: allocation_label(&spec.allocation),
        trials: 0,
        reps: Some(config.reference.reps),
        rejections: None,
        power: None,
        stderr: None,
        quantile95: None,
        expected_sa: None,
        sigma_hat_mean: None,
        sigma_hat_var: None,
        clamped: 0,
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::usage("trials must be at least 1"));
    }
    Ok(())
}

fn check_grid<T>(name: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::usage(format!("the {name} grid is empty")));
    }
    Ok(())
}

fn check_cell(spec: &ScenarioSpec, config: &AnovaConfig) -> Result<()> {
    spec.validate()?;
    config.validate()?;
    if spec.n <= spec.k || spec.k < 2 {
        return Err(Error::usage(format!(
            "N = {} with k = {} leaves no within-group degrees of freedom",
            spec.n, spec.k
        )));
    }
    Ok(())
}

/// Outcome of a single simulated test.
#[derive(Debug, Clone, Copy)]
struct Trial {
    p_value: Option<f64>,
    clamped: usize,
}

fn run_trial(spec: &ScenarioSpec, config: &AnovaConfig, data_key: StreamKey, noise_key: StreamKey) -> Result<Trial> {
    let synthetic = synth_dataset(spec, data_key)?;
    let mut release_noise = noise_key.child(0).stream(config.reference.noise);
    let out = config
        .procedure
        .evaluate(&synthetic.data, config.epsilon, &mut release_noise)?;
    let report = finish_test(out, config, noise_key.child(1))?;
    Ok(Trial {
        p_value: report.p_value,
        clamped: synthetic.clamped,
    })
}

fn run_trials(
    spec: &ScenarioSpec,
    config: &AnovaConfig,
    trials: usize,
    data_key: StreamKey,
    noise_key: StreamKey,
) -> Result<Vec<Trial>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(spec, config, data_key.child(t), noise_key.child(t)))
        .collect()
}

/// Per-trial p-values (`None` where the null was retained without
/// simulation), in trial order.
pub fn trial_p_values(
    spec: &ScenarioSpec,
    config: &AnovaConfig,
    trials: usize,
    data_key: StreamKey,
    noise_key: StreamKey,
) -> Result<Vec<Option<f64>>> {
    check_trials(trials)?;
    check_cell(spec, config)?;
    let results = run_trials(spec, config, trials, data_key, noise_key)?;
    Ok(results.into_iter().map(|t| t.p_value).collect())
}

/// Fraction of `trials` simulated datasets from `spec` on which the test
/// rejects at `config.alpha`.
///
/// Trial `t` draws its data from `data_key.child(t)` and its noise from
/// `noise_key.child(t)`.
pub fn power_estimate(
    spec: &ScenarioSpec,
    config: &AnovaConfig,
    trials: usize,
    data_key: StreamKey,
    noise_key: StreamKey,
) -> Result<PowerPoint> {
    check_trials(trials)?;
    check_cell(spec, config)?;
    let results = run_trials(spec, config, trials, data_key, noise_key)?;
    let rejections = results
        .iter()
        .filter(|t| t.p_value.is_some_and(|p| p < config.alpha))
        .count();
    let clamped = results.iter().map(|t| t.clamped).sum();
    Ok(PowerPoint::from_counts(spec.n, trials, rejections, clamped))
}

fn power_record(experiment: &str, spec: &ScenarioSpec, config: &AnovaConfig, point: PowerPoint) -> SweepRecord {
    SweepRecord {
        trials: point.trials,
        rejections: Some(point.rejections),
        power: Some(point.power),
        stderr: Some(point.stderr),
        clamped: point.clamped,
        ..base_record(experiment, spec, config)
    }
}

/// Power for every `(config, N)` pair, configs outermost. Cell `i` in that
/// order uses noise keys `seeds.cell(i)`.
pub fn power_curve(
    experiment: &str,
    template: &ScenarioSpec,
    n_grid: &[usize],
    configs: &[AnovaConfig],
    trials: usize,
    seeds: Seeds,
) -> Result<SweepResult> {
    check_grid("N", n_grid)?;
    check_grid("configuration", configs)?;
    check_trials(trials)?;
    let mut cells = Vec::with_capacity(n_grid.len() * configs.len());
    for config in configs {
        for &n in n_grid {
            let spec = template.with_n(n)?;
            check_cell(&spec, config)?;
            cells.push((spec, *config));
        }
    }
    let mut records = Vec::with_capacity(cells.len());
    for (i, (spec, config)) in cells.iter().enumerate() {
        let point = power_estimate(spec, config, trials, seeds.data(), seeds.cell(i))?;
        records.push(power_record(experiment, spec, config, point));
    }
    Ok(SweepResult {
        experiment: experiment.into(),
        records,
    })
}

/// Shared settings of the power sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSettings {
    pub epsilon: f64,
    pub alpha: f64,
    pub trials: usize,
    pub reps: usize,
}

impl PowerSettings {
    fn f1(&self, rho: f64) -> AnovaConfig {
        AnovaConfig::f1(self.epsilon, self.alpha, rho, self.reps)
    }

    fn with(&self, procedure: Procedure, sigma: SigmaSource) -> AnovaConfig {
        AnovaConfig {
            procedure,
            sigma,
            ..self.f1(0.5)
        }
    }
}

/// Power of the F1 test for each budget share `ρ` in `rhos`.
pub fn rho_sweep(
    template: &ScenarioSpec,
    n_grid: &[usize],
    rhos: &[f64],
    settings: PowerSettings,
    seeds: Seeds,
) -> Result<SweepResult> {
    check_grid("rho", rhos)?;
    let configs: Vec<_> = rhos.iter().map(|&rho| settings.f1(rho)).collect();
    power_curve("rho-sweep", template, n_grid, &configs, settings.trials, seeds)
}

/// Power of the `Fq` test for each exponent in `qs`, with the reference
/// simulated at the scenario's true `σ`.
pub fn q_sweep(
    template: &ScenarioSpec,
    n_grid: &[usize],
    qs: &[f64],
    rho: f64,
    settings: PowerSettings,
    seeds: Seeds,
) -> Result<SweepResult> {
    check_grid("q", qs)?;
    let configs: Vec<_> = qs
        .iter()
        .map(|&q| settings.with(Procedure::Fq { q, rho }, SigmaSource::Known(template.sigma)))
        .collect();
    power_curve("q-sweep", template, n_grid, &configs, settings.trials, seeds)
}

/// Power of the direct-variance variant for each `ρ3`, preceded by the
/// standard F1 test at `rho` for comparison.
pub fn direct_var_study(
    template: &ScenarioSpec,
    n_grid: &[usize],
    rho3s: &[f64],
    rho: f64,
    settings: PowerSettings,
    seeds: Seeds,
) -> Result<SweepResult> {
    check_grid("rho3", rho3s)?;
    let mut configs = vec![settings.f1(rho)];
    configs.extend(
        rho3s
            .iter()
            .map(|&rho3| settings.with(Procedure::DirectVariance { rho3 }, SigmaSource::Estimated)),
    );
    power_curve("direct-var", template, n_grid, &configs, settings.trials, seeds)
}

/// Settings for the type-I validity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Type1Settings {
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub epsilons: Vec<f64>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub trials: usize,
    pub reps: usize,
    /// Also record the classical F test with its analytic reference.
    pub public: bool,
}

/// Empirical rejection rates under the null for every `(ε, α)` pair.
///
/// One p-value per trial is computed for each `ε` and thresholded at every
/// `α`, so the `α` cells of one `ε` share their trials. The public cells
/// (`epsilon` = ∞) use the same datasets.
pub fn type1_sweep(settings: &Type1Settings, seeds: Seeds) -> Result<SweepResult> {
    check_grid("epsilon", &settings.epsilons)?;
    check_grid("alpha", &settings.alphas)?;
    check_trials(settings.trials)?;
    if settings.alphas.iter().any(|a| !(0.0..1.0).contains(a)) {
        return Err(Error::usage("every alpha must lie in [0, 1)"));
    }
    let spec = ScenarioSpec::null(settings.n, settings.k, settings.sigma)?;
    let configs: Vec<_> = settings
        .epsilons
        .iter()
        .map(|&eps| AnovaConfig::f1(eps, 0.5, settings.rho, settings.reps))
        .collect();
    for config in &configs {
        check_cell(&spec, config)?;
    }

    let mut records = Vec::new();
    for (i, config) in configs.iter().enumerate() {
        let results = run_trials(&spec, config, settings.trials, seeds.data(), seeds.cell(i))?;
        let clamped = results.iter().map(|t| t.clamped).sum();
        for &alpha in &settings.alphas {
            let rejections = results
                .iter()
                .filter(|t| t.p_value.is_some_and(|p| p < alpha))
                .count();
            let point = PowerPoint::from_counts(spec.n, settings.trials, rejections, clamped);
            records.push(SweepRecord {
                alpha: Some(alpha),
                ..power_record("type1", &spec, config, point)
            });
        }
    }

    if settings.public {
        let p_values: Vec<(f64, usize)> = (0..settings.trials as u64)
            .into_par_iter()
            .map(|t| {
                let s = synth_dataset(&spec, seeds.data().child(t))?;
                Ok((p_value_public_f(&s.data)?, s.clamped))
            })
            .collect::<Result<_>>()?;
        let clamped = p_values.iter().map(|&(_, c)| c).sum();
        for &alpha in &settings.alphas {
            let rejections = p_values.iter().filter(|&&(p, _)| p < alpha).count();
            let point = PowerPoint::from_counts(spec.n, settings.trials, rejections, clamped);
            let mut record = power_record("type1", &spec, &configs[0], point);
            record.procedure = "public-f".into();
            record.epsilon = f64::INFINITY;
            record.rho = None;
            record.q = Some(2.0);
            record.reps = None;
            record.alpha = Some(alpha);
            records.push(record);
        }
    }
    Ok(SweepResult {
        experiment: "type1".into(),
        records,
    })
}

/// Empirical `p`-quantile with linear interpolation between order
/// statistics; `sorted` must be ascending and nonempty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Settings for the allocation study.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationSettings {
    pub k: usize,
    pub sigma: f64,
    pub allocations: Vec<Vec<usize>>,
    pub epsilon: f64,
    pub rho: f64,
    pub sims: usize,
}

/// 0.95 quantile of the null F1 reference statistic for each allocation,
/// alongside the analytic `E(SA)`. All allocations share replicate keys.
pub fn allocation_study(settings: &AllocationSettings, seeds: Seeds) -> Result<SweepResult> {
    check_grid("allocation", &settings.allocations)?;
    check_trials(settings.sims)?;
    let procedure = Procedure::f1(settings.rho);
    let config = AnovaConfig::f1(settings.epsilon, 0.05, settings.rho, 1);
    config.validate()?;
    let n = settings.allocations[0].iter().sum::<usize>();
    for sizes in &settings.allocations {
        if sizes.len() != settings.k || sizes.contains(&0) {
            return Err(Error::usage("each allocation needs k positive group sizes"));
        }
        if sizes.iter().sum::<usize>() != n {
            return Err(Error::usage("all allocations must have the same N"));
        }
    }
    let spec = ScenarioSpec::null(n, settings.k, settings.sigma)?;
    if settings.sigma.is_nan() || settings.sigma <= 0.0 || n <= settings.k {
        return Err(Error::usage("sigma must be positive and N must exceed k"));
    }

    let mut records = Vec::new();
    for sizes in &settings.allocations {
        let sampler = ReferenceSampler::with_sizes(
            sizes.clone(),
            settings.sigma,
            settings.epsilon,
            procedure,
            ReferenceConfig::default(),
        );
        let mut draws: Vec<f64> = (0..settings.sims as u64)
            .into_par_iter()
            .map(|r| sampler.draw(seeds.data().child(r)))
            .collect::<dpanova_core::Result<_>>()?;
        draws.sort_by(f64::total_cmp);
        let alloc_spec = ScenarioSpec {
            allocation: Allocation::Explicit(sizes.clone()),
            ..spec.clone()
        };
        records.push(SweepRecord {
            experiment: "allocation".into(),
            trials: settings.sims,
            reps: None,
            alpha: None,
            quantile95: Some(quantile(&draws, 0.95)),
            expected_sa: Some(expected_sa(sizes, settings.sigma)?),
            ..base_record("allocation", &alloc_spec, &config)
        });
    }
    Ok(SweepResult {
        experiment: "allocation".into(),
        records,
    })
}

/// Settings for the `σ̂` study.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSettings {
    pub n_grid: Vec<usize>,
    pub k: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub sims: usize,
}

/// Mean and sample variance of the F1 `σ̂` over null datasets.
pub fn sigma_study(settings: &SigmaSettings, seeds: Seeds) -> Result<SweepResult> {
    check_grid("N", &settings.n_grid)?;
    if settings.sims < 2 {
        return Err(Error::usage("at least two simulations are required"));
    }
    let config = AnovaConfig::f1(settings.epsilon, 0.05, settings.rho, 1);
    config.validate()?;
    let specs = settings
        .n_grid
        .iter()
        .map(|&n| {
            let spec = ScenarioSpec::null(n, settings.k, settings.sigma)?;
            check_cell(&spec, &config)?;
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let draws: Vec<(f64, usize)> = (0..settings.sims as u64)
            .into_par_iter()
            .map(|t| {
                let s = synth_dataset(spec, seeds.data().child(t))?;
                let mut noise = seeds.cell(i).child(t).stream(config.reference.noise);
                let out = config.procedure.evaluate(&s.data, config.epsilon, &mut noise)?;
                Ok((sigma_hat_from_se(out.within_hat, spec.n, spec.k)?, s.clamped))
            })
            .collect::<Result<_>>()?;
        let m = draws.len() as f64;
        let mean = draws.iter().map(|d| d.0).sum::<f64>() / m;
        let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (m - 1.0);
        records.push(SweepRecord {
            experiment: "sigma-hat".into(),
            trials: settings.sims,
            reps: None,
            alpha: None,
            sigma_hat_mean: Some(mean),
            sigma_hat_var: Some(var),
            clamped: draws.iter().map(|d| d.1).sum(),
            ..base_record("sigma-hat", spec, &config)
        });
    }
    Ok(SweepResult {
        experiment: "sigma-hat".into(),
        records,
    })
}
