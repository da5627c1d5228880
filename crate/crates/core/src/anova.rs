//! Private one-way ANOVA test with a simulated reference distribution.
//!
//! The observed data are touched exactly once, by one call to the private
//! statistic. Everything after that (the `σ` estimate, the reference
//! simulations, the p-value and the decision) only reads the released noisy
//! output and public metadata (`N`, `k`, `ε`).
//!
//! Reference datasets are `N` draws from `Normal(μ0, σ̂)` split into `k`
//! near-equal groups, pushed through the same private statistic. The p-value
//! is the fraction of reference statistics strictly greater than the
//! observed one.

use alloc::vec::Vec;

use rand_distr::{ChiSquared, Distribution};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::private::{PrivateStatOutput, Procedure};
use crate::rng::{NoiseMode, NoiseSource, StreamKey};
use crate::stats::{check_shape, f_statistic, sigma_hat_from_se};

pub const DEFAULT_REPS: usize = 1000;

/// Where the reference simulation takes its `σ` from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSource {
    /// Estimated from the released noisy terms.
    Estimated,
    /// Supplied by the caller, e.g. the true `σ` of a simulation scenario.
    /// Using a data-derived value here is not private.
    Known(f64),
}

/// How the count of exceeding reference statistics becomes a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PValueRule {
    /// `significant / reps`.
    #[default]
    Fraction,
    /// `(significant + 1) / (reps + 1)`, never zero.
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub reps: usize,
    /// Mean of the simulated null population.
    pub mu0: f64,
    /// Clamp simulated values into `[0, 1]`. Off by default.
    pub clamp: bool,
    pub noise: NoiseMode,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            reps: DEFAULT_REPS,
            mu0: 0.5,
            clamp: false,
            noise: NoiseMode::Laplace,
        }
    }
}

impl ReferenceConfig {
    pub fn with_reps(reps: usize) -> Self {
        Self { reps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps", "at least one replicate is required"));
        }
        if !(self.mu0 > 0.0 && self.mu0 < 1.0) {
            return Err(Error::invalid("mu0", "must lie strictly inside (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub procedure: Procedure,
    pub sigma: SigmaSource,
    pub reference: ReferenceConfig,
    pub p_value: PValueRule,
}

impl AnovaConfig {
    /// The F1 test with an estimated `σ` and default reference settings.
    pub fn f1(epsilon: f64, alpha: f64, rho: f64, reps: usize) -> Self {
        Self {
            epsilon,
            alpha,
            procedure: Procedure::f1(rho),
            sigma: SigmaSource::Estimated,
            reference: ReferenceConfig::with_reps(reps),
            p_value: PValueRule::Fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 1)"));
        }
        if let SigmaSource::Known(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("sigma", "must be positive and finite"));
            }
        }
        self.reference.validate()?;
        self.procedure.budget(self.epsilon).map(|_| ())
    }
}

/// Outcome of one private test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport {
    /// `None` when no reference distribution was simulated because the
    /// noisy within-group term (or the `σ` estimate) was not positive.
    pub p_value: Option<f64>,
    pub reject: bool,
    /// Signed `σ` estimate; negative values are reported as computed.
    pub sigma_hat: f64,
    /// Reference statistics strictly greater than the observed one.
    pub significant: usize,
    pub reps: usize,
    pub alpha: f64,
    pub reference_seed: StreamKey,
    pub private_output: PrivateStatOutput,
}

impl TestReport {
    /// Decision at another level, reusing the same p-value.
    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.p_value.is_some_and(|p| p < alpha)
    }
}

fn signed_sqrt(x: f64) -> f64 {
    libm::copysign(libm::sqrt(libm::fabs(x)), x)
}

/// `σ` estimate from a released output; the sign of the noisy source term
/// is kept so a negative estimate can be detected.
pub fn estimate_sigma(procedure: &Procedure, out: &PrivateStatOutput) -> Result<f64> {
    let (n, k) = (out.n, out.k);
    match *procedure {
        Procedure::Fq { q: 1.0, .. } => sigma_hat_from_se(out.within_hat, n, k),
        Procedure::ClassicF => Ok(signed_sqrt(out.within_hat / (n - k) as f64)),
        Procedure::Fq { q: 2.0, .. } => Ok(signed_sqrt(out.within_hat / (n - k) as f64)),
        Procedure::Fq { .. } => Err(Error::invalid(
            "sigma",
            "no σ estimator for this exponent; supply a known σ",
        )),
        Procedure::DirectVariance { .. } => {
            let var_hat = out.var_hat.ok_or(Error::invalid("var_hat", "missing variance release"))?;
            Ok(signed_sqrt(var_hat / n as f64))
        }
    }
}

/// Group sizes `floor(N/k)`, with the remainder given one each to the
/// lowest-indexed groups.
pub fn equal_layout(n: usize, k: usize) -> Vec<usize> {
    let base = n / k;
    let extra = n % k;
    (0..k).map(|j| base + usize::from(j < extra)).collect()
}

/// Draws reference statistics under the null for fixed `(N, k, σ, ε)`.
#[derive(Debug, Clone)]
pub struct ReferenceSampler {
    sizes: Vec<usize>,
    sigma: f64,
    epsilon: f64,
    procedure: Procedure,
    config: ReferenceConfig,
}

impl ReferenceSampler {
    pub fn new(
        n: usize,
        k: usize,
        sigma: f64,
        epsilon: f64,
        procedure: Procedure,
        config: ReferenceConfig,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be positive and finite"));
        }
        check_shape(n, k)?;
        config.validate()?;
        procedure.budget(epsilon)?;
        Ok(Self::with_sizes(equal_layout(n, k), sigma, epsilon, procedure, config))
    }

    /// Like [`ReferenceSampler::new`] but with explicit group sizes. Used to
    /// study unequal allocations; the test itself always uses equal groups.
    pub fn with_sizes(
        sizes: Vec<usize>,
        sigma: f64,
        epsilon: f64,
        procedure: Procedure,
        config: ReferenceConfig,
    ) -> Self {
        Self { sizes, sigma, epsilon, procedure, config }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// One simulated null dataset for `key` (before any noise is drawn).
    pub fn dataset(&self, stream: &mut crate::NoiseStream) -> Dataset {
        let n = self.sizes.iter().sum();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let y = self.config.mu0 + self.sigma * stream.standard_normal();
            values.push(if self.config.clamp { y.clamp(0.0, 1.0) } else { y });
        }
        Dataset::from_blocks(&self.sizes, values)
    }

    /// Full private output for replicate `key`.
    pub fn output(&self, key: StreamKey) -> Result<PrivateStatOutput> {
        let mut stream = key.stream(self.config.noise);
        let data = self.dataset(&mut stream);
        self.procedure.evaluate(&data, self.epsilon, &mut stream)
    }

    /// The noisy statistic for replicate `key`.
    pub fn draw(&self, key: StreamKey) -> Result<f64> {
        self.output(key).map(|o| o.stat_hat)
    }
}

/// One draw from the approximate null distribution of the private statistic.
pub fn reference_statistic(
    n: usize,
    k: usize,
    sigma: f64,
    epsilon: f64,
    procedure: Procedure,
    key: StreamKey,
) -> Result<f64> {
    ReferenceSampler::new(n, k, sigma, epsilon, procedure, ReferenceConfig::default())?.draw(key)
}

/// Private one-way ANOVA test.
///
/// `data_noise` supplies the noise for the single release on `data`;
/// replicate `r` of the reference simulation uses `reference_key.child(r)`.
pub fn anova_test<N: NoiseSource>(
    data: &Dataset,
    config: &AnovaConfig,
    data_noise: &mut N,
    reference_key: StreamKey,
) -> Result<TestReport> {
    config.validate()?;
    let out = config.procedure.evaluate(data, config.epsilon, data_noise)?;
    finish_test(out, config, reference_key)
}

/// Everything after the private release. Takes only the released output.
pub fn finish_test(
    out: PrivateStatOutput,
    config: &AnovaConfig,
    reference_key: StreamKey,
) -> Result<TestReport> {
    config.validate()?;
    let reps = config.reference.reps;
    let sigma_hat = match config.sigma {
        SigmaSource::Known(s) => s,
        SigmaSource::Estimated => estimate_sigma(&config.procedure, &out)?,
    };
    let mut report = TestReport {
        p_value: None,
        reject: false,
        sigma_hat,
        significant: 0,
        reps,
        alpha: config.alpha,
        reference_seed: reference_key,
        private_output: out,
    };
    // A negative noisy within-group term has no meaning as a spread:
    // retain the null without simulating.
    if out.within_hat < 0.0 || sigma_hat.is_nan() || sigma_hat <= 0.0 {
        return Ok(report);
    }
    let sampler = ReferenceSampler::new(
        out.n,
        out.k,
        sigma_hat,
        config.epsilon,
        config.procedure,
        config.reference,
    )?;
    let mut significant = 0;
    for r in 0..reps {
        if sampler.draw(reference_key.child(r as u64))? > out.stat_hat {
            significant += 1;
        }
    }
    let p = match config.p_value {
        PValueRule::Fraction => significant as f64 / reps as f64,
        PValueRule::Smoothed => (significant + 1) as f64 / (reps + 1) as f64,
    };
    report.significant = significant;
    report.p_value = Some(p);
    report.reject = p < config.alpha;
    Ok(report)
}

/// Non-private p-value of the exact F statistic, by Monte Carlo over
/// `(χ²_{k−1}/(k−1)) / (χ²_{N−k}/(N−k))`.
pub fn p_value_public_f_mc(data: &Dataset, reps: usize, key: StreamKey) -> Result<f64> {
    if reps == 0 {
        return Err(Error::invalid("reps", "at least one replicate is required"));
    }
    let f = f_statistic(data)?.statistic;
    let (d1, d2) = ((data.k() - 1) as f64, (data.len() - data.k()) as f64);
    let num = ChiSquared::new(d1).map_err(|_| Error::invalid("k", "bad degrees of freedom"))?;
    let den = ChiSquared::new(d2).map_err(|_| Error::invalid("n", "bad degrees of freedom"))?;
    let mut rng = key.rng();
    let mut exceed = 0usize;
    for _ in 0..reps {
        let reference = (num.sample(&mut rng) / d1) / (den.sample(&mut rng) / d2);
        if reference > f {
            exceed += 1;
        }
    }
    Ok(exceed as f64 / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ScriptedNoise;

    fn example() -> Dataset {
        Dataset::new(2, [(0, 0.0), (0, 1.0), (1, 1.0), (1, 1.0)]).unwrap()
    }

    fn normal_groups(means: &[f64], per_group: usize, sigma: f64, seed: u64) -> Dataset {
        let mut s = StreamKey::root(seed).stream(NoiseMode::Laplace);
        let mut rows = Vec::new();
        for (j, &m) in means.iter().enumerate() {
            for _ in 0..per_group {
                rows.push((j, (m + sigma * s.standard_normal()).clamp(0.0, 1.0)));
            }
        }
        Dataset::new(means.len(), rows).unwrap()
    }

    #[test]
    fn layout_spreads_remainder_low() {
        assert_eq!(equal_layout(180, 3), [60, 60, 60]);
        assert_eq!(equal_layout(10, 3), [4, 3, 3]);
        assert_eq!(equal_layout(11, 3), [4, 4, 3]);
    }

    #[test]
    fn negative_within_term_retains() {
        let mut noise = ScriptedNoise::new([0.0, -5.0]);
        let cfg = AnovaConfig::f1(1.0, 0.05, 0.7, 50);
        let r = anova_test(&example(), &cfg, &mut noise, StreamKey::root(1)).unwrap();
        assert_eq!(r.p_value, None);
        assert!(!r.reject);
        assert!(r.sigma_hat < 0.0);
        assert!(r.private_output.within_hat < 0.0);
        assert_eq!(noise.used(), 2);
    }

    #[test]
    fn extreme_observation_gives_zero_p() {
        // huge injected between-group noise puts the statistic above every reference draw
        let data = normal_groups(&[0.5, 0.5, 0.5], 30, 0.15, 5);
        let mut noise = ScriptedNoise::new([1e9, 0.0]);
        let cfg = AnovaConfig::f1(1.0, 1e-6, 0.7, 200);
        let r = anova_test(&data, &cfg, &mut noise, StreamKey::root(2)).unwrap();
        assert_eq!(r.p_value, Some(0.0));
        assert_eq!(r.significant, 0);
        assert!(r.reject);
        let smoothed = AnovaConfig { p_value: PValueRule::Smoothed, ..cfg };
        let mut noise = ScriptedNoise::new([1e9, 0.0]);
        let r = anova_test(&data, &smoothed, &mut noise, StreamKey::root(2)).unwrap();
        assert_eq!(r.p_value, Some(1.0 / 201.0));
    }

    #[test]
    fn ties_are_not_significant() {
        let data = normal_groups(&[0.5, 0.5, 0.5], 20, 0.15, 9);
        let cfg = AnovaConfig {
            reference: ReferenceConfig { noise: NoiseMode::Zero, reps: 30, ..Default::default() },
            ..AnovaConfig::f1(1.0, 0.05, 0.7, 30)
        };
        let sampler = ReferenceSampler::new(60, 3, 0.1, 1.0, Procedure::f1(0.7), cfg.reference).unwrap();
        let key = StreamKey::root(4);
        let tie = sampler.draw(key.child(0)).unwrap();
        let out = PrivateStatOutput {
            stat_hat: tie,
            ..private_output_for(&data)
        };
        let config = AnovaConfig { sigma: SigmaSource::Known(0.1), ..cfg };
        let r = finish_test(out, &config, key).unwrap();
        // replicate 0 equals the observed value and must not be counted
        let greater = (0..30)
            .filter(|&i| sampler.draw(key.child(i)).unwrap() > tie)
            .count();
        assert_eq!(r.significant, greater);
        let ge = (0..30)
            .filter(|&i| sampler.draw(key.child(i)).unwrap() >= tie)
            .count();
        assert_eq!(ge, greater + 1);
    }

    fn private_output_for(data: &Dataset) -> PrivateStatOutput {
        let mut zero = StreamKey::root(0).stream(NoiseMode::Zero);
        crate::private::private_f1(data, 1.0, 0.7, &mut zero).unwrap()
    }

    #[test]
    fn reference_draws_are_reproducible() {
        let key = StreamKey::root(99).child(3);
        let a = reference_statistic(180, 3, 0.15, 1.0, Procedure::f1(0.7), key).unwrap();
        let b = reference_statistic(180, 3, 0.15, 1.0, Procedure::f1(0.7), key).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(reference_statistic(180, 3, 0.0, 1.0, Procedure::f1(0.7), key).is_err());
    }

    #[test]
    fn zero_noise_reference_mean_is_finite_and_positive() {
        let config = ReferenceConfig { noise: NoiseMode::Zero, ..Default::default() };
        let s = ReferenceSampler::new(180, 3, 0.15, 1.0, Procedure::f1(0.7), config).unwrap();
        let root = StreamKey::root(8);
        let mean = (0..10_000).map(|i| s.draw(root.child(i)).unwrap()).sum::<f64>() / 1e4;
        assert!(mean.is_finite() && mean > 0.0);
    }

    #[test]
    fn reference_values_are_not_clamped_by_default() {
        let s = ReferenceSampler::new(300, 3, 2.0, 1.0, Procedure::f1(0.7), ReferenceConfig::default()).unwrap();
        let mut stream = StreamKey::root(1).stream(NoiseMode::Laplace);
        let d = s.dataset(&mut stream);
        assert!(d.values().iter().any(|&v| !(0.0..=1.0).contains(&v)));
        let clamped = ReferenceSampler::new(
            300, 3, 2.0, 1.0, Procedure::f1(0.7),
            ReferenceConfig { clamp: true, ..Default::default() },
        ).unwrap();
        let d = clamped.dataset(&mut StreamKey::root(1).stream(NoiseMode::Laplace));
        assert!(d.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn config_guards() {
        let d = example();
        let mut z = StreamKey::root(0).stream(NoiseMode::Zero);
        let key = StreamKey::root(0);
        assert!(anova_test(&d, &AnovaConfig::f1(1.0, 0.0, 0.7, 10), &mut z, key).is_err());
        assert!(anova_test(&d, &AnovaConfig::f1(1.0, 1.0, 0.7, 10), &mut z, key).is_err());
        assert!(anova_test(&d, &AnovaConfig::f1(1.0, 0.05, 0.7, 0), &mut z, key).is_err());
        let bad_mu = AnovaConfig {
            reference: ReferenceConfig { mu0: 1.0, ..Default::default() },
            ..AnovaConfig::f1(1.0, 0.05, 0.7, 10)
        };
        assert!(anova_test(&d, &bad_mu, &mut z, key).is_err());
        let fq = AnovaConfig { procedure: Procedure::Fq { q: 1.5, rho: 0.7 }, ..AnovaConfig::f1(1.0, 0.05, 0.7, 10) };
        let data = normal_groups(&[0.4, 0.5, 0.6], 10, 0.1, 3);
        assert!(anova_test(&data, &fq, &mut z, key).is_err());
        let known = AnovaConfig { sigma: SigmaSource::Known(0.1), ..fq };
        assert!(anova_test(&data, &known, &mut z, key).is_ok());
    }

    #[test]
    fn exactly_two_draws_touch_the_data() {
        let data = normal_groups(&[0.35, 0.5, 0.65], 20, 0.15, 4);
        let mut noise = ScriptedNoise::new([0.3, 0.2]);
        let cfg = AnovaConfig::f1(1.0, 0.05, 0.7, 100);
        anova_test(&data, &cfg, &mut noise, StreamKey::root(3)).unwrap();
        assert_eq!(noise.used(), 2);

        let mut noise = ScriptedNoise::new([0.3, 0.2, 0.5]);
        let cfg = AnovaConfig { procedure: Procedure::DirectVariance { rho3: 0.2 }, ..cfg };
        anova_test(&data, &cfg, &mut noise, StreamKey::root(3)).unwrap();
        assert_eq!(noise.used(), 3);
    }

    #[test]
    fn public_f_monte_carlo() {
        let key = StreamKey::root(21);
        let flat = Dataset::new(2, [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)]).unwrap();
        assert_eq!(p_value_public_f_mc(&flat, 1000, key).unwrap(), 1.0);
        // F = 1 on (1, 2) df: P(F > 1) = P(|t_2| > 1) = 1 − 1/√3
        let p = p_value_public_f_mc(&example(), 20_000, key).unwrap();
        assert!((p - 0.42265).abs() < 0.015, "p {p}");
    }
}
