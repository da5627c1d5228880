//! Private statistics: each exact term is released once through the Laplace
//! mechanism and the ratio is assembled from the noisy terms alone.

use crate::data::Dataset;
use crate::error::Result;
use crate::mechanism::{
    sens_prior_ssa, sens_prior_sse, sens_sqa, sens_sqe, sens_var, BudgetSplit, PrivacyBudget,
};
use crate::rng::NoiseSource;
use crate::stats::{check_q, check_shape, decompose, variance_ratio, var_q};

/// Noisy statistic together with the noisy terms it was built from.
///
/// `stat_hat = (between_hat / (k − 1)) / (within_hat / (N − k))` exactly as
/// computed. Any field may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivateStatOutput {
    pub stat_hat: f64,
    pub between_hat: f64,
    pub within_hat: f64,
    /// Noisy `Σ (y_i − ȳ)²`, only for the direct-variance variant.
    pub var_hat: Option<f64>,
    pub budget: PrivacyBudget,
    pub q: f64,
    pub n: usize,
    pub k: usize,
}

/// Which private statistic a test is built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Procedure {
    /// Classical F with `SSA` and `SSE` each given `ε/2`: the prior baseline.
    ClassicF,
    /// `Fq` with share `rho` of `ε` on `SQA`; `q = 1` is the F1 statistic.
    Fq { q: f64, rho: f64 },
    /// F1 plus a noisy total variance used to estimate `σ` directly.
    DirectVariance { rho3: f64 },
}

impl Procedure {
    pub const fn f1(rho: f64) -> Self {
        Procedure::Fq { q: 1.0, rho }
    }

    pub fn budget(&self, epsilon: f64) -> Result<PrivacyBudget> {
        match *self {
            Procedure::ClassicF => PrivacyBudget::new(epsilon, 0.5),
            Procedure::Fq { q, rho } => {
                check_q(q)?;
                PrivacyBudget::new(epsilon, rho)
            }
            Procedure::DirectVariance { rho3 } => PrivacyBudget::with_variance_share(epsilon, rho3),
        }
    }

    /// Exponent of the between/within terms.
    pub fn q(&self) -> f64 {
        match *self {
            Procedure::ClassicF => 2.0,
            Procedure::Fq { q, .. } => q,
            Procedure::DirectVariance { .. } => 1.0,
        }
    }

    /// Runs the private statistic once on `data`.
    pub fn evaluate<N: NoiseSource>(
        &self,
        data: &Dataset,
        epsilon: f64,
        noise: &mut N,
    ) -> Result<PrivateStatOutput> {
        match *self {
            Procedure::ClassicF => private_f(data, epsilon, noise),
            Procedure::Fq { q, rho } => private_fq(data, epsilon, rho, q, noise),
            Procedure::DirectVariance { .. } => {
                private_f1_direct_var(data, self.budget(epsilon)?, noise)
            }
        }
    }
}

fn assemble(
    between_hat: f64,
    within_hat: f64,
    var_hat: Option<f64>,
    budget: PrivacyBudget,
    q: f64,
    data: &Dataset,
) -> PrivateStatOutput {
    PrivateStatOutput {
        stat_hat: variance_ratio(between_hat, within_hat, data.len(), data.k()),
        between_hat,
        within_hat,
        var_hat,
        budget,
        q,
        n: data.len(),
        k: data.k(),
    }
}

/// Private classical F: `SSA + Lap((7 − 9/N)/(ε/2))`, `SSE + Lap((5 − 4/N)/(ε/2))`.
pub fn private_f<N: NoiseSource>(
    data: &Dataset,
    epsilon: f64,
    noise: &mut N,
) -> Result<PrivateStatOutput> {
    let budget = PrivacyBudget::new(epsilon, 0.5)?;
    check_shape(data.len(), data.k())?;
    let n = data.len();
    let (ssa, sse) = decompose(data, 2.0);
    let half = epsilon / 2.0;
    let ssa_hat = ssa + noise.laplace(sens_prior_ssa(n) / half);
    let sse_hat = sse + noise.laplace(sens_prior_sse(n) / half);
    Ok(assemble(ssa_hat, sse_hat, None, budget, 2.0, data))
}

/// Private F1: `SA + Lap(4/(ρε))`, `SE + Lap(3/((1 − ρ)ε))`.
pub fn private_f1<N: NoiseSource>(
    data: &Dataset,
    epsilon: f64,
    rho: f64,
    noise: &mut N,
) -> Result<PrivateStatOutput> {
    private_fq(data, epsilon, rho, 1.0, noise)
}

/// Private Fq with the `SQA`/`SQE` sensitivities for exponent `q`.
///
/// At `q = 1` this is draw-for-draw the F1 statistic.
pub fn private_fq<N: NoiseSource>(
    data: &Dataset,
    epsilon: f64,
    rho: f64,
    q: f64,
    noise: &mut N,
) -> Result<PrivateStatOutput> {
    check_q(q)?;
    let budget = PrivacyBudget::new(epsilon, rho)?;
    check_shape(data.len(), data.k())?;
    let n = data.len();
    let (between, within) = decompose(data, q);
    let between_hat = between + noise.laplace(sens_sqa(q, n)? / (rho * epsilon));
    let within_hat = within + noise.laplace(sens_sqe(q, n)? / ((1.0 - rho) * epsilon));
    Ok(assemble(between_hat, within_hat, None, budget, q, data))
}

/// F1 with a third release, the total variance `Σ (y_i − ȳ)²`, noised with
/// scale `(3 + 1/N² − 3/N)/(ερ3)`.
///
/// `budget` must carry a [`BudgetSplit::Triple`].
pub fn private_f1_direct_var<N: NoiseSource>(
    data: &Dataset,
    budget: PrivacyBudget,
    noise: &mut N,
) -> Result<PrivateStatOutput> {
    let BudgetSplit::Triple { rho1, rho2, rho3 } = budget.split() else {
        return Err(crate::Error::invalid("budget", "a three-way split is required"));
    };
    check_shape(data.len(), data.k())?;
    let n = data.len();
    let epsilon = budget.epsilon();
    let (sa, se) = decompose(data, 1.0);
    let var = var_q(data, 2.0)?;
    let sa_hat = sa + noise.laplace(sens_sqa(1.0, n)? / (epsilon * rho1));
    let se_hat = se + noise.laplace(sens_sqe(1.0, n)? / (epsilon * rho2));
    let var_hat = var + noise.laplace(sens_var(n)? / (epsilon * rho3));
    Ok(assemble(sa_hat, se_hat, Some(var_hat), budget, 1.0, data))
}
