//! Laplace mechanism, privacy budgets and closed-form sensitivity bounds.
//!
//! Neighbouring datasets have the same size and differ in one row (both its
//! category and its value may change). All values are assumed normalized to
//! `[0, 1]`. Sensitivities here are data-independent constants.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::{NoiseSource, NoiseStream};

/// Inverse CDF of the zero-centred Laplace law with scale `b`, evaluated at
/// `u − 1/2` for `u ∈ (0, 1)`, i.e. `u ∈ (−1/2, 1/2)` here.
#[inline]
pub fn laplace_inverse_cdf(u: f64, b: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let magnitude = -b * libm::log1p(-2.0 * libm::fabs(u));
    if u < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// CDF of the zero-centred Laplace law with scale `b`.
pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * libm::exp(x / b)
    } else {
        1.0 - 0.5 * libm::exp(-x / b)
    }
}

/// One Laplace draw with scale `b` from `stream`.
pub fn laplace_sample(stream: &mut NoiseStream, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid("scale", "Laplace scale must be positive and finite"));
    }
    Ok(stream.laplace(b))
}

/// Sensitivity of `SE` (within-group absolute deviations).
pub const fn sens_se() -> f64 {
    3.0
}

/// Sensitivity of `SA` (between-group absolute deviations).
pub const fn sens_sa() -> f64 {
    4.0
}

fn check_q_n(q: f64, n: usize, min_n: usize) -> Result<()> {
    crate::stats::check_q(q)?;
    if n < min_n {
        return Err(Error::invalid("n", "too few rows for this bound"));
    }
    Ok(())
}

/// `N − N·max(0, 1 − c/N)^q + 1`, the convex-branch bound.
fn convex_bound(q: f64, n: f64, c: f64) -> f64 {
    let base = (1.0 - c / n).max(0.0);
    n - n * libm::pow(base, q) + 1.0
}

/// Sensitivity bound of `SQE` for exponent `q` and `N ≥ 2` rows.
pub fn sens_sqe(q: f64, n: usize) -> Result<f64> {
    check_q_n(q, n, 2)?;
    let nf = n as f64;
    Ok(if q == 1.0 {
        sens_se()
    } else if q < 1.0 {
        2.0 * libm::pow(nf / 2.0, 1.0 - q) + 1.0
    } else {
        convex_bound(q, nf, 2.0)
    })
}

/// Sensitivity bound of `SQA` for exponent `q` and `N ≥ 2` rows.
///
/// For `q ≥ 1` and `N < 3` the base `1 − 3/N` is negative; it is clamped at
/// zero, which gives the larger bound `N + 1`.
pub fn sens_sqa(q: f64, n: usize) -> Result<f64> {
    check_q_n(q, n, 2)?;
    let nf = n as f64;
    Ok(if q == 1.0 {
        sens_sa()
    } else if q < 1.0 {
        nf * libm::pow(3.0 / nf, q) + 1.0
    } else {
        convex_bound(q, nf, 3.0)
    })
}

/// Sensitivity bound of `VAR_q = Σ |y_i − ȳ|^q`.
pub fn sens_var_q(q: f64, n: usize) -> Result<f64> {
    check_q_n(q, n, 1)?;
    let nf = n as f64;
    Ok(if q == 1.0 {
        2.0 - 1.0 / nf
    } else if q < 1.0 {
        (nf - 1.0) / libm::pow(nf, q) + 1.0
    } else {
        (nf - 1.0) * (1.0 - libm::pow(1.0 - 1.0 / nf, q)) + 1.0
    })
}

/// Sensitivity of `VAR_2`: `3 + 1/N² − 3/N`.
pub fn sens_var(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "requires N ≥ 1"));
    }
    let nf = n as f64;
    Ok(3.0 + 1.0 / (nf * nf) - 3.0 / nf)
}

/// Between-group numerator of the classical private F baseline, `7 − 9/N`.
pub fn sens_prior_ssa(n: usize) -> f64 {
    7.0 - 9.0 / n as f64
}

/// Within-group numerator of the classical private F baseline, `5 − 4/N`.
pub fn sens_prior_sse(n: usize) -> f64 {
    5.0 - 4.0 / n as f64
}

/// How `ε` is divided among the noisy terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetSplit {
    /// `ρ` to the between-group term, `1 − ρ` to the within-group term.
    Pair { rho: f64 },
    /// Between, within and total-variance shares.
    Triple { rho1: f64, rho2: f64, rho3: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    split: BudgetSplit,
}

/// Default share of `ε` spent on the between-group term.
pub const DEFAULT_RHO: f64 = 0.7;

/// Smallest variance share accepted by [`PrivacyBudget::with_variance_share`].
pub const MIN_VARIANCE_SHARE: f64 = 0.01;

fn check_share(name: &'static str, rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, "budget share must lie in (0, 1)"))
    }
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, rho: f64) -> Result<Self> {
        Self::check_epsilon(epsilon)?;
        check_share("rho", rho)?;
        Ok(Self {
            epsilon,
            split: BudgetSplit::Pair { rho },
        })
    }

    pub fn triple(epsilon: f64, rho1: f64, rho2: f64, rho3: f64) -> Result<Self> {
        Self::check_epsilon(epsilon)?;
        check_share("rho1", rho1)?;
        check_share("rho2", rho2)?;
        check_share("rho3", rho3)?;
        if ((rho1 + rho2 + rho3) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("rho", "shares must sum to 1"));
        }
        Ok(Self {
            epsilon,
            split: BudgetSplit::Triple { rho1, rho2, rho3 },
        })
    }

    /// `ρ3` to the variance term, the rest split 70/30 between the
    /// between-group and within-group terms.
    pub fn with_variance_share(epsilon: f64, rho3: f64) -> Result<Self> {
        if !(MIN_VARIANCE_SHARE..1.0).contains(&rho3) {
            return Err(Error::invalid("rho3", "variance share must lie in [0.01, 1)"));
        }
        let rest = 1.0 - rho3;
        Self::triple(epsilon, DEFAULT_RHO * rest, rest - DEFAULT_RHO * rest, rho3)
    }

    fn check_epsilon(epsilon: f64) -> Result<()> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("epsilon", "must be positive and finite"))
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn split(&self) -> BudgetSplit {
        self.split
    }

    /// The `ε` spent on each noisy term, in draw order.
    pub fn shares(&self) -> Vec<f64> {
        let e = self.epsilon;
        match self.split {
            BudgetSplit::Pair { rho } => vec![rho * e, (1.0 - rho) * e],
            BudgetSplit::Triple { rho1, rho2, rho3 } => vec![rho1 * e, rho2 * e, rho3 * e],
        }
    }

    /// Total `ε` spent under sequential composition.
    pub fn spent(&self) -> f64 {
        self.shares().iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{NoiseMode, StreamKey};
    use std::vec::Vec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(1.0)
    }

    #[test]
    fn inverse_cdf_median_is_zero() {
        assert_eq!(laplace_inverse_cdf(0.0, 2.0), 0.0);
        assert!(laplace_inverse_cdf(0.25, 1.0) > 0.0);
        assert_eq!(laplace_inverse_cdf(-0.25, 1.0), -laplace_inverse_cdf(0.25, 1.0));
        // CDF(F^{-1}(u)) = u + 1/2
        for &u in &[-0.49, -0.3, -0.01, 0.01, 0.2, 0.45] {
            assert!((laplace_cdf(laplace_inverse_cdf(u, 1.7), 1.7) - (u + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_rejects_bad_scale() {
        let mut s = StreamKey::root(0).stream(NoiseMode::Laplace);
        assert!(laplace_sample(&mut s, 0.0).is_err());
        assert!(laplace_sample(&mut s, -1.0).is_err());
        assert!(laplace_sample(&mut s, f64::INFINITY).is_err());
        assert!(laplace_sample(&mut s, 1.0).is_ok());
    }

    fn moments(b: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut s = StreamKey::root(seed).stream(NoiseMode::Laplace);
        let xs: Vec<f64> = (0..n).map(|_| laplace_sample(&mut s, b).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn empirical_variance_unit_scale() {
        let (_, var) = moments(1.0, 1_000_000, 11);
        assert!((var - 2.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn empirical_mean_scale_three() {
        let (mean, _) = moments(3.0, 1_000_000, 12);
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn kolmogorov_smirnov_distance() {
        let b = 2.5;
        let n = 100_000;
        let mut s = StreamKey::root(13).stream(NoiseMode::Laplace);
        let mut xs: Vec<f64> = (0..n).map(|_| laplace_sample(&mut s, b).unwrap()).collect();
        xs.sort_by(|a, c| a.partial_cmp(c).unwrap());
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = laplace_cdf(x, b);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 0.01, "KS distance {d}");
    }

    #[test]
    fn constant_bounds() {
        assert_eq!(sens_se(), 3.0);
        assert_eq!(sens_sa(), 4.0);
        for n in [2, 3, 7, 10, 100, 12345] {
            assert_eq!(sens_sqe(1.0, n).unwrap(), 3.0);
            assert_eq!(sens_sqa(1.0, n).unwrap(), 4.0);
        }
    }

    #[test]
    fn sqe_bound_values() {
        assert!(close(sens_sqe(2.0, 100).unwrap(), 4.96));
        assert!(close(sens_sqe(0.5, 8).unwrap(), 5.0));
        assert!(sens_sqe(0.0, 8).is_err());
        assert!(sens_sqe(1.0, 1).is_err());
    }

    #[test]
    fn sqa_bound_values() {
        assert!(close(sens_sqa(2.0, 100).unwrap(), 6.91));
        assert!((sens_sqa(0.5, 9).unwrap() - 6.1962).abs() < 1e-4);
        assert_eq!(sens_sqa(1.5, 2).unwrap(), 3.0);
    }

    #[test]
    fn bounds_are_continuous_at_one() {
        for n in [5, 50, 500] {
            let below_e = sens_sqe(1.0 - 1e-9, n).unwrap();
            let above_e = sens_sqe(1.0 + 1e-9, n).unwrap();
            let below_a = sens_sqa(1.0 - 1e-9, n).unwrap();
            let above_a = sens_sqa(1.0 + 1e-9, n).unwrap();
            assert!((below_e - 3.0).abs() < 1e-6 && (above_e - 3.0).abs() < 1e-6);
            assert!((below_a - 4.0).abs() < 1e-6 && (above_a - 4.0).abs() < 1e-6);
        }
    }

    #[test]
    fn variance_bounds() {
        assert_eq!(sens_var(1).unwrap(), 1.0);
        assert!(close(sens_var(100).unwrap(), 2.9701));
        let big = sens_var(1_000_000).unwrap();
        assert!(big > 2.999997 && big < 3.0);
        assert!(close(sens_var_q(1.0, 4).unwrap(), 1.75));
        assert!(close(sens_var_q(2.0, 4).unwrap(), 2.3125));
        assert!(close(sens_var_q(0.5, 4).unwrap(), 2.5));
        for n in [1, 3, 10, 1000] {
            assert!(close(sens_var_q(2.0, n).unwrap(), sens_var(n).unwrap()));
            let lo = sens_var_q(1.0 - 1e-9, n).unwrap();
            let hi = sens_var_q(1.0 + 1e-9, n).unwrap();
            assert!((lo - hi).abs() < 1e-6);
        }
    }

    #[test]
    fn baseline_numerators_match_square_bounds() {
        assert_eq!(sens_prior_ssa(9), 6.0);
        assert_eq!(sens_prior_sse(4), 4.0);
        for n in [10, 100, 1000] {
            assert!(close(sens_sqa(2.0, n).unwrap(), sens_prior_ssa(n)));
            assert!(close(sens_sqe(2.0, n).unwrap(), sens_prior_sse(n)));
        }
    }

    #[test]
    fn budgets() {
        let b = PrivacyBudget::new(1.0, 0.7).unwrap();
        assert_eq!(b.shares(), [0.7, 1.0 - 0.7]);
        assert_eq!(b.spent(), 1.0);
        assert!(PrivacyBudget::new(1.0, 0.0).is_err());
        assert!(PrivacyBudget::new(1.0, 1.0).is_err());
        assert!(PrivacyBudget::new(0.0, 0.5).is_err());
        assert!(PrivacyBudget::new(f64::INFINITY, 0.5).is_err());
        assert!(PrivacyBudget::triple(1.0, 0.5, 0.3, 0.3).is_err());
        assert!(PrivacyBudget::triple(1.0, 0.5, 0.3, 0.2).is_ok());

        let v = PrivacyBudget::with_variance_share(2.0, 0.5).unwrap();
        let BudgetSplit::Triple { rho1, rho2, rho3 } = v.split() else {
            panic!("expected a triple split")
        };
        assert!(close(rho1, 0.35) && close(rho2, 0.15) && rho3 == 0.5);
        assert!((v.spent() - 2.0).abs() <= f64::EPSILON * 2.0);
        assert!(PrivacyBudget::with_variance_share(1.0, 0.005).is_err());
    }
}
