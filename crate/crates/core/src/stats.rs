//! Exact (non-private) statistics.
//!
//! For an exponent `q > 0` the between-group and within-group terms are
//!
//! ```text
//! between_q = Σ_j n_j |ȳ_j − ȳ|^q        within_q = Σ_i |y_i − ȳ_{c_i}|^q
//! ```
//!
//! and the statistic is `(between_q / (k − 1)) / (within_q / (N − k))`.
//! `q = 2` is the classical F statistic, `q = 1` is the F1 statistic.
//! Empty groups contribute nothing to either sum.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::sum::{sum, CompensatedSum};

/// Between/within decomposition of a variance-ratio statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatDecomposition {
    pub between: f64,
    pub within: f64,
    pub statistic: f64,
    pub q: f64,
}

#[inline]
pub(crate) fn pow_abs(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        libm::fabs(x)
    } else if q == 2.0 {
        x * x
    } else {
        libm::pow(libm::fabs(x), q)
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("q", "exponent must be a positive finite real"))
    }
}

/// Checks `k ≥ 2` and `N > k`, the shape needed for both degrees of freedom.
pub(crate) fn check_shape(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::DegenerateInput("at least two categories are required"));
    }
    if n <= k {
        return Err(Error::DegenerateInput("the number of rows must exceed k"));
    }
    Ok(())
}

/// `(between / (k − 1)) / (within / (N − k))` with no guards; noisy terms may
/// be negative.
#[inline]
pub(crate) fn variance_ratio(between: f64, within: f64, n: usize, k: usize) -> f64 {
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// `(between_q, within_q)` without validating `q`.
pub(crate) fn decompose(data: &Dataset, q: f64) -> (f64, f64) {
    let groups = data.group_summaries();
    let between = sum(groups
        .counts
        .iter()
        .zip(&groups.means)
        .filter_map(|(&n, m)| m.map(|m| n as f64 * pow_abs(m - groups.grand_mean, q))));
    let mut within = CompensatedSum::new();
    for (c, y) in data.rows() {
        // every row's group is nonempty
        let mean = groups.means[c].unwrap_or(y);
        within.add(pow_abs(y - mean, q));
    }
    (between, within.value())
}

fn ratio_statistic(data: &Dataset, q: f64) -> Result<StatDecomposition> {
    check_shape(data.len(), data.k())?;
    let (between, within) = decompose(data, q);
    if within == 0.0 {
        return Err(Error::DegenerateInput("within-group term is zero"));
    }
    Ok(StatDecomposition {
        between,
        within,
        statistic: variance_ratio(between, within, data.len(), data.k()),
        q,
    })
}

/// `(SSA, SSE)`.
pub fn ssa_sse(data: &Dataset) -> (f64, f64) {
    decompose(data, 2.0)
}

/// Classical one-way ANOVA F statistic.
pub fn f_statistic(data: &Dataset) -> Result<StatDecomposition> {
    ratio_statistic(data, 2.0)
}

/// `(SA, SE)`: absolute-deviation analogues of `(SSA, SSE)`.
pub fn sa_se(data: &Dataset) -> (f64, f64) {
    decompose(data, 1.0)
}

pub fn f1_statistic(data: &Dataset) -> Result<StatDecomposition> {
    ratio_statistic(data, 1.0)
}

/// `(SQA, SQE)` for exponent `q`.
pub fn sqa_sqe(data: &Dataset, q: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    Ok(decompose(data, q))
}

pub fn fq_statistic(data: &Dataset, q: f64) -> Result<StatDecomposition> {
    check_q(q)?;
    ratio_statistic(data, q)
}

/// `Σ_i |y_i − ȳ|^q`, deviations about the grand mean.
pub fn var_q(data: &Dataset, q: f64) -> Result<f64> {
    check_q(q)?;
    let mean = sum(data.values().iter().copied()) / data.len() as f64;
    Ok(sum(data.values().iter().map(|&y| pow_abs(y - mean, q))))
}

/// `Ñ = Σ_j n_j √(1 − 1/n_j)`, the effective size that makes `SE` an
/// unbiased scale for `σ` under normal groups.
///
/// Empty groups are rejected; filter them out first.
pub fn n_tilde(group_sizes: &[usize]) -> Result<f64> {
    if group_sizes.contains(&0) {
        return Err(Error::invalid("group_sizes", "empty groups must be removed"));
    }
    Ok(sum(group_sizes.iter().map(|&n| {
        let n = n as f64;
        n * libm::sqrt(1.0 - 1.0 / n)
    })))
}

/// `σ̂ = √(π/2) · se / (N − k)`, using `N − k` in place of `Ñ`.
///
/// The result is negative whenever `se` is.
pub fn sigma_hat_from_se(se: f64, n: usize, k: usize) -> Result<f64> {
    if k == 0 || n <= k {
        return Err(Error::invalid("n", "requires N > k ≥ 1"));
    }
    Ok(libm::sqrt(PI / 2.0) * se / (n - k) as f64)
}

/// `σ̂ = √(π/2) · se / Ñ` from the exact group sizes.
///
/// Group sizes are private, so this variant is only for validation code.
pub fn sigma_hat_from_se_exact(se: f64, group_sizes: &[usize]) -> Result<f64> {
    let effective = n_tilde(group_sizes)?;
    if effective <= 0.0 {
        return Err(Error::DegenerateInput("every group has a single row"));
    }
    Ok(libm::sqrt(PI / 2.0) * se / effective)
}

/// Expected `SA` under the null with normal groups of standard deviation
/// `sigma`: `σ √(2/π) Σ_j n_j √(1/n_j − 1/N)`.
pub fn expected_sa(group_sizes: &[usize], sigma: f64) -> Result<f64> {
    if group_sizes.contains(&0) {
        return Err(Error::invalid("group_sizes", "every group needs a row"));
    }
    let n: usize = group_sizes.iter().sum();
    if n < 2 {
        return Err(Error::invalid("group_sizes", "requires N ≥ 2"));
    }
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::invalid("sigma", "must be nonnegative"));
    }
    let n = n as f64;
    let total = sum(group_sizes.iter().map(|&nj| {
        let nj = nj as f64;
        nj * libm::sqrt(1.0 / nj - 1.0 / n)
    }));
    Ok(sigma * libm::sqrt(FRAC_2_PI) * total)
}

/// All compositions of `n` into `k` positive parts, in lexicographic order.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 1..=rest.saturating_sub(parts - 1) {
            prefix.push(first);
            go(rest - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 && n >= k {
        go(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}
