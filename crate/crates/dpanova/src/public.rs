//! Non-private baseline: the classical F test with its analytic reference.

use dpanova_core::stats::f_statistic;
use dpanova_core::Dataset;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

/// Upper-tail probability of the exact F statistic under `F(k − 1, N − k)`.
pub fn p_value_public_f(data: &Dataset) -> Result<f64> {
    let f = f_statistic(data)?.statistic;
    let d1 = (data.k() - 1) as f64;
    let d2 = (data.len() - data.k()) as f64;
    let dist = FisherSnedecor::new(d1, d2).map_err(|e| Error::Distribution(e.to_string()))?;
    Ok(dist.sf(f))
}

/// Value `x` with `P(F(d1, d2) > x) = p`.
pub fn f_upper_quantile(d1: f64, d2: f64, p: f64) -> Result<f64> {
    let dist = FisherSnedecor::new(d1, d2).map_err(|e| Error::Distribution(e.to_string()))?;
    Ok(dist.inverse_cdf(1.0 - p))
}
