//! Simulated populations: `k` normal groups with a common spread.

use alloc::vec::Vec;

use crate::anova::equal_layout;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{NoiseMode, StreamKey};

#[derive(Debug, Clone, PartialEq)]
pub enum Allocation {
    /// `floor(N/k)` each, remainder to the lowest-indexed groups.
    Equal,
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub n: usize,
    pub k: usize,
    pub group_means: Vec<f64>,
    pub sigma: f64,
    pub allocation: Allocation,
}

impl ScenarioSpec {
    pub fn new(n: usize, group_means: Vec<f64>, sigma: f64, allocation: Allocation) -> Result<Self> {
        let spec = Self {
            n,
            k: group_means.len(),
            group_means,
            sigma,
            allocation,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Equal groups whose means are `spacing · σ` apart and centred on 0.5.
    ///
    /// `k = 3`, `σ = 0.15`, `spacing = 1` gives means 0.35, 0.5, 0.65.
    pub fn spaced(n: usize, k: usize, sigma: f64, spacing: f64) -> Result<Self> {
        let centre = (k as f64 - 1.0) / 2.0;
        let means = (0..k)
            .map(|j| 0.5 + spacing * sigma * (j as f64 - centre))
            .collect();
        Self::new(n, means, sigma, Allocation::Equal)
    }

    /// All group means 0.5: a draw from the null.
    pub fn null(n: usize, k: usize, sigma: f64) -> Result<Self> {
        Self::spaced(n, k, sigma, 0.0)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.group_means.clone(), self.sigma, self.allocation.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("group_means", "at least one group is required"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "at least one row is required"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be nonnegative and finite"));
        }
        if self.group_means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::invalid("group_means", "means must lie in [0, 1]"));
        }
        if let Allocation::Explicit(sizes) = &self.allocation {
            if sizes.len() != self.k {
                return Err(Error::invalid("allocation", "one size per group is required"));
            }
            if sizes.iter().sum::<usize>() != self.n {
                return Err(Error::invalid("allocation", "sizes must sum to N"));
            }
        }
        Ok(())
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        match &self.allocation {
            Allocation::Equal => equal_layout(self.n, self.k),
            Allocation::Explicit(sizes) => sizes.clone(),
        }
    }

    /// Gap between adjacent group means in units of `σ`, when the means are
    /// evenly spaced; `None` otherwise (or when `σ = 0`).
    pub fn spacing(&self) -> Option<f64> {
        if self.sigma == 0.0 {
            return None;
        }
        if self.k == 1 {
            return Some(0.0);
        }
        let gap = self.group_means[1] - self.group_means[0];
        let even = self
            .group_means
            .windows(2)
            .all(|w| ((w[1] - w[0]) - gap).abs() < 1e-12);
        even.then(|| gap / self.sigma)
    }
}

/// A synthetic dataset together with how many values were clamped into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub data: Dataset,
    pub clamped: usize,
}

/// Draws group `j`'s rows from `Normal(mean_j, σ)` and clamps each value
/// into `[0, 1]`. Rows are generated group by group from one stream.
pub fn synth_dataset(spec: &ScenarioSpec, key: StreamKey) -> Result<Synthetic> {
    spec.validate()?;
    let mut stream = key.stream(NoiseMode::Laplace);
    let mut rows = Vec::with_capacity(spec.n);
    let mut clamped = 0;
    for (j, (&size, &mean)) in spec.group_sizes().iter().zip(&spec.group_means).enumerate() {
        for _ in 0..size {
            let y = mean + spec.sigma * stream.standard_normal();
            let c = y.clamp(0.0, 1.0);
            clamped += usize::from(c != y);
            rows.push((j, c));
        }
    }
    Ok(Synthetic {
        data: Dataset::new(spec.k, rows)?,
        clamped,
    })
}
