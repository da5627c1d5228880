//! Observations grouped by a public category index.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Rows of `(category, value)` with a public number of valid categories `k`.
///
/// Categories are indices in `0..k`; a category may have no rows at all.
/// Datasets built with [`Dataset::new`] hold values in `[0, 1]`. Reference
/// datasets simulated from an unclamped normal law are built with
/// [`Dataset::unbounded`] and may leave that interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    k: usize,
    categories: Vec<usize>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(k: usize, rows: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let data = Self::unbounded(k, rows)?;
        if let Some(row) = data.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::ValueOutOfRange { row });
        }
        Ok(data)
    }

    /// Like [`Dataset::new`] but only requires finite values.
    pub fn unbounded(k: usize, rows: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "at least one category is required"));
        }
        let rows = rows.into_iter();
        let mut categories = Vec::with_capacity(rows.size_hint().0);
        let mut values = Vec::with_capacity(rows.size_hint().0);
        for (row, (category, value)) in rows.enumerate() {
            if category >= k {
                return Err(Error::CategoryOutOfRange { row, category, k });
            }
            if !value.is_finite() {
                return Err(Error::ValueOutOfRange { row });
            }
            categories.push(category);
            values.push(value);
        }
        if values.is_empty() {
            return Err(Error::invalid("rows", "a dataset needs at least one row"));
        }
        Ok(Self { k, categories, values })
    }

    /// Builds a dataset whose groups are consecutive blocks of `values` with
    /// the given sizes. Values are not range-checked.
    pub(crate) fn from_blocks(sizes: &[usize], values: Vec<f64>) -> Self {
        debug_assert_eq!(sizes.iter().sum::<usize>(), values.len());
        let mut categories = Vec::with_capacity(values.len());
        for (j, &n) in sizes.iter().enumerate() {
            categories.extend(core::iter::repeat_n(j, n));
        }
        Self { k: sizes.len(), categories, values }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of rows, `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn categories(&self) -> &[usize] {
        &self.categories
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        self.categories.iter().copied().zip(self.values.iter().copied())
    }

    pub fn group_summaries(&self) -> GroupSummary {
        let mut counts = alloc::vec![0usize; self.k];
        let mut sums = alloc::vec![CompensatedSum::new(); self.k];
        let mut total = CompensatedSum::new();
        for (c, y) in self.rows() {
            counts[c] += 1;
            sums[c].add(y);
            total.add(y);
        }
        let means = counts
            .iter()
            .zip(&sums)
            .map(|(&n, s)| (n > 0).then(|| s.value() / n as f64))
            .collect();
        GroupSummary {
            counts,
            means,
            grand_mean: total.value() / self.len() as f64,
        }
    }
}

/// Per-group counts and means plus the grand mean.
///
/// An empty group has count 0 and mean `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub counts: Vec<usize>,
    pub means: Vec<Option<f64>>,
    pub grand_mean: f64,
}

impl GroupSummary {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Sizes of the nonempty groups.
    pub fn nonempty_sizes(&self) -> Vec<usize> {
        self.counts.iter().copied().filter(|&n| n > 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> Dataset {
        Dataset::new(2, [(0, 0.0), (0, 1.0), (1, 1.0), (1, 1.0)]).unwrap()
    }

    #[test]
    fn summaries_of_four_row_example() {
        let g = example().group_summaries();
        assert_eq!(g.counts, [2, 2]);
        assert_eq!(g.means, [Some(0.5), Some(1.0)]);
        assert_eq!(g.grand_mean, 0.75);
        assert_eq!(g.total(), 4);
    }

    #[test]
    fn single_row() {
        let g = Dataset::new(1, [(0, 0.3)]).unwrap().group_summaries();
        assert_eq!(g.counts, [1]);
        assert_eq!(g.means, [Some(0.3)]);
        assert_eq!(g.grand_mean, 0.3);
    }

    #[test]
    fn empty_group_has_sentinel_mean() {
        let g = Dataset::new(3, [(0, 0.2), (1, 0.4), (1, 0.6)])
            .unwrap()
            .group_summaries();
        assert_eq!(g.counts, [1, 2, 0]);
        assert_eq!(g.means[2], None);
        assert_eq!(g.nonempty_sizes(), [1, 2]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert_eq!(
            Dataset::new(2, [(0, 0.5), (2, 0.5)]),
            Err(Error::CategoryOutOfRange { row: 1, category: 2, k: 2 })
        );
        assert_eq!(
            Dataset::new(2, [(0, 1.2)]),
            Err(Error::ValueOutOfRange { row: 0 })
        );
        assert!(Dataset::new(2, [(0, f64::NAN)]).is_err());
        assert!(Dataset::new(0, [(0, 0.5)]).is_err());
        assert!(Dataset::new(2, []).is_err());
        assert!(Dataset::unbounded(2, [(0, 1.2), (1, -0.4)]).is_ok());
    }
}
