//! Sorted views of a feature column shared by the stump and interval sweeps.

use crate::data::Dataset;

/// Sample indices sorted by one feature, with the prefix lengths at which the
/// feature value changes (always including `0` and `n`).
#[derive(Debug, Clone)]
pub(crate) struct FeatureSort {
    pub order: Vec<usize>,
    pub values: Vec<f64>,
    pub cuts: Vec<usize>,
}

impl FeatureSort {
    pub fn new(data: &Dataset, feature: usize) -> Self {
        let mut order: Vec<usize> = (0..data.n()).collect();
        let col: Vec<f64> = data.feature(feature).collect();
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let values: Vec<f64> = order.iter().map(|&i| col[i]).collect();
        let mut cuts = vec![0];
        for k in 1..values.len() {
            if values[k] != values[k - 1] {
                cuts.push(k);
            }
        }
        cuts.push(values.len());
        Self { order, values, cuts }
    }

    pub fn all(data: &Dataset) -> Vec<Self> {
        (0..data.dim()).map(|j| Self::new(data, j)).collect()
    }

    /// Stump threshold separating the first `cut` sorted points from the rest:
    /// points at positions `< cut` satisfy `x <= t`, the others `x > t`.
    pub fn stump_threshold(&self, cut: usize) -> f64 {
        let n = self.values.len();
        if cut == 0 {
            self.values[0] - 1.0
        } else if cut == n {
            self.values[n - 1] + 1.0
        } else {
            let (a, b) = (self.values[cut - 1], self.values[cut]);
            let mid = a + (b - a) / 2.0;
            if a < mid && mid < b {
                mid
            } else {
                a
            }
        }
    }

    /// Closed interval `[a, b]` containing exactly the sorted positions
    /// `start..end` (both cuts).
    pub fn interval_bounds(&self, start: usize, end: usize) -> (f64, f64) {
        let n = self.values.len();
        let a = if start == 0 {
            self.values[0] - 1.0
        } else {
            let (lo, hi) = (self.values[start - 1], self.values[start]);
            let mid = lo + (hi - lo) / 2.0;
            if lo < mid && mid <= hi {
                mid
            } else {
                hi
            }
        };
        let b = if end == n {
            self.values[n - 1] + 1.0
        } else {
            let (lo, hi) = (self.values[end - 1], self.values[end]);
            let mid = lo + (hi - lo) / 2.0;
            if lo <= mid && mid < hi {
                mid
            } else {
                lo
            }
        };
        (a, b)
    }
}
