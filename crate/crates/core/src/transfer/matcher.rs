use rayon::prelude::*;

use crate::{Error, Result};

/// Donor pixels grouped by matching statistic for exact nearest-`R` lookup.
///
/// Pixels sharing the same `R` collapse into one run that remembers the
/// smallest flat index, which is the pixel an exhaustive search would pick on
/// a tie. Queries are a binary search followed by an outward scan over runs
/// at the same computed distance, so results are identical to brute force.
#[derive(Debug, Clone)]
pub struct DonorIndex {
    /// Distinct statistic values, ascending.
    keys: Vec<f64>,
    /// Smallest donor flat index carrying each key.
    first_index: Vec<usize>,
    /// Number of donor pixels indexed (after subsampling).
    indexed: usize,
}

impl DonorIndex {
    /// Indexes every `stride`-th donor pixel (stride 1 keeps all of them).
    pub fn build(statistic: &[f64], stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidInput("donor subsample stride must be positive".into()));
        }
        if statistic.is_empty() {
            return Err(Error::EmptyDonor);
        }
        if let Some(v) = statistic.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite donor statistic {v}")));
        }
        let mut order: Vec<usize> = (0..statistic.len()).step_by(stride).collect();
        order.sort_by(|&a, &b| statistic[a].total_cmp(&statistic[b]).then(a.cmp(&b)));
        let indexed = order.len();
        let mut keys: Vec<f64> = Vec::new();
        let mut first_index = Vec::new();
        for i in order {
            let r = statistic[i];
            // `==` rather than bit equality so that -0.0 and 0.0 share a run,
            // as they do under the distance used by exhaustive search.
            if keys.last() != Some(&r) {
                keys.push(r);
                first_index.push(i);
            }
        }
        Ok(Self {
            keys,
            first_index,
            indexed,
        })
    }

    pub fn len(&self) -> usize {
        self.indexed
    }

    pub fn is_empty(&self) -> bool {
        self.indexed == 0
    }

    /// Donor flat index minimizing `|r - R|`, lowest index on ties.
    pub fn nearest(&self, r: f64) -> usize {
        let dist = |k: usize| (r - self.keys[k]).abs();
        let pos = self.keys.partition_point(|&k| k < r);
        let best = match (pos.checked_sub(1), pos < self.keys.len()) {
            (Some(l), true) => dist(l).min(dist(pos)),
            (Some(l), false) => dist(l),
            (None, _) => dist(pos),
        };
        // Computed distance is monotone away from `r`, so every run at the
        // best distance is contiguous around `pos`.
        let mut winner = usize::MAX;
        let mut k = pos;
        while k > 0 && dist(k - 1) == best {
            k -= 1;
            winner = winner.min(self.first_index[k]);
        }
        let mut k = pos;
        while k < self.keys.len() && dist(k) == best {
            winner = winner.min(self.first_index[k]);
            k += 1;
        }
        winner
    }

    /// Nearest donor index for every query, in query order.
    pub fn assign(&self, queries: &[f64]) -> Vec<usize> {
        queries.par_iter().map(|&r| self.nearest(r)).collect()
    }
}

/// Exhaustive `O(N * M)` reference matcher over every `stride`-th donor
/// pixel. Same distance and tie-break as [`DonorIndex`].
pub fn assign_exhaustive(donor: &[f64], queries: &[f64], stride: usize) -> Result<Vec<usize>> {
    if donor.is_empty() {
        return Err(Error::EmptyDonor);
    }
    if stride == 0 {
        return Err(Error::InvalidInput("donor subsample stride must be positive".into()));
    }
    Ok(queries
        .iter()
        .map(|&r| {
            let mut best = (f64::INFINITY, usize::MAX);
            for i in (0..donor.len()).step_by(stride) {
                let d = (r - donor[i]).abs();
                if d < best.0 {
                    best = (d, i);
                }
            }
            best.1
        })
        .collect())
}
