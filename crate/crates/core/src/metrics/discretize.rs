//! Per-dimension binning of real vectors into discrete symbols.

use serde::{Deserialize, Serialize};

use super::info::intern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinStrategy {
    Uniform,
    Quantile,
}

/// Bin thresholds fitted on a calibration window. A value `v` in dimension
/// `k` falls in bin `#{t in thresholds[k] : t <= v}`, so values outside the
/// calibration range clamp to the edge bins. The product alphabet has
/// `bins_per_dim ^ dims` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub bins_per_dim: usize,
    pub strategy: BinStrategy,
    pub ranges: Vec<(f64, f64)>,
    thresholds: Vec<Vec<f64>>,
}

impl Discretizer {
    /// Panics on `bins_per_dim < 2`, an empty window or ragged samples.
    pub fn fit(samples: &[Vec<f64>], bins_per_dim: usize, strategy: BinStrategy) -> Self {
        assert!(bins_per_dim >= 2, "need at least two bins per dimension");
        assert!(!samples.is_empty(), "empty calibration window");
        let dims = samples[0].len();
        assert!(samples.iter().all(|s| s.len() == dims), "ragged samples");
        let mut ranges = Vec::with_capacity(dims);
        let mut thresholds = Vec::with_capacity(dims);
        for k in 0..dims {
            let mut column: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            column.sort_by(f64::total_cmp);
            let (lo, hi) = (column[0], column[column.len() - 1]);
            ranges.push((lo, hi));
            let cuts = (1..bins_per_dim).map(|b| match strategy {
                BinStrategy::Uniform => lo + (hi - lo) * b as f64 / bins_per_dim as f64,
                BinStrategy::Quantile => column[(b * column.len() / bins_per_dim).min(column.len() - 1)],
            });
            thresholds.push(cuts.collect());
        }
        Discretizer {
            bins_per_dim,
            strategy,
            ranges,
            thresholds,
        }
    }

    pub fn dims(&self) -> usize {
        self.thresholds.len()
    }

    pub fn bin(&self, dim: usize, value: f64) -> u16 {
        self.thresholds[dim].partition_point(|&t| t <= value) as u16
    }

    pub fn bins(&self, v: &[f64]) -> Vec<u16> {
        assert_eq!(v.len(), self.dims(), "vector dimension differs from calibration");
        v.iter().enumerate().map(|(k, &x)| self.bin(k, x)).collect()
    }

    /// Dense symbols for a batch, interned in order of first appearance.
    pub fn symbols(&self, samples: &[Vec<f64>]) -> Vec<u32> {
        intern(samples.iter().map(|s| self.bins(s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bins_clamp_out_of_range() {
        let samples: Vec<Vec<f64>> = (0..=8).map(|i| vec![i as f64]).collect();
        let d = Discretizer::fit(&samples, 4, BinStrategy::Uniform);
        assert_eq!(d.bin(0, -100.0), 0);
        assert_eq!(d.bin(0, 1.9), 0);
        assert_eq!(d.bin(0, 2.0), 1);
        assert_eq!(d.bin(0, 7.9), 3);
        assert_eq!(d.bin(0, 100.0), 3);
    }

    #[test]
    fn quantile_bins_are_balanced() {
        let samples: Vec<Vec<f64>> = (0..1000).map(|i| vec![((i * 7919) % 1000) as f64 / 10.0]).collect();
        let d = Discretizer::fit(&samples, 4, BinStrategy::Quantile);
        let mut counts = [0usize; 4];
        for s in &samples {
            counts[d.bin(0, s[0]) as usize] += 1;
        }
        assert_eq!(counts, [250; 4]);
    }

    #[test]
    fn constant_dimension_is_one_bin() {
        let samples = vec![vec![0.5, 1.0], vec![0.5, 2.0], vec![0.5, 3.0]];
        let d = Discretizer::fit(&samples, 4, BinStrategy::Quantile);
        let symbols: Vec<u16> = samples.iter().map(|s| d.bin(0, s[0])).collect();
        assert!(symbols.windows(2).all(|w| w[0] == w[1]));
    }
}
