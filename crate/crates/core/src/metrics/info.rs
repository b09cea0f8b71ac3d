//! Plug-in entropy and mutual information on discrete symbols, in bits.
//!
//! Estimators sum over sorted counts so results are bit-identical from run
//! to run regardless of hashing.

use std::collections::BTreeMap;

/// Shannon entropy (bits) of a count vector.
pub fn entropy_from_counts<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let mut counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    counts.sort_unstable();
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

fn counts_of<K: Ord + Clone>(keys: impl Iterator<Item = K>) -> Vec<usize> {
    let mut map: BTreeMap<K, usize> = BTreeMap::new();
    for k in keys {
        *map.entry(k).or_insert(0) += 1;
    }
    map.into_values().collect()
}

pub fn entropy(xs: &[u32]) -> f64 {
    entropy_from_counts(counts_of(xs.iter().copied()))
}

pub fn joint_entropy(xs: &[u32], ys: &[u32]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples of different length");
    entropy_from_counts(counts_of(xs.iter().copied().zip(ys.iter().copied())))
}

/// Plug-in `I(X;Y)` in bits, clamped at 0.
pub fn mutual_information(xs: &[u32], ys: &[u32]) -> f64 {
    (entropy(xs) + entropy(ys) - joint_entropy(xs, ys)).max(0.0)
}

/// Maps each row to a dense id in order of first appearance.
pub fn intern<K: Ord + Clone, I: IntoIterator<Item = K>>(rows: I) -> Vec<u32> {
    let mut ids: BTreeMap<K, u32> = BTreeMap::new();
    rows.into_iter()
        .map(|row| {
            let next = ids.len() as u32;
            *ids.entry(row).or_insert(next)
        })
        .collect()
}

/// Joint symbol of several variables at each sample index.
pub fn joint_codes(columns: &[&[u32]]) -> Vec<u32> {
    let n = columns.first().map_or(0, |c| c.len());
    assert!(columns.iter().all(|c| c.len() == n), "columns of different length");
    intern((0..n).map(|t| columns.iter().map(|c| c[t]).collect::<Vec<u32>>()))
}

/// An exact finite joint distribution over tuples of symbols.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pmf {
    probs: BTreeMap<Vec<u32>, f64>,
    arity: usize,
}

impl Pmf {
    /// Normalizes the given weights. Panics on an empty or zero-mass table.
    pub fn from_weights<I: IntoIterator<Item = (Vec<u32>, f64)>>(table: I) -> Self {
        let mut probs: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let mut arity = None;
        for (k, w) in table {
            assert!(w >= 0.0, "negative probability");
            assert!(arity.is_none_or(|a| a == k.len()), "outcomes of different arity");
            arity = Some(k.len());
            *probs.entry(k).or_insert(0.0) += w;
        }
        let total: f64 = probs.values().sum();
        assert!(total > 0.0, "empty distribution");
        probs.values_mut().for_each(|p| *p /= total);
        Pmf {
            probs,
            arity: arity.unwrap_or(0),
        }
    }

    /// Empirical distribution of sampled columns.
    pub fn from_samples(columns: &[&[u32]]) -> Self {
        let n = columns.first().map_or(0, |c| c.len());
        Self::from_weights((0..n).map(|t| (columns.iter().map(|c| c[t]).collect(), 1.0)))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn marginal(&self, vars: &[usize]) -> Pmf {
        let mut probs: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (k, &p) in &self.probs {
            *probs.entry(vars.iter().map(|&v| k[v]).collect()).or_insert(0.0) += p;
        }
        Pmf {
            probs,
            arity: vars.len(),
        }
    }

    pub fn entropy(&self) -> f64 {
        let mut ps: Vec<f64> = self.probs.values().copied().filter(|&p| p > 0.0).collect();
        ps.sort_by(f64::total_cmp);
        ps.iter().map(|&p| -p * p.log2()).sum::<f64>().max(0.0)
    }

    /// `I(A;B)` in bits for disjoint variable groups `a` and `b`.
    pub fn mutual_information(&self, a: &[usize], b: &[usize]) -> f64 {
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let ab: Vec<usize> = a.iter().chain(b).copied().collect();
        (self.marginal(a).entropy() + self.marginal(b).entropy() - self.marginal(&ab).entropy()).max(0.0)
    }

    /// Total correlation `sum_i H(X_i) - H(X_1..X_n)` over `vars`.
    pub fn total_correlation(&self, vars: &[usize]) -> f64 {
        let singles: f64 = vars.iter().map(|&v| self.marginal(&[v]).entropy()).sum();
        (singles - self.marginal(vars).entropy()).max(0.0)
    }
}
