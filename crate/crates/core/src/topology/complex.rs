use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TopologyError;
use crate::comm::ChannelGraph;
use crate::metrics::SynergyWeights;

/// Sorted vertex list.
pub type Simplex = Vec<usize>;

/// Faces of codimension one, each sorted.
pub fn boundary_faces(s: &[usize]) -> Vec<Simplex> {
    if s.len() < 2 {
        return Vec::new();
    }
    (0..s.len())
        .map(|skip| {
            s.iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Simplicial complex with an appearance value per simplex. Vertices
/// appear at `-inf`; the complex at scale `α` holds every simplex with
/// value `<= α`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedComplex {
    pub simplices: BTreeMap<Simplex, f64>,
    /// Largest subset size considered when building.
    pub k_max: usize,
}

impl WeightedComplex {
    pub fn new(vertices: impl IntoIterator<Item = usize>, k_max: usize) -> Self {
        WeightedComplex {
            simplices: vertices.into_iter().map(|v| (vec![v], f64::NEG_INFINITY)).collect(),
            k_max,
        }
    }

    /// Stores a simplex (sorted on insert) at its raw value, keeping the
    /// smaller value if it is already present.
    pub fn insert(&mut self, mut simplex: Simplex, value: f64) {
        simplex.sort_unstable();
        simplex.dedup();
        let slot = self.simplices.entry(simplex).or_insert(value);
        *slot = slot.min(value);
    }

    pub fn vertices(&self) -> Vec<usize> {
        self.simplices.keys().filter(|s| s.len() == 1).map(|s| s[0]).collect()
    }

    pub fn dim(&self) -> Option<usize> {
        self.simplices.keys().map(|s| s.len() - 1).max()
    }

    /// Drops simplices with a missing face, then raises every value to the
    /// maximum of its faces, lowest dimension first.
    pub fn repair(&mut self) {
        let max_len = self.simplices.keys().map(Vec::len).max().unwrap_or(0);
        for len in 2..=max_len {
            let layer: Vec<Simplex> = self.simplices.keys().filter(|s| s.len() == len).cloned().collect();
            for s in layer {
                let faces = boundary_faces(&s);
                match faces
                    .iter()
                    .map(|f| self.simplices.get(f).copied())
                    .collect::<Option<Vec<f64>>>()
                {
                    Some(values) => {
                        let floor = values.into_iter().fold(f64::NEG_INFINITY, f64::max);
                        let v = self.simplices.get_mut(&s).unwrap();
                        *v = v.max(floor);
                    }
                    None => {
                        self.simplices.remove(&s);
                    }
                }
            }
        }
    }

    /// Downward closure and monotone values.
    pub fn validate(&self) -> Result<(), TopologyError> {
        for (s, &a) in &self.simplices {
            if a.is_nan() {
                return Err(TopologyError::Invalid(format!("{s:?} has a NaN value")));
            }
            for f in boundary_faces(s) {
                match self.simplices.get(&f) {
                    None => return Err(TopologyError::Invalid(format!("{s:?} is missing face {f:?}"))),
                    Some(&b) if b > a => {
                        return Err(TopologyError::Invalid(format!(
                            "{s:?} at {a} precedes its face {f:?} at {b}"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Simplices in filtration order: value, then dimension, then vertices.
    pub fn filtration(&self) -> Vec<(&Simplex, f64)> {
        let mut order: Vec<(&Simplex, f64)> = self.simplices.iter().map(|(s, &a)| (s, a)).collect();
        order.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.len().cmp(&y.0.len())).then(x.0.cmp(y.0)));
        order
    }

    pub fn at(&self, alpha: f64) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter().filter(move |(_, &a)| a <= alpha).map(|(s, _)| s)
    }

    pub fn euler_characteristic(&self, alpha: f64) -> i64 {
        self.at(alpha).map(|s| if s.len() % 2 == 1 { 1 } else { -1 }).sum()
    }

    /// Same complex with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let mut out = WeightedComplex {
            simplices: BTreeMap::new(),
            k_max: self.k_max,
        };
        for (s, &a) in &self.simplices {
            out.insert(s.iter().map(|&v| perm[v]).collect(), a);
        }
        out
    }
}

/// Complex over `n_agents` vertices. A subset with synergy `w > 0` enters
/// at `-w`; a pair without a synergy weight falls back to
/// `-max(Γij, Γji)`. Zero weights are left out, subsets of more than
/// `k_max` agents are ignored, and closure repair runs last.
pub fn build_complex(
    weights: &SynergyWeights,
    gamma: Option<&ChannelGraph>,
    n_agents: usize,
    k_max: usize,
) -> WeightedComplex {
    let mut complex = WeightedComplex::new(0..n_agents, k_max);
    if let Some(g) = gamma {
        for &(i, j) in &g.edges {
            let key = if i < j { vec![i, j] } else { vec![j, i] };
            if weights.weights.contains_key(&key) {
                continue;
            }
            let w = g.gamma[i][j].max(g.gamma[j][i]);
            if w > 0.0 {
                complex.insert(key, -w);
            }
        }
    }
    for (s, &w) in &weights.weights {
        if s.len() >= 2 && s.len() <= k_max && w > 0.0 && s.iter().all(|&v| v < n_agents) {
            complex.insert(s.clone(), -w);
        }
    }
    complex.repair();
    complex
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(entries: &[(&[usize], f64)]) -> SynergyWeights {
        SynergyWeights {
            target: "test".into(),
            weights: entries.iter().map(|(s, w)| (s.to_vec(), *w)).collect(),
        }
    }

    #[test]
    fn zero_weights_leave_isolated_vertices() {
        let c = build_complex(&weights(&[(&[0, 1], 0.0), (&[0, 1, 2], 0.0)]), None, 3, 3);
        assert_eq!(c.simplices.len(), 3);
        assert_eq!(c.euler_characteristic(1e9), 3);
    }

    #[test]
    fn closure_repair_delays_the_triangle() {
        let c = build_complex(
            &weights(&[(&[0, 1], 1.0), (&[0, 2], 1.0), (&[1, 2], 1.0), (&[0, 1, 2], 1.5)]),
            None,
            3,
            3,
        );
        assert_eq!(c.simplices[&vec![0, 1, 2]], -1.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn simplex_without_faces_is_dropped() {
        let c = build_complex(&weights(&[(&[0, 1], 1.0), (&[0, 1, 2], 2.0)]), None, 3, 3);
        assert!(!c.simplices.contains_key(&vec![0, 1, 2]));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn pairs_fall_back_to_channel_information() {
        let mut g = ChannelGraph::empty(0, 3, vec![(0, 1), (1, 0), (1, 2)]);
        g.gamma[0][1] = 0.4;
        g.gamma[1][0] = 0.7;
        g.gamma[1][2] = 0.2;
        let c = build_complex(&weights(&[(&[1, 2], 0.9)]), Some(&g), 3, 3);
        assert_eq!(c.simplices[&vec![0, 1]], -0.7);
        assert_eq!(c.simplices[&vec![1, 2]], -0.9);
    }

    #[test]
    fn validation_catches_broken_filtrations() {
        let mut c = WeightedComplex::new(0..2, 3);
        c.simplices.insert(vec![0, 1, 2], 0.0);
        assert!(c.validate().is_err());
        let mut c = WeightedComplex::new(0..2, 3);
        c.simplices.insert(vec![0, 1], -1.0);
        c.simplices.insert(vec![0], 0.0);
        assert!(c.validate().is_err());
    }
}
