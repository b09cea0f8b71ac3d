use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CommError;

/// Shape of the communication network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyKind {
    /// 4-neighbour torus over the agent tiles; slots N, E, S, W.
    Grid { cols: usize, rows: usize },
    /// Directed ring `i -> i+1`; one slot.
    Ring,
    /// Every ordered pair; slots ordered by sender id.
    Full,
    /// No edges and no slots.
    None,
    /// Explicit directed edges; slots ordered by sender id.
    Custom(Vec<(usize, usize)>),
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Grid { .. } => f.write_str("grid"),
            TopologyKind::Ring => f.write_str("ring"),
            TopologyKind::Full => f.write_str("full"),
            TopologyKind::None => f.write_str("none"),
            TopologyKind::Custom(edges) => {
                let parts: Vec<String> = edges.iter().map(|(a, b)| format!("{a}>{b}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// `grid`, `ring`, `full`, `none`, or a comma list of `from>to` edges.
/// Grid dimensions are filled in from the tiling afterwards.
impl FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "grid" => Ok(TopologyKind::Grid { cols: 0, rows: 0 }),
            "ring" => Ok(TopologyKind::Ring),
            "full" => Ok(TopologyKind::Full),
            "none" => Ok(TopologyKind::None),
            list => list
                .split(',')
                .map(|e| {
                    let (a, b) = e
                        .split_once('>')
                        .ok_or_else(|| format!("expected grid, ring, full, none or from>to edges, got {e:?}"))?;
                    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad agent id {v:?}"));
                    Ok((parse(a)?, parse(b)?))
                })
                .collect::<Result<Vec<_>, String>>()
                .map(TopologyKind::Custom),
        }
    }
}

/// Directed communication graph with a fixed slot layout per receiver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub n_agents: usize,
    /// `slots[j][s]` is the sender feeding slot `s` of agent `j`.
    slots: Vec<Vec<Option<usize>>>,
}

impl Topology {
    pub fn new(kind: TopologyKind, n_agents: usize) -> Result<Self, CommError> {
        let slots = match &kind {
            TopologyKind::Grid { cols, rows } => {
                if cols * rows != n_agents {
                    return Err(CommError::Topology(format!(
                        "grid of {cols}x{rows} tiles does not match {n_agents} agents"
                    )));
                }
                let (c, r) = (*cols, *rows);
                (0..n_agents)
                    .map(|j| {
                        let (x, y) = (j % c, j / c);
                        [
                            (x, (y + r - 1) % r),
                            ((x + 1) % c, y),
                            (x, (y + 1) % r),
                            ((x + c - 1) % c, y),
                        ]
                        .into_iter()
                        .map(|(nx, ny)| ny * c + nx)
                        .map(|i| (i != j).then_some(i))
                        .collect()
                    })
                    .collect()
            }
            TopologyKind::Ring => (0..n_agents)
                .map(|j| {
                    let i = (j + n_agents - 1) % n_agents;
                    vec![(i != j).then_some(i)]
                })
                .collect(),
            TopologyKind::Full => (0..n_agents)
                .map(|j| (0..n_agents).filter(|&i| i != j).map(Some).collect())
                .collect(),
            TopologyKind::None => vec![Vec::new(); n_agents],
            TopologyKind::Custom(edges) => {
                let mut incoming: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_agents];
                for &(i, j) in edges {
                    if i >= n_agents || j >= n_agents || i == j {
                        return Err(CommError::Topology(format!(
                            "invalid edge {i}>{j} for {n_agents} agents"
                        )));
                    }
                    incoming[j].insert(i);
                }
                let width = incoming.iter().map(BTreeSet::len).max().unwrap_or(0);
                incoming
                    .into_iter()
                    .map(|senders| {
                        let mut row: Vec<Option<usize>> = senders.into_iter().map(Some).collect();
                        row.resize(width, None);
                        row
                    })
                    .collect()
            }
        };
        Ok(Topology { kind, n_agents, slots })
    }

    /// Same slot layout, but no slot has a sender.
    pub fn silenced(&self) -> Self {
        let mut t = self.clone();
        t.slots.iter_mut().flatten().for_each(|s| *s = None);
        t
    }

    pub fn n_slots(&self) -> usize {
        self.slots.first().map_or(0, Vec::len)
    }

    pub fn slots(&self, receiver: usize) -> &[Option<usize>] {
        &self.slots[receiver]
    }

    /// Distinct directed edges `(from, to)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .slots
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().flatten().map(move |&i| (i, j)))
            .collect();
        set.into_iter().collect()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        to < self.n_agents && self.slots[to].contains(&Some(from))
    }

    pub fn out_neighbors(&self, from: usize) -> Vec<usize> {
        self.edges().into_iter().filter(|e| e.0 == from).map(|e| e.1).collect()
    }

    /// Agents reachable from `start` in at most `hops` directed hops,
    /// excluding `start` unless it lies on a cycle of that length.
    pub fn reachable(&self, start: usize, hops: usize) -> BTreeSet<usize> {
        let edges = self.edges();
        let mut seen = BTreeSet::new();
        let mut frontier = BTreeSet::from([start]);
        for _ in 0..hops {
            let next: BTreeSet<usize> = edges
                .iter()
                .filter(|e| frontier.contains(&e.0))
                .map(|e| e.1)
                .filter(|v| !seen.contains(v))
                .collect();
            seen.extend(next.iter().copied());
            frontier = next;
        }
        seen
    }

    /// Whether `{a, b}` is joined by an edge in either direction.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }
}
