//! Detection of persistent structures (still lifes, oscillators, gliders).
//!
//! Each frame is split into 8-connected components on the torus. A component
//! is normalized by its bounding-box origin, so two components have the same
//! canonical form exactly when one is a translate of the other. A component
//! of the newest frame is reported with period `p` and displacement `d` when
//! its canonical form also appears at `origin - d` in frame `T - p` and at
//! `origin - 2d` in frame `T - 2p`; the smallest such `p` wins.

use std::collections::{HashMap, VecDeque};

use super::grid::{Grid, RING_OFFSETS};

pub const DEFAULT_MAX_PERIOD: usize = 16;

/// Fixed-capacity buffer of recent frames, oldest first.
#[derive(Debug, Clone)]
pub struct History {
    capacity: usize,
    frames: VecDeque<Grid>,
}

impl History {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        History {
            capacity,
            frames: VecDeque::with_capacity(capacity),
        }
    }

    /// History sized for `max_period`: `2 * max_period + 1` frames.
    pub fn for_max_period(max_period: usize) -> Self {
        Self::new(2 * max_period + 1)
    }

    pub fn push(&mut self, frame: Grid) {
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> impl Iterator<Item = &Grid> {
        self.frames.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackedStructure {
    pub id: usize,
    /// Absolute cells at `first_seen`.
    pub cell_set: Vec<(usize, usize)>,
    pub period: usize,
    pub displacement: (isize, isize),
    pub first_seen: u64,
    pub last_seen: u64,
}

#[derive(Debug, Clone)]
struct Component {
    origin: (usize, usize),
    /// Cells relative to the bounding-box origin, sorted.
    shape: Vec<(usize, usize)>,
}

fn components(grid: &Grid) -> Vec<Component> {
    let (w, h) = (grid.width(), grid.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if seen[start] || grid.cells()[start] == 0 {
            continue;
        }
        // BFS with unwrapped coordinates relative to the seed cell.
        let mut cells: Vec<(isize, isize)> = Vec::new();
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(((start % w) as isize, (start / w) as isize));
        while let Some((ux, uy)) = queue.pop_front() {
            cells.push((ux, uy));
            for (dx, dy) in RING_OFFSETS {
                let (nx, ny) = (ux + dx, uy + dy);
                let gx = nx.rem_euclid(w as isize) as usize;
                let gy = ny.rem_euclid(h as isize) as usize;
                let idx = gy * w + gx;
                if !seen[idx] && grid.cells()[idx] == 1 {
                    seen[idx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        let min_x = cells.iter().map(|c| c.0).min().unwrap();
        let min_y = cells.iter().map(|c| c.1).min().unwrap();
        let mut shape: Vec<(usize, usize)> = cells
            .iter()
            .map(|&(x, y)| ((x - min_x) as usize, (y - min_y) as usize))
            .collect();
        shape.sort_unstable();
        out.push(Component {
            origin: (
                min_x.rem_euclid(w as isize) as usize,
                min_y.rem_euclid(h as isize) as usize,
            ),
            shape,
        });
    }
    out
}

/// Signed shortest displacement from `from` to `to` on a ring of size `n`.
fn torus_delta(from: usize, to: usize, n: usize) -> isize {
    let d = (to as isize - from as isize).rem_euclid(n as isize);
    if d > n as isize / 2 {
        d - n as isize
    } else {
        d
    }
}

fn shift(origin: (usize, usize), d: (isize, isize), k: isize, w: usize, h: usize) -> (usize, usize) {
    (
        (origin.0 as isize - k * d.0).rem_euclid(w as isize) as usize,
        (origin.1 as isize - k * d.1).rem_euclid(h as isize) as usize,
    )
}

type Index = HashMap<(Vec<(usize, usize)>, (usize, usize)), ()>;

fn index(comps: &[Component]) -> Index {
    comps.iter().map(|c| ((c.shape.clone(), c.origin), ())).collect()
}

/// Reports structures of the newest frame that recur under translation with
/// period at most `max_period`, each confirmed over two full periods.
pub fn detect_structures(history: &History, max_period: usize) -> Vec<TrackedStructure> {
    let frames: Vec<&Grid> = history.frames().collect();
    let Some(latest) = frames.last() else {
        return Vec::new();
    };
    let (w, h) = (latest.width(), latest.height());
    let n = frames.len();
    let comps: Vec<Vec<Component>> = frames.iter().map(|g| components(g)).collect();
    let indices: Vec<Index> = comps.iter().map(|c| index(c)).collect();
    let newest = &comps[n - 1];

    let mut found = Vec::new();
    for comp in newest {
        'period: for p in 1..=max_period {
            if 2 * p >= n {
                break;
            }
            // candidates in frame T-p with the same shape, nearest first
            let mut candidates: Vec<(isize, isize)> = comps[n - 1 - p]
                .iter()
                .filter(|c| c.shape == comp.shape)
                .map(|c| {
                    (
                        torus_delta(c.origin.0, comp.origin.0, w),
                        torus_delta(c.origin.1, comp.origin.1, h),
                    )
                })
                .filter(|d| d.0.unsigned_abs() <= p && d.1.unsigned_abs() <= p)
                .collect();
            candidates.sort_by_key(|d| (d.0.abs().max(d.1.abs()), *d));
            for d in candidates {
                let back2 = shift(comp.origin, d, 2, w, h);
                if !indices[n - 1 - 2 * p].contains_key(&(comp.shape.clone(), back2)) {
                    continue;
                }
                let mut k = 2;
                while (k as usize + 1) * p < n {
                    let o = shift(comp.origin, d, k + 1, w, h);
                    if !indices[n - 1 - (k as usize + 1) * p].contains_key(&(comp.shape.clone(), o)) {
                        break;
                    }
                    k += 1;
                }
                let first_origin = shift(comp.origin, d, k, w, h);
                let mut cell_set: Vec<(usize, usize)> = comp
                    .shape
                    .iter()
                    .map(|&(x, y)| ((first_origin.0 + x) % w, (first_origin.1 + y) % h))
                    .collect();
                cell_set.sort_unstable();
                found.push(TrackedStructure {
                    id: 0,
                    cell_set,
                    period: p,
                    displacement: d,
                    first_seen: frames[n - 1 - k as usize * p].tick(),
                    last_seen: latest.tick(),
                });
                break 'period;
            }
        }
    }
    found.sort_by(|a, b| a.cell_set.cmp(&b.cell_set));
    for (id, s) in found.iter_mut().enumerate() {
        s.id = id;
    }
    found
}

#[cfg(test)]
mod tests {
    use super::super::grid::step_life;
    use super::*;

    const GLIDER: [(usize, usize); 5] = [(1, 0), (2, 1), (0, 2), (1, 2), (2, 2)];

    fn run(mut g: Grid, ticks: usize, cap: usize) -> History {
        let mut hist = History::new(cap);
        hist.push(g.clone());
        for _ in 0..ticks {
            g = step_life(&g);
            hist.push(g.clone());
        }
        hist
    }

    #[test]
    fn glider_period_four_moves_diagonally() {
        let mut g = Grid::new(32, 32);
        g.stamp(&GLIDER, 10, 10);
        let hist = run(g, 40, 33);
        let s = detect_structures(&hist, DEFAULT_MAX_PERIOD);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].period, 4);
        assert_eq!(s[0].displacement, (1, 1));
        assert_eq!(s[0].last_seen, 40);
        assert_eq!(s[0].first_seen, 8);
    }

    #[test]
    fn blinker_and_block() {
        let mut g = Grid::new(20, 12);
        g.stamp(&[(0, 0), (1, 0), (2, 0)], 3, 3);
        g.stamp(&[(0, 0), (1, 0), (0, 1), (1, 1)], 12, 6);
        let hist = run(g, 10, 33);
        let s = detect_structures(&hist, DEFAULT_MAX_PERIOD);
        assert_eq!(s.len(), 2);
        let periods: Vec<_> = s.iter().map(|t| (t.period, t.displacement)).collect();
        assert!(periods.contains(&(2, (0, 0))));
        assert!(periods.contains(&(1, (0, 0))));
    }

    #[test]
    fn glider_across_the_seam() {
        let mut g = Grid::new(16, 16);
        g.stamp(&GLIDER, 14, 14);
        let hist = run(g, 20, 33);
        let s = detect_structures(&hist, 8);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].period, s[0].displacement), (4, (1, 1)));
    }

    #[test]
    fn short_history_reports_nothing() {
        let mut g = Grid::new(16, 16);
        g.stamp(&GLIDER, 4, 4);
        let hist = run(g, 5, 33);
        assert!(detect_structures(&hist, DEFAULT_MAX_PERIOD).is_empty());
    }

    #[test]
    fn chaotic_debris_is_not_periodic() {
        // R-pentomino is still evolving at these ticks
        let mut g = Grid::new(64, 64);
        g.stamp(&[(1, 0), (2, 0), (0, 1), (1, 1), (1, 2)], 30, 30);
        let hist = run(g, 20, 33);
        assert!(detect_structures(&hist, 4).is_empty());
    }
}
