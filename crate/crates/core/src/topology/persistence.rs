use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::complex::{boundary_faces, WeightedComplex};
use super::TopologyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for classes that never die.
    pub death: f64,
}

impl Interval {
    pub fn contains(&self, alpha: f64) -> bool {
        self.birth <= alpha && alpha < self.death
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Barcode {
    pub intervals: Vec<Interval>,
}

impl Barcode {
    pub fn betti_at(&self, alpha: f64, dim: usize) -> usize {
        self.intervals
            .iter()
            .filter(|i| i.dim == dim && i.contains(alpha))
            .count()
    }

    pub fn max_dim(&self) -> Option<usize> {
        self.intervals.iter().map(|i| i.dim).max()
    }

    /// `(β0 - 1) + sum_{k>=1} β_k` at `alpha`, with `β0 - 1` floored at 0.
    pub fn coherence(&self, alpha: f64) -> f64 {
        let b0 = self.betti_at(alpha, 0);
        let higher: usize = (1..=self.max_dim().unwrap_or(0)).map(|k| self.betti_at(alpha, k)).sum();
        (b0.saturating_sub(1) + higher) as f64
    }

    /// Intervals sorted by dimension, birth, death; for comparing barcodes.
    pub fn sorted(&self) -> Vec<Interval> {
        let mut v = self.intervals.clone();
        v.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
        });
        v
    }

    /// TSV with header `dim\tbirth\tdeath`; open ends are written `inf`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "dim\tbirth\tdeath")?;
        for i in self.sorted() {
            writeln!(out, "{}\t{}\t{}", i.dim, fmt_value(i.birth), fmt_value(i.death))?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self, TopologyError> {
        let mut intervals = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| TopologyError::Barcode(n + 1, e.to_string()))?;
            if n == 0 || line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |what: &str| TopologyError::Barcode(n + 1, what.to_string());
            if cols.len() != 3 {
                return Err(bad("expected 3 columns"));
            }
            intervals.push(Interval {
                dim: cols[0].parse().map_err(|_| bad("bad dimension"))?,
                birth: parse_value(cols[1]).ok_or_else(|| bad("bad birth"))?,
                death: parse_value(cols[2]).ok_or_else(|| bad("bad death"))?,
            });
        }
        Ok(Barcode { intervals })
    }
}

fn fmt_value(v: f64) -> String {
    match v {
        f64::INFINITY => "inf".into(),
        f64::NEG_INFINITY => "-inf".into(),
        _ => format!("{v}"),
    }
}

fn parse_value(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Column reduction over GF(2) of the boundary matrix in filtration order.
/// Zero-length intervals are not reported.
pub fn persistence(complex: &WeightedComplex) -> Result<Barcode, TopologyError> {
    complex.validate()?;
    let order = complex.filtration();
    let index: HashMap<&Vec<usize>, usize> = order.iter().enumerate().map(|(k, (s, _))| (*s, k)).collect();
    // columns hold sorted row indices; `pivot_of[row]` is the column whose low is `row`
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(order.len());
    let mut pivot_of: HashMap<usize, usize> = HashMap::new();
    let mut paired = vec![false; order.len()];
    let mut intervals = Vec::new();
    for (k, (s, value)) in order.iter().enumerate() {
        let mut col: Vec<usize> = boundary_faces(s).iter().map(|f| index[f]).collect();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match pivot_of.get(&low) {
                Some(&other) => col = symmetric_difference(&col, &columns[other]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            pivot_of.insert(low, k);
            paired[low] = true;
            paired[k] = true;
            let birth = order[low].1;
            if birth < *value {
                intervals.push(Interval {
                    dim: s.len() - 2,
                    birth,
                    death: *value,
                });
            }
        }
        columns.push(col);
    }
    for (k, (s, value)) in order.iter().enumerate() {
        if !paired[k] {
            intervals.push(Interval {
                dim: s.len() - 1,
                birth: *value,
                death: f64::INFINITY,
            });
        }
    }
    Ok(Barcode { intervals })
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub fn betti(complex: &WeightedComplex, alpha: f64, dim: usize) -> Result<usize, TopologyError> {
    Ok(persistence(complex)?.betti_at(alpha, dim))
}

pub fn coherence_index(complex: &WeightedComplex, alpha: f64) -> Result<f64, TopologyError> {
    Ok(persistence(complex)?.coherence(alpha))
}
