//! One-dimensional elementary cellular automata (Wolfram numbering).

use serde::{Deserialize, Serialize};

/// An elementary rule. `table[k]` is the successor of the neighborhood
/// `(left, center, right)` read as the 3-bit number `k = 4*left + 2*center + right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementaryRule {
    number: u8,
    table: [u8; 8],
}

impl ElementaryRule {
    pub fn new(number: u8) -> Self {
        let mut table = [0u8; 8];
        for (k, slot) in table.iter_mut().enumerate() {
            *slot = (number >> k) & 1;
        }
        ElementaryRule { number, table }
    }

    pub fn number(&self) -> u8 {
        self.number
    }

    pub fn table(&self) -> &[u8; 8] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, left: u8, center: u8, right: u8) -> u8 {
        self.table[((left << 2) | (center << 1) | right) as usize]
    }
}

/// One generation on a ring of cells. Panics on rows shorter than 3.
pub fn step_elementary(row: &[u8], rule: &ElementaryRule) -> Vec<u8> {
    let n = row.len();
    assert!(n >= 3, "elementary rows need at least 3 cells, got {n}");
    (0..n)
        .map(|i| rule.apply(row[(i + n - 1) % n], row[i], row[(i + 1) % n]))
        .collect()
}

/// Space-time diagram: `rows` generations starting from a single live cell
/// in the middle of the row. Row 0 is the seed row.
///
/// The row is widened to `2*rows - 1` cells when `width` is too narrow for
/// the light cone to stay clear of the wrap-around.
pub fn space_time(rule: &ElementaryRule, width: usize, rows: usize) -> Vec<Vec<u8>> {
    let width = padded_width(width, rows);
    let mut row = vec![0u8; width];
    row[width / 2] = 1;
    let mut out = Vec::with_capacity(rows);
    for _ in 0..rows {
        let next = step_elementary(&row, rule);
        out.push(std::mem::replace(&mut row, next));
    }
    out
}

/// Minimum width that keeps `rows` generations of a single seed unwrapped.
pub fn padded_width(width: usize, rows: usize) -> usize {
    width.max(2 * rows.max(1) - 1).max(3)
}

pub fn render_rows(rows: &[Vec<u8>]) -> String {
    let mut out = String::new();
    for row in rows {
        out.extend(row.iter().map(|&c| if c == 1 { 'O' } else { '.' }));
        out.push('\n');
    }
    out
}
