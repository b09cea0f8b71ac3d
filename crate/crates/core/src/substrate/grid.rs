use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SubstrateError;

/// One tick of the 2D binary substrate on a torus.
///
/// Cells are stored row-major: the cell at column `x`, row `y` lives at
/// `cells[y * width + x]`. Row 0 is the top row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
    tick: u64,
}

/// The 3×3 Moore neighborhood of a cell.
///
/// `ring` is in row-major order with the center skipped:
///
/// ```text
/// 0 1 2      NW N NE
/// 3 . 4  =   W  .  E
/// 5 6 7      SW S SE
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: u8,
    pub ring: [u8; 8],
}

impl Neighborhood {
    pub fn live_count(&self) -> u8 {
        self.ring.iter().sum()
    }
}

/// Offsets `(dx, dy)` of the ring slots, in slot order.
pub const RING_OFFSETS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        Grid {
            width,
            height,
            cells: vec![0; width * height],
            tick: 0,
        }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<u8>) -> Result<Self, SubstrateError> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(SubstrateError::Shape {
                width,
                height,
                len: cells.len(),
            });
        }
        if let Some(i) = cells.iter().position(|&c| c > 1) {
            return Err(SubstrateError::CellValue {
                index: i,
                value: cells[i],
            });
        }
        Ok(Grid {
            width,
            height,
            cells,
            tick: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn with_tick(mut self, tick: u64) -> Self {
        self.tick = tick;
        self
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.cells[y * self.width + x]
    }

    /// Cell value with toroidal wrap on signed coordinates.
    #[inline]
    pub fn get_wrapped(&self, x: isize, y: isize) -> u8 {
        let x = x.rem_euclid(self.width as isize) as usize;
        let y = y.rem_euclid(self.height as isize) as usize;
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        assert!(value <= 1, "cell values are 0 or 1");
        self.cells[y * self.width + x] = value;
    }

    pub fn population(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Live cells as `(x, y)`, in row-major order.
    pub fn live_cells(&self) -> Vec<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }

    /// Stamps `cells` (pattern-relative coordinates) at `(ox, oy)`, wrapping.
    pub fn stamp(&mut self, cells: &[(usize, usize)], ox: usize, oy: usize) {
        for &(x, y) in cells {
            let gx = (ox + x) % self.width;
            let gy = (oy + y) % self.height;
            self.cells[gy * self.width + gx] = 1;
        }
    }

    /// Neighborhood of `(x, y)` on the torus.
    ///
    /// Panics when the coordinates lie outside the grid.
    pub fn neighborhood(&self, x: usize, y: usize) -> Neighborhood {
        assert!(
            x < self.width && y < self.height,
            "cell ({x}, {y}) outside {}x{} grid",
            self.width,
            self.height
        );
        let mut ring = [0u8; 8];
        for (slot, (dx, dy)) in RING_OFFSETS.iter().enumerate() {
            ring[slot] = self.get_wrapped(x as isize + dx, y as isize + dy);
        }
        Neighborhood {
            center: self.get(x, y),
            ring,
        }
    }

    /// Plaintext dump: `.` for 0, `O` for 1, one row per line.
    pub fn to_plaintext(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|&c| if c == 1 { 'O' } else { '.' }));
            out.push('\n');
        }
        out
    }

    pub fn from_plaintext(text: &str) -> Result<Self, SubstrateError> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('!')).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (line, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(SubstrateError::Plaintext {
                    line: line + 1,
                    message: format!("row has {} cells, expected {width}", row.chars().count()),
                });
            }
            for (col, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '.' => 0,
                    'O' => 1,
                    other => {
                        return Err(SubstrateError::Plaintext {
                            line: line + 1,
                            message: format!("unexpected character {other:?} at column {}", col + 1),
                        })
                    }
                });
            }
        }
        Grid::from_cells(width, height, cells)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_plaintext())
    }
}

#[inline]
fn life_rule(center: u8, live: u8) -> u8 {
    match (center, live) {
        (1, 2) | (1, 3) | (0, 3) => 1,
        _ => 0,
    }
}

fn step_row(state: &Grid, y: usize, out: &mut [u8]) {
    let w = state.width as isize;
    let h = state.height as isize;
    let yi = y as isize;
    let up = (yi - 1).rem_euclid(h) as usize * state.width;
    let mid = y * state.width;
    let down = (yi + 1).rem_euclid(h) as usize * state.width;
    let c = &state.cells;
    for (x, slot) in out.iter_mut().enumerate() {
        let xi = x as isize;
        let l = (xi - 1).rem_euclid(w) as usize;
        let r = (xi + 1).rem_euclid(w) as usize;
        let live =
            c[up + l] + c[up + x] + c[up + r] + c[mid + l] + c[mid + r] + c[down + l] + c[down + x] + c[down + r];
        *slot = life_rule(c[mid + x], live);
    }
}

/// One B3/S23 generation on the torus. The input is left untouched.
pub fn step_life(state: &Grid) -> Grid {
    let mut cells = vec![0u8; state.cells.len()];
    for (y, row) in cells.chunks_mut(state.width).enumerate() {
        step_row(state, y, row);
    }
    Grid {
        width: state.width,
        height: state.height,
        cells,
        tick: state.tick + 1,
    }
}

/// Row-parallel variant of [`step_life`]; bit-identical output.
pub fn step_life_parallel(state: &Grid) -> Grid {
    let mut cells = vec![0u8; state.cells.len()];
    cells
        .par_chunks_mut(state.width)
        .enumerate()
        .for_each(|(y, row)| step_row(state, y, row));
    Grid {
        width: state.width,
        height: state.height,
        cells,
        tick: state.tick + 1,
    }
}
