//! The deterministic base world: Life on a torus, elementary 1D rules,
//! RLE pattern I/O and detection of persistent structures.

mod elementary;
mod grid;
mod rle;
mod structures;

use thiserror::Error;

pub use elementary::{padded_width, render_rows, space_time, step_elementary, ElementaryRule};
pub use grid::{step_life, step_life_parallel, Grid, Neighborhood, RING_OFFSETS};
pub use rle::{emit_rle, parse_rle, Pattern, RleError, RleErrorKind};
pub use structures::{detect_structures, History, TrackedStructure, DEFAULT_MAX_PERIOD};

#[derive(Debug, Error)]
pub enum SubstrateError {
    #[error("{width}x{height} grid cannot hold {len} cells")]
    Shape { width: usize, height: usize, len: usize },
    #[error("cell {index} has value {value}, expected 0 or 1")]
    CellValue { index: usize, value: u8 },
    #[error("plaintext line {line}: {message}")]
    Plaintext { line: usize, message: String },
    #[error(transparent)]
    Rle(#[from] RleError),
}
