//! Synergy-weighted simplicial complexes over agents and their persistent
//! homology over GF(2).

mod complex;
mod persistence;

use thiserror::Error;

pub use complex::{boundary_faces, build_complex, Simplex, WeightedComplex};
pub use persistence::{betti, coherence_index, persistence, Barcode, Interval};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid filtration: {0}")]
    Invalid(String),
    #[error("barcode line {0}: {1}")]
    Barcode(usize, String),
}
