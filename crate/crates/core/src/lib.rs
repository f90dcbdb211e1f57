//! Reachability bounds for integer flowgraphs.
//!
//! For every edge of a program flowgraph the analyzer computes a set of
//! upper bounds, each a symbolic expression over the program inputs, on how
//! often the edge can execute in a single run. Loops are summarized with
//! path counters (one per loop path), bounds on the counters are read off
//! the necessary conditions of each path, and nested loops are summed over
//! the iterations of the enclosing loop.

pub mod analysis;
pub mod error;
pub mod ir;
pub mod oracle;
pub mod solver;
pub mod symexpr;

pub use error::{AnalysisError, Error, ParseError, StructureError};
