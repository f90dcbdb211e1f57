//! Flowgraphs, their two input formats, and the loop structure the analysis walks.

mod fg;
mod graph;
mod lex;
mod loops;
mod lower;

pub use fg::parse_flowgraph;
pub use graph::{Edge, EdgeId, FlowGraph, Instruction, NodeId, SourcePos};
pub use lex::{parse_expr, parse_formula};
pub use loops::{
    backbone_of_run, backbones, induced_flowgraph, loop_at, loop_at_node, primed, Backbone,
    LoopRef, DEFAULT_BACKBONE_CAP,
};
pub use lower::{lower_program, LowerOptions};

use crate::error::Error;

/// The two source formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Fg,
    Loopc,
}

impl SourceKind {
    /// Guesses from a file name, then from the first meaningful line.
    pub fn detect(path: Option<&str>, text: &str) -> SourceKind {
        match path.and_then(|p| p.rsplit_once('.')).map(|(_, ext)| ext) {
            Some("fg") => return SourceKind::Fg,
            Some("loopc" | "c") => return SourceKind::Loopc,
            _ => {}
        }
        let first = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .find(|l| !l.is_empty());
        match first.and_then(|l| l.split_whitespace().next()) {
            Some("begin" | "end" | "edge") => SourceKind::Fg,
            _ => SourceKind::Loopc,
        }
    }
}

/// Parses either format into a flowgraph.
pub fn parse_source(text: &str, kind: SourceKind, opts: LowerOptions) -> Result<FlowGraph, Error> {
    match kind {
        SourceKind::Fg => parse_flowgraph(text),
        SourceKind::Loopc => lower_program(text, opts),
    }
}
