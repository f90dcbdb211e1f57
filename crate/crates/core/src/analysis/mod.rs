//! Reachability bounds: for every edge, symbolic upper bounds on how often a
//! single run can take it.

mod asymptotic;
mod bounds;
mod engine;
mod report;
mod summary;

use std::collections::BTreeSet;

use serde::Serialize;

pub use asymptotic::{class_of, class_of_set, Complexity};
pub use bounds::{min_of, BoundMap, BoundSet};
pub use engine::{closed_form_sum, BackboneState, LoopPath, LoopSummary};
pub use report::{render_json, render_text, EdgeReport, LoopReport, RenderOptions};
pub use summary::compute_summary;

use crate::error::AnalysisError;
use crate::ir::{FlowGraph, NodeId, DEFAULT_BACKBONE_CAP};
use crate::solver::Solver;
use crate::symexpr::{simplify, CounterId, Expr, Formula};

/// Default limit on the members of one bound set.
pub const DEFAULT_SET_CAP: usize = 8;

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub backbone_cap: usize,
    pub set_cap: usize,
    /// Drop backbones whose path condition is unsatisfiable before merging.
    pub prune_infeasible: bool,
    /// Replace the counter of a simple counting loop by its exact final value.
    pub smart_elimination: bool,
    pub solver: Solver,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            backbone_cap: DEFAULT_BACKBONE_CAP,
            set_cap: DEFAULT_SET_CAP,
            prune_infeasible: false,
            smart_elimination: true,
            solver: Solver::internal(),
        }
    }
}

/// A note about precision lost during the analysis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub edges: Vec<EdgeReport>,
    pub loops: Vec<LoopReport>,
    /// `None` when some edge has no bound.
    pub asymptotic: Option<Complexity>,
    pub diagnostics: Vec<Diagnostic>,
    pub bounds: BoundMap,
    /// Top-level backbone states.
    pub backbones: Vec<BackboneState>,
    /// Every loop summary computed, innermost first.
    pub summaries: Vec<LoopSummary>,
}

impl AnalysisReport {
    pub fn edge(&self, src: &str, dst: &str) -> Option<&EdgeReport> {
        self.edges.iter().find(|e| e.src == src && e.dst == dst)
    }

    pub fn loop_at(&self, entry: &str) -> Option<&LoopReport> {
        self.loops.iter().find(|l| l.entry == entry)
    }

    /// Summaries computed for the loop entered at `entry`.
    pub fn summaries_at<'a>(&'a self, entry: &'a str) -> impl Iterator<Item = &'a LoopSummary> {
        self.summaries.iter().filter(move |s| s.entry == entry)
    }
}

/// Runs the whole analysis on `g`.
pub fn analyze(g: &FlowGraph, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let mut engine = engine::Engine::new(opts);
    let (states, bounds) = engine.execute_program(g)?;

    let edges: Vec<EdgeReport> = g
        .sorted_edges()
        .into_iter()
        .map(|e| {
            let set = bounds[&e.id].clone();
            EdgeReport {
                id: e.id,
                src: e.src.clone(),
                dst: e.dst.clone(),
                instr: e.instr.to_string(),
                min: min_of(&set),
                complexity: class_of_set(&set),
                bounds: set,
            }
        })
        .collect();

    let loops = engine
        .loops
        .iter()
        .map(|(entry, body)| loop_report(g, &bounds, entry, body))
        .collect();

    let mut diagnostics = engine.diagnostics;
    let asymptotic = if edges.iter().any(|e| e.bounds.is_empty()) {
        for e in edges.iter().filter(|e| e.bounds.is_empty()) {
            diagnostics.push(Diagnostic {
                code: "unbounded-edge",
                message: format!("no bound for ({},{})", e.src, e.dst),
            });
        }
        None
    } else {
        Some(
            edges
                .iter()
                .map(|e| e.complexity)
                .max()
                .unwrap_or(asymptotic::CONSTANT),
        )
    };

    Ok(AnalysisReport {
        edges,
        loops,
        asymptotic,
        diagnostics,
        bounds,
        backbones: states,
        summaries: engine.summaries,
    })
}

/// A loop executes at most as often as the edges from its entry into its body.
fn loop_report(g: &FlowGraph, bounds: &BoundMap, entry: &NodeId, body: &BTreeSet<NodeId>) -> LoopReport {
    let mut terms = Vec::new();
    let mut known = true;
    for e in g.out_edges(entry) {
        if !body.contains(&e.dst) {
            continue;
        }
        match min_of(&bounds[&e.id]) {
            Some(m) => terms.push(m),
            None => known = false,
        }
    }
    let bound = known.then(|| match terms.len() {
        1 => terms.pop().unwrap(),
        _ => simplify(&Expr::Add(terms)),
    });
    LoopReport {
        entry: entry.clone(),
        body: body.iter().cloned().collect(),
        complexity: bound.as_ref().map_or(Complexity::Unbounded, class_of),
        bound,
    }
}

/// Upper bounds on the iterations along the paths counted by `ids`, given
/// that `phi` holds before each of them.
pub fn compute_bounds(
    ids: &BTreeSet<CounterId>,
    phi: &Formula,
    opts: &AnalysisOptions,
) -> BoundSet {
    engine::Engine::new(opts).compute_bounds(ids, phi)
}
