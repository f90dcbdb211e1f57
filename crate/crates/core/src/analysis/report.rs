use serde::Serialize;
use serde_json::{json, Value};

use super::{AnalysisReport, BoundSet, Complexity};
use crate::ir::{EdgeId, NodeId};
use crate::symexpr::Expr;

#[derive(Clone, Debug)]
pub struct EdgeReport {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub instr: String,
    /// Empty when no bound is known.
    pub bounds: BoundSet,
    pub min: Option<Expr>,
    pub complexity: Complexity,
}

#[derive(Clone, Debug)]
pub struct LoopReport {
    pub entry: NodeId,
    pub body: Vec<NodeId>,
    /// `None` when some edge into the body has no bound.
    pub bound: Option<Expr>,
    pub complexity: Complexity,
}

/// Which sections to print. With nothing selected, everything is printed.
#[derive(Clone, Copy, Debug, Default)]
pub struct RenderOptions {
    pub edge_bounds: bool,
    pub loop_bounds: bool,
    pub asymptotic: bool,
}

impl RenderOptions {
    fn all_if_none(self) -> Self {
        if self.edge_bounds || self.loop_bounds || self.asymptotic {
            self
        } else {
            RenderOptions {
                edge_bounds: true,
                loop_bounds: true,
                asymptotic: true,
            }
        }
    }
}

fn set_text(set: &BoundSet) -> String {
    if set.is_empty() {
        "unbounded".into()
    } else {
        set.iter().map(Expr::to_string).collect::<Vec<_>>().join(", ")
    }
}

pub fn render_text(r: &AnalysisReport, opts: RenderOptions) -> String {
    let opts = opts.all_if_none();
    let mut out = String::new();
    if opts.edge_bounds {
        for e in &r.edges {
            out.push_str(&format!("({},{}): {}", e.src, e.dst, set_text(&e.bounds)));
            if let Some(m) = &e.min {
                out.push_str(&format!(" ; min = {m}"));
            }
            out.push('\n');
        }
    }
    if opts.loop_bounds {
        for l in &r.loops {
            let b = l.bound.as_ref().map_or("unknown".to_string(), Expr::to_string);
            out.push_str(&format!("loop@{}: {b}\n", l.entry));
        }
    }
    if opts.asymptotic {
        let c = r.asymptotic.map_or("unknown".to_string(), |c| c.to_string());
        out.push_str(&format!("asymptotic: {c}\n"));
        if opts.edge_bounds {
            for e in &r.edges {
                out.push_str(&format!("  ({},{}): {}\n", e.src, e.dst, e.complexity));
            }
        }
    }
    for d in &r.diagnostics {
        out.push_str(&format!("note[{}]: {}\n", d.code, d.message));
    }
    out
}

#[derive(Serialize)]
struct JsonEdge<'a> {
    id: u32,
    src: &'a str,
    dst: &'a str,
    instr: &'a str,
    bounds: Vec<String>,
    min: Option<String>,
    class: Complexity,
}

pub fn render_json(r: &AnalysisReport) -> Value {
    let edges: Vec<JsonEdge> = r
        .edges
        .iter()
        .map(|e| JsonEdge {
            id: e.id.0,
            src: &e.src,
            dst: &e.dst,
            instr: &e.instr,
            bounds: e.bounds.iter().map(Expr::to_string).collect(),
            min: e.min.as_ref().map(Expr::to_string),
            class: e.complexity,
        })
        .collect();
    let loops: Vec<Value> = r
        .loops
        .iter()
        .map(|l| {
            json!({
                "entry": l.entry,
                "body": l.body,
                "bound": l.bound.as_ref().map(Expr::to_string),
                "class": l.complexity,
            })
        })
        .collect();
    json!({
        "edges": edges,
        "loops": loops,
        "asymptotic": r.asymptotic.map_or("unknown".to_string(), |c| c.to_string()),
        "diagnostics": r.diagnostics,
    })
}
