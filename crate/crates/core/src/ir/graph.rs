use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::StructureError;
use crate::symexpr::{simplify_formula, Expr, Formula, ProgramText};

pub type NodeId = String;

/// Stable identity of an edge. Edges of an induced flowgraph keep the id of
/// the edge they were copied (or redirected) from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeId(pub u32);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruction {
    Assign(String, Expr),
    Assume(Formula),
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Assign(v, e) => write!(f, "{v} := {}", ProgramText(e)),
            Instruction::Assume(c) => write!(f, "assume {}", ProgramText(c)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub instr: Instruction,
}

/// Source position of the statement an edge was lowered from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SourcePos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub struct FlowGraph {
    nodes: BTreeSet<NodeId>,
    edges: Vec<Edge>,
    begin: NodeId,
    end: NodeId,
    scalars: BTreeSet<String>,
    arrays: BTreeSet<String>,
    provenance: BTreeMap<EdgeId, SourcePos>,
    out: BTreeMap<NodeId, Vec<usize>>,
    inc: BTreeMap<NodeId, Vec<usize>>,
}

impl FlowGraph {
    /// Builds and validates a flowgraph. Variables are collected from the
    /// instructions; `declared_scalars` adds scalars that are never mentioned.
    pub fn new(
        begin: NodeId,
        end: NodeId,
        edges: Vec<Edge>,
        extra_nodes: impl IntoIterator<Item = NodeId>,
        declared_scalars: impl IntoIterator<Item = String>,
        declared_arrays: impl IntoIterator<Item = String>,
    ) -> Result<FlowGraph, StructureError> {
        let mut nodes: BTreeSet<NodeId> = extra_nodes.into_iter().collect();
        nodes.insert(begin.clone());
        nodes.insert(end.clone());
        let mut scalars: BTreeSet<String> = declared_scalars.into_iter().collect();
        let mut arrays: BTreeSet<String> = declared_arrays.into_iter().collect();
        for e in &edges {
            nodes.insert(e.src.clone());
            nodes.insert(e.dst.clone());
            if let Instruction::Assign(v, _) = &e.instr {
                scalars.insert(v.clone());
            }
            let mut note = |x: &Expr| match x {
                Expr::Symbol(s) => {
                    scalars.insert(s.clone());
                }
                Expr::ArrayRead(a, _) => {
                    arrays.insert(a.clone());
                }
                _ => {}
            };
            match &e.instr {
                Instruction::Assign(_, x) => x.visit(&mut note),
                Instruction::Assume(c) => c.visit_exprs(&mut note),
            }
        }
        let g = Self::assemble(begin, end, nodes, edges, scalars, arrays, BTreeMap::new());
        g.validate()?;
        Ok(g)
    }

    fn assemble(
        begin: NodeId,
        end: NodeId,
        nodes: BTreeSet<NodeId>,
        edges: Vec<Edge>,
        scalars: BTreeSet<String>,
        arrays: BTreeSet<String>,
        provenance: BTreeMap<EdgeId, SourcePos>,
    ) -> FlowGraph {
        let mut out: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        let mut inc: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            out.entry(e.src.clone()).or_default().push(i);
            inc.entry(e.dst.clone()).or_default().push(i);
        }
        FlowGraph {
            nodes,
            edges,
            begin,
            end,
            scalars,
            arrays,
            provenance,
            out,
            inc,
        }
    }

    pub fn with_provenance(mut self, provenance: BTreeMap<EdgeId, SourcePos>) -> FlowGraph {
        self.provenance = provenance;
        self
    }

    fn validate(&self) -> Result<(), StructureError> {
        let err = |m: String| Err(StructureError(m));
        if self.begin == self.end {
            return err("begin and end must be different nodes".into());
        }
        if self.in_degree(&self.begin) != 0 {
            return err(format!("begin node `{}` has incoming edges", self.begin));
        }
        if self.out_degree(&self.end) != 0 {
            return err(format!("end node `{}` has outgoing edges", self.end));
        }
        let mut ids = BTreeSet::new();
        for e in &self.edges {
            if !ids.insert(e.id) {
                return err(format!("duplicate edge id {}", e.id));
            }
            if let Instruction::Assign(v, _) = &e.instr {
                if self.arrays.contains(v) {
                    return err(format!(
                        "edge {} -> {} assigns to array `{v}`",
                        e.src, e.dst
                    ));
                }
            }
        }
        for n in &self.nodes {
            if *n == self.end {
                continue;
            }
            let outs = self.out_edges(n);
            match outs.len() {
                1 => {}
                2 => {
                    let (Instruction::Assume(g1), Instruction::Assume(g2)) =
                        (&outs[0].instr, &outs[1].instr)
                    else {
                        return err(format!(
                            "branching node `{n}` must have two assume out-edges"
                        ));
                    };
                    if simplify_formula(&g1.negate()) != simplify_formula(g2) {
                        return err(format!(
                            "out-edges of branching node `{n}` are not assume(g) / assume(!g)"
                        ));
                    }
                }
                0 => return err(format!("node `{n}` has no outgoing edge")),
                k => return err(format!("node `{n}` has {k} outgoing edges (at most 2)")),
            }
        }
        Ok(())
    }

    pub fn begin(&self) -> &NodeId {
        &self.begin
    }

    pub fn end(&self) -> &NodeId {
        &self.end
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn scalars(&self) -> &BTreeSet<String> {
        &self.scalars
    }

    pub fn arrays(&self) -> &BTreeSet<String> {
        &self.arrays
    }

    pub fn provenance(&self, id: EdgeId) -> Option<SourcePos> {
        self.provenance.get(&id).copied()
    }

    /// Out-edges in insertion order.
    pub fn out_edges(&self, n: &str) -> Vec<&Edge> {
        self.out
            .get(n)
            .map(|ix| ix.iter().map(|&i| &self.edges[i]).collect())
            .unwrap_or_default()
    }

    pub fn in_edges(&self, n: &str) -> Vec<&Edge> {
        self.inc
            .get(n)
            .map(|ix| ix.iter().map(|&i| &self.edges[i]).collect())
            .unwrap_or_default()
    }

    pub fn out_degree(&self, n: &str) -> usize {
        self.out.get(n).map_or(0, Vec::len)
    }

    pub fn in_degree(&self, n: &str) -> usize {
        self.inc.get(n).map_or(0, Vec::len)
    }

    /// Subgraph on `keep` with the given begin/end; edges leaving `keep` are
    /// dropped and edges into `redirect_from` are sent to `redirect_to`.
    pub(crate) fn restrict(
        &self,
        keep: &BTreeSet<NodeId>,
        begin: &NodeId,
        redirect_from: &NodeId,
        redirect_to: NodeId,
    ) -> Result<FlowGraph, StructureError> {
        let mut nodes = keep.clone();
        nodes.insert(redirect_to.clone());
        let edges = self
            .edges
            .iter()
            .filter(|e| keep.contains(&e.src) && keep.contains(&e.dst))
            .map(|e| {
                let mut e = e.clone();
                if e.dst == *redirect_from {
                    e.dst = redirect_to.clone();
                }
                e
            })
            .collect();
        let g = Self::assemble(
            begin.clone(),
            redirect_to,
            nodes,
            edges,
            self.scalars.clone(),
            self.arrays.clone(),
            self.provenance.clone(),
        );
        g.validate()?;
        Ok(g)
    }

    /// Text in the `.fg` format; parsing it back yields the same graph.
    pub fn to_fg(&self) -> String {
        let mut s = format!("begin {}\nend {}\n", self.begin, self.end);
        for e in self.sorted_edges() {
            match &e.instr {
                Instruction::Assign(v, x) => s.push_str(&format!(
                    "edge {} {} assign {v} := {}\n",
                    e.src,
                    e.dst,
                    ProgramText(x)
                )),
                Instruction::Assume(c) => s.push_str(&format!(
                    "edge {} {} assume {}\n",
                    e.src,
                    e.dst,
                    ProgramText(c)
                )),
            }
        }
        s
    }

    /// Edges ordered by (source, destination, id).
    pub fn sorted_edges(&self) -> Vec<&Edge> {
        let mut v: Vec<&Edge> = self.edges.iter().collect();
        v.sort_by(|a, b| (&a.src, &a.dst, a.id).cmp(&(&b.src, &b.dst, b.id)));
        v
    }

    /// Nodes reachable from `from` (inclusive) without entering `avoid`.
    pub fn reachable_from(&self, from: &str, avoid: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from.to_string()];
        while let Some(n) = stack.pop() {
            if avoid.contains(&n) || !seen.insert(n.clone()) {
                continue;
            }
            for e in self.out_edges(&n) {
                stack.push(e.dst.clone());
            }
        }
        seen
    }

    /// Nodes that reach `to` (inclusive) without entering `avoid`.
    pub fn reaching(&self, to: &str, avoid: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![to.to_string()];
        while let Some(n) = stack.pop() {
            if avoid.contains(&n) || !seen.insert(n.clone()) {
                continue;
            }
            for e in self.in_edges(&n) {
                stack.push(e.src.clone());
            }
        }
        seen
    }
}

impl fmt::Display for FlowGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fg())
    }
}
