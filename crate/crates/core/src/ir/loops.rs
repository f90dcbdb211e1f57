use std::collections::BTreeSet;

use super::graph::{EdgeId, FlowGraph, NodeId};
use crate::error::AnalysisError;

pub const DEFAULT_BACKBONE_CAP: usize = 256;

/// A simple begin-to-end path. `edges[i]` connects `nodes[i]` to `nodes[i+1]`,
/// which disambiguates parallel edges.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Backbone {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopRef {
    pub entry: NodeId,
    pub body: BTreeSet<NodeId>,
    pub prefix: Vec<NodeId>,
}

/// All simple begin-to-end paths, ordered by node sequence and then edge ids.
pub fn backbones(g: &FlowGraph, cap: usize) -> Result<Vec<Backbone>, AnalysisError> {
    let mut out = Vec::new();
    let mut nodes = vec![g.begin().clone()];
    let mut edges = Vec::new();
    let mut on_path: BTreeSet<NodeId> = [g.begin().clone()].into();
    dfs(g, cap, &mut nodes, &mut edges, &mut on_path, &mut out)?;
    out.sort();
    Ok(out)
}

fn dfs(
    g: &FlowGraph,
    cap: usize,
    nodes: &mut Vec<NodeId>,
    edges: &mut Vec<EdgeId>,
    on_path: &mut BTreeSet<NodeId>,
    out: &mut Vec<Backbone>,
) -> Result<(), AnalysisError> {
    let here = nodes.last().unwrap().clone();
    if here == *g.end() {
        if out.len() == cap {
            return Err(AnalysisError::BackboneLimitExceeded { cap });
        }
        out.push(Backbone {
            nodes: nodes.clone(),
            edges: edges.clone(),
        });
        return Ok(());
    }
    for e in g.out_edges(&here) {
        if on_path.contains(&e.dst) {
            continue;
        }
        nodes.push(e.dst.clone());
        edges.push(e.id);
        on_path.insert(e.dst.clone());
        dfs(g, cap, nodes, edges, on_path, out)?;
        on_path.remove(&e.dst);
        nodes.pop();
        edges.pop();
    }
    Ok(())
}

/// The loop entered at `backbone.nodes[idx]`: nodes lying on a cycle through
/// that node which avoids the backbone prefix before it.
pub fn loop_at(g: &FlowGraph, backbone: &Backbone, idx: usize) -> Option<LoopRef> {
    let v = &backbone.nodes[idx];
    let prefix: Vec<NodeId> = backbone.nodes[..idx].to_vec();
    loop_at_node(g, v, &prefix)
}

pub fn loop_at_node(g: &FlowGraph, v: &NodeId, prefix: &[NodeId]) -> Option<LoopRef> {
    let avoid: BTreeSet<NodeId> = prefix.iter().cloned().collect();
    let fwd = g.reachable_from(v, &avoid);
    let closes = g.in_edges(v).iter().any(|e| fwd.contains(&e.src));
    if !closes {
        return None;
    }
    let bwd = g.reaching(v, &avoid);
    Some(LoopRef {
        entry: v.clone(),
        body: fwd.intersection(&bwd).cloned().collect(),
        prefix: prefix.to_vec(),
    })
}

/// Name of the fresh end node of an induced flowgraph.
pub fn primed(g: &FlowGraph, v: &str) -> NodeId {
    let mut name = format!("{v}'");
    while g.nodes().contains(&name) {
        name.push('\'');
    }
    name
}

/// The loop as a flowgraph of its own: begin is the entry, every edge back
/// into the entry goes to a fresh end node instead and keeps its id.
pub fn induced_flowgraph(g: &FlowGraph, l: &LoopRef) -> FlowGraph {
    let end = primed(g, &l.entry);
    g.restrict(&l.body, &l.entry, &l.entry, end)
        .expect("induced flowgraphs satisfy the structural invariants")
}

/// Removes the cycles of a run prefix. When `truncated`, the run is taken to
/// go on forever and is cut after the leftmost node that keeps repeating in
/// its tail.
pub fn backbone_of_run(path: &[NodeId], truncated: bool) -> Vec<NodeId> {
    let mut path = path.to_vec();
    if truncated && path.len() > 1 {
        let tail = &path[path.len() / 2..];
        let mut counts = std::collections::BTreeMap::<&NodeId, usize>::new();
        for n in tail {
            *counts.entry(n).or_default() += 1;
        }
        let repeating: BTreeSet<NodeId> = counts
            .into_iter()
            .filter(|(_, c)| *c >= 2)
            .map(|(n, _)| n.clone())
            .collect();
        if let Some(i) = path.iter().position(|n| repeating.contains(n)) {
            path.truncate(i + 1);
        }
    }
    loop {
        let mut cut = None;
        for (i, n) in path.iter().enumerate() {
            if let Some(j) = path.iter().rposition(|m| m == n) {
                if j > i {
                    cut = Some((i, j));
                    break;
                }
            }
        }
        match cut {
            Some((i, j)) => {
                path.drain(i + 1..=j);
            }
            None => return path,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{lower_program, parse_flowgraph, LowerOptions};

    fn step2() -> FlowGraph {
        parse_flowgraph(
            "begin a\nend d\nedge a b assign i := 5\nedge b c assume i < x\nedge c b assign i := i + 2\nedge b d assume i >= x\n",
        )
        .unwrap()
    }

    fn nested_graph() -> FlowGraph {
        lower_program(
            "int nonzeros(int A[], int n) { int k = 0; for (int i = 0; i < n && k < 3; i++) if (A[i] != 0) k++; return k; }",
            LowerOptions::default(),
        )
        .unwrap()
    }

    fn names(v: &[NodeId]) -> String {
        v.concat()
    }

    #[test]
    fn backbones_of_the_examples() {
        let b = backbones(&step2(), 256).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(names(&b[0].nodes), "abd");
        let b = backbones(&nested_graph(), 256).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(names(&b[0].nodes), "abcg");
    }

    #[test]
    fn loops_and_induced_graphs() {
        let g = step2();
        let bb = &backbones(&g, 256).unwrap()[0];
        assert!(loop_at(&g, bb, 0).is_none());
        let l = loop_at(&g, bb, 1).unwrap();
        assert_eq!(l.body, ["b", "c"].map(String::from).into());
        let q = induced_flowgraph(&g, &l);
        assert_eq!(
            q.to_fg(),
            "begin b\nend b'\nedge b c assume i < x\nedge c b' assign i := i + 2\n"
        );

        let g = nested_graph();
        let bb = &backbones(&g, 256).unwrap()[0];
        let l = loop_at(&g, bb, 2).unwrap();
        assert_eq!(l.body, ["c", "d", "e", "f"].map(String::from).into());
        let q = induced_flowgraph(&g, &l);
        let inner: Vec<String> = backbones(&q, 256)
            .unwrap()
            .iter()
            .map(|b| names(&b.nodes))
            .collect();
        assert_eq!(inner, ["cdefc'", "cdfc'"]);
        // the loop edges keep their identity
        for e in q.edges() {
            assert_eq!(g.edge(e.id).unwrap().src, e.src);
        }
    }

    #[test]
    fn self_loop_induces_single_edge() {
        let g = parse_flowgraph(
            "begin a\nend z\nedge a b assume true\nedge b b assume x < 1\nedge b z assume 1 <= x\n",
        )
        .unwrap();
        let l = loop_at_node(&g, &"b".to_string(), &["a".to_string()]).unwrap();
        let q = induced_flowgraph(&g, &l);
        assert_eq!(q.edges().len(), 1);
        assert_eq!(q.edges()[0].dst, "b'");
    }

    #[test]
    fn backbone_cap() {
        let mut src = String::from("int f(int x) {");
        for _ in 0..9 {
            src.push_str("if (x > 0) x = x - 1;");
        }
        src.push('}');
        let g = lower_program(&src, LowerOptions::default()).unwrap();
        assert_eq!(backbones(&g, 1024).unwrap().len(), 512);
        assert_eq!(
            backbones(&g, 256).unwrap_err(),
            AnalysisError::BackboneLimitExceeded { cap: 256 }
        );
    }

    #[test]
    fn runs_lose_their_cycles() {
        let run = |s: &str| s.chars().map(|c| c.to_string()).collect::<Vec<_>>();
        assert_eq!(names(&backbone_of_run(&run("abcbcbd"), false)), "abd");
        assert_eq!(names(&backbone_of_run(&run("abd"), false)), "abd");
        assert_eq!(names(&backbone_of_run(&run("abcbcbcbc"), true)), "ab");
    }
}
